/*
 * Copyright 2026 The ftsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftsim/scenario.hpp"

namespace ftsim {

struct GenerateParams {
    int lanes = 3;
    int procs = 4;  // per lane, spares included
    int spares = 1;
    int apps = 3;
    double utilization = 0.69;  // per allocated processor
    std::uint64_t seed = 1;
    bool infeasible = false;    // per-processor U drawn from (1.05, 1.3]
    int faults = 0;
    Architecture architecture = Architecture::FullyIntegrated;
    double horizon_ms = 1000.0;
};

// Divisor-rich periods keep hyperperiods at 100 ms or below.
inline constexpr std::array<int, 6> kGeneratorPeriodsMs{5, 10, 20, 25, 50, 100};

/// UUniFast: n utilizations summing to `total`, uniformly over the simplex.
template <typename Rng>
std::vector<double> uunifast(std::size_t n, double total, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> out;
    double remaining = total;
    for (std::size_t i = 1; i < n; ++i) {
        const double next = remaining * std::pow(unit(rng), 1.0 / static_cast<double>(n - i));
        out.push_back(remaining - next);
        remaining = next;
    }
    if (n > 0) out.push_back(remaining);
    return out;
}

/// Random scenario with the requested per-processor utilization. Throws
/// std::invalid_argument when the parameters cannot be met.
inline Scenario generate(const GenerateParams& p) {
    if (p.lanes < 2 || p.lanes > 4) throw std::invalid_argument("lanes must be 2, 3 or 4");
    if (p.apps < 0) throw std::invalid_argument("apps must be >= 0");
    if (p.utilization < 0.0 || (!p.infeasible && p.utilization > 1.0))
        throw std::invalid_argument("target utilization must lie in [0, 1]");
    if (p.faults < 0) throw std::invalid_argument("faults must be >= 0");
    if (!(p.horizon_ms > 0.0)) throw std::invalid_argument("horizon must be > 0");

    const bool federated = p.architecture == Architecture::FederatedQuadruplex;
    const int spares = federated ? 0 : p.spares;
    if (spares < 0 || p.procs - spares < 1) throw std::invalid_argument("need at least one allocated processor per lane");
    if (p.architecture == Architecture::RestrictedIntegrated && spares < 1)
        throw std::invalid_argument("RestrictedIntegrated needs a spare processor");
    const int allocated = p.procs - spares;

    std::mt19937_64 rng(p.seed);
    Scenario s;
    s.name = "generated-" + std::to_string(p.seed);
    s.sim.seed = p.seed;
    s.sim.horizon = from_ms(p.horizon_ms);
    auto& m = s.system;
    m.architecture = p.architecture;
    for (int l = 0; l < p.lanes; ++l) {
        LaneSpec lane{l, {}};
        for (int k = 0; k < p.procs; ++k)
            lane.processors.push_back({k, k < allocated ? ProcessorRole::Allocated : ProcessorRole::Spare});
        m.lanes.push_back(lane);
    }

    const bool empty = p.apps == 0 || (p.utilization == 0.0 && !p.infeasible);
    if (!empty) {
        // Which processors host tasks, and how many each.
        // An overloaded processor needs two tasks: one task cannot exceed C = T.
        std::uniform_int_distribution<int> count_dist(p.infeasible ? 2 : 1, 3);
        std::vector<int> per_proc(static_cast<std::size_t>(allocated), 0);
        std::vector<std::vector<int>> owner(static_cast<std::size_t>(allocated));  // app index per task slot
        if (federated) {
            if (p.apps != 1) throw std::invalid_argument("FederatedQuadruplex has exactly one application");
            if (p.infeasible) throw std::invalid_argument("a single federated task cannot be overloaded");
            per_proc[0] = 1;
            owner[0] = {0};
        } else if (p.architecture == Architecture::RestrictedIntegrated) {
            if (p.apps > allocated) throw std::invalid_argument("RestrictedIntegrated needs one processor per application");
            for (int a = 0; a < p.apps; ++a) {
                per_proc[a] = count_dist(rng);
                owner[a].assign(static_cast<std::size_t>(per_proc[a]), a);
            }
        } else {
            int total = 0;
            for (auto& n : per_proc) total += n = count_dist(rng);
            std::uniform_int_distribution<int> pick(0, allocated - 1);
            while (total < p.apps) {
                ++per_proc[static_cast<std::size_t>(pick(rng))];
                ++total;
            }
            int next = 0;
            for (int k = 0; k < allocated; ++k)
                for (int i = 0; i < per_proc[k]; ++i) owner[k].push_back(next++ % p.apps);
        }

        for (int a = 0; a < p.apps; ++a) {
            ApplicationSpec app;
            app.app_id = a + 1;
            app.criticality = a + 1;
            app.state_model = {StateStrategy::Transfer, 20.0, 2, 0.0};
            m.applications.push_back(app);
        }

        std::uniform_real_distribution<double> over(1.05, 1.3);
        std::uniform_int_distribution<std::size_t> period_pick(0, kGeneratorPeriodsMs.size() - 1);
        std::vector<int> next_task(static_cast<std::size_t>(p.apps), 1);
        double demand = 0.0;
        for (int k = 0; k < allocated; ++k) {
            if (per_proc[k] == 0) continue;
            const double target = p.infeasible ? over(rng) : p.utilization;
            auto us = uunifast(static_cast<std::size_t>(per_proc[k]), target, rng);
            while (std::any_of(us.begin(), us.end(), [](double u) { return u > 1.0; }))
                us = uunifast(static_cast<std::size_t>(per_proc[k]), target, rng);
            for (int i = 0; i < per_proc[k]; ++i) {
                const int period_ms = kGeneratorPeriodsMs[period_pick(rng)];
                const Duration period = ms(period_ms);
                TaskSpec t;
                const int a = owner[k][i];
                t.task_id = next_task[a]++;
                t.period = period;
                t.deadline = period;
                const auto c = static_cast<std::int64_t>(std::floor(us[i] * static_cast<double>(period.count())));
                t.wcet = Duration{std::clamp<std::int64_t>(c, 1, period.count())};
                t.initial_proc = k;
                t.code_size = 10.0;
                t.messages.push_back({1, 1.0});
                demand += t.bus_demand();
                m.applications[a].tasks.push_back(t);
            }
        }
        m.bus.max_load = std::max(100.0, std::ceil(4.0 * demand * p.lanes));
    } else {
        m.bus.max_load = 100.0;
    }

    // Random processor and task faults, spread over the middle of the run.
    std::uniform_real_distribution<double> when(0.1 * p.horizon_ms, 0.8 * p.horizon_ms);
    std::uniform_int_distribution<int> lane_pick(0, p.lanes - 1), proc_pick(0, allocated - 1), kind_pick(0, 3);
    for (int i = 0; i < p.faults; ++i) {
        FaultSpec f;
        f.at = from_ms(std::floor(when(rng)));
        const int lane = lane_pick(rng);
        const int proc = proc_pick(rng);
        const int kind = kind_pick(rng);
        f.target = FaultTarget::processor(lane, proc);
        f.kind = kind == 0 ? FaultKind::Transient : FaultKind::Permanent;
        if (f.kind == FaultKind::Transient) f.duration = ms(20);
        if (kind == 3 && !m.applications.empty()) {
            // Value fault on one hosted task copy, when the processor hosts any.
            for (const auto& app : m.applications)
                for (const auto& t : app.tasks)
                    if (t.initial_proc == proc && f.target.kind != TargetKind::Task) {
                        f.target = FaultTarget::task_copy(lane, proc, app.app_id, t.task_id);
                        f.value_skew = 5.0;
                    }
        }
        s.faults.push_back(f);
    }
    std::sort(s.faults.begin(), s.faults.end(), [](const FaultSpec& a, const FaultSpec& b) { return a.at < b.at; });
    return s;
}

/// Per-processor utilization of a scenario's initial allocation (one lane).
inline std::vector<double> processor_utilizations(const SystemModel& m) {
    std::vector<double> out(m.procs_per_lane(), 0.0);
    if (m.lanes.empty()) return out;
    const auto& procs = m.lanes.front().processors;
    for (const auto& a : m.applications)
        for (const auto& t : a.tasks)
            for (std::size_t i = 0; i < procs.size(); ++i)
                if (procs[i].proc_id == t.initial_proc) out[i] += t.utilization();
    return out;
}

}  // namespace ftsim
