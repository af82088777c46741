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
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ftsim/error.hpp"
#include "ftsim/model.hpp"
#include "ftsim/time.hpp"

namespace ftsim {

// Slack on floating-point comparisons of utilizations and loads.
inline constexpr double kLoadEpsilon = 1e-9;

// Identity of one scheduled task instance on a processor.
struct TaskKey {
    AppId app = 0;
    TaskId task = 0;
    int copy = 0;
    auto operator<=>(const TaskKey&) const = default;
};

struct AdmittedTask {
    TaskKey key;
    Duration wcet{0};
    Duration period{0};
    Duration deadline{0};
    int priority = 0;  // 0 is highest

    [[nodiscard]] double utilization() const {
        return static_cast<double>(wcet.count()) / static_cast<double>(period.count());
    }
    [[nodiscard]] double density() const {
        return static_cast<double>(wcet.count()) / static_cast<double>(std::min(deadline, period).count());
    }
};

/// Deadline-monotonic priority levels for a list of (deadline, tie key)
/// pairs, returned in input order. Shorter deadline gets the smaller
/// (higher) level; equal deadlines fall back to the tie key, then position.
template <typename TieKey>
std::vector<int> deadline_monotonic(std::span<const std::pair<Duration, TieKey>> entries) {
    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (entries[a].first != entries[b].first) return entries[a].first < entries[b].first;
        return entries[a].second < entries[b].second;
    });
    std::vector<int> prio(entries.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) prio[order[rank]] = static_cast<int>(rank);
    return prio;
}

/// Deadline-monotonic assignment; ties broken by ascending task id.
inline std::vector<int> assign_priorities(std::span<const TaskSpec> tasks) {
    std::vector<std::pair<Duration, TaskId>> entries;
    entries.reserve(tasks.size());
    for (const auto& t : tasks) entries.emplace_back(t.deadline, t.task_id);
    return deadline_monotonic<TaskId>(entries);
}

struct ProcessorState {
    std::vector<AdmittedTask> tasks;

    /// Σ C/T over admitted tasks.
    [[nodiscard]] double utilization() const {
        double u = 0.0;
        for (const auto& t : tasks) u += t.utilization();
        return u;
    }

    /// Σ C/min(D,T); the quantity the admission test bounds.
    [[nodiscard]] double admission_load() const {
        double u = 0.0;
        for (const auto& t : tasks) u += t.density();
        return u;
    }

    [[nodiscard]] bool empty() const { return tasks.empty(); }

    [[nodiscard]] const AdmittedTask* find(const TaskKey& k) const {
        for (const auto& t : tasks)
            if (t.key == k) return &t;
        return nullptr;
    }

    void reassign_priorities() {
        std::vector<std::pair<Duration, TaskKey>> entries;
        entries.reserve(tasks.size());
        for (const auto& t : tasks) entries.emplace_back(t.deadline, t.key);
        const auto prio = deadline_monotonic<TaskKey>(entries);
        for (std::size_t i = 0; i < tasks.size(); ++i) tasks[i].priority = prio[i];
    }

    bool remove(const TaskKey& k) {
        const auto before = tasks.size();
        std::erase_if(tasks, [&](const AdmittedTask& t) { return t.key == k; });
        if (tasks.size() == before) return false;
        reassign_priorities();
        return true;
    }
};

struct AdmissionDecision {
    bool accepted = false;
    double resulting_load = 0.0;
    std::string reason;
};

/// Utilization-bound test without side effects.
inline AdmissionDecision test_admission(const ProcessorState& p, const TaskSpec& t, const TimingConfig& cfg) {
    AdmissionDecision d;
    d.resulting_load = p.admission_load() + t.density();
    const double bound = cfg.effective_bound();
    d.accepted = d.resulting_load <= bound + kLoadEpsilon;
    if (!d.accepted)
        d.reason = "utilization " + std::to_string(d.resulting_load) + " exceeds bound " + std::to_string(bound);
    return d;
}

/// Online admission: accepts iff the processor's load plus the new task's
/// C/min(D,T) stays within the bound. On acceptance the task joins the set
/// and priorities are reassigned deadline-monotonically.
inline AdmissionDecision admit_task(ProcessorState& p, const TaskSpec& t, const TaskKey& key,
                                    const TimingConfig& cfg) {
    auto d = test_admission(p, t, cfg);
    if (d.accepted) {
        p.tasks.push_back(AdmittedTask{key, t.wcet, t.period, t.deadline, 0});
        p.reassign_priorities();
    }
    return d;
}

/// Unconditional placement, used for the initial allocation.
inline void place_task(ProcessorState& p, const TaskSpec& t, const TaskKey& key) {
    p.tasks.push_back(AdmittedTask{key, t.wcet, t.period, t.deadline, 0});
    p.reassign_priorities();
}

struct BusState {
    double current_load = 0.0;  // data units per ms
    double max_load = 0.0;
};

inline AdmissionDecision check_comms(const BusState& bus, double new_demand) {
    AdmissionDecision d;
    d.resulting_load = bus.current_load + new_demand;
    d.accepted = d.resulting_load <= bus.max_load + kLoadEpsilon;
    if (!d.accepted)
        d.reason = "bus demand " + std::to_string(d.resulting_load) + " exceeds max " + std::to_string(bus.max_load);
    return d;
}

inline AdmissionDecision check_comms(const BusState& bus, std::span<const TaskSpec> new_tasks) {
    double demand = 0.0;
    for (const auto& t : new_tasks) demand += t.bus_demand();
    return check_comms(bus, demand);
}

inline double available_transfer_bandwidth(const BusState& bus) {
    return std::max(0.0, bus.max_load - bus.current_load);
}

/// Time to move `payload` data units at `bandwidth` units/ms, rounded up to
/// the clock quantum. Throws NoBandwidth for a non-empty payload on a
/// saturated bus.
inline Duration transfer_time(double payload, double bandwidth) {
    if (payload <= 0.0) return Duration{0};
    if (bandwidth <= kLoadEpsilon) throw NoBandwidth{};
    const double micros = payload / bandwidth * 1000.0;
    return Duration{static_cast<std::int64_t>(std::ceil(micros - 1e-6))};
}

/// Upper bound on the time to replay `history_len` samples of `t` when the
/// replay only uses capacity left idle by the processor's admitted set.
inline Duration catchup_time(int history_len, const TaskSpec& t, const ProcessorState& p) {
    if (history_len <= 0) return Duration{0};
    const double idle = 1.0 - p.utilization();
    if (idle <= kLoadEpsilon) return kNever;
    const double work = static_cast<double>(history_len) * static_cast<double>(t.wcet.count());
    return Duration{static_cast<std::int64_t>(std::ceil(work / idle - 1e-6))};
}

}  // namespace ftsim
