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
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ftsim/ftsim.hpp"

namespace ftsim::fixture {

inline std::filesystem::path scenario_dir() { return FTSIM_SCENARIO_DIR; }

inline Scenario load(const std::string& name) { return load_scenario(scenario_dir() / (name + ".json")); }

inline TaskSpec task(TaskId id, double c_ms, double t_ms, double d_ms = 0, ProcId proc = 0) {
    TaskSpec t;
    t.task_id = id;
    t.wcet = from_ms(c_ms);
    t.period = from_ms(t_ms);
    t.deadline = from_ms(d_ms > 0 ? d_ms : t_ms);
    t.initial_proc = proc;
    return t;
}

// The three-lane, four-processor, three-application system: processors
// 0-2 host one application each, processor 3 is the spare.
inline Scenario three_lane_system() {
    Scenario s;
    s.name = "three_lane";
    auto& m = s.system;
    m.architecture = Architecture::RestrictedIntegrated;
    for (int l = 0; l < 3; ++l) {
        LaneSpec lane{l, {}};
        for (int p = 0; p < 4; ++p) lane.processors.push_back({p, p == 3 ? ProcessorRole::Spare : ProcessorRole::Allocated});
        m.lanes.push_back(lane);
    }
    m.bus.max_load = 100;
    m.timing.tolerance = 1;
    for (int a = 1; a <= 3; ++a) {
        ApplicationSpec app;
        app.app_id = a;
        app.criticality = a;
        app.state_model = {StateStrategy::Transfer, 80, 2, 0};
        auto t = task(1, 2, 10, 10, a - 1);
        t.code_size = 40;
        t.messages.push_back({1, 5});
        app.tasks.push_back(t);
        m.applications.push_back(app);
    }
    s.sim.horizon = ms(500);
    return s;
}

inline FaultSpec permanent(double at_ms, FaultTarget target) {
    FaultSpec f;
    f.at = from_ms(at_ms);
    f.target = target;
    f.kind = FaultKind::Permanent;
    return f;
}

// ---------------------------------------------------------------- oracles

struct OracleJob {
    int task = 0;
    std::int64_t index = 0;
    SimTime release{0};
    SimTime deadline{0};
    SimTime finish = kNever;
};

struct OracleTask {
    Duration wcet{0};
    Duration period{0};
    Duration deadline{0};
};

struct OracleRun {
    std::vector<OracleJob> jobs;
    std::optional<SimTime> background_finish;
    std::vector<int> busy;  // per tick: task index, -2 background, -1 idle
};

// One-microsecond tick simulation of fixed-priority preemptive scheduling.
// `tasks` are given in priority order (index 0 highest), all released at 0.
inline OracleRun tick_schedule(const std::vector<OracleTask>& tasks, SimTime window, Duration background = Duration{0}) {
    OracleRun out;
    std::vector<std::vector<std::pair<std::size_t, std::int64_t>>> pending(tasks.size());  // (job idx, remaining)
    std::vector<std::int64_t> released(tasks.size(), 0);
    std::int64_t bg_left = background.count();
    for (std::int64_t t = 0; t < window.count(); ++t) {
        for (std::size_t i = 0; i < tasks.size(); ++i)
            if (t % tasks[i].period.count() == 0) {
                out.jobs.push_back({static_cast<int>(i), released[i]++, SimTime{t}, SimTime{t} + tasks[i].deadline});
                pending[i].push_back({out.jobs.size() - 1, tasks[i].wcet.count()});
            }
        int ran = -1;
        for (std::size_t i = 0; i < tasks.size() && ran < 0; ++i)
            if (!pending[i].empty()) {
                auto& [job, left] = pending[i].front();
                if (--left == 0) {
                    out.jobs[job].finish = SimTime{t + 1};
                    pending[i].erase(pending[i].begin());
                }
                ran = static_cast<int>(i);
            }
        if (ran < 0 && bg_left > 0) {
            ran = -2;
            if (--bg_left == 0) out.background_finish = SimTime{t + 1};
        }
        out.busy.push_back(ran);
    }
    return out;
}

inline std::size_t oracle_misses(const OracleRun& r, SimTime window) {
    std::size_t n = 0;
    for (const auto& j : r.jobs)
        if ((j.finish == kNever && j.deadline <= window) || (j.finish != kNever && j.finish > j.deadline)) ++n;
    return n;
}

// Random task set for one processor via UUniFast.
inline std::vector<TaskSpec> random_task_set(std::mt19937_64& rng, std::size_t n, double u_total) {
    std::vector<TaskSpec> out;
    const auto us = uunifast(n, u_total, rng);
    std::uniform_int_distribution<std::size_t> pick(0, kGeneratorPeriodsMs.size() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        TaskSpec t;
        t.task_id = static_cast<int>(i + 1);
        t.period = ms(kGeneratorPeriodsMs[pick(rng)]);
        t.deadline = t.period;
        t.wcet = Duration{std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::floor(us[i] * static_cast<double>(t.period.count()))))};
        out.push_back(t);
    }
    return out;
}

// ------------------------------------------------------------ trace checks

/// Problems found when matching every Readmitted record against the trace:
/// the events ShutdownApplied, SelectionDone, InstallDone,
/// StateTransferDone and Readmit must appear in that order, tagged with the
/// record and at the record's timestamps, and each Readmit must follow at
/// least `police_rounds` matching police rounds.
inline std::vector<std::string> trace_consistency_problems(const SimResult& r, int police_rounds = 1) {
    std::vector<std::string> problems;
    auto tagged = [](const TraceEvent& e, int id) {
        const auto v = detail_field(e.detail, "record");
        if (!v) return false;
        std::size_t pos = 0;
        const std::string s = *v;
        while (pos <= s.size()) {
            const auto end = std::min(s.find('|', pos), s.size());
            if (s.substr(pos, end - pos) == std::to_string(id)) return true;
            pos = end + 1;
        }
        return false;
    };
    for (const auto& rec : r.records) {
        if (rec.outcome != Outcome::Readmitted) continue;
        const std::string who = "record " + std::to_string(rec.record_id);
        if (!rec.ordered()) problems.push_back(who + ": timestamps out of order");
        const std::vector<std::pair<EventKind, SimTime>> want{
            {EventKind::ShutdownApplied, rec.t_f},
            {EventKind::SelectionDone, *rec.t_r},
            {EventKind::InstallDone, *rec.t_s},
            {EventKind::StateTransferDone, *rec.t_e},
            {EventKind::Readmit, *rec.t_a}};
        std::size_t at = 0;
        for (const auto& [kind, when] : want) {
            // InstallDone / StateTransferDone: the record's times are the last ones.
            std::optional<std::size_t> found;
            for (std::size_t i = at; i < r.trace.size(); ++i) {
                const auto& e = r.trace[i];
                if (e.kind != kind || !tagged(e, rec.record_id)) continue;
                found = i;
                if (e.time == when) break;
            }
            if (!found) {
                problems.push_back(who + ": missing " + std::string(to_string(kind)));
                break;
            }
            if (r.trace[*found].time != when)
                problems.push_back(who + ": " + std::string(to_string(kind)) + " at " +
                                   std::to_string(r.trace[*found].time.count()) + " but record says " +
                                   std::to_string(when.count()));
            at = *found + 1;
        }
        // Every readmission follows at least K matching police rounds.
        int matches = 0;
        for (const auto& e : r.trace)
            if (e.kind == EventKind::PoliceRound && tagged(e, rec.record_id) && detail_field(e.detail, "match") == "1" &&
                e.time <= *rec.t_a)
                ++matches;
        if (matches < police_rounds) problems.push_back(who + ": fewer matching police rounds than required");
    }
    for (std::size_t i = 1; i < r.trace.size(); ++i)
        if (r.trace[i].time < r.trace[i - 1].time) {
            problems.push_back("trace time decreases at row " + std::to_string(i));
            break;
        }
    for (const auto& b : r.bus_load)
        if (b.load > r.bus_max + 1e-9) {
            problems.push_back("bus load above max at " + std::to_string(b.at.count()));
            break;
        }
    return problems;
}

}  // namespace ftsim::fixture

namespace fx = ftsim::fixture;
