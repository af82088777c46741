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
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ftsim/error.hpp"
#include "ftsim/time.hpp"

namespace ftsim {

using LaneId = int;
using ProcId = int;
using AppId = int;
using TaskId = int;

enum class Architecture { FederatedQuadruplex, RestrictedIntegrated, FullyIntegrated };
enum class ProcessorRole { Allocated, Spare };
enum class StateStrategy { Transfer, Convergence, Hybrid };

inline std::string_view to_string(Architecture a) {
    switch (a) {
        case Architecture::FederatedQuadruplex: return "FederatedQuadruplex";
        case Architecture::RestrictedIntegrated: return "RestrictedIntegrated";
        case Architecture::FullyIntegrated: return "FullyIntegrated";
    }
    return "?";
}

inline std::string_view to_string(ProcessorRole r) {
    return r == ProcessorRole::Spare ? "Spare" : "Allocated";
}

inline std::string_view to_string(StateStrategy s) {
    switch (s) {
        case StateStrategy::Transfer: return "Transfer";
        case StateStrategy::Convergence: return "Convergence";
        case StateStrategy::Hybrid: return "Hybrid";
    }
    return "?";
}

struct ProcessorSpec {
    ProcId proc_id = 0;
    ProcessorRole role = ProcessorRole::Allocated;
};

struct LaneSpec {
    LaneId lane_id = 0;
    std::vector<ProcessorSpec> processors;
};

// Worst-case size of one message sent per job of the owning task.
struct MessageSpec {
    int msg_id = 0;
    double size = 0.0;
};

struct TaskSpec {
    TaskId task_id = 0;
    Duration wcet{0};
    Duration period{0};
    Duration deadline{0};
    ProcId initial_proc = 0;  // lane-relative, identical in every lane
    std::vector<MessageSpec> messages;
    double code_size = 0.0;
    double exec_ratio = 1.0;  // actual / WCET; 1 is the worst-case regime

    [[nodiscard]] double utilization() const {
        return static_cast<double>(wcet.count()) / static_cast<double>(period.count());
    }

    // Σ C / min(D, T); equals utilization() when D = T.
    [[nodiscard]] double density() const {
        const auto window = std::min(deadline, period);
        return static_cast<double>(wcet.count()) / static_cast<double>(window.count());
    }

    // Worst-case bus demand in data units per ms.
    [[nodiscard]] double bus_demand() const {
        double total = 0.0;
        for (const auto& m : messages) total += m.size;
        return total / to_ms(period);
    }
};

struct StateModel {
    StateStrategy strategy = StateStrategy::Transfer;
    double snapshot_size = 0.0;
    int history_len = 0;
    double min_state_size = 0.0;  // Hybrid only
};

struct ApplicationSpec {
    AppId app_id = 0;
    int criticality = 0;  // lower = more critical
    std::vector<TaskSpec> tasks;
    StateModel state_model;

    [[nodiscard]] const TaskSpec* find_task(TaskId id) const {
        for (const auto& t : tasks)
            if (t.task_id == id) return &t;
        return nullptr;
    }

    [[nodiscard]] Duration shortest_period() const {
        Duration p = kNever;
        for (const auto& t : tasks) p = std::min(p, t.period);
        return p;
    }
};

struct BusSpec {
    double max_load = 0.0;  // data units per ms
};

struct TimingConfig {
    double utilization_bound = 0.69;
    bool customer_cap_mode = false;
    int police_rounds = 3;
    double tolerance = 0.0;  // police tolerance; 0 means "use the voter tolerance"

    [[nodiscard]] double effective_bound() const { return customer_cap_mode ? 0.50 : utilization_bound; }
};

struct SystemModel {
    Architecture architecture = Architecture::RestrictedIntegrated;
    std::vector<LaneSpec> lanes;
    BusSpec bus;
    std::vector<ApplicationSpec> applications;
    TimingConfig timing;

    [[nodiscard]] std::size_t lane_count() const { return lanes.size(); }

    [[nodiscard]] std::size_t procs_per_lane() const {
        return lanes.empty() ? 0 : lanes.front().processors.size();
    }

    [[nodiscard]] const ApplicationSpec* find_app(AppId id) const {
        for (const auto& a : applications)
            if (a.app_id == id) return &a;
        return nullptr;
    }

    [[nodiscard]] const LaneSpec* find_lane(LaneId id) const {
        for (const auto& l : lanes)
            if (l.lane_id == id) return &l;
        return nullptr;
    }

    [[nodiscard]] const ProcessorSpec* find_processor(LaneId lane, ProcId proc) const {
        const auto* l = find_lane(lane);
        if (!l) return nullptr;
        for (const auto& p : l->processors)
            if (p.proc_id == proc) return &p;
        return nullptr;
    }
};

// One task copy's identity: which application task, replicated on which lane.
struct CopyKey {
    AppId app = 0;
    TaskId task = 0;
    LaneId lane = 0;
    auto operator<=>(const CopyKey&) const = default;
};

struct Location {
    LaneId lane = 0;
    ProcId proc = 0;
    auto operator<=>(const Location&) const = default;
};

using AllocationMap = std::map<CopyKey, Location>;

/// Checks every structural invariant of a model and returns all violations.
inline std::vector<Violation> validate(const SystemModel& m) {
    std::vector<Violation> out;
    auto add = [&out](ViolationKind k, std::string msg) { out.push_back({k, std::move(msg)}); };

    if (m.lanes.size() < 2 || m.lanes.size() > 4) {
        add(ViolationKind::MalformedDocument,
            "lane count must be 2, 3 or 4 (got " + std::to_string(m.lanes.size()) + ")");
    }
    if (!(m.bus.max_load > 0.0)) add(ViolationKind::MalformedDocument, "bus max_load must be > 0");
    const double bound = m.timing.utilization_bound;
    if (!(bound > 0.0 && bound <= 1.0))
        add(ViolationKind::InvalidTiming, "utilization_bound must lie in (0, 1]");
    if (m.timing.police_rounds < 1) add(ViolationKind::InvalidTiming, "police_rounds_K must be >= 1");

    std::set<LaneId> lane_ids;
    for (const auto& l : m.lanes) {
        if (!lane_ids.insert(l.lane_id).second)
            add(ViolationKind::DuplicateId, "duplicate lane id " + std::to_string(l.lane_id));
        std::set<ProcId> proc_ids;
        for (const auto& p : l.processors)
            if (!proc_ids.insert(p.proc_id).second)
                add(ViolationKind::DuplicateId, "duplicate processor id " + std::to_string(p.proc_id) +
                                                    " in lane " + std::to_string(l.lane_id));
        if (l.processors.empty())
            add(ViolationKind::MalformedDocument, "lane " + std::to_string(l.lane_id) + " has no processors");
    }

    // Lanes must be identical computing elements: same ids, same roles.
    if (!m.lanes.empty()) {
        const auto& ref = m.lanes.front();
        for (const auto& l : m.lanes) {
            bool same = l.processors.size() == ref.processors.size();
            for (std::size_t i = 0; same && i < l.processors.size(); ++i)
                same = l.processors[i].proc_id == ref.processors[i].proc_id &&
                       l.processors[i].role == ref.processors[i].role;
            if (!same)
                add(ViolationKind::AsymmetricLanes,
                    "lane " + std::to_string(l.lane_id) + " differs from lane " + std::to_string(ref.lane_id) +
                        " in processor count, ids or roles");
        }
    }

    std::set<AppId> app_ids;
    std::map<ProcId, std::set<AppId>> apps_on_proc;
    for (const auto& a : m.applications) {
        const std::string app_name = "application " + std::to_string(a.app_id);
        if (!app_ids.insert(a.app_id).second) add(ViolationKind::DuplicateId, "duplicate " + app_name);
        if (a.tasks.empty()) add(ViolationKind::MalformedDocument, app_name + " has no tasks");

        const auto& sm = a.state_model;
        if (sm.snapshot_size < 0 || sm.history_len < 0 || sm.min_state_size < 0)
            add(ViolationKind::InvalidStateModel, app_name + ": negative state sizes");
        if (sm.strategy == StateStrategy::Convergence && sm.snapshot_size != 0.0)
            add(ViolationKind::InvalidStateModel, app_name + ": Convergence requires snapshot_size = 0");
        if (sm.strategy == StateStrategy::Hybrid &&
            !(sm.min_state_size > 0.0 && sm.min_state_size <= sm.snapshot_size))
            add(ViolationKind::InvalidStateModel, app_name + ": Hybrid requires 0 < min_state_size <= snapshot_size");

        std::set<TaskId> task_ids;
        std::set<ProcId> procs_used;
        for (const auto& t : a.tasks) {
            const std::string task_name = app_name + " task " + std::to_string(t.task_id);
            if (!task_ids.insert(t.task_id).second) add(ViolationKind::DuplicateId, "duplicate " + task_name);
            if (!(t.wcet.count() > 0 && t.wcet <= t.deadline && t.deadline <= t.period))
                add(ViolationKind::InvalidTask, task_name + ": requires 0 < C <= D <= T");
            if (t.code_size < 0) add(ViolationKind::InvalidTask, task_name + ": negative code_size");
            if (!(t.exec_ratio > 0.0 && t.exec_ratio <= 1.0))
                add(ViolationKind::InvalidTask, task_name + ": exec_ratio must lie in (0, 1]");
            for (const auto& msg : t.messages)
                if (msg.size < 0) add(ViolationKind::InvalidTask, task_name + ": negative message size");

            if (m.lanes.empty()) continue;
            const ProcessorSpec* p = nullptr;
            for (const auto& ps : m.lanes.front().processors)
                if (ps.proc_id == t.initial_proc) p = &ps;
            if (!p) {
                add(ViolationKind::UnresolvedReference,
                    task_name + ": initial_proc " + std::to_string(t.initial_proc) + " does not exist");
                continue;
            }
            if (p->role == ProcessorRole::Spare)
                add(ViolationKind::SpareHasTasks,
                    task_name + " allocated to spare processor " + std::to_string(t.initial_proc));
            procs_used.insert(t.initial_proc);
            apps_on_proc[t.initial_proc].insert(a.app_id);
        }

        if (m.architecture == Architecture::RestrictedIntegrated && procs_used.size() > 1)
            add(ViolationKind::ArchitectureViolation,
                app_name + " spans several processors per lane (RestrictedIntegrated allows one)");
    }

    std::size_t spares = 0;
    if (!m.lanes.empty())
        for (const auto& p : m.lanes.front().processors)
            if (p.role == ProcessorRole::Spare) ++spares;

    switch (m.architecture) {
        case Architecture::FederatedQuadruplex:
            if (m.applications.size() != 1 || m.applications.front().tasks.size() != 1)
                add(ViolationKind::ArchitectureViolation,
                    "FederatedQuadruplex requires exactly one application with one task");
            if (spares != 0)
                add(ViolationKind::ArchitectureViolation, "FederatedQuadruplex does not model spare processors");
            break;
        case Architecture::RestrictedIntegrated:
            for (const auto& [proc, apps] : apps_on_proc)
                if (apps.size() > 1)
                    add(ViolationKind::ArchitectureViolation,
                        "processor " + std::to_string(proc) + " hosts several applications (RestrictedIntegrated)");
            if (spares == 0)
                add(ViolationKind::ArchitectureViolation,
                    "RestrictedIntegrated requires at least one spare processor per lane");
            break;
        case Architecture::FullyIntegrated:
            break;
    }
    return out;
}

/// Places one copy of every task in every lane, at the same lane-relative
/// processor. Spares stay empty.
inline AllocationMap initial_allocation(const SystemModel& m) {
    AllocationMap out;
    for (const auto& lane : m.lanes)
        for (const auto& app : m.applications)
            for (const auto& t : app.tasks)
                out.emplace(CopyKey{app.app_id, t.task_id, lane.lane_id}, Location{lane.lane_id, t.initial_proc});
    return out;
}

}  // namespace ftsim
