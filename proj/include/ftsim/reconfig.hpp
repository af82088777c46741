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
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "ftsim/fault.hpp"
#include "ftsim/model.hpp"
#include "ftsim/replica.hpp"
#include "ftsim/timing.hpp"

namespace ftsim {

struct ShutdownEffect {
    AppId app = 0;
    int copy_id = 0;
    TaskId task = 0;
    Location loc;
    CopyHealth before = CopyHealth::Active;
};

/// Removes the copies a detection covers: one copy for Task, every copy on
/// the processor for Processor, every copy on the lane for Lane. Copies of
/// a component that is only transiently faulty enter Restabilizing; a
/// Policed copy caught in the shutdown is always removed for good.
inline std::vector<ShutdownEffect> shutdown(const Detection& d, std::span<ReplicaGroup> groups, bool transient) {
    std::vector<ShutdownEffect> out;
    if (d.granularity == Granularity::Sensor) return out;
    const FaultTarget target = d.as_target();
    for (auto& g : groups)
        for (auto& c : g.copies) {
            if (c.health != CopyHealth::Active && c.health != CopyHealth::Policed) continue;
            if (!target.covers_copy(c.loc, g.app_id, c.task)) continue;
            out.push_back({g.app_id, c.copy_id, c.task, c.loc, c.health});
            c.health = (transient && c.health == CopyHealth::Active) ? CopyHealth::Restabilizing : CopyHealth::Shutdown;
        }
    return out;
}

// A processor as the selection step sees it.
struct ProcessorSlot {
    Location loc;
    ProcessorRole role = ProcessorRole::Allocated;
    bool alive = true;
    ProcessorState state;
};

struct SelectionState {
    Architecture architecture = Architecture::RestrictedIntegrated;
    std::vector<ProcessorSlot> processors;  // ascending (lane, proc)
    BusState bus;
    TimingConfig timing;

    [[nodiscard]] ProcessorSlot* find(const Location& loc) {
        for (auto& p : processors)
            if (p.loc == loc) return &p;
        return nullptr;
    }
};

struct UnitTask {
    TaskSpec spec;
    int failed_copy = 0;
    int new_copy = 0;
};

// Tasks that must be re-placed together on one processor: a whole
// application copy in the restricted architecture, a single task otherwise.
struct FailedUnit {
    AppId app = 0;
    int criticality = 0;
    LaneId lane = 0;  // lane of the failed copy
    std::vector<UnitTask> tasks;
};

// Same lane first; among candidates the lowest resulting utilization wins,
// ties by (lane, proc); across applications ascending criticality then id.
struct SelectionPolicy {
    bool same_lane_first = true;
};

struct CandidateDecision {
    Location loc;
    AdmissionDecision cpu;
    AdmissionDecision comms;
};

struct PlannedPlacement {
    FailedUnit unit;
    std::optional<Location> target;  // nullopt: degrade to duplex
    std::vector<CandidateDecision> decisions;
};

struct Plan {
    std::vector<PlannedPlacement> entries;
    SelectionState after;
};

inline void sort_recovery_order(std::vector<FailedUnit>& units) {
    std::stable_sort(units.begin(), units.end(), [](const FailedUnit& a, const FailedUnit& b) {
        const TaskId ta = a.tasks.empty() ? 0 : a.tasks.front().spec.task_id;
        const TaskId tb = b.tasks.empty() ? 0 : b.tasks.front().spec.task_id;
        return std::tie(a.criticality, a.app, ta, a.lane) < std::tie(b.criticality, b.app, tb, b.lane);
    });
}

namespace detail {

inline double unit_demand(const FailedUnit& u) {
    double d = 0.0;
    for (const auto& t : u.tasks) d += t.spec.bus_demand();
    return d;
}

// Admits every task of the unit onto a copy of the slot's state.
inline std::pair<AdmissionDecision, ProcessorState> try_unit(const ProcessorState& s, const FailedUnit& u,
                                                            const TimingConfig& cfg) {
    ProcessorState trial = s;
    AdmissionDecision last{true, trial.admission_load(), {}};
    for (const auto& t : u.tasks) {
        last = admit_task(trial, t.spec, TaskKey{u.app, t.spec.task_id, t.new_copy}, cfg);
        if (!last.accepted) return {last, s};
    }
    return {last, trial};
}

}  // namespace detail

/// Chooses a spare for every failed unit in recovery-priority order. Each
/// candidate must pass the processor admission test and the bus demand
/// test; reservations made for earlier units are visible to later ones.
/// Units with no admissible spare degrade.
inline Plan select_spare(SelectionState state, std::vector<FailedUnit> units, const SelectionPolicy& policy = {}) {
    sort_recovery_order(units);
    Plan plan;
    for (auto& unit : units) {
        PlannedPlacement entry;
        entry.unit = unit;
        if (state.architecture != Architecture::FederatedQuadruplex) {
            const double demand = detail::unit_demand(unit);
            struct Choice {
                double load;
                Location loc;
                ProcessorState next;
            };
            std::optional<Choice> same_lane, other_lane;
            for (auto& slot : state.processors) {
                if (!slot.alive || slot.role != ProcessorRole::Spare) continue;
                if (state.architecture == Architecture::RestrictedIntegrated && !slot.state.empty()) continue;
                auto [cpu, next] = detail::try_unit(slot.state, unit, state.timing);
                const auto comms = check_comms(state.bus, demand);
                entry.decisions.push_back({slot.loc, cpu, comms});
                if (!cpu.accepted || !comms.accepted) continue;
                auto& best = (policy.same_lane_first && slot.loc.lane == unit.lane) ? same_lane : other_lane;
                const double load = next.admission_load();
                if (!best || load < best->load - kLoadEpsilon) best = Choice{load, slot.loc, std::move(next)};
            }
            auto& chosen = same_lane ? same_lane : other_lane;
            if (chosen) {
                entry.target = chosen->loc;
                state.find(chosen->loc)->state = std::move(chosen->next);
                state.bus.current_load += demand;
            }
        }
        plan.entries.push_back(std::move(entry));
    }
    plan.after = std::move(state);
    return plan;
}

// Serialized use of the bus by transfers queued at `start`.
struct TransferWindow {
    SimTime start{0};
    SimTime end{0};
    bool stalled = false;
};

/// Serializes transfers on the bus in the given order, each at the spare
/// bandwidth max_load - current_load. A non-empty payload on a saturated
/// bus stalls, and everything queued behind it stalls too.
inline std::vector<TransferWindow> schedule_transfers(std::span<const double> payloads, const BusState& bus,
                                                      SimTime start) {
    std::vector<TransferWindow> out;
    const double bw = available_transfer_bandwidth(bus);
    SimTime cursor = start;
    bool blocked = false;
    for (double p : payloads) {
        if (blocked || (p > 0.0 && bw <= kLoadEpsilon)) {
            blocked = true;
            out.push_back({cursor, kNever, true});
            continue;
        }
        const SimTime end = cursor + transfer_time(p, bw);
        out.push_back({cursor, end, false});
        cursor = end;
    }
    return out;
}

/// Installation windows for the code of each placement, in plan order;
/// each window's end is that placement's t_s.
inline std::vector<TransferWindow> install(std::span<const double> code_sizes, const BusState& bus, SimTime t_i) {
    return schedule_transfers(code_sizes, bus, t_i);
}

/// Data a new copy needs over the bus before it may execute.
inline double state_payload(const StateModel& sm) {
    switch (sm.strategy) {
        case StateStrategy::Transfer: return sm.snapshot_size;
        case StateStrategy::Convergence: return 0.0;
        case StateStrategy::Hybrid: return sm.min_state_size;
    }
    return 0.0;
}

/// Historic samples the new copy replays in background capacity after t_e.
inline int replay_samples(const StateModel& sm) {
    return sm.strategy == StateStrategy::Transfer ? sm.history_len : 0;
}

/// Fresh input samples the new copy must consume before its outputs are
/// correct. Hybrid converges only the part of the state it did not receive.
inline int convergence_samples(const StateModel& sm) {
    switch (sm.strategy) {
        case StateStrategy::Transfer: return 0;
        case StateStrategy::Convergence: return sm.history_len;
        case StateStrategy::Hybrid: {
            if (sm.snapshot_size <= 0.0) return sm.history_len;
            const double missing = 1.0 - sm.min_state_size / sm.snapshot_size;
            return static_cast<int>(std::ceil(static_cast<double>(sm.history_len) * missing - 1e-9));
        }
    }
    return 0;
}

/// t_e for a state transfer that starts at t_s.
inline TransferWindow transfer_state(const StateModel& sm, const BusState& bus, SimTime t_s) {
    const double payload = state_payload(sm);
    return schedule_transfers(std::span<const double>(&payload, 1), bus, t_s).front();
}

/// Consecutive-match counter for policed execution.
class PoliceCounter {
public:
    explicit PoliceCounter(int rounds_needed = 3) : needed_(rounds_needed) {}

    /// Records one round; returns true once the copy is readmit-eligible.
    bool observe(bool matched) {
        ++rounds_;
        if (eligible_round_) return true;
        consecutive_ = matched ? consecutive_ + 1 : 0;
        if (consecutive_ >= needed_) eligible_round_ = rounds_;
        return eligible_round_.has_value();
    }

    [[nodiscard]] bool eligible() const { return eligible_round_.has_value(); }
    [[nodiscard]] std::optional<int> eligible_round() const { return eligible_round_; }
    [[nodiscard]] int consecutive() const { return consecutive_; }
    [[nodiscard]] int rounds() const { return rounds_; }
    [[nodiscard]] int needed() const { return needed_; }

private:
    int needed_;
    int consecutive_ = 0;
    int rounds_ = 0;
    std::optional<int> eligible_round_;
};

/// When an eligible copy rejoins: immediately, or for a pilot-gated
/// component at the first approval at or after eligibility. nullopt while
/// the gate stays closed.
inline std::optional<SimTime> readmit_time(SimTime eligible_at, bool gated, std::optional<SimTime> approval) {
    if (!gated) return eligible_at;
    if (!approval) return std::nullopt;
    return std::max(eligible_at, *approval);
}

}  // namespace ftsim
