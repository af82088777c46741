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

#include <cstdint>
#include <string>
#include <vector>

#include "ftsim/error.hpp"
#include "ftsim/fault.hpp"
#include "ftsim/model.hpp"
#include "ftsim/reconfig.hpp"
#include "ftsim/time.hpp"

namespace ftsim {

struct PilotApproval {
    FaultTarget target;
    SimTime at{0};
};

struct Policies {
    SelectionPolicy selection;
    bool pilot_gate = false;
    std::vector<PilotApproval> approvals;
};

// Reference value every healthy copy emits: base + slope * t.
struct SignalSpec {
    double base = 10.0;
    double slope_per_s = 0.0;

    [[nodiscard]] double at(SimTime t) const { return base + slope_per_s * to_ms(t) / 1000.0; }
};

struct SimConfig {
    std::uint64_t seed = 1;
    SimTime horizon = ms(1000);
    Duration bit_period = ms(50);  // 0 disables built-in test
    bool trace_jobs = true;
};

struct Scenario {
    std::string name;
    SystemModel system;
    std::vector<FaultSpec> faults;
    Policies policies;
    VoterConfig voter;
    SignalSpec signal;
    SimConfig sim;

    [[nodiscard]] double police_tolerance() const {
        return system.timing.tolerance > 0.0 ? system.timing.tolerance : voter.tolerance;
    }
};

namespace detail {

inline bool target_exists(const SystemModel& m, const FaultTarget& t) {
    switch (t.kind) {
        case TargetKind::Lane: return m.find_lane(t.lane) != nullptr;
        case TargetKind::Processor: return m.find_processor(t.lane, t.proc) != nullptr;
        case TargetKind::Task: {
            const auto* app = m.find_app(t.app);
            return m.find_processor(t.lane, t.proc) != nullptr && app && app->find_task(t.task);
        }
        case TargetKind::Sensor: return m.find_lane(t.lane) != nullptr && m.find_app(t.app) != nullptr;
    }
    return false;
}

}  // namespace detail

/// Model invariants plus the scenario's own: references resolve, transient
/// faults have a duration, faults fire before the horizon.
inline std::vector<Violation> validate(const Scenario& s) {
    auto out = validate(s.system);
    auto add = [&out](ViolationKind k, std::string msg) { out.push_back({k, std::move(msg)}); };
    if (s.sim.horizon.count() <= 0) add(ViolationKind::MalformedDocument, "horizon must be > 0");
    if (s.sim.bit_period.count() < 0) add(ViolationKind::MalformedDocument, "bit_period must be >= 0");
    if (!(s.voter.tolerance > 0.0)) add(ViolationKind::MalformedDocument, "voter tolerance must be > 0");
    for (std::size_t i = 0; i < s.faults.size(); ++i) {
        const auto& f = s.faults[i];
        const std::string name = "fault #" + std::to_string(i);
        if (!detail::target_exists(s.system, f.target))
            add(ViolationKind::UnresolvedReference, name + " targets a component that does not exist");
        if (f.kind == FaultKind::Transient && f.duration.count() <= 0)
            add(ViolationKind::InvalidFault, name + ": transient faults need a duration > 0");
        if (f.at.count() < 0 || f.at >= s.sim.horizon)
            add(ViolationKind::InvalidFault, name + ": activation time must lie in [0, horizon)");
        if (f.kind == FaultKind::Byzantine && f.target.kind == TargetKind::Sensor)
            add(ViolationKind::InvalidFault, name + ": Byzantine sensor faults are not modeled");
    }
    for (std::size_t i = 0; i < s.policies.approvals.size(); ++i)
        if (!detail::target_exists(s.system, s.policies.approvals[i].target))
            add(ViolationKind::UnresolvedReference,
                "pilot approval #" + std::to_string(i) + " names a component that does not exist");
    return out;
}

}  // namespace ftsim
