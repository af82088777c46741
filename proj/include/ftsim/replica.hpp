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

#include <optional>
#include <string_view>
#include <vector>

#include "ftsim/fault.hpp"
#include "ftsim/model.hpp"
#include "ftsim/time.hpp"

namespace ftsim {

enum class CopyHealth { Active, Policed, Shutdown, Restabilizing };

inline std::string_view to_string(CopyHealth h) {
    switch (h) {
        case CopyHealth::Active: return "Active";
        case CopyHealth::Policed: return "Policed";
        case CopyHealth::Shutdown: return "Shutdown";
        case CopyHealth::Restabilizing: return "Restabilizing";
    }
    return "?";
}

struct ReplicaCopy {
    int copy_id = 0;
    TaskId task = 0;
    Location loc;
    CopyHealth health = CopyHealth::Active;
    int record = -1;  // recovery episode that owns a Policed copy
};

/// Runtime health of every copy of one application's tasks.
struct ReplicaGroup {
    AppId app_id = 0;
    std::vector<TaskId> tasks;
    std::vector<ReplicaCopy> copies;

    [[nodiscard]] std::size_t active_copies(TaskId t) const {
        std::size_t n = 0;
        for (const auto& c : copies)
            if (c.task == t && c.health == CopyHealth::Active) ++n;
        return n;
    }

    [[nodiscard]] ReplicaCopy* find(int copy_id) {
        for (auto& c : copies)
            if (c.copy_id == copy_id) return &c;
        return nullptr;
    }
    [[nodiscard]] const ReplicaCopy* find(int copy_id) const {
        for (const auto& c : copies)
            if (c.copy_id == copy_id) return &c;
        return nullptr;
    }
};

enum class Outcome { Readmitted, DegradedDuplex, Abandoned };

inline std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::Readmitted: return "Readmitted";
        case Outcome::DegradedDuplex: return "DegradedDuplex";
        case Outcome::Abandoned: return "Abandoned";
    }
    return "?";
}

struct PlacementEntry {
    TaskId task = 0;
    int failed_copy = 0;
    int new_copy = 0;
    Location loc;
};

/// One recovery episode of one application.
struct ReconfigRecord {
    int record_id = 0;
    AppId app_id = 0;
    Granularity granularity = Granularity::Processor;
    std::vector<int> failed_copies;
    SimTime t_f{0};
    std::optional<SimTime> t_r, t_i, t_s, t_e, t_a;
    std::vector<PlacementEntry> placements;
    std::vector<TaskId> degraded_tasks;
    StateStrategy strategy = StateStrategy::Transfer;
    bool in_place = false;  // restabilization of the original component
    Outcome outcome = Outcome::Abandoned;
    std::string note;

    [[nodiscard]] bool ordered() const {
        if (!(t_r && t_i && t_s && t_e && t_a)) return false;
        return t_f <= *t_r && *t_r <= *t_i && *t_i <= *t_s && *t_s <= *t_e && *t_e <= *t_a;
    }
};

}  // namespace ftsim
