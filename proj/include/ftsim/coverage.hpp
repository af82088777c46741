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
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "ftsim/replica.hpp"
#include "ftsim/time.hpp"

namespace ftsim {

enum class CoverageLevel : int { None = 0, Simplex = 1, Duplex = 2, Triplex = 3, Quadruplex = 4 };

inline CoverageLevel level_from_count(std::size_t n) {
    return static_cast<CoverageLevel>(std::min<std::size_t>(n, 4));
}

inline std::string_view to_string(CoverageLevel c) {
    switch (c) {
        case CoverageLevel::None: return "None";
        case CoverageLevel::Simplex: return "Simplex";
        case CoverageLevel::Duplex: return "Duplex";
        case CoverageLevel::Triplex: return "Triplex";
        case CoverageLevel::Quadruplex: return "Quadruplex";
    }
    return "?";
}

/// Active copies of the application's weakest task.
inline CoverageLevel functional_coverage(const ReplicaGroup& g) {
    if (g.tasks.empty()) return CoverageLevel::None;
    std::size_t weakest = SIZE_MAX;
    for (TaskId t : g.tasks) weakest = std::min(weakest, g.active_copies(t));
    return level_from_count(weakest);
}

/// Distinct lanes holding an Active copy, for the weakest task.
inline CoverageLevel zonal_coverage(const ReplicaGroup& g) {
    if (g.tasks.empty()) return CoverageLevel::None;
    std::size_t weakest = SIZE_MAX;
    for (TaskId t : g.tasks) {
        std::set<LaneId> lanes;
        for (const auto& c : g.copies)
            if (c.task == t && c.health == CopyHealth::Active) lanes.insert(c.loc.lane);
        weakest = std::min(weakest, lanes.size());
    }
    return level_from_count(weakest);
}

// Coverage levels of one application, by fault class. Function and data
// transfer coverage both count active copies (every active copy exchanges
// its values over the inter-lane links); peripheral coverage counts healthy
// sensor channels.
struct AppCoverage {
    CoverageLevel functional = CoverageLevel::None;
    CoverageLevel zonal = CoverageLevel::None;
    CoverageLevel peripheral = CoverageLevel::None;

    [[nodiscard]] CoverageLevel data_transfer() const { return functional; }
    auto operator<=>(const AppCoverage&) const = default;
};

struct CoveragePoint {
    SimTime at{0};
    AppId app = 0;
    AppCoverage level;
};

struct CoverageReport {
    std::map<AppId, AppCoverage> current;
    std::vector<CoveragePoint> timeline;

    /// Appends a point only when the application's levels changed.
    bool update(SimTime at, AppId app, AppCoverage level) {
        auto it = current.find(app);
        if (it != current.end() && it->second == level) return false;
        current[app] = level;
        timeline.push_back({at, app, level});
        return true;
    }

    [[nodiscard]] CoverageLevel min_functional(AppId app) const {
        auto best = CoverageLevel::Quadruplex;
        bool seen = false;
        for (const auto& p : timeline)
            if (p.app == app) {
                best = std::min(best, p.level.functional);
                seen = true;
            }
        return seen ? best : CoverageLevel::None;
    }
};

struct RiskInterval {
    SimTime begin{0};
    SimTime end{0};
    int record_id = 0;
};

struct SecondaryHit {
    AppId app = 0;
    SimTime at{0};
    int record_id = 0;       // the episode whose window was hit
    int later_record_id = 0;  // the episode the second fault opened
};

struct TimeAtRisk {
    std::map<AppId, Duration> total;
    std::map<AppId, std::vector<RiskInterval>> intervals;
    std::vector<SecondaryHit> secondary_hits;

    [[nodiscard]] Duration for_app(AppId a) const {
        auto it = total.find(a);
        return it == total.end() ? Duration{0} : it->second;
    }
};

/// Time each application spent inside [t_f, t_a] windows, with windows that
/// never closed clipped at the horizon. Overlapping windows of one
/// application are counted once. A record opened inside an earlier open
/// window of the same application is a secondary-fault hit.
inline TimeAtRisk time_at_risk(std::span<const ReconfigRecord> records, SimTime horizon) {
    TimeAtRisk out;
    for (const auto& r : records) {
        const SimTime begin = std::min(r.t_f, horizon);
        const SimTime end = std::min(r.t_a.value_or(horizon), horizon);
        out.intervals[r.app_id].push_back({begin, end, r.record_id});
    }
    for (auto& [app, ivs] : out.intervals) {
        std::vector<RiskInterval> sorted = ivs;
        std::sort(sorted.begin(), sorted.end(),
                  [](const RiskInterval& a, const RiskInterval& b) { return a.begin < b.begin; });
        Duration total{0};
        SimTime cursor{0};
        bool started = false;
        for (const auto& iv : sorted) {
            const SimTime from = started ? std::max(cursor, iv.begin) : iv.begin;
            if (iv.end > from) total += iv.end - from;
            cursor = started ? std::max(cursor, iv.end) : iv.end;
            started = true;
        }
        out.total[app] = total;
    }
    for (const auto& a : records)
        for (const auto& b : records) {
            if (a.app_id != b.app_id || a.record_id == b.record_id) continue;
            const SimTime a_end = std::min(a.t_a.value_or(horizon), horizon);
            if (b.t_f > a.t_f && b.t_f < a_end)
                out.secondary_hits.push_back({a.app_id, b.t_f, a.record_id, b.record_id});
        }
    return out;
}

}  // namespace ftsim
