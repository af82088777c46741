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
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "ftsim/error.hpp"
#include "ftsim/model.hpp"
#include "ftsim/time.hpp"

namespace ftsim {

enum class TargetKind { Lane, Processor, Task, Sensor };
enum class FaultKind { Transient, Permanent, Byzantine };

inline std::string_view to_string(TargetKind k) {
    switch (k) {
        case TargetKind::Lane: return "Lane";
        case TargetKind::Processor: return "Processor";
        case TargetKind::Task: return "Task";
        case TargetKind::Sensor: return "Sensor";
    }
    return "?";
}

inline std::string_view to_string(FaultKind k) {
    switch (k) {
        case FaultKind::Transient: return "Transient";
        case FaultKind::Permanent: return "Permanent";
        case FaultKind::Byzantine: return "Byzantine";
    }
    return "?";
}

// Which component a fault (or a pilot approval) refers to. Unused ids are -1.
// A Sensor target names an application's input channel on one lane.
struct FaultTarget {
    TargetKind kind = TargetKind::Processor;
    LaneId lane = -1;
    ProcId proc = -1;
    AppId app = -1;
    TaskId task = -1;
    auto operator<=>(const FaultTarget&) const = default;

    static FaultTarget lane_of(LaneId l) { return {TargetKind::Lane, l, -1, -1, -1}; }
    static FaultTarget processor(LaneId l, ProcId p) { return {TargetKind::Processor, l, p, -1, -1}; }
    static FaultTarget task_copy(LaneId l, ProcId p, AppId a, TaskId t) { return {TargetKind::Task, l, p, a, t}; }
    static FaultTarget sensor(AppId a, LaneId l) { return {TargetKind::Sensor, l, -1, a, -1}; }

    /// True when a copy of (app, task) hosted at `loc` lies inside this target.
    [[nodiscard]] bool covers_copy(const Location& loc, AppId a, TaskId t) const {
        switch (kind) {
            case TargetKind::Lane: return loc.lane == lane;
            case TargetKind::Processor: return loc.lane == lane && loc.proc == proc;
            case TargetKind::Task: return loc.lane == lane && loc.proc == proc && app == a && task == t;
            case TargetKind::Sensor: return false;
        }
        return false;
    }

    [[nodiscard]] bool covers_processor(const Location& loc) const {
        return (kind == TargetKind::Lane && loc.lane == lane) ||
               (kind == TargetKind::Processor && loc.lane == lane && loc.proc == proc);
    }
};

struct FaultSpec {
    SimTime at{0};
    FaultTarget target;
    FaultKind kind = FaultKind::Permanent;
    Duration duration{0};  // Transient only
    double value_skew = 0.0;
    bool per_receiver = false;  // Byzantine: different values to different receivers
    std::optional<bool> bit_detectable;

    [[nodiscard]] bool bit_visible() const {
        return bit_detectable.value_or(kind != FaultKind::Byzantine);
    }
    [[nodiscard]] SimTime end() const { return kind == FaultKind::Transient ? at + duration : kNever; }
    [[nodiscard]] bool active_at(SimTime t) const { return t >= at && t < end(); }
};

enum class Granularity { Lane, Processor, Task, Sensor };
enum class Mechanism { CrossMonitor, BIT };

inline std::string_view to_string(Granularity g) {
    switch (g) {
        case Granularity::Lane: return "Lane";
        case Granularity::Processor: return "Processor";
        case Granularity::Task: return "Task";
        case Granularity::Sensor: return "Sensor";
    }
    return "?";
}

inline std::string_view to_string(Mechanism m) { return m == Mechanism::BIT ? "BIT" : "CrossMonitor"; }

struct Detection {
    SimTime detected_at{0};
    Granularity granularity = Granularity::Processor;
    LaneId lane = -1;
    ProcId proc = -1;
    AppId app = -1;
    TaskId task = -1;
    Mechanism mechanism = Mechanism::CrossMonitor;
    auto operator<=>(const Detection&) const = default;

    [[nodiscard]] FaultTarget as_target() const {
        switch (granularity) {
            case Granularity::Lane: return FaultTarget::lane_of(lane);
            case Granularity::Processor: return FaultTarget::processor(lane, proc);
            case Granularity::Task: return FaultTarget::task_copy(lane, proc, app, task);
            case Granularity::Sensor: return FaultTarget::sensor(app, lane);
        }
        return {};
    }
};

enum class Consensus { MedianOfOthers, MeanOfOthers };

inline std::string_view to_string(Consensus c) {
    return c == Consensus::MeanOfOthers ? "MeanOfOthers" : "MedianOfOthers";
}

struct VoterConfig {
    double tolerance = 1.0;
    Consensus consensus = Consensus::MedianOfOthers;
};

struct VoteResult {
    bool ambiguous = false;
    std::vector<std::size_t> flagged;  // indices into the voted values, ascending
    auto operator<=>(const VoteResult&) const = default;
};

namespace detail {

// Distance from v to the consensus of `others`. For the median of an even
// count, any point of the middle interval is a median, so the distance is
// to that interval.
inline double distance_to_consensus(double v, std::vector<double> others, Consensus c) {
    if (c == Consensus::MeanOfOthers) {
        double sum = 0.0;
        for (double o : others) sum += o;
        return std::abs(v - sum / static_cast<double>(others.size()));
    }
    std::sort(others.begin(), others.end());
    const std::size_t m = others.size();
    const double lo = others[(m - 1) / 2];
    const double hi = others[m / 2];
    if (v < lo) return lo - v;
    if (v > hi) return v - hi;
    return 0.0;
}

}  // namespace detail

/// Compares every lane's value against the consensus of the other lanes.
/// Two lanes that disagree cannot out-vote each other, and a vote where
/// the unflagged lanes are not a strict majority is ambiguous.
inline VoteResult cross_monitor(std::span<const double> values, const VoterConfig& cfg) {
    const std::size_t n = values.size();
    if (n < 2) throw InsufficientLanes(n);
    VoteResult r;
    if (n == 2) {
        r.ambiguous = std::abs(values[0] - values[1]) > cfg.tolerance;
        return r;
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> others;
        others.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) others.push_back(values[j]);
        if (detail::distance_to_consensus(values[i], std::move(others), cfg.consensus) > cfg.tolerance)
            r.flagged.push_back(i);
    }
    const std::size_t agreeing = n - r.flagged.size();
    r.ambiguous = agreeing * 2 <= n;
    return r;
}

/// What every participant sent to every other, and what each claims to have
/// received when relaying. Participants are indexed 0..n-1.
struct Exchange {
    std::size_t n = 0;
    std::vector<double> direct;  // [source * n + receiver]; [i * n + i] is i's own view
    std::vector<double> relay;   // [(relayer * n + source) * n + receiver]

    explicit Exchange(std::size_t count = 0) : n(count), direct(count * count, 0.0), relay(count * count * count, 0.0) {}

    double& sent(std::size_t src, std::size_t rcv) { return direct[src * n + rcv]; }
    [[nodiscard]] double sent(std::size_t src, std::size_t rcv) const { return direct[src * n + rcv]; }
    double& relayed(std::size_t via, std::size_t src, std::size_t rcv) { return relay[(via * n + src) * n + rcv]; }
    [[nodiscard]] double relayed(std::size_t via, std::size_t src, std::size_t rcv) const {
        return relay[(via * n + src) * n + rcv];
    }

    /// Every participant sends the same value to everyone and relays honestly.
    static Exchange consistent(std::span<const double> values) {
        Exchange e(values.size());
        for (std::size_t s = 0; s < e.n; ++s)
            for (std::size_t r = 0; r < e.n; ++r) e.sent(s, r) = values[s];
        e.relay_honestly();
        return e;
    }

    void relay_honestly() {
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t s = 0; s < n; ++s)
                for (std::size_t r = 0; r < n; ++r) relayed(k, s, r) = sent(s, k);
    }
};

/// One exchange-and-relay round followed by a local vote at every receiver.
/// Each receiver settles every other participant's value from the direct
/// copy plus the relayed copies (median of three or more; two copies must
/// agree within tolerance or the receiver cannot decide). The round's result
/// is the verdict reported by a strict majority of receivers; anything else
/// is ambiguous. With four or more participants a single inconsistent
/// (Byzantine) source is out-voted at every healthy receiver.
inline VoteResult interactive_vote(const Exchange& ex, const VoterConfig& cfg) {
    const std::size_t n = ex.n;
    if (n < 2) throw InsufficientLanes(n);

    std::map<VoteResult, std::size_t> tally;
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<double> view(n);
        bool undecided = false;
        for (std::size_t s = 0; s < n; ++s) {
            if (s == r) {
                view[s] = ex.sent(r, r);
                continue;
            }
            std::vector<double> versions{ex.sent(s, r)};
            for (std::size_t k = 0; k < n; ++k)
                if (k != r && k != s) versions.push_back(ex.relayed(k, s, r));
            if (versions.size() == 1) {
                view[s] = versions[0];
            } else if (versions.size() == 2) {
                if (std::abs(versions[0] - versions[1]) > cfg.tolerance) undecided = true;
                view[s] = 0.5 * (versions[0] + versions[1]);
            } else {
                std::sort(versions.begin(), versions.end());
                const std::size_t m = versions.size();
                view[s] = 0.5 * (versions[(m - 1) / 2] + versions[m / 2]);
            }
        }
        VoteResult verdict = undecided ? VoteResult{true, {}} : cross_monitor(view, cfg);
        if (verdict.ambiguous) verdict.flagged.clear();
        ++tally[verdict];
    }
    for (const auto& [verdict, count] : tally)
        if (!verdict.ambiguous && count * 2 > n) return verdict;
    return VoteResult{true, {}};
}

/// Single-fault Byzantine identification needs at least four healthy lanes.
inline constexpr bool can_identify_byzantine(std::size_t healthy_lanes) { return healthy_lanes >= 4; }

// What built-in test can see of one processor.
struct ProcessorView {
    Location loc;
    std::vector<std::pair<AppId, TaskId>> hosted;
};

/// Local health check of one processor at `clock`. Fails on the first
/// active, BIT-visible fault aimed at the processor, its lane, or a task it
/// hosts. Byzantine faults are invisible to BIT by default.
inline std::optional<Detection> bit_check(const ProcessorView& p, std::span<const FaultSpec> faults, SimTime clock) {
    std::optional<Detection> task_hit;
    for (const auto& f : faults) {
        if (!f.active_at(clock) || !f.bit_visible()) continue;
        if (f.target.covers_processor(p.loc))
            return Detection{clock, Granularity::Processor, p.loc.lane, p.loc.proc, -1, -1, Mechanism::BIT};
        if (f.target.kind == TargetKind::Task && f.target.lane == p.loc.lane && f.target.proc == p.loc.proc &&
            !task_hit) {
            for (const auto& h : p.hosted)
                if (h.first == f.target.app && h.second == f.target.task)
                    task_hit = Detection{clock,  Granularity::Task, p.loc.lane, p.loc.proc,
                                         h.first, h.second, Mechanism::BIT};
        }
    }
    return task_hit;
}

// Evidence gathered in one voting (or BIT) round.
struct Evidence {
    SimTime at{0};
    Mechanism mechanism = Mechanism::CrossMonitor;
    std::set<Location> silent_processors;
    std::set<std::tuple<LaneId, ProcId, AppId, TaskId>> deviating_copies;
    std::set<std::pair<AppId, LaneId>> deviating_sensors;

    [[nodiscard]] bool empty() const {
        return silent_processors.empty() && deviating_copies.empty() && deviating_sensors.empty();
    }
};

// The parts of the current configuration classification needs.
struct TopologyView {
    std::map<LaneId, std::vector<ProcId>> processors;  // every processor per lane
    std::set<Location> already_down;
    std::map<Location, std::set<std::pair<AppId, TaskId>>> active_hosted;
};

/// Turns a round's evidence into detections at the coarsest granularity it
/// supports: a whole lane when every processor of the lane is implicated,
/// a processor when it is silent or all its active tasks deviate, otherwise
/// the individual task copies. Sensor deviations are reported separately.
/// Architectures that cannot isolate finer units coarsen the result
/// (restricted: tasks as processors; federated: everything as lanes).
inline std::vector<Detection> classify(const Evidence& ev, const TopologyView& topo,
                                       Architecture arch = Architecture::FullyIntegrated) {
    std::set<Location> implicated = ev.silent_processors;
    std::map<Location, std::set<std::pair<AppId, TaskId>>> deviating_by_proc;
    for (const auto& [l, p, a, t] : ev.deviating_copies) deviating_by_proc[{l, p}].insert({a, t});
    for (const auto& [loc, devs] : deviating_by_proc) {
        auto it = topo.active_hosted.find(loc);
        const bool all = it != topo.active_hosted.end() && !it->second.empty() &&
                         std::includes(devs.begin(), devs.end(), it->second.begin(), it->second.end());
        if (all || arch != Architecture::FullyIntegrated) implicated.insert(loc);
    }

    std::set<Detection> out;
    std::set<LaneId> lanes_down;
    std::set<LaneId> touched;
    for (const auto& loc : implicated) touched.insert(loc.lane);
    for (LaneId lane : touched) {
        auto it = topo.processors.find(lane);
        if (it == topo.processors.end()) continue;
        const bool all = std::all_of(it->second.begin(), it->second.end(), [&](ProcId p) {
            return implicated.contains({lane, p}) || topo.already_down.contains({lane, p});
        });
        if (all || arch == Architecture::FederatedQuadruplex) lanes_down.insert(lane);
    }
    for (LaneId lane : lanes_down) out.insert({ev.at, Granularity::Lane, lane, -1, -1, -1, ev.mechanism});
    for (const auto& loc : implicated)
        if (!lanes_down.contains(loc.lane))
            out.insert({ev.at, Granularity::Processor, loc.lane, loc.proc, -1, -1, ev.mechanism});
    for (const auto& [l, p, a, t] : ev.deviating_copies)
        if (!lanes_down.contains(l) && !implicated.contains({l, p}))
            out.insert({ev.at, Granularity::Task, l, p, a, t, ev.mechanism});
    for (const auto& [a, l] : ev.deviating_sensors)
        out.insert({ev.at, Granularity::Sensor, l, -1, a, -1, ev.mechanism});
    return {out.begin(), out.end()};
}

}  // namespace ftsim
