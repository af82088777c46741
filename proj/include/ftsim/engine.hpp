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
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ftsim/coverage.hpp"
#include "ftsim/error.hpp"
#include "ftsim/fault.hpp"
#include "ftsim/model.hpp"
#include "ftsim/reconfig.hpp"
#include "ftsim/replica.hpp"
#include "ftsim/scenario.hpp"
#include "ftsim/sched.hpp"
#include "ftsim/timing.hpp"
#include "ftsim/trace.hpp"

namespace ftsim {

struct MissRecord {
    Location loc;
    TaskKey key;
    SimTime release{0};
    SimTime deadline{0};
    SimTime finish = kNever;
};

struct JitterRow {
    Location loc;
    TaskKey key;
    Jitter jitter;
};

struct BusPoint {
    SimTime at{0};
    double load = 0.0;
};

struct SimResult {
    std::string scenario;
    SimTime horizon{0};
    std::vector<TraceEvent> trace;
    std::vector<ReconfigRecord> records;
    CoverageReport coverage;
    TimeAtRisk risk;
    std::vector<MissRecord> misses;
    std::vector<JitterRow> jitter;
    std::vector<BusPoint> bus_load;
    double bus_peak = 0.0;
    double bus_max = 0.0;
    std::vector<Detection> detections;
    std::size_t ambiguous_votes = 0;
    std::size_t faults_injected = 0;
    std::vector<ReplicaGroup> groups;  // final state

    [[nodiscard]] std::size_t count(Outcome o) const {
        return static_cast<std::size_t>(
            std::count_if(records.begin(), records.end(), [o](const ReconfigRecord& r) { return r.outcome == o; }));
    }

    [[nodiscard]] const ReplicaGroup* group(AppId app) const {
        for (const auto& g : groups)
            if (g.app_id == app) return &g;
        return nullptr;
    }

    /// Lowest functional coverage any application reached.
    [[nodiscard]] CoverageLevel min_coverage() const {
        auto lowest = CoverageLevel::Quadruplex;
        bool any = false;
        for (const auto& p : coverage.timeline) {
            lowest = std::min(lowest, p.level.functional);
            any = true;
        }
        return any ? lowest : CoverageLevel::None;
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline double unit_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    const auto h = splitmix64(seed ^ splitmix64(a * 0x100000001b3ULL ^ splitmix64(b)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

template <typename T>
std::string join(const std::vector<T>& items, char sep = '|') {
    std::ostringstream os;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) os << sep;
        os << items[i];
    }
    return os.str();
}

}  // namespace detail

/// Deterministic discrete-event simulation of one scenario.
///
/// The engine owns the runtime state (replica groups, processors, bus,
/// sensor channels, recovery episodes) and drives it from a single event
/// queue ordered by (time, event class, insertion). Processor execution is
/// simulated lazily by one ProcessorSim per processor, advanced to the
/// current instant before every event.
class Engine {
public:
    explicit Engine(Scenario scenario) : sc_(std::move(scenario)) {
        auto violations = validate(sc_);
        if (!violations.empty()) throw ValidationError(std::move(violations));
    }

    SimResult run() {
        init();
        while (!queue_.empty() && queue_.top().at < sc_.sim.horizon) {
            const Pending p = queue_.top();
            queue_.pop();
            advance_all(p.at);
            dispatch(p);
            update_coverage(p.at);
        }
        return finish();
    }

private:
    enum class Action { FaultActivate, FaultClear, BITCheck, VoteRound, PilotApproval, BusDone };

    struct Pending {
        SimTime at{0};
        int rank = 0;
        std::uint64_t seq = 0;
        Action action = Action::VoteRound;
        int arg = 0;
    };
    struct Later {
        bool operator()(const Pending& a, const Pending& b) const {
            if (a.at != b.at) return a.at > b.at;
            if (a.rank != b.rank) return a.rank > b.rank;
            return a.seq > b.seq;
        }
    };

    enum class ProcStatus { Up, Down, Restabilizing };

    struct ProcRuntime {
        Location loc;
        ProcessorRole role = ProcessorRole::Allocated;
        ProcStatus status = ProcStatus::Up;
        ProcessorState admitted;
        ProcessorSim sim;
    };

    struct CopyInfo {
        AppId app = 0;
        TaskId task = 0;
        Location loc;
        double demand = 0.0;
        bool reserved = false;  // counted in the committed bus load
        bool sending = false;   // executing and producing traffic
    };

    enum class Phase { AwaitClear, Selected, Transferring, Executing, AwaitPilot, Closed };

    struct PlacementRt {
        Location target;
        std::vector<UnitTask> tasks;
        std::vector<int> background_ids;
        bool executing = false;
    };

    struct Episode {
        int record = 0;
        AppId app = 0;
        Phase phase = Phase::Selected;
        bool in_place = false;
        SimTime clear_at{0};
        FaultTarget component;
        std::vector<PlacementRt> placements;
        PoliceCounter counter;
        SimTime eligible_at{0};
    };

    struct BusJob {
        int episode = 0;
        std::size_t placement = 0;
        bool state_phase = false;
        double payload = 0.0;
    };

    struct SensorRt {
        bool healthy = true;
        SimTime failed_at{0};
        PoliceCounter counter;
        bool eligible = false;
    };

    struct Emission {
        bool silent = false;
        double skew = 0.0;
        int byzantine = -1;  // index of a per-receiver Byzantine fault
    };

    // ---------------------------------------------------------------- setup

    void init() {
        const auto& m = sc_.system;
        for (const auto& lane : m.lanes)
            for (const auto& p : lane.processors) {
                ProcRuntime rt;
                rt.loc = {lane.lane_id, p.proc_id};
                rt.role = p.role;
                rt.sim = ProcessorSim(SimTime{0}, false);
                procs_.emplace(rt.loc, std::move(rt));
            }
        for (const auto& app : m.applications) {
            ReplicaGroup g;
            g.app_id = app.app_id;
            for (const auto& t : app.tasks) g.tasks.push_back(t.task_id);
            for (const auto& t : app.tasks)
                for (const auto& lane : m.lanes) {
                    const int id = next_copy_++;
                    const Location loc{lane.lane_id, t.initial_proc};
                    g.copies.push_back({id, t.task_id, loc, CopyHealth::Active, -1});
                    copies_[id] = CopyInfo{app.app_id, t.task_id, loc, t.bus_demand(), true, true};
                    committed_ += t.bus_demand();
                    active_load_ += t.bus_demand();
                    auto& pr = procs_.at(loc);
                    place_task(pr.admitted, t, TaskKey{app.app_id, t.task_id, id});
                    pr.sim.add_task(TaskKey{app.app_id, t.task_id, id}, t.wcet, t.period, t.deadline, SimTime{0},
                                    t.exec_ratio);
                }
            groups_.push_back(std::move(g));
            for (const auto& lane : m.lanes)
                sensors_[{app.app_id, lane.lane_id}] = SensorRt{true, SimTime{0}, PoliceCounter(m.timing.police_rounds)};
        }

        for (std::size_t i = 0; i < sc_.faults.size(); ++i) {
            const auto& f = sc_.faults[i];
            push(f.at, EventKind::FaultActivate, Action::FaultActivate, static_cast<int>(i));
            if (f.kind == FaultKind::Transient && f.end() < sc_.sim.horizon)
                push(f.end(), EventKind::FaultClear, Action::FaultClear, static_cast<int>(i));
        }
        if (sc_.sim.bit_period.count() > 0) push(sc_.sim.bit_period, EventKind::BITCheck, Action::BITCheck, 0);
        for (std::size_t i = 0; i < m.applications.size(); ++i)
            push(m.applications[i].shortest_period(), EventKind::VoteRound, Action::VoteRound, static_cast<int>(i));
        for (std::size_t i = 0; i < sc_.policies.approvals.size(); ++i)
            push(sc_.policies.approvals[i].at, EventKind::PilotApproval, Action::PilotApproval, static_cast<int>(i));

        bus_point(SimTime{0});
        update_coverage(SimTime{0});
    }

    void push(SimTime at, EventKind kind, Action a, int arg) {
        queue_.push(Pending{at, tie_rank(kind), queue_seq_++, a, arg});
    }

    void trace(SimTime t, EventKind kind, int lane, int proc, int app, int task, std::string detail) {
        trace_.push_back(TraceEvent{t, kind, lane, proc, app, task, std::move(detail), trace_seq_++});
    }

    void advance_all(SimTime t) {
        for (auto& [loc, p] : procs_) p.sim.advance_to(t);
    }

    // ------------------------------------------------------------- dispatch

    void dispatch(const Pending& p) {
        switch (p.action) {
            case Action::FaultActivate: {
                const auto& f = sc_.faults[p.arg];
                trace(p.at, EventKind::FaultActivate, f.target.lane, f.target.proc, f.target.app, f.target.task,
                      "fault=" + std::to_string(p.arg) + ";target=" + std::string(to_string(f.target.kind)) +
                          ";kind=" + std::string(to_string(f.kind)));
                break;
            }
            case Action::FaultClear: on_fault_clear(p.arg, p.at); break;
            case Action::BITCheck:
                bit_round(p.at);
                push(p.at + sc_.sim.bit_period, EventKind::BITCheck, Action::BITCheck, 0);
                break;
            case Action::VoteRound: {
                const auto& app = sc_.system.applications[p.arg];
                vote_round(app, p.at);
                push(p.at + app.shortest_period(), EventKind::VoteRound, Action::VoteRound, p.arg);
                break;
            }
            case Action::PilotApproval: on_pilot_approval(p.arg, p.at); break;
            case Action::BusDone: on_bus_done(p.at); break;
        }
    }

    // ------------------------------------------------------------- queries

    ReplicaGroup& group(AppId app) {
        for (auto& g : groups_)
            if (g.app_id == app) return g;
        throw std::logic_error("unknown application");
    }

    const ApplicationSpec& app_spec(AppId app) const { return *sc_.system.find_app(app); }

    const TaskSpec& task_spec(AppId app, TaskId task) const { return *app_spec(app).find_task(task); }

    bool host_silent(const Location& loc, SimTime t) const {
        for (const auto& f : sc_.faults)
            if (f.active_at(t) && f.kind != FaultKind::Byzantine && f.target.covers_processor(loc)) return true;
        return false;
    }

    Emission emission(const Location& loc, AppId app, TaskId task, SimTime t) const {
        Emission e;
        if (host_silent(loc, t)) {
            e.silent = true;
            return e;
        }
        for (std::size_t i = 0; i < sc_.faults.size(); ++i) {
            const auto& f = sc_.faults[i];
            if (!f.active_at(t) || !f.target.covers_copy(loc, app, task)) continue;
            if (f.kind == FaultKind::Byzantine) {
                if (f.per_receiver && e.byzantine < 0) e.byzantine = static_cast<int>(i);
                else if (!f.per_receiver) e.skew += f.value_skew;
            } else if (f.target.kind == TargetKind::Task) {
                if (f.value_skew == 0.0) e.silent = true;
                else e.skew += f.value_skew;
            }
        }
        return e;
    }

    // Value a per-receiver Byzantine source shows its `ordinal`-th receiver.
    double byzantine_offset(int fault, std::size_t ordinal, int receiver_copy) const {
        const auto& f = sc_.faults[fault];
        const double u = detail::unit_hash(sc_.sim.seed, static_cast<std::uint64_t>(fault),
                                           static_cast<std::uint64_t>(receiver_copy));
        const double sign = ordinal % 2 == 0 ? 1.0 : -1.0;
        return sign * f.value_skew * (1.0 + u);
    }

    bool lane_up(LaneId lane) const {
        for (const auto& [loc, p] : procs_)
            if (loc.lane == lane && p.status == ProcStatus::Up) return true;
        return false;
    }

    TopologyView topology() const {
        TopologyView v;
        for (const auto& [loc, p] : procs_) {
            v.processors[loc.lane].push_back(loc.proc);
            if (p.status != ProcStatus::Up) v.already_down.insert(loc);
        }
        for (const auto& g : groups_)
            for (const auto& c : g.copies)
                if (c.health == CopyHealth::Active) v.active_hosted[c.loc].insert({g.app_id, c.task});
        return v;
    }

    // ---------------------------------------------------------------- votes

    void vote_round(const ApplicationSpec& app, SimTime t) {
        Evidence ev;
        ev.at = t;
        ev.mechanism = Mechanism::CrossMonitor;
        std::vector<std::string> notes;
        sensor_round(app, t, ev, notes);

        const double ref = sc_.signal.at(t);
        auto& g = group(app.app_id);
        for (TaskId task : g.tasks) {
            std::vector<const ReplicaCopy*> voters;
            for (const auto& c : g.copies)
                if (c.task == task && c.health == CopyHealth::Active) voters.push_back(&c);
            std::vector<const ReplicaCopy*> talking;
            std::vector<Emission> em;
            for (const auto* c : voters) {
                auto e = emission(c->loc, app.app_id, task, t);
                if (e.silent) {
                    continue;
                }
                talking.push_back(c);
                em.push_back(e);
            }
            std::vector<int> flagged;
            if (!talking.empty())
                for (const auto* c : voters)
                    if (std::find(talking.begin(), talking.end(), c) == talking.end()) {
                        ev.deviating_copies.insert({c->loc.lane, c->loc.proc, app.app_id, task});
                        flagged.push_back(c->copy_id);
                    }
            std::string verdict;
            if (talking.size() >= 2) {
                const auto result = interactive_vote(build_exchange(talking, em, ref), sc_.voter);
                if (result.ambiguous) {
                    ++ambiguous_;
                    verdict = "ambiguous";
                } else {
                    for (auto idx : result.flagged) {
                        const auto* c = talking[idx];
                        ev.deviating_copies.insert({c->loc.lane, c->loc.proc, app.app_id, task});
                        flagged.push_back(c->copy_id);
                    }
                }
            }
            std::sort(flagged.begin(), flagged.end());
            std::string note = "task" + std::to_string(task) + ":voters=" + std::to_string(talking.size());
            if (!flagged.empty()) note += ":flagged=" + detail::join(flagged);
            if (!verdict.empty()) note += ":" + verdict;
            notes.push_back(note);
        }

        // Heartbeats of the lanes the evidence touches.
        std::set<LaneId> touched;
        for (const auto& [l, p, a, tk] : ev.deviating_copies) touched.insert(l);
        for (const auto& [loc, pr] : procs_)
            if (touched.contains(loc.lane) && pr.status == ProcStatus::Up && host_silent(loc, t))
                ev.silent_processors.insert(loc);

        trace(t, EventKind::VoteRound, -1, -1, app.app_id, -1, detail::join(notes, ';'));
        if (!ev.empty()) handle_detections(classify(ev, topology(), sc_.system.architecture), t);
        police_round(app.app_id, t);
    }

    Exchange build_exchange(const std::vector<const ReplicaCopy*>& talking, const std::vector<Emission>& em,
                            double ref) const {
        const std::size_t n = talking.size();
        Exchange ex(n);
        for (std::size_t s = 0; s < n; ++s) {
            std::size_t ordinal = 0;
            for (std::size_t r = 0; r < n; ++r) {
                double v = ref + em[s].skew;
                if (em[s].byzantine >= 0 && r != s) v += byzantine_offset(em[s].byzantine, ordinal++, talking[r]->copy_id);
                ex.sent(s, r) = v;
            }
        }
        ex.relay_honestly();
        // A per-receiver Byzantine relayer also lies about what it heard.
        for (std::size_t k = 0; k < n; ++k) {
            if (em[k].byzantine < 0) continue;
            for (std::size_t s = 0; s < n; ++s) {
                std::size_t ordinal = 0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == k) continue;
                    ex.relayed(k, s, r) = ex.sent(s, k) + byzantine_offset(em[k].byzantine, ordinal++,
                                                                          talking[r]->copy_id + 7919);
                }
            }
        }
        return ex;
    }

    void sensor_round(const ApplicationSpec& app, SimTime t, Evidence& ev, std::vector<std::string>& notes) {
        const double ref = sc_.signal.at(t);
        std::vector<LaneId> healthy;
        std::vector<double> values;
        std::map<LaneId, std::optional<double>> reading;
        for (const auto& lane : sc_.system.lanes) {
            if (!lane_up(lane.lane_id)) continue;
            std::optional<double> v = ref;
            for (const auto& f : sc_.faults)
                if (f.active_at(t) && f.target.kind == TargetKind::Sensor && f.target.app == app.app_id &&
                    f.target.lane == lane.lane_id) {
                    if (f.value_skew == 0.0) v.reset();
                    else if (v) *v += f.value_skew;
                }
            reading[lane.lane_id] = v;
            if (sensors_.at({app.app_id, lane.lane_id}).healthy) {
                if (v) {
                    healthy.push_back(lane.lane_id);
                    values.push_back(*v);
                } else {
                    ev.deviating_sensors.insert({app.app_id, lane.lane_id});
                }
            }
        }
        if (values.size() >= 2) {
            const auto r = cross_monitor(values, sc_.voter);
            if (!r.ambiguous)
                for (auto idx : r.flagged) ev.deviating_sensors.insert({app.app_id, healthy[idx]});
        }
        if (!ev.deviating_sensors.empty()) {
            std::vector<LaneId> lanes;
            for (const auto& [a, l] : ev.deviating_sensors) lanes.push_back(l);
            notes.push_back("sensor_flagged=" + detail::join(lanes));
        }

        // Failed channels are monitored against the healthy consensus.
        if (values.empty()) return;
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        const double consensus = 0.5 * (sorted[(sorted.size() - 1) / 2] + sorted[sorted.size() / 2]);
        for (auto& [lane, v] : reading) {
            auto& s = sensors_.at({app.app_id, lane});
            if (s.healthy || s.eligible) continue;
            const bool match = v && std::abs(*v - consensus) <= sc_.police_tolerance();
            if (s.counter.observe(match)) {
                s.eligible = true;
                try_restore_sensor(app.app_id, lane, t);
            }
        }
    }

    void fail_sensor(AppId app, LaneId lane, SimTime t) {
        auto& s = sensors_.at({app, lane});
        if (!s.healthy) return;
        s.healthy = false;
        s.eligible = false;
        s.failed_at = t;
        s.counter = PoliceCounter(sc_.system.timing.police_rounds);
        trace(t, EventKind::ShutdownApplied, lane, -1, app, -1, "granularity=Sensor;mechanism=CrossMonitor");
    }

    std::optional<SimTime> approval_for(const FaultTarget& target, SimTime from, SimTime until) const {
        std::optional<SimTime> best;
        for (const auto& a : sc_.policies.approvals)
            if (a.target == target && a.at >= from && a.at <= until && (!best || a.at < *best)) best = a.at;
        return best;
    }

    void try_restore_sensor(AppId app, LaneId lane, SimTime t) {
        auto& s = sensors_.at({app, lane});
        if (!s.eligible || s.healthy) return;
        const auto approval = approval_for(FaultTarget::sensor(app, lane), s.failed_at, t);
        if (!readmit_time(t, sc_.policies.pilot_gate, approval)) return;
        s.healthy = true;
        trace(t, EventKind::Readmit, lane, -1, app, -1, "sensor=1");
    }

    // ---------------------------------------------------------------- BIT

    void bit_round(SimTime t) {
        Evidence ev;
        ev.at = t;
        ev.mechanism = Mechanism::BIT;
        std::vector<std::string> fails;
        for (const auto& [loc, pr] : procs_) {
            if (pr.status != ProcStatus::Up) continue;
            ProcessorView view{loc, {}};
            for (const auto& g : groups_)
                for (const auto& c : g.copies)
                    if (c.loc == loc && (c.health == CopyHealth::Active || c.health == CopyHealth::Policed))
                        view.hosted.push_back({g.app_id, c.task});
            const auto d = bit_check(view, sc_.faults, t);
            if (!d) continue;
            std::ostringstream os;
            os << "l" << loc.lane << "p" << loc.proc;
            if (d->granularity == Granularity::Task) {
                ev.deviating_copies.insert({loc.lane, loc.proc, d->app, d->task});
                os << "a" << d->app << "t" << d->task;
            } else {
                ev.silent_processors.insert(loc);
            }
            fails.push_back(os.str());
        }
        trace(t, EventKind::BITCheck, -1, -1, -1, -1, fails.empty() ? "pass" : "fail=" + detail::join(fails));
        if (!ev.empty()) handle_detections(classify(ev, topology(), sc_.system.architecture), t);
    }

    // ----------------------------------------------------------- shutdown

    // Whether the faults behind a detection are all transient, and when the
    // last of them clears.
    std::pair<bool, SimTime> explain(const Detection& d, SimTime t) const {
        bool any = false, all_transient = true;
        SimTime clear{0};
        for (const auto& f : sc_.faults) {
            if (!f.active_at(t) || f.target.kind == TargetKind::Sensor) continue;
            bool related = false;
            switch (d.granularity) {
                case Granularity::Lane: related = f.target.lane == d.lane; break;
                case Granularity::Processor:
                    related = f.target.lane == d.lane && (f.target.kind == TargetKind::Lane || f.target.proc == d.proc);
                    break;
                case Granularity::Task:
                    related = f.target.lane == d.lane &&
                              (f.target.kind == TargetKind::Lane ||
                               (f.target.proc == d.proc &&
                                (f.target.kind == TargetKind::Processor ||
                                 (f.target.app == d.app && f.target.task == d.task))));
                    break;
                case Granularity::Sensor: break;
            }
            if (!related) continue;
            any = true;
            if (f.kind != FaultKind::Transient) all_transient = false;
            else clear = std::max(clear, f.end());
        }
        return {any && all_transient, clear};
    }

    void release_copy(int copy_id, SimTime t) {
        auto& info = copies_.at(copy_id);
        const TaskKey key{info.app, info.task, copy_id};
        auto& pr = procs_.at(info.loc);
        pr.admitted.remove(key);
        pr.sim.remove_task(key);
        bool changed = false;
        if (info.reserved) {
            committed_ -= info.demand;
            info.reserved = false;
            changed = true;
        }
        if (info.sending) {
            active_load_ -= info.demand;
            info.sending = false;
            changed = true;
        }
        if (changed) {
            bus_point(t);
            pump_bus(t);
        }
    }

    void set_status(const Location& loc, ProcStatus st) {
        auto& pr = procs_.at(loc);
        if (pr.status != ProcStatus::Up) return;
        pr.status = st;
        pr.sim.clear();
    }

    struct Loss {
        AppId app = 0;
        bool in_place = false;
        SimTime clear_at{0};
        FaultTarget component;
        Granularity granularity = Granularity::Processor;
        std::vector<ShutdownEffect> lost;
    };

    void handle_detections(const std::vector<Detection>& ds, SimTime t) {
        std::map<std::pair<AppId, bool>, Loss> losses;
        std::vector<std::pair<std::size_t, std::vector<int>>> announced;
        const std::size_t first_record = records_.size();
        for (const auto& d : ds) {
            if (d.granularity == Granularity::Sensor) {
                if (sensors_.at({d.app, d.lane}).healthy) {
                    detections_.push_back(d);
                    fail_sensor(d.app, d.lane, t);
                }
                continue;
            }
            std::vector<Location> hit;
            for (const auto& [loc, pr] : procs_) {
                const bool in = d.granularity == Granularity::Lane ? loc.lane == d.lane
                                                                   : (loc.lane == d.lane && loc.proc == d.proc);
                if (in && pr.status == ProcStatus::Up) hit.push_back(loc);
            }
            if (hit.empty()) continue;
            const auto [transient, clear] = explain(d, t);
            auto effects = shutdown(d, groups_, transient);
            if (d.granularity == Granularity::Task && effects.empty()) continue;
            detections_.push_back(d);

            std::vector<int> ids;
            for (const auto& e : effects) ids.push_back(e.copy_id);
            announced.push_back({trace_.size(), ids});
            trace(t, EventKind::ShutdownApplied, d.lane, d.proc, d.app, d.task,
                  "granularity=" + std::string(to_string(d.granularity)) +
                      ";mechanism=" + std::string(to_string(d.mechanism)) + ";transient=" + (transient ? "1" : "0") +
                      ";copies=" + detail::join(ids));

            for (const auto& e : effects) {
                release_copy(e.copy_id, t);
                if (e.before == CopyHealth::Policed) {
                    for (auto& ep : episodes_)
                        if (ep.phase != Phase::Closed && owns_copy(ep, e.copy_id))
                            abandon(ep, t, "policed copy lost");
                    continue;
                }
                auto& loss = losses[{e.app, transient}];
                loss.app = e.app;
                loss.in_place = transient;
                loss.clear_at = std::max(loss.clear_at, clear);
                loss.component = d.as_target();
                loss.granularity = d.granularity;
                loss.lost.push_back(e);
            }
            if (d.granularity != Granularity::Task)
                for (const auto& loc : hit) set_status(loc, transient ? ProcStatus::Restabilizing : ProcStatus::Down);
            // Reservations on a processor that just went away cannot be honoured.
            for (auto& ep : episodes_) {
                if (ep.phase == Phase::Closed || ep.phase == Phase::AwaitClear) continue;
                for (const auto& pl : ep.placements)
                    if (!pl.executing && procs_.at(pl.target).status != ProcStatus::Up) {
                        abandon(ep, t, "target processor lost");
                        break;
                    }
            }
        }
        if (losses.empty()) return;
        open_records(losses, t);
        for (const auto& [idx, ids] : announced) {
            std::vector<int> recs;
            for (std::size_t r = first_record; r < records_.size(); ++r)
                for (int c : records_[r].failed_copies)
                    if (std::find(ids.begin(), ids.end(), c) != ids.end()) {
                        recs.push_back(static_cast<int>(r));
                        break;
                    }
            if (!recs.empty()) trace_[idx].detail += ";record=" + detail::join(recs);
        }
    }

    bool owns_copy(const Episode& ep, int copy_id) const {
        for (const auto& pl : ep.placements)
            for (const auto& ut : pl.tasks)
                if (ut.new_copy == copy_id) return true;
        return false;
    }

    // ------------------------------------------------------------ recovery

    ReconfigRecord& record_of(const Episode& ep) { return records_[ep.record]; }

    int new_episode(const Loss& loss, SimTime t) {
        ReconfigRecord r;
        r.record_id = static_cast<int>(records_.size());
        r.app_id = loss.app;
        r.granularity = loss.granularity;
        r.t_f = t;
        r.strategy = app_spec(loss.app).state_model.strategy;
        r.in_place = loss.in_place;
        for (const auto& e : loss.lost) r.failed_copies.push_back(e.copy_id);
        records_.push_back(r);
        Episode ep;
        ep.record = r.record_id;
        ep.app = loss.app;
        ep.in_place = loss.in_place;
        ep.clear_at = loss.clear_at;
        ep.component = loss.component;
        ep.counter = PoliceCounter(sc_.system.timing.police_rounds);
        episodes_.push_back(std::move(ep));
        return r.record_id;
    }

    void open_records(const std::map<std::pair<AppId, bool>, Loss>& losses, SimTime t) {
        const auto arch = sc_.system.architecture;
        std::vector<FailedUnit> units;
        std::vector<int> unit_episode;
        std::vector<int> selecting;

        for (const auto& [key, loss] : losses) {
            const int id = new_episode(loss, t);
            auto& ep = episodes_[id];
            auto& rec = records_[id];
            const auto& app = app_spec(loss.app);

            if (loss.in_place) {
                rec.t_r = t;
                ep.phase = Phase::AwaitClear;
                for (const auto& e : loss.lost) {
                    PlacementRt pl;
                    pl.target = e.loc;
                    pl.tasks.push_back({*app.find_task(e.task), e.copy_id, e.copy_id});
                    ep.placements.push_back(std::move(pl));
                    rec.placements.push_back({e.task, e.copy_id, e.copy_id, e.loc});
                }
                trace(t, EventKind::SelectionDone, -1, -1, loss.app, -1,
                      "record=" + std::to_string(id) + ";in_place=1");
                continue;
            }
            if (arch == Architecture::FederatedQuadruplex) {
                for (const auto& e : loss.lost) rec.degraded_tasks.push_back(e.task);
                rec.note = "federated lanes are not reconfigured";
                close(ep, Outcome::DegradedDuplex, t);
                continue;
            }
            const auto& g = group(loss.app);
            bool orphaned = false;
            for (const auto& e : loss.lost)
                if (g.active_copies(e.task) == 0) orphaned = true;
            if (orphaned) {
                rec.note = "no surviving copies to police against";
                close(ep, Outcome::Abandoned, t);
                continue;
            }

            std::map<Location, FailedUnit> by_proc;
            for (const auto& e : loss.lost) {
                UnitTask ut{*app.find_task(e.task), e.copy_id, next_copy_++};
                if (arch == Architecture::RestrictedIntegrated) {
                    auto& u = by_proc[e.loc];
                    u.app = loss.app;
                    u.criticality = app.criticality;
                    u.lane = e.loc.lane;
                    u.tasks.push_back(ut);
                } else {
                    units.push_back(FailedUnit{loss.app, app.criticality, e.loc.lane, {ut}});
                    unit_episode.push_back(id);
                }
            }
            for (auto& [loc, u] : by_proc) {
                units.push_back(std::move(u));
                unit_episode.push_back(id);
            }
            selecting.push_back(id);
        }
        if (selecting.empty()) return;

        // Recovery order is decided inside select_spare; keep the unit -> episode map through it.
        std::map<int, int> episode_of_copy;
        for (std::size_t i = 0; i < units.size(); ++i)
            episode_of_copy[units[i].tasks.front().new_copy] = unit_episode[i];

        const auto plan = select_spare(selection_state(), units, sc_.policies.selection);
        for (const auto& entry : plan.entries) {
            const int id = episode_of_copy.at(entry.unit.tasks.front().new_copy);
            auto& ep = episodes_[id];
            auto& rec = records_[id];
            if (!entry.target) {
                for (const auto& ut : entry.unit.tasks) rec.degraded_tasks.push_back(ut.spec.task_id);
                continue;
            }
            PlacementRt pl;
            pl.target = *entry.target;
            pl.tasks = entry.unit.tasks;
            for (const auto& ut : entry.unit.tasks) {
                rec.placements.push_back({ut.spec.task_id, ut.failed_copy, ut.new_copy, *entry.target});
                copies_[ut.new_copy] = CopyInfo{entry.unit.app, ut.spec.task_id, *entry.target, ut.spec.bus_demand(),
                                                true, false};
            }
            ep.placements.push_back(std::move(pl));
        }
        for (const auto& slot : plan.after.processors) procs_.at(slot.loc).admitted = slot.state;
        committed_ = plan.after.bus.current_load;

        for (int id : selecting) {
            auto& ep = episodes_[id];
            auto& rec = records_[id];
            rec.t_r = t;
            std::vector<std::string> where;
            for (const auto& p : rec.placements)
                where.push_back("t" + std::to_string(p.task) + "@l" + std::to_string(p.loc.lane) + "p" +
                                std::to_string(p.loc.proc));
            trace(t, EventKind::SelectionDone, -1, -1, rec.app_id, -1,
                  "record=" + std::to_string(id) + ";placed=" + (where.empty() ? "none" : detail::join(where)) +
                      ";degraded=" + std::to_string(rec.degraded_tasks.size()));
            if (ep.placements.empty()) {
                rec.note = "no admissible spare";
                close(ep, Outcome::DegradedDuplex, t);
            } else {
                ep.phase = Phase::Selected;
                try_start(ep.app, t);
            }
        }
    }

    SelectionState selection_state() const {
        SelectionState s;
        s.architecture = sc_.system.architecture;
        s.timing = sc_.system.timing;
        s.bus = BusState{committed_, sc_.system.bus.max_load};
        for (const auto& [loc, pr] : procs_)
            s.processors.push_back(ProcessorSlot{loc, pr.role, pr.status == ProcStatus::Up, pr.admitted});
        return s;
    }

    // One new application copy per application may be in flight at a time.
    void try_start(AppId app, SimTime t) {
        for (const auto& ep : episodes_)
            if (ep.app == app &&
                (ep.phase == Phase::Transferring || ep.phase == Phase::Executing || ep.phase == Phase::AwaitPilot))
                return;
        for (auto& ep : episodes_)
            if (ep.app == app && ep.phase == Phase::Selected) {
                ep.phase = Phase::Transferring;
                for (std::size_t i = 0; i < ep.placements.size(); ++i) {
                    double code = 0.0;
                    if (!ep.in_place)
                        for (const auto& ut : ep.placements[i].tasks) code += ut.spec.code_size;
                    bus_queue_.push_back(BusJob{ep.record, i, false, code});
                }
                pump_bus(t);
                return;
            }
    }

    void on_fault_clear(int idx, SimTime t) {
        const auto& f = sc_.faults[idx];
        trace(t, EventKind::FaultClear, f.target.lane, f.target.proc, f.target.app, f.target.task,
              "fault=" + std::to_string(idx));
        for (auto& [loc, pr] : procs_)
            if (pr.status == ProcStatus::Restabilizing && !host_silent(loc, t) && !explain_any(loc, t))
                pr.status = ProcStatus::Up;

        for (auto& ep : episodes_) {
            if (ep.phase != Phase::AwaitClear || ep.clear_at > t) continue;
            bool ok = true;
            for (const auto& pl : ep.placements)
                if (procs_.at(pl.target).status != ProcStatus::Up) ok = false;
            // Re-admit the restabilized copies on their own processors.
            for (auto& pl : ep.placements)
                for (const auto& ut : pl.tasks) {
                    if (!ok) break;
                    auto& pr = procs_.at(pl.target);
                    const auto cpu = admit_task(pr.admitted, ut.spec, TaskKey{ep.app, ut.spec.task_id, ut.new_copy},
                                                sc_.system.timing);
                    const auto comms = check_comms(BusState{committed_, sc_.system.bus.max_load}, ut.spec.bus_demand());
                    if (!cpu.accepted || !comms.accepted) {
                        if (cpu.accepted) pr.admitted.remove(TaskKey{ep.app, ut.spec.task_id, ut.new_copy});
                        ok = false;
                        break;
                    }
                    auto& info = copies_.at(ut.new_copy);
                    info.reserved = true;
                    committed_ += info.demand;
                }
            if (!ok) {
                abandon(ep, t, "restabilized component not admissible");
                continue;
            }
            ep.phase = Phase::Selected;
            try_start(ep.app, t);
        }
    }

    // An active fault of any kind still aimed at this processor.
    bool explain_any(const Location& loc, SimTime t) const {
        for (const auto& f : sc_.faults)
            if (f.active_at(t) && f.target.covers_processor(loc)) return true;
        return false;
    }

    // ------------------------------------------------------------------ bus

    void bus_point(SimTime t) {
        const double load = active_load_ + transfer_rate_;
        bus_peak_ = std::max(bus_peak_, load);
        if (!bus_load_.empty() && bus_load_.back().at == t) bus_load_.back().load = load;
        else if (bus_load_.empty() || bus_load_.back().load != load) bus_load_.push_back({t, load});
    }

    void pump_bus(SimTime t) {
        while (!bus_current_ && !bus_queue_.empty()) {
            const BusJob job = bus_queue_.front();
            auto& ep = episodes_[job.episode];
            if (ep.phase == Phase::Closed) {
                bus_queue_.pop_front();
                continue;
            }
            const double bw = available_transfer_bandwidth(BusState{committed_, sc_.system.bus.max_load});
            if (job.payload > 0.0 && bw <= kLoadEpsilon) {
                if (!bus_stalled_) {
                    trace(t, EventKind::TransferStall, -1, -1, ep.app, -1, "record=" + std::to_string(ep.record));
                    bus_stalled_ = true;
                }
                return;
            }
            bus_stalled_ = false;
            bus_queue_.pop_front();
            auto& rec = record_of(ep);
            if (!job.state_phase && !rec.t_i) rec.t_i = t;
            const Duration d = transfer_time(job.payload, bw);
            if (d.count() == 0) {
                job_done(job, t);
                continue;
            }
            bus_current_ = job;
            transfer_rate_ = bw;
            bus_point(t);
            push(t + d, job.state_phase ? EventKind::StateTransferDone : EventKind::InstallDone, Action::BusDone, 0);
        }
    }

    void on_bus_done(SimTime t) {
        const BusJob job = *bus_current_;
        bus_current_.reset();
        transfer_rate_ = 0.0;
        bus_point(t);
        if (episodes_[job.episode].phase != Phase::Closed) job_done(job, t);
        pump_bus(t);
    }

    void job_done(const BusJob& job, SimTime t) {
        auto& ep = episodes_[job.episode];
        auto& rec = record_of(ep);
        auto& pl = ep.placements[job.placement];
        const auto detail = "record=" + std::to_string(ep.record) + ";payload=" + std::to_string(job.payload);
        if (!job.state_phase) {
            rec.t_s = t;
            trace(t, EventKind::InstallDone, pl.target.lane, pl.target.proc, ep.app, -1, detail);
            const double payload = state_payload(app_spec(ep.app).state_model);
            bus_queue_.push_front(BusJob{job.episode, job.placement, true, payload});
            return;
        }
        rec.t_e = t;
        trace(t, EventKind::StateTransferDone, pl.target.lane, pl.target.proc, ep.app, -1, detail);
        start_execution(ep, pl, t);
        if (std::all_of(ep.placements.begin(), ep.placements.end(),
                        [](const PlacementRt& p) { return p.executing; }))
            ep.phase = Phase::Executing;
    }

    void start_execution(Episode& ep, PlacementRt& pl, SimTime t) {
        auto& g = group(ep.app);
        const auto& sm = app_spec(ep.app).state_model;
        auto& pr = procs_.at(pl.target);
        for (const auto& ut : pl.tasks) {
            if (auto* c = g.find(ut.new_copy)) {
                c->health = CopyHealth::Policed;
                c->record = ep.record;
                c->loc = pl.target;
            } else {
                g.copies.push_back({ut.new_copy, ut.spec.task_id, pl.target, CopyHealth::Policed, ep.record});
            }
            auto& info = copies_.at(ut.new_copy);
            info.sending = true;
            active_load_ += info.demand;
            const TaskKey key{ep.app, ut.spec.task_id, ut.new_copy};
            pr.sim.add_task(key, ut.spec.wcet, ut.spec.period, ut.spec.deadline, t, ut.spec.exec_ratio);
            const int replay = replay_samples(sm);
            if (replay > 0) {
                const int bg = next_background_++;
                pr.sim.add_background(bg, ut.spec.wcet * replay);
                pl.background_ids.push_back(bg);
            }
        }
        pl.executing = true;
        bus_point(t);
    }

    // ------------------------------------------------------------- policing

    void police_round(AppId app, SimTime t) {
        const double ref = sc_.signal.at(t);
        const double tol = sc_.police_tolerance();
        const int needed_samples = convergence_samples(app_spec(app).state_model);
        for (auto& ep : episodes_) {
            if (ep.app != app || ep.phase != Phase::Executing) continue;
            bool replayed = true;
            for (const auto& pl : ep.placements)
                for (int bg : pl.background_ids)
                    if (!procs_.at(pl.target).sim.background_finished(bg)) replayed = false;
            if (!replayed) continue;

            auto& g = group(app);
            bool match = true;
            for (const auto& pl : ep.placements)
                for (const auto& ut : pl.tasks) {
                    const TaskKey key{app, ut.spec.task_id, ut.new_copy};
                    if (procs_.at(pl.target).sim.completed_jobs(key) < static_cast<std::size_t>(needed_samples)) {
                        match = false;
                        continue;
                    }
                    std::vector<double> active;
                    for (const auto& c : g.copies)
                        if (c.task == ut.spec.task_id && c.health == CopyHealth::Active) {
                            const auto e = emission(c.loc, app, c.task, t);
                            if (!e.silent) active.push_back(ref + e.skew);
                        }
                    const auto mine = emission(pl.target, app, ut.spec.task_id, t);
                    if (active.empty() || mine.silent || mine.byzantine >= 0) {
                        match = false;
                        continue;
                    }
                    std::sort(active.begin(), active.end());
                    const double consensus = 0.5 * (active[(active.size() - 1) / 2] + active[active.size() / 2]);
                    if (std::abs(ref + mine.skew - consensus) > tol) match = false;
                }
            const bool eligible = ep.counter.observe(match);
            trace(t, EventKind::PoliceRound, -1, -1, app, -1,
                  "record=" + std::to_string(ep.record) + ";match=" + (match ? "1" : "0") +
                      ";consecutive=" + std::to_string(ep.counter.consecutive()));
            if (eligible) {
                ep.eligible_at = t;
                ep.phase = Phase::AwaitPilot;
                try_readmit(ep, t);
            }
        }
    }

    void try_readmit(Episode& ep, SimTime t) {
        const bool gated = ep.in_place && sc_.policies.pilot_gate;
        const auto approval = approval_for(ep.component, record_of(ep).t_f, t);
        if (readmit_time(ep.eligible_at, gated, approval)) readmit(ep, t);
    }

    void on_pilot_approval(int idx, SimTime t) {
        const auto& a = sc_.policies.approvals[idx];
        trace(t, EventKind::PilotApproval, a.target.lane, a.target.proc, a.target.app, a.target.task,
              "approval=" + std::to_string(idx));
        for (auto& ep : episodes_)
            if (ep.phase == Phase::AwaitPilot) try_readmit(ep, t);
        for (auto& [key, s] : sensors_)
            if (s.eligible && !s.healthy) try_restore_sensor(key.first, key.second, t);
    }

    void readmit(Episode& ep, SimTime t) {
        auto& g = group(ep.app);
        for (const auto& pl : ep.placements)
            for (const auto& ut : pl.tasks)
                if (auto* c = g.find(ut.new_copy)) {
                    c->health = CopyHealth::Active;
                    c->record = -1;
                }
        auto& rec = record_of(ep);
        rec.t_a = t;
        trace(t, EventKind::Readmit, -1, -1, ep.app, -1, "record=" + std::to_string(ep.record));
        close(ep, Outcome::Readmitted, t);
    }

    void abandon(Episode& ep, SimTime t, const std::string& why) {
        if (ep.phase == Phase::Closed) return;
        auto& g = group(ep.app);
        const Phase was = ep.phase;
        ep.phase = Phase::Closed;  // before releasing, so the bus skips its jobs
        for (const auto& pl : ep.placements)
            for (const auto& ut : pl.tasks) {
                if (auto* c = g.find(ut.new_copy)) c->health = CopyHealth::Shutdown;
                if (was != Phase::AwaitClear || ep.in_place) {
                    auto it = copies_.find(ut.new_copy);
                    if (it != copies_.end() && (it->second.reserved || it->second.sending)) release_copy(ut.new_copy, t);
                }
            }
        ep.phase = was;
        record_of(ep).note = why;
        close(ep, Outcome::Abandoned, t);
    }

    void close(Episode& ep, Outcome o, SimTime t) {
        ep.phase = Phase::Closed;
        record_of(ep).outcome = o;
        try_start(ep.app, t);
    }

    // ------------------------------------------------------------- coverage

    void update_coverage(SimTime t) {
        for (const auto& g : groups_) {
            AppCoverage c;
            c.functional = functional_coverage(g);
            c.zonal = zonal_coverage(g);
            std::size_t channels = 0;
            for (const auto& lane : sc_.system.lanes)
                if (lane_up(lane.lane_id) && sensors_.at({g.app_id, lane.lane_id}).healthy) ++channels;
            c.peripheral = level_from_count(channels);
            coverage_.update(t, g.app_id, c);
        }
    }

    // --------------------------------------------------------------- finish

    SimResult finish() {
        const SimTime horizon = sc_.sim.horizon;
        for (auto& ep : episodes_)
            if (ep.phase != Phase::Closed) {
                record_of(ep).note = record_of(ep).note.empty() ? "horizon reached" : record_of(ep).note;
                ep.phase = Phase::Closed;
                record_of(ep).outcome = Outcome::Abandoned;
            }

        SimResult r;
        r.scenario = sc_.name;
        r.horizon = horizon;
        for (auto& [loc, pr] : procs_) {
            pr.sim.finalize(horizon);
            for (const auto& j : pr.sim.jobs()) {
                if (sc_.sim.trace_jobs && !j.dropped) {
                    trace(j.release, EventKind::TaskRelease, loc.lane, loc.proc, j.key.app, j.key.task,
                          "copy=" + std::to_string(j.key.copy) + ";job=" + std::to_string(j.index));
                    if (j.done())
                        trace(j.finish, EventKind::TaskComplete, loc.lane, loc.proc, j.key.app, j.key.task,
                              "copy=" + std::to_string(j.key.copy) + ";job=" + std::to_string(j.index));
                }
                if (j.missed) {
                    r.misses.push_back({loc, j.key, j.release, j.deadline, j.finish});
                    trace(j.deadline, EventKind::DeadlineMiss, loc.lane, loc.proc, j.key.app, j.key.task,
                          "copy=" + std::to_string(j.key.copy) + ";job=" + std::to_string(j.index));
                }
            }
            std::set<TaskKey> keys;
            for (const auto& j : pr.sim.jobs()) keys.insert(j.key);
            for (const auto& k : keys) {
                std::size_t done = 0;
                for (const auto& j : pr.sim.jobs())
                    if (j.key == k && j.done()) ++done;
                if (done >= 2) r.jitter.push_back({loc, k, measure_jitter(pr.sim.jobs(), k)});
            }
        }
        sort_trace(trace_);
        r.trace = std::move(trace_);
        r.records = records_;
        r.coverage = coverage_;
        r.risk = time_at_risk(records_, horizon);
        r.bus_load = bus_load_;
        r.bus_peak = bus_peak_;
        r.bus_max = sc_.system.bus.max_load;
        r.detections = detections_;
        r.ambiguous_votes = ambiguous_;
        r.faults_injected = sc_.faults.size();
        r.groups = groups_;
        return r;
    }

    Scenario sc_;
    std::priority_queue<Pending, std::vector<Pending>, Later> queue_;
    std::uint64_t queue_seq_ = 0;
    std::uint64_t trace_seq_ = 0;
    std::vector<TraceEvent> trace_;

    std::map<Location, ProcRuntime> procs_;
    std::vector<ReplicaGroup> groups_;
    std::map<int, CopyInfo> copies_;
    std::map<std::pair<AppId, LaneId>, SensorRt> sensors_;
    int next_copy_ = 1;
    int next_background_ = 1;

    std::vector<ReconfigRecord> records_;
    std::vector<Episode> episodes_;  // index == record id

    double committed_ = 0.0;
    double active_load_ = 0.0;
    double transfer_rate_ = 0.0;
    double bus_peak_ = 0.0;
    std::vector<BusPoint> bus_load_;
    std::deque<BusJob> bus_queue_;
    std::optional<BusJob> bus_current_;
    bool bus_stalled_ = false;

    CoverageReport coverage_;
    std::vector<Detection> detections_;
    std::size_t ambiguous_ = 0;
};

/// Runs one scenario from t = 0 to its horizon.
inline SimResult run(const Scenario& scenario) {
    Engine engine(scenario);
    return engine.run();
}

}  // namespace ftsim
