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
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ftsim/error.hpp"
#include "ftsim/model.hpp"
#include "ftsim/scenario.hpp"

namespace ftsim {

inline constexpr int kScenarioFormatVersion = 1;

/// A file could not be read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

using nlohmann::json;

// Collects every structural problem while walking a document, so one pass
// reports all of them.
class Reader {
public:
    std::vector<Violation> violations;

    void fail(const std::string& path, const std::string& what) {
        violations.push_back({ViolationKind::MalformedDocument, path + ": " + what});
    }

    const json* child(const json& obj, const char* key, const std::string& path, bool required) {
        if (!obj.is_object()) {
            fail(path, "expected an object");
            return nullptr;
        }
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) fail(path + "." + key, "missing");
            return nullptr;
        }
        return &*it;
    }

    double number(const json& obj, const char* key, const std::string& path, std::optional<double> fallback) {
        const json* v = child(obj, key, path, !fallback);
        if (!v) return fallback.value_or(0.0);
        if (!v->is_number()) {
            fail(path + "." + key, "expected a number");
            return fallback.value_or(0.0);
        }
        return v->get<double>();
    }

    int integer(const json& obj, const char* key, const std::string& path, std::optional<int> fallback) {
        const json* v = child(obj, key, path, !fallback);
        if (!v) return fallback.value_or(0);
        if (!v->is_number_integer()) {
            fail(path + "." + key, "expected an integer");
            return fallback.value_or(0);
        }
        return v->get<int>();
    }

    bool boolean(const json& obj, const char* key, const std::string& path, bool fallback) {
        const json* v = child(obj, key, path, false);
        if (!v) return fallback;
        if (!v->is_boolean()) {
            fail(path + "." + key, "expected true or false");
            return fallback;
        }
        return v->get<bool>();
    }

    std::string text(const json& obj, const char* key, const std::string& path, std::optional<std::string> fallback) {
        const json* v = child(obj, key, path, !fallback);
        if (!v) return fallback.value_or("");
        if (!v->is_string()) {
            fail(path + "." + key, "expected a string");
            return fallback.value_or("");
        }
        return v->get<std::string>();
    }

    const json* array(const json& obj, const char* key, const std::string& path, bool required) {
        const json* v = child(obj, key, path, required);
        if (v && !v->is_array()) {
            fail(path + "." + key, "expected an array");
            return nullptr;
        }
        return v;
    }

    template <typename E, std::size_t N>
    E choice(const json& obj, const char* key, const std::string& path, const std::array<E, N>& options, E fallback,
             bool required = false) {
        const json* v = child(obj, key, path, required);
        if (!v) return fallback;
        if (v->is_string())
            for (E e : options)
                if (v->get<std::string>() == to_string(e)) return e;
        std::string allowed;
        for (E e : options) allowed += std::string(allowed.empty() ? "" : ", ") + std::string(to_string(e));
        fail(path + "." + key, "expected one of " + allowed);
        return fallback;
    }

    Duration millis(const json& obj, const char* key, const std::string& path, std::optional<double> fallback) {
        const double v = number(obj, key, path, fallback);
        if (!std::isfinite(v)) {
            fail(path + "." + key, "not finite");
            return Duration{0};
        }
        return from_ms(v);
    }
};

inline const std::array<Architecture, 3> kArchitectures{Architecture::FederatedQuadruplex,
                                                        Architecture::RestrictedIntegrated,
                                                        Architecture::FullyIntegrated};
inline const std::array<ProcessorRole, 2> kRoles{ProcessorRole::Allocated, ProcessorRole::Spare};
inline const std::array<StateStrategy, 3> kStrategies{StateStrategy::Transfer, StateStrategy::Convergence,
                                                      StateStrategy::Hybrid};
inline const std::array<TargetKind, 4> kTargetKinds{TargetKind::Lane, TargetKind::Processor, TargetKind::Task,
                                                    TargetKind::Sensor};
inline const std::array<FaultKind, 3> kFaultKinds{FaultKind::Transient, FaultKind::Permanent, FaultKind::Byzantine};

inline const std::array<Consensus, 2> kConsensus{Consensus::MedianOfOthers, Consensus::MeanOfOthers};

inline TaskSpec read_task(Reader& r, const json& j, const std::string& path, std::size_t lanes) {
    TaskSpec t;
    t.task_id = r.integer(j, "task_id", path, std::nullopt);
    t.wcet = r.millis(j, "wcet_ms", path, std::nullopt);
    t.period = r.millis(j, "period_ms", path, std::nullopt);
    t.deadline = r.millis(j, "deadline_ms", path, to_ms(t.period));
    t.code_size = r.number(j, "code_size", path, 0.0);
    t.exec_ratio = r.number(j, "exec_ratio", path, 1.0);

    // initial_proc is either one lane-relative id or one id per lane.
    if (const json* p = r.child(j, "initial_proc", path, true)) {
        if (p->is_number_integer()) {
            t.initial_proc = p->get<int>();
        } else if (p->is_array() && !p->empty() &&
                   std::all_of(p->begin(), p->end(), [](const json& e) { return e.is_number_integer(); })) {
            t.initial_proc = p->front().get<int>();
            bool same = true;
            for (const auto& e : *p) same = same && e.get<int>() == t.initial_proc;
            if (!same)
                r.violations.push_back({ViolationKind::AsymmetricLanes,
                                        path + ": allocation differs between lanes (" + p->dump() + ")"});
            else if (p->size() != lanes)
                r.fail(path + ".initial_proc", "needs one entry per lane");
        } else {
            r.fail(path + ".initial_proc", "expected an integer or an array of integers");
        }
    }
    if (const json* msgs = r.array(j, "messages", path, false))
        for (std::size_t i = 0; i < msgs->size(); ++i) {
            const auto mp = path + ".messages[" + std::to_string(i) + "]";
            t.messages.push_back({r.integer((*msgs)[i], "msg_id", mp, static_cast<int>(i)),
                                  r.number((*msgs)[i], "size", mp, std::nullopt)});
        }
    return t;
}

inline SystemModel read_system(Reader& r, const json& j, const std::string& path) {
    SystemModel m;
    m.architecture = r.choice(j, "architecture", path, kArchitectures, Architecture::RestrictedIntegrated, true);
    if (const json* lanes = r.array(j, "lanes", path, true))
        for (std::size_t i = 0; i < lanes->size(); ++i) {
            const auto lp = path + ".lanes[" + std::to_string(i) + "]";
            const auto& lj = (*lanes)[i];
            LaneSpec l;
            l.lane_id = r.integer(lj, "lane_id", lp, static_cast<int>(i));
            if (const json* procs = r.array(lj, "processors", lp, true))
                for (std::size_t k = 0; k < procs->size(); ++k) {
                    const auto pp = lp + ".processors[" + std::to_string(k) + "]";
                    l.processors.push_back({r.integer((*procs)[k], "proc_id", pp, static_cast<int>(k)),
                                            r.choice((*procs)[k], "role", pp, kRoles, ProcessorRole::Allocated)});
                }
            m.lanes.push_back(std::move(l));
        }
    if (const json* bus = r.child(j, "bus", path, true)) m.bus.max_load = r.number(*bus, "max_load", path + ".bus", std::nullopt);
    if (const json* tc = r.child(j, "timing", path, false)) {
        const auto tp = path + ".timing";
        m.timing.utilization_bound = r.number(*tc, "utilization_bound", tp, 0.69);
        m.timing.customer_cap_mode = r.boolean(*tc, "customer_cap_mode", tp, false);
        m.timing.police_rounds = r.integer(*tc, "police_rounds_K", tp, 3);
        m.timing.tolerance = r.number(*tc, "tolerance", tp, 0.0);
    }
    if (const json* apps = r.array(j, "applications", path, true))
        for (std::size_t i = 0; i < apps->size(); ++i) {
            const auto ap = path + ".applications[" + std::to_string(i) + "]";
            const auto& aj = (*apps)[i];
            ApplicationSpec a;
            a.app_id = r.integer(aj, "app_id", ap, std::nullopt);
            a.criticality = r.integer(aj, "criticality", ap, 0);
            if (const json* sm = r.child(aj, "state_model", ap, false)) {
                const auto sp = ap + ".state_model";
                a.state_model.strategy = r.choice(*sm, "strategy", sp, kStrategies, StateStrategy::Transfer);
                a.state_model.snapshot_size = r.number(*sm, "snapshot_size", sp, 0.0);
                a.state_model.history_len = r.integer(*sm, "history_len_H", sp, 0);
                a.state_model.min_state_size = r.number(*sm, "min_state_size", sp, 0.0);
            }
            if (const json* tasks = r.array(aj, "tasks", ap, true))
                for (std::size_t k = 0; k < tasks->size(); ++k)
                    a.tasks.push_back(
                        read_task(r, (*tasks)[k], ap + ".tasks[" + std::to_string(k) + "]", m.lanes.size()));
            m.applications.push_back(std::move(a));
        }
    return m;
}

inline FaultTarget read_target(Reader& r, const json& j, const std::string& path) {
    FaultTarget t;
    t.kind = r.choice(j, "kind", path, kTargetKinds, TargetKind::Processor, true);
    t.lane = r.integer(j, "lane", path, std::nullopt);
    const bool has_proc = t.kind == TargetKind::Processor || t.kind == TargetKind::Task;
    t.proc = has_proc ? r.integer(j, "proc", path, std::nullopt) : -1;
    t.app = t.kind == TargetKind::Task || t.kind == TargetKind::Sensor ? r.integer(j, "app", path, std::nullopt) : -1;
    t.task = t.kind == TargetKind::Task ? r.integer(j, "task", path, std::nullopt) : -1;
    return t;
}

inline json target_json(const FaultTarget& t) {
    json j{{"kind", to_string(t.kind)}, {"lane", t.lane}};
    if (t.proc >= 0) j["proc"] = t.proc;
    if (t.app >= 0) j["app"] = t.app;
    if (t.task >= 0) j["task"] = t.task;
    return j;
}

inline json number_json(double v) {
    // Whole values print as integers so generated files stay tidy.
    if (std::abs(v) < 1e15 && v == std::floor(v)) return static_cast<std::int64_t>(v);
    return v;
}

inline json parse_json(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(e.what());
    }
}

}  // namespace detail

/// Builds and validates the system part of a scenario document.
inline SystemModel build_system(const nlohmann::json& doc) {
    detail::Reader r;
    SystemModel m;
    if (const auto* sys = r.child(doc, "system", "$", true)) m = detail::read_system(r, *sys, "system");
    auto more = validate(m);
    r.violations.insert(r.violations.end(), more.begin(), more.end());
    if (!r.violations.empty()) throw ValidationError(std::move(r.violations));
    return m;
}

/// Parses a scenario document. Throws ParseError when the text is not JSON
/// and ValidationError listing every violation otherwise.
inline Scenario scenario_from_json(const nlohmann::json& doc) {
    using detail::json;
    detail::Reader r;
    Scenario s;
    if (!doc.is_object()) {
        r.fail("$", "expected an object");
        throw ValidationError(std::move(r.violations));
    }
    const int version = r.integer(doc, "format_version", "$", kScenarioFormatVersion);
    if (version != kScenarioFormatVersion)
        r.fail("$.format_version", "unsupported version " + std::to_string(version));
    s.name = r.text(doc, "name", "$", "");
    if (const json* sys = r.child(doc, "system", "$", true)) s.system = detail::read_system(r, *sys, "system");

    if (const json* faults = r.array(doc, "faults", "$", false))
        for (std::size_t i = 0; i < faults->size(); ++i) {
            const auto fp = "faults[" + std::to_string(i) + "]";
            const auto& fj = (*faults)[i];
            FaultSpec f;
            f.at = r.millis(fj, "at_ms", fp, std::nullopt);
            if (const json* t = r.child(fj, "target", fp, true)) f.target = detail::read_target(r, *t, fp + ".target");
            f.kind = r.choice(fj, "kind", fp, detail::kFaultKinds, FaultKind::Permanent, true);
            f.duration = r.millis(fj, "duration_ms", fp, 0.0);
            f.value_skew = r.number(fj, "value_skew", fp, 0.0);
            f.per_receiver = r.boolean(fj, "per_receiver", fp, false);
            if (r.child(fj, "bit_detectable", fp, false)) f.bit_detectable = r.boolean(fj, "bit_detectable", fp, true);
            s.faults.push_back(f);
        }

    if (const json* pol = r.child(doc, "policies", "$", false)) {
        s.policies.selection.same_lane_first = r.boolean(*pol, "same_lane_first", "policies", true);
        s.policies.pilot_gate = r.boolean(*pol, "pilot_gate", "policies", false);
        if (const json* ap = r.array(*pol, "pilot_approvals", "policies", false))
            for (std::size_t i = 0; i < ap->size(); ++i) {
                const auto pp = "policies.pilot_approvals[" + std::to_string(i) + "]";
                PilotApproval a;
                if (const json* t = r.child((*ap)[i], "target", pp, true)) a.target = detail::read_target(r, *t, pp + ".target");
                a.at = r.millis((*ap)[i], "at_ms", pp, std::nullopt);
                s.policies.approvals.push_back(a);
            }
    }
    if (const json* v = r.child(doc, "voter", "$", false)) {
        s.voter.tolerance = r.number(*v, "tolerance", "voter", 1.0);
        s.voter.consensus = r.choice(*v, "consensus", "voter", detail::kConsensus, Consensus::MedianOfOthers);
    }
    if (const json* sig = r.child(doc, "signal", "$", false)) {
        s.signal.base = r.number(*sig, "base", "signal", 10.0);
        s.signal.slope_per_s = r.number(*sig, "slope_per_s", "signal", 0.0);
    }
    if (const json* sim = r.child(doc, "sim", "$", false)) {
        if (const json* seed = r.child(*sim, "seed", "sim", false)) {
            if (seed->is_number_unsigned()) s.sim.seed = seed->get<std::uint64_t>();
            else r.fail("sim.seed", "expected a non-negative integer");
        }
        s.sim.horizon = r.millis(*sim, "horizon_ms", "sim", 1000.0);
        s.sim.bit_period = r.millis(*sim, "bit_period_ms", "sim", 50.0);
        s.sim.trace_jobs = r.boolean(*sim, "trace_jobs", "sim", true);
    }

    auto more = validate(s);
    r.violations.insert(r.violations.end(), more.begin(), more.end());
    if (!r.violations.empty()) throw ValidationError(std::move(r.violations));
    return s;
}

inline Scenario parse_scenario(std::string_view text) { return scenario_from_json(detail::parse_json(text)); }

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

inline Scenario load_scenario(const std::filesystem::path& path) { return parse_scenario(read_file(path)); }

/// Serializes a scenario in the document layout parse_scenario reads.
inline nlohmann::json to_json(const Scenario& s) {
    using detail::json;
    using detail::number_json;
    json lanes = json::array();
    for (const auto& l : s.system.lanes) {
        json procs = json::array();
        for (const auto& p : l.processors) procs.push_back({{"proc_id", p.proc_id}, {"role", to_string(p.role)}});
        lanes.push_back({{"lane_id", l.lane_id}, {"processors", procs}});
    }
    json apps = json::array();
    for (const auto& a : s.system.applications) {
        json tasks = json::array();
        for (const auto& t : a.tasks) {
            json msgs = json::array();
            for (const auto& m : t.messages) msgs.push_back({{"msg_id", m.msg_id}, {"size", number_json(m.size)}});
            tasks.push_back({{"task_id", t.task_id},
                             {"wcet_ms", number_json(to_ms(t.wcet))},
                             {"period_ms", number_json(to_ms(t.period))},
                             {"deadline_ms", number_json(to_ms(t.deadline))},
                             {"initial_proc", t.initial_proc},
                             {"code_size", number_json(t.code_size)},
                             {"exec_ratio", number_json(t.exec_ratio)},
                             {"messages", msgs}});
        }
        const auto& sm = a.state_model;
        json state{{"strategy", to_string(sm.strategy)},
                   {"snapshot_size", number_json(sm.snapshot_size)},
                   {"history_len_H", sm.history_len}};
        if (sm.strategy == StateStrategy::Hybrid) state["min_state_size"] = number_json(sm.min_state_size);
        apps.push_back({{"app_id", a.app_id}, {"criticality", a.criticality}, {"state_model", state}, {"tasks", tasks}});
    }
    const auto& tc = s.system.timing;
    json system{{"architecture", to_string(s.system.architecture)},
                {"lanes", lanes},
                {"bus", {{"max_load", number_json(s.system.bus.max_load)}}},
                {"timing",
                 {{"utilization_bound", number_json(tc.utilization_bound)},
                  {"customer_cap_mode", tc.customer_cap_mode},
                  {"police_rounds_K", tc.police_rounds},
                  {"tolerance", number_json(tc.tolerance)}}},
                {"applications", apps}};

    json faults = json::array();
    for (const auto& f : s.faults) {
        json fj{{"at_ms", number_json(to_ms(f.at))}, {"target", detail::target_json(f.target)}, {"kind", to_string(f.kind)}};
        if (f.kind == FaultKind::Transient) fj["duration_ms"] = number_json(to_ms(f.duration));
        if (f.value_skew != 0.0) fj["value_skew"] = number_json(f.value_skew);
        if (f.per_receiver) fj["per_receiver"] = true;
        if (f.bit_detectable) fj["bit_detectable"] = *f.bit_detectable;
        faults.push_back(fj);
    }
    json approvals = json::array();
    for (const auto& a : s.policies.approvals)
        approvals.push_back({{"target", detail::target_json(a.target)}, {"at_ms", number_json(to_ms(a.at))}});

    return json{{"format_version", kScenarioFormatVersion},
                {"name", s.name},
                {"system", system},
                {"faults", faults},
                {"policies",
                 {{"same_lane_first", s.policies.selection.same_lane_first},
                  {"pilot_gate", s.policies.pilot_gate},
                  {"pilot_approvals", approvals}}},
                {"voter", {{"tolerance", number_json(s.voter.tolerance)}, {"consensus", to_string(s.voter.consensus)}}},
                {"signal", {{"base", number_json(s.signal.base)}, {"slope_per_s", number_json(s.signal.slope_per_s)}}},
                {"sim",
                 {{"seed", s.sim.seed},
                  {"horizon_ms", number_json(to_ms(s.sim.horizon))},
                  {"bit_period_ms", number_json(to_ms(s.sim.bit_period))},
                  {"trace_jobs", s.sim.trace_jobs}}}};
}

inline std::string to_document(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

}  // namespace ftsim
