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

#include <sstream>
#include <string>

#include <json.hpp>

#include "ftsim/engine.hpp"

namespace ftsim {

inline constexpr int kMetricsFormatVersion = 1;

namespace detail {

inline nlohmann::json opt_us(const std::optional<SimTime>& t) {
    return t ? nlohmann::json(t->count()) : nlohmann::json(nullptr);
}

}  // namespace detail

/// Metrics document: coverage timeline, time at risk, recovery records,
/// deadline misses, jitter and bus load. All times are microseconds.
inline nlohmann::json metrics_json(const SimResult& r) {
    using nlohmann::json;
    json coverage = json::array();
    for (const auto& p : r.coverage.timeline)
        coverage.push_back({{"time_us", p.at.count()},
                            {"app", p.app},
                            {"functional", to_string(p.level.functional)},
                            {"zonal", to_string(p.level.zonal)},
                            {"data_transfer", to_string(p.level.data_transfer())},
                            {"peripheral", to_string(p.level.peripheral)}});
    json final_cov = json::array();
    for (const auto& [app, c] : r.coverage.current)
        final_cov.push_back({{"app", app},
                             {"functional", to_string(c.functional)},
                             {"zonal", to_string(c.zonal)},
                             {"peripheral", to_string(c.peripheral)},
                             {"min_functional", to_string(r.coverage.min_functional(app))}});

    json risk_apps = json::array();
    for (const auto& [app, total] : r.risk.total) {
        json ivs = json::array();
        for (const auto& iv : r.risk.intervals.at(app))
            ivs.push_back({{"begin_us", iv.begin.count()}, {"end_us", iv.end.count()}, {"record", iv.record_id}});
        risk_apps.push_back({{"app", app}, {"total_us", total.count()}, {"intervals", ivs}});
    }
    json hits = json::array();
    for (const auto& h : r.risk.secondary_hits)
        hits.push_back({{"app", h.app}, {"time_us", h.at.count()}, {"record", h.record_id}, {"later_record", h.later_record_id}});

    json records = json::array();
    for (const auto& rec : r.records) {
        json placements = json::array();
        for (const auto& p : rec.placements)
            placements.push_back({{"task", p.task},
                                  {"failed_copy", p.failed_copy},
                                  {"new_copy", p.new_copy},
                                  {"lane", p.loc.lane},
                                  {"proc", p.loc.proc}});
        records.push_back({{"record", rec.record_id},
                           {"app", rec.app_id},
                           {"granularity", to_string(rec.granularity)},
                           {"failed_copies", rec.failed_copies},
                           {"t_f_us", rec.t_f.count()},
                           {"t_r_us", detail::opt_us(rec.t_r)},
                           {"t_i_us", detail::opt_us(rec.t_i)},
                           {"t_s_us", detail::opt_us(rec.t_s)},
                           {"t_e_us", detail::opt_us(rec.t_e)},
                           {"t_a_us", detail::opt_us(rec.t_a)},
                           {"placements", placements},
                           {"degraded_tasks", rec.degraded_tasks},
                           {"strategy", to_string(rec.strategy)},
                           {"in_place", rec.in_place},
                           {"outcome", to_string(rec.outcome)},
                           {"note", rec.note}});
    }

    json misses = json::array();
    for (const auto& m : r.misses)
        misses.push_back({{"lane", m.loc.lane},
                          {"proc", m.loc.proc},
                          {"app", m.key.app},
                          {"task", m.key.task},
                          {"copy", m.key.copy},
                          {"release_us", m.release.count()},
                          {"deadline_us", m.deadline.count()},
                          {"finish_us", m.finish == kNever ? json(nullptr) : json(m.finish.count())}});
    json jitter = json::array();
    for (const auto& j : r.jitter)
        jitter.push_back({{"lane", j.loc.lane},
                          {"proc", j.loc.proc},
                          {"app", j.key.app},
                          {"task", j.key.task},
                          {"copy", j.key.copy},
                          {"instances", j.jitter.instances},
                          {"release_us", j.jitter.release.count()},
                          {"input_us", j.jitter.input.count()},
                          {"output_us", j.jitter.output.count()}});
    json bus = json::array();
    for (const auto& b : r.bus_load) bus.push_back({{"time_us", b.at.count()}, {"load", b.load}});

    return json{{"format_version", kMetricsFormatVersion},
                {"scenario", r.scenario},
                {"horizon_us", r.horizon.count()},
                {"summary",
                 {{"faults", r.faults_injected},
                  {"detections", r.detections.size()},
                  {"ambiguous_votes", r.ambiguous_votes},
                  {"readmitted", r.count(Outcome::Readmitted)},
                  {"degraded", r.count(Outcome::DegradedDuplex)},
                  {"abandoned", r.count(Outcome::Abandoned)},
                  {"deadline_misses", r.misses.size()},
                  {"min_coverage", to_string(r.min_coverage())}}},
                {"coverage", {{"timeline", coverage}, {"final", final_cov}}},
                {"time_at_risk", {{"apps", risk_apps}, {"secondary_hits", hits}}},
                {"records", records},
                {"deadline_misses", misses},
                {"jitter", jitter},
                {"bus", {{"max_load", r.bus_max}, {"peak_load", r.bus_peak}, {"timeline", bus}}}};
}

inline std::string metrics_to_string(const SimResult& r) { return metrics_json(r).dump(2) + "\n"; }

/// Coverage timeline as a step series, one row per change.
inline std::string coverage_csv(const SimResult& r) {
    std::ostringstream os;
    os << "# format_version=" << kMetricsFormatVersion << '\n';
    os << "time_us,app,functional,zonal,data_transfer,peripheral\n";
    for (const auto& p : r.coverage.timeline)
        os << p.at.count() << ',' << p.app << ',' << static_cast<int>(p.level.functional) << ','
           << static_cast<int>(p.level.zonal) << ',' << static_cast<int>(p.level.data_transfer()) << ','
           << static_cast<int>(p.level.peripheral) << '\n';
    return os.str();
}

/// One-line run summary.
inline std::string summary_line(const SimResult& r) {
    std::ostringstream os;
    os << r.scenario << ": " << r.faults_injected << " faults, " << r.count(Outcome::Readmitted) << " readmitted, "
       << r.count(Outcome::DegradedDuplex) << " degraded, " << r.count(Outcome::Abandoned) << " abandoned, "
       << r.misses.size() << " misses, min coverage " << to_string(r.min_coverage());
    return os.str();
}

}  // namespace ftsim
