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

#include <gtest/gtest.h>

#include "support.hpp"

using namespace ftsim;
using fx::load;

namespace {

const ReconfigRecord* record_for(const SimResult& r, AppId app) {
    for (const auto& x : r.records)
        if (x.app_id == app) return &x;
    return nullptr;
}

CoverageLevel functional_at(const SimResult& r, AppId app, SimTime t) {
    auto level = CoverageLevel::None;
    for (const auto& p : r.coverage.timeline)
        if (p.app == app && p.at <= t) level = p.level.functional;
    return level;
}

std::size_t count_kind(const SimResult& r, EventKind k) {
    return static_cast<std::size_t>(
        std::count_if(r.trace.begin(), r.trace.end(), [k](const TraceEvent& e) { return e.kind == k; }));
}

}  // namespace

TEST(Engine, QuiescentRunIsClean) {
    const auto r = run(load("three_lane_quiescent"));
    EXPECT_TRUE(r.records.empty());
    EXPECT_TRUE(r.misses.empty());
    EXPECT_TRUE(r.detections.empty());
    EXPECT_EQ(r.min_coverage(), CoverageLevel::Triplex);
    EXPECT_GT(count_kind(r, EventKind::VoteRound), 0u);
    for (const auto& j : r.jitter) EXPECT_EQ(j.jitter.output, Duration{0});
}

TEST(Engine, ProcessorFaultRecoversOnSpare) {
    const auto r = run(load("three_lane_processor_fault"));
    ASSERT_EQ(r.records.size(), 1u);
    const auto& rec = r.records[0];
    EXPECT_EQ(rec.app_id, 1);
    EXPECT_EQ(rec.outcome, Outcome::Readmitted);
    EXPECT_TRUE(rec.ordered());
    ASSERT_EQ(rec.placements.size(), 1u);
    EXPECT_EQ(rec.placements[0].loc, (Location{0, 3}));

    // Nine copies each send 5 units per 10 ms: 4.5 committed, 95.5 spare.
    // The replacement's share is reserved at selection.
    EXPECT_EQ(*rec.t_s - *rec.t_i, transfer_time(40, 95.5));
    EXPECT_EQ(*rec.t_s - *rec.t_i, Duration{419});
    EXPECT_EQ(*rec.t_e - *rec.t_s, transfer_time(80, 95.5));

    EXPECT_EQ(functional_at(r, 1, ms(99)), CoverageLevel::Triplex);
    EXPECT_EQ(functional_at(r, 1, rec.t_f), CoverageLevel::Duplex);
    EXPECT_EQ(functional_at(r, 1, *rec.t_a - Duration{1}), CoverageLevel::Duplex);
    EXPECT_EQ(functional_at(r, 1, *rec.t_a), CoverageLevel::Triplex);
    EXPECT_TRUE(fx::trace_consistency_problems(r, 3).empty());
    EXPECT_TRUE(r.misses.empty());
    EXPECT_EQ(r.risk.for_app(1), *rec.t_a - rec.t_f);
}

TEST(Engine, LaneFaultExhaustsSpares) {
    const auto r = run(load("three_lane_lane_fault"));
    EXPECT_EQ(r.count(Outcome::Readmitted), 2u);
    EXPECT_EQ(r.count(Outcome::DegradedDuplex), 1u);
    const auto* lowest = record_for(r, 3);
    ASSERT_NE(lowest, nullptr);
    EXPECT_EQ(lowest->outcome, Outcome::DegradedDuplex);
    EXPECT_FALSE(lowest->t_a);
    for (AppId a : {1, 2}) {
        const auto* rec = record_for(r, a);
        ASSERT_NE(rec, nullptr);
        EXPECT_EQ(rec->outcome, Outcome::Readmitted);
        ASSERT_FALSE(rec->placements.empty());
        EXPECT_NE(rec->placements[0].loc.lane, 0);
    }
    EXPECT_TRUE(fx::trace_consistency_problems(r, 3).empty());
    EXPECT_EQ(functional_at(r, 3, ms(499)), CoverageLevel::Duplex);
}

TEST(Engine, BuiltScenarioMatchesFile) {
    auto s = fx::three_lane_system();
    s.name = "three_lane_processor_fault";
    s.faults.push_back(fx::permanent(100, FaultTarget::processor(0, 0)));
    const auto a = run(s);
    const auto b = run(load("three_lane_processor_fault"));
    ASSERT_EQ(a.records.size(), 1u);
    ASSERT_EQ(b.records.size(), 1u);
    EXPECT_EQ(a.records[0].t_a, b.records[0].t_a);
    EXPECT_EQ(a.records[0].t_e, b.records[0].t_e);
}

TEST(Engine, Deterministic) {
    for (const char* name : {"three_lane_lane_fault", "byzantine_quadruplex", "sensor_fault"}) {
        const auto s = load(name);
        EXPECT_EQ(trace_to_string(run(s).trace), trace_to_string(run(s).trace)) << name;
    }
}

TEST(Engine, SecondFaultInsideWindow) {
    const auto r = run(load("second_fault_inside_window"));
    EXPECT_FALSE(r.risk.secondary_hits.empty());
    EXPECT_EQ(r.min_coverage(), CoverageLevel::Simplex);
}

TEST(Engine, SecondFaultAfterWindow) {
    const auto r = run(load("second_fault_after_window"));
    EXPECT_TRUE(r.risk.secondary_hits.empty());
    EXPECT_GE(r.min_coverage(), CoverageLevel::Duplex);
    EXPECT_EQ(r.count(Outcome::Readmitted), 2u);
}

TEST(Engine, TransientRecoversInPlaceAfterApproval) {
    const auto r = run(load("transient_pilot_gate"));
    ASSERT_EQ(r.records.size(), 1u);
    const auto& rec = r.records[0];
    EXPECT_TRUE(rec.in_place);
    EXPECT_EQ(rec.outcome, Outcome::Readmitted);
    EXPECT_EQ(rec.t_a, ms(200));
}

TEST(Engine, PilotGateWithoutApprovalStaysPoliced) {
    auto s = load("transient_pilot_gate");
    s.policies.approvals.clear();
    const auto r = run(s);
    ASSERT_EQ(r.records.size(), 1u);
    EXPECT_EQ(r.records[0].outcome, Outcome::Abandoned);
    EXPECT_EQ(r.records[0].note, "horizon reached");
    EXPECT_FALSE(r.records[0].t_a);
    EXPECT_GE(count_kind(r, EventKind::PoliceRound), 3u);
    EXPECT_EQ(count_kind(r, EventKind::Readmit), 0u);
}

TEST(Engine, OtherStateStrategiesReadmit) {
    for (const char* name : {"convergence_recovery", "hybrid_recovery"}) {
        const auto r = run(load(name));
        ASSERT_EQ(r.records.size(), 1u) << name;
        EXPECT_EQ(r.records[0].outcome, Outcome::Readmitted) << name;
        EXPECT_TRUE(fx::trace_consistency_problems(r, 3).empty()) << name;
    }
}

TEST(Engine, LateFaultAbandonedAtHorizon) {
    const auto r = run(load("abandoned_at_horizon"));
    ASSERT_EQ(r.records.size(), 1u);
    EXPECT_EQ(r.records[0].outcome, Outcome::Abandoned);
    EXPECT_EQ(r.risk.for_app(r.records[0].app_id), r.horizon - r.records[0].t_f);
}

TEST(Engine, SensorFaultLowersPeripheralOnly) {
    const auto r = run(load("sensor_fault"));
    bool dipped = false;
    for (const auto& p : r.coverage.timeline)
        if (p.app == 3 && p.level.peripheral == CoverageLevel::Duplex) dipped = true;
    EXPECT_TRUE(dipped);
    EXPECT_EQ(r.coverage.current.at(3).peripheral, CoverageLevel::Triplex);
    EXPECT_EQ(r.min_coverage(), CoverageLevel::Triplex);
}

TEST(Engine, ByzantineQuadruplexIsolated) {
    const auto r = run(load("byzantine_quadruplex"));
    ASSERT_FALSE(r.detections.empty());
    for (const auto& d : r.detections) EXPECT_EQ(d.lane, 0);
    ASSERT_EQ(r.records.size(), 1u);
}

TEST(Engine, ByzantineTriplexNotLocalized) {
    const auto r = run(load("byzantine_triplex"));
    EXPECT_TRUE(r.detections.empty());
    EXPECT_GT(r.ambiguous_votes, 0u);
}

TEST(Engine, FederatedLaneFaultDegrades) {
    const auto r = run(load("federated_lane_fault"));
    ASSERT_FALSE(r.records.empty());
    for (const auto& rec : r.records) EXPECT_EQ(rec.outcome, Outcome::DegradedDuplex);
}

TEST(Engine, RejectsInvalidScenario) {
    auto s = fx::three_lane_system();
    s.faults.push_back(fx::permanent(600, FaultTarget::processor(0, 0)));
    EXPECT_THROW(Engine{s}, ValidationError);
}

TEST(Engine, AsymmetricScenarioRejectedOnLoad) {
    try {
        load("asymmetric_lanes");
        FAIL() << "expected a validation error";
    } catch (const ValidationError& e) {
        EXPECT_TRUE(e.has(ViolationKind::AsymmetricLanes));
    }
}

// Property: random single and double faults on the three-lane system keep
// the trace consistent, never overrun the bus and cause no deadline misses.
TEST(Engine, RandomFaultsStayConsistent) {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 25; ++trial) {
        auto s = fx::three_lane_system();
        const int n = 1 + static_cast<int>(rng() % 2);
        for (int i = 0; i < n; ++i) {
            const int lane = static_cast<int>(rng() % 3);
            const auto target = rng() % 4 == 0 ? FaultTarget::lane_of(lane)
                                               : FaultTarget::processor(lane, static_cast<int>(rng() % 4));
            s.faults.push_back(fx::permanent(static_cast<double>(20 + rng() % 400), target));
        }
        const auto r = run(s);
        const auto problems = fx::trace_consistency_problems(r, 3);
        EXPECT_TRUE(problems.empty()) << "trial " << trial << ": " << (problems.empty() ? "" : problems[0]);
        EXPECT_TRUE(r.misses.empty()) << "trial " << trial;
        EXPECT_LE(r.bus_peak, r.bus_max + 1e-9);
    }
}
