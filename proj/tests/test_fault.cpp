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

namespace {

VoterConfig tol(double t) { return VoterConfig{t, Consensus::MedianOfOthers}; }

// Independent reference: flag i when |v_i - median(others)| > tol, with the
// median of an even count taken as the middle interval.
std::vector<std::size_t> oracle_flags(const std::vector<double>& v, double t) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::vector<double> o;
        for (std::size_t j = 0; j < v.size(); ++j)
            if (j != i) o.push_back(v[j]);
        std::sort(o.begin(), o.end());
        const double lo = o[(o.size() - 1) / 2], hi = o[o.size() / 2];
        const double d = v[i] < lo ? lo - v[i] : (v[i] > hi ? v[i] - hi : 0.0);
        if (d > t) out.push_back(i);
    }
    return out;
}

}  // namespace

TEST(CrossMonitor, AgreementFlagsNothing) {
    const std::vector<double> v{10, 10, 10, 10};
    const auto r = cross_monitor(v, tol(0.5));
    EXPECT_FALSE(r.ambiguous);
    EXPECT_TRUE(r.flagged.empty());
}

TEST(CrossMonitor, OutlierAmongFour) {
    const std::vector<double> v{10.0, 10.1, 9.9, 14.0};
    const auto r = cross_monitor(v, tol(1.0));
    EXPECT_FALSE(r.ambiguous);
    EXPECT_EQ(r.flagged, (std::vector<std::size_t>{3}));
    EXPECT_EQ(r.flagged, oracle_flags(v, 1.0));
}

TEST(CrossMonitor, DuplexDisagreementIsAmbiguous) {
    const std::vector<double> v{10, 14};
    EXPECT_TRUE(cross_monitor(v, tol(1.0)).ambiguous);
    const std::vector<double> w{10, 10.5};
    EXPECT_FALSE(cross_monitor(w, tol(1.0)).ambiguous);
}

TEST(CrossMonitor, TriplexOutlier) {
    const std::vector<double> v{10, 10, 14};
    const auto r = cross_monitor(v, tol(1.0));
    EXPECT_FALSE(r.ambiguous);
    EXPECT_EQ(r.flagged, (std::vector<std::size_t>{2}));
}

TEST(CrossMonitor, MutuallyDivergentIsAmbiguous) {
    const std::vector<double> v{0, 10, 20};
    EXPECT_TRUE(cross_monitor(v, tol(1.0)).ambiguous);
}

TEST(CrossMonitor, NeedsTwoValues) {
    const std::vector<double> one{1};
    EXPECT_THROW(cross_monitor(one, tol(1)), InsufficientLanes);
    EXPECT_THROW(cross_monitor(std::span<const double>{}, tol(1)), InsufficientLanes);
}

TEST(CrossMonitor, MeanOfOthers) {
    const std::vector<double> v{10, 10, 10, 14};
    const auto r = cross_monitor(v, VoterConfig{1.5, Consensus::MeanOfOthers});
    EXPECT_EQ(r.flagged, (std::vector<std::size_t>{3}));
    // The outlier drags the others' mean to 11.33, so at 1.0 every lane is out.
    const auto tight = cross_monitor(v, VoterConfig{1.0, Consensus::MeanOfOthers});
    EXPECT_EQ(tight.flagged.size(), 4u);
    EXPECT_TRUE(tight.ambiguous);
}

// Property: flags equal the reference computation on random inputs.
TEST(CrossMonitor, MatchesMedianOracle) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 3 + rng() % 2;
        std::vector<double> v(n);
        for (auto& x : v) x = 10 + u(rng) * ((rng() % 3 == 0) ? 1.0 : 0.1);
        const auto r = cross_monitor(v, tol(1.0));
        const auto expect = oracle_flags(v, 1.0);
        EXPECT_EQ(r.flagged, expect);
        EXPECT_EQ(r.ambiguous, (n - expect.size()) * 2 <= n);
    }
}

// Property (masking): one arbitrary outlier among healthy agreeing lanes is
// the only lane flagged, however large.
TEST(CrossMonitor, SingleOutlierIsMasked) {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> noise(-0.2, 0.2), skew(1.5, 1000);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 3 + rng() % 2;
        std::vector<double> v(n);
        for (auto& x : v) x = 10 + noise(rng);
        const std::size_t bad = rng() % n;
        v[bad] += (rng() % 2 ? 1 : -1) * skew(rng);
        const auto r = cross_monitor(v, tol(1.0));
        EXPECT_FALSE(r.ambiguous);
        EXPECT_EQ(r.flagged, (std::vector<std::size_t>{bad}));
    }
}

TEST(Byzantine, IdentificationNeedsFourLanes) {
    EXPECT_TRUE(can_identify_byzantine(4));
    EXPECT_FALSE(can_identify_byzantine(3));
    EXPECT_FALSE(can_identify_byzantine(0));
}

namespace {

// Source `bad` sends alternating +/- skew to the others and lies when relaying.
Exchange two_faced(std::size_t n, std::size_t bad, double skew) {
    std::vector<double> honest(n, 10.0);
    auto ex = Exchange::consistent(honest);
    std::size_t k = 0;
    for (std::size_t r = 0; r < n; ++r)
        if (r != bad) ex.sent(bad, r) = 10.0 + (k++ % 2 ? -skew : skew);
    ex.relay_honestly();
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t r = 0; r < n; ++r)
            if (r != bad) ex.relayed(bad, s, r) = ex.sent(s, bad) + ((r % 2) ? skew : -skew);
    return ex;
}

}  // namespace

TEST(Byzantine, QuadruplexIsolatesTheTwoFacedLane) {
    for (std::size_t bad = 0; bad < 4; ++bad) {
        const auto r = interactive_vote(two_faced(4, bad, 5.0), tol(1.0));
        EXPECT_FALSE(r.ambiguous);
        EXPECT_EQ(r.flagged, (std::vector<std::size_t>{bad}));
    }
}

TEST(Byzantine, TriplexCannotConfidentlyBlameAHealthyLane) {
    for (std::size_t bad = 0; bad < 3; ++bad) {
        const auto r = interactive_vote(two_faced(3, bad, 5.0), tol(1.0));
        if (!r.ambiguous) {
            ASSERT_EQ(r.flagged.size(), 1u);
            EXPECT_EQ(r.flagged.front(), bad);
        }
    }
}

TEST(Byzantine, ConsistentExchangeEqualsPlainVote) {
    const std::vector<double> v{10, 10.2, 9.9, 17};
    EXPECT_EQ(interactive_vote(Exchange::consistent(v), tol(1.0)), cross_monitor(v, tol(1.0)));
}

TEST(Bit, PassesWithoutFaults) {
    const ProcessorView p{{0, 0}, {{1, 1}}};
    EXPECT_FALSE(bit_check(p, {}, ms(10)));
}

TEST(Bit, PermanentProcessorFaultFails) {
    const ProcessorView p{{0, 0}, {{1, 1}}};
    const std::vector<FaultSpec> fs{ftsim::fixture::permanent(5, FaultTarget::processor(0, 0))};
    const auto d = bit_check(p, fs, ms(10));
    ASSERT_TRUE(d);
    EXPECT_EQ(d->granularity, Granularity::Processor);
    EXPECT_EQ(d->mechanism, Mechanism::BIT);
    EXPECT_FALSE(bit_check(p, fs, ms(4))) << "not active yet";
}

TEST(Bit, BlindToByzantineByDefault) {
    const ProcessorView p{{0, 0}, {{1, 1}}};
    auto f = ftsim::fixture::permanent(5, FaultTarget::processor(0, 0));
    f.kind = FaultKind::Byzantine;
    EXPECT_FALSE(bit_check(p, std::vector{f}, ms(10)));
    f.bit_detectable = true;
    EXPECT_TRUE(bit_check(p, std::vector{f}, ms(10)));
}

TEST(Bit, TaskFaultOnHostedTask) {
    const ProcessorView p{{1, 2}, {{3, 1}}};
    const auto f = ftsim::fixture::permanent(0, FaultTarget::task_copy(1, 2, 3, 1));
    const auto d = bit_check(p, std::vector{f}, ms(1));
    ASSERT_TRUE(d);
    EXPECT_EQ(d->granularity, Granularity::Task);
    EXPECT_EQ(d->app, 3);
}

TEST(Bit, TransientClears) {
    const ProcessorView p{{0, 0}, {}};
    auto f = ftsim::fixture::permanent(10, FaultTarget::processor(0, 0));
    f.kind = FaultKind::Transient;
    f.duration = ms(5);
    EXPECT_TRUE(bit_check(p, std::vector{f}, ms(14)));
    EXPECT_FALSE(bit_check(p, std::vector{f}, ms(15)));
}

namespace {

TopologyView three_lane_topology() {
    TopologyView v;
    for (int l = 0; l < 3; ++l)
        for (int p = 0; p < 4; ++p) {
            v.processors[l].push_back(p);
            if (p < 3) v.active_hosted[{l, p}].insert({p + 1, 1});
        }
    return v;
}

}  // namespace

TEST(Classify, WholeLaneSilentIsLane) {
    Evidence ev;
    for (int p = 0; p < 4; ++p) ev.silent_processors.insert({1, p});
    ev.deviating_copies.insert({1, 0, 1, 1});
    const auto ds = classify(ev, three_lane_topology());
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds[0].granularity, Granularity::Lane);
    EXPECT_EQ(ds[0].lane, 1);
}

TEST(Classify, SingleDeviatingTaskIsTask) {
    auto topo = three_lane_topology();
    topo.active_hosted[{2, 0}].insert({9, 4});  // a second task on the processor
    Evidence ev;
    ev.deviating_copies.insert({2, 0, 1, 1});
    const auto ds = classify(ev, topo);
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds[0].granularity, Granularity::Task);
    EXPECT_EQ(ds[0].proc, 0);
}

TEST(Classify, AllTasksOfProcessorIsProcessor) {
    Evidence ev;
    ev.deviating_copies.insert({0, 0, 1, 1});
    const auto ds = classify(ev, three_lane_topology());
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds[0].granularity, Granularity::Processor);
}

TEST(Classify, SensorChannelIsSensor) {
    Evidence ev;
    ev.deviating_sensors.insert({2, 1});
    const auto ds = classify(ev, three_lane_topology());
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds[0].granularity, Granularity::Sensor);
    EXPECT_EQ(ds[0].app, 2);
    EXPECT_EQ(ds[0].lane, 1);
}

TEST(Classify, RestrictedCoarsensTaskToProcessor) {
    auto topo = three_lane_topology();
    topo.active_hosted[{2, 0}].insert({1, 2});
    Evidence ev;
    ev.deviating_copies.insert({2, 0, 1, 1});
    const auto ds = classify(ev, topo, Architecture::RestrictedIntegrated);
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds[0].granularity, Granularity::Processor);
}

TEST(Classify, FederatedCoarsensToLane) {
    Evidence ev;
    ev.deviating_copies.insert({0, 1, 2, 1});
    const auto ds = classify(ev, three_lane_topology(), Architecture::FederatedQuadruplex);
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds[0].granularity, Granularity::Lane);
}

TEST(Classify, RemainingProcessorsOfAHalfDeadLaneMakeALane) {
    auto topo = three_lane_topology();
    topo.already_down = {{0, 0}, {0, 1}};
    Evidence ev;
    ev.silent_processors = {{0, 2}, {0, 3}};
    const auto ds = classify(ev, topo);
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds[0].granularity, Granularity::Lane);
}
