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

#include <cstdlib>
#include <fstream>

#include <sys/wait.h>

#include "support.hpp"

using namespace ftsim;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("ftsim_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int cli(const std::string& args, const fs::path& log = {}) {
    std::string cmd = std::string("\"") + FTSIM_CLI_PATH + "\" " + args;
    cmd += log.empty() ? " >/dev/null 2>&1" : " >\"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string scenario_path(const std::string& name) {
    return "\"" + (fx::scenario_dir() / (name + ".json")).string() + "\"";
}

}  // namespace

TEST(ScenarioIo, RoundTrip) {
    for (const auto& entry : fs::directory_iterator(fx::scenario_dir())) {
        if (entry.path().stem() == "asymmetric_lanes") continue;
        const auto s = load_scenario(entry.path());
        const auto again = parse_scenario(to_document(s));
        EXPECT_EQ(to_document(again), to_document(s)) << entry.path();
    }
}

TEST(ScenarioIo, Errors) {
    EXPECT_THROW(parse_scenario("{\"name\": "), ParseError);
    try {
        parse_scenario(R"({"format_version": 1, "name": "x", "system": {"lanes": 3}})");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_TRUE(e.has(ViolationKind::MalformedDocument));
    }
    EXPECT_THROW(load_scenario("/nonexistent/x.json"), IoError);
}

TEST(Generate, MeetsTargetUtilization) {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        GenerateParams p;
        p.seed = seed;
        p.utilization = 0.2 + 0.01 * static_cast<double>(seed);
        const auto s = generate(p);
        EXPECT_TRUE(validate(s).empty()) << seed;
        const auto us = processor_utilizations(s.system);
        for (std::size_t i = 0; i + static_cast<std::size_t>(p.spares) < us.size(); ++i) {
            const double u = us[i];
            EXPECT_LE(u, p.utilization + 1e-9) << seed;
            EXPECT_GE(u, p.utilization - 0.1) << seed;
        }
    }
}

TEST(Generate, InfeasibleSetsOverload) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        GenerateParams p;
        p.seed = seed;
        p.infeasible = true;
        const auto s = generate(p);
        bool over = false;
        for (double u : processor_utilizations(s.system)) over = over || u > 1.0;
        EXPECT_TRUE(over) << seed;
    }
}

TEST(Generate, EveryArchitectureValidates) {
    for (auto arch : {Architecture::FederatedQuadruplex, Architecture::RestrictedIntegrated, Architecture::FullyIntegrated}) {
        GenerateParams p;
        p.architecture = arch;
        p.faults = 3;
        if (arch == Architecture::FederatedQuadruplex) p.lanes = 4, p.procs = 1, p.apps = 1;
        EXPECT_TRUE(validate(generate(p)).empty());
    }
}

TEST(Generate, ZeroTargetHasNoApps) {
    GenerateParams p;
    p.utilization = 0.0;
    const auto s = generate(p);
    EXPECT_TRUE(s.system.applications.empty());
    EXPECT_TRUE(validate(s).empty());
}

TEST(Generate, ImpossibleParametersThrow) {
    GenerateParams p;
    p.lanes = 7;
    EXPECT_THROW(generate(p), std::invalid_argument);
    p = {};
    p.utilization = 1.5;
    EXPECT_THROW(generate(p), std::invalid_argument);
}

TEST(Generate, SeedDeterminesDocument) {
    GenerateParams a, b;
    a.seed = b.seed = 9;
    a.faults = b.faults = 4;
    EXPECT_EQ(to_document(generate(a)), to_document(generate(b)));
    b.seed = 10;
    EXPECT_NE(to_document(generate(a)), to_document(generate(b)));
}

TEST(Metrics, CoverageCsvHeader) {
    const auto r = run(fx::load("three_lane_processor_fault"));
    const auto csv = coverage_csv(r);
    EXPECT_EQ(csv.rfind("# format_version=1\ntime_us,app,functional,zonal,data_transfer,peripheral\n", 0), 0u);
    const auto j = metrics_json(r);
    EXPECT_EQ(j["format_version"], 1);
    EXPECT_EQ(j["summary"]["readmitted"], 1);
    EXPECT_EQ(j["records"][0]["t_a_us"], r.records[0].t_a->count());
}

TEST(Trace, CsvRoundTrip) {
    const auto r = run(fx::load("three_lane_lane_fault"));
    std::istringstream in(trace_to_string(r.trace));
    const auto back = read_trace(in);
    EXPECT_EQ(trace_to_string(back), trace_to_string(r.trace));
}

TEST(Cli, ValidateExitCodes) {
    const auto dir = scratch("validate");
    EXPECT_EQ(cli("validate " + scenario_path("three_lane_quiescent")), 0);
    EXPECT_EQ(cli("validate " + scenario_path("asymmetric_lanes")), 1);
    const auto truncated = dir / "truncated.json";
    std::ofstream(truncated) << "{\"format_version\": 1, \"name\": \"x\", \"system\": {";
    EXPECT_EQ(cli("validate \"" + truncated.string() + "\""), 2);
    EXPECT_EQ(cli("validate \"" + (dir / "missing.json").string() + "\""), 3);
}

TEST(Cli, RunWritesOutputs) {
    const auto dir = scratch("run");
    const auto log = dir / "log.txt";
    EXPECT_EQ(cli("run " + scenario_path("three_lane_lane_fault") + " --out \"" + (dir / "o").string() + "\"", log), 0);
    for (const char* f : {"metrics.json", "trace.csv", "coverage.csv"}) EXPECT_TRUE(fs::exists(dir / "o" / f)) << f;
    std::ifstream in(log);
    const std::string text((std::istreambuf_iterator<char>(in)), {});
    EXPECT_NE(text.find("2 readmitted, 1 degraded"), std::string::npos) << text;
}

TEST(Cli, UnwritableOutputIsIoError) {
    const auto dir = scratch("io");
    std::ofstream(dir / "file") << "x";
    EXPECT_EQ(cli("run " + scenario_path("three_lane_quiescent") + " --out \"" + (dir / "file" / "sub").string() + "\""), 3);
}

TEST(Cli, GenerateIsReproducibleAndValid) {
    const auto dir = scratch("gen");
    for (int seed : {1, 2, 3}) {
        const auto a = dir / ("a" + std::to_string(seed) + ".json");
        const auto b = dir / ("b" + std::to_string(seed) + ".json");
        const std::string args = "generate --seed " + std::to_string(seed) + " --faults 2 --out ";
        ASSERT_EQ(cli(args + "\"" + a.string() + "\""), 0);
        ASSERT_EQ(cli(args + "\"" + b.string() + "\""), 0);
        EXPECT_EQ(read_file(a), read_file(b));
        EXPECT_EQ(cli("validate \"" + a.string() + "\""), 0);
    }
    EXPECT_EQ(cli("generate --lanes 9"), 1);
}

TEST(Cli, BatchUsesWorstExitCode) {
    const auto dir = scratch("batch");
    fs::create_directories(dir / "in");
    fs::copy_file(fx::scenario_dir() / "three_lane_quiescent.json", dir / "in" / "a.json");
    EXPECT_EQ(cli("batch \"" + (dir / "in").string() + "\" --out \"" + (dir / "o").string() + "\""), 0);
    EXPECT_TRUE(fs::exists(dir / "o" / "a" / "metrics.json"));
    fs::copy_file(fx::scenario_dir() / "asymmetric_lanes.json", dir / "in" / "b.json");
    EXPECT_EQ(cli("batch \"" + (dir / "in").string() + "\" --out \"" + (dir / "o").string() + "\""), 1);
}
