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

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ftsim/ftsim.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kViolation = 1, kParse = 2, kIo = 3 };

void print_violations(std::ostream& os, const ftsim::ValidationError& e) {
    for (const auto& v : e.violations()) os << to_string(v.kind) << ": " << v.message << '\n';
}

fs::path default_out() {
    if (const char* env = std::getenv("FTSIM_OUT_DIR"); env && *env) return env;
    return "out";
}

int cmd_validate(const fs::path& file) {
    try {
        ftsim::load_scenario(file);
        std::cout << "valid\n";
        return kOk;
    } catch (const ftsim::IoError& e) {
        std::cerr << e.what() << '\n';
        return kIo;
    } catch (const ftsim::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kParse;
    } catch (const ftsim::ValidationError& e) {
        print_violations(std::cout, e);
        return kViolation;
    }
}

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<double> horizon_ms;
};

int run_one(const fs::path& file, const fs::path& out, const RunOptions& opt, std::ostream& log, std::ostream& err) {
    ftsim::Scenario sc;
    try {
        sc = ftsim::load_scenario(file);
        if (opt.seed) sc.sim.seed = *opt.seed;
        if (opt.horizon_ms) sc.sim.horizon = ftsim::from_ms(*opt.horizon_ms);
        if (sc.name.empty()) sc.name = file.stem().string();
        const auto result = ftsim::Engine(sc).run();
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) throw ftsim::IoError("cannot create " + out.string() + ": " + ec.message());
        ftsim::write_file(out / "metrics.json", ftsim::metrics_to_string(result));
        ftsim::write_file(out / "trace.csv", ftsim::trace_to_string(result.trace));
        ftsim::write_file(out / "coverage.csv", ftsim::coverage_csv(result));
        log << ftsim::summary_line(result) << '\n';
        return kOk;
    } catch (const ftsim::IoError& e) {
        err << e.what() << '\n';
        return kIo;
    } catch (const ftsim::ParseError& e) {
        err << file.string() << ": parse error: " << e.what() << '\n';
        return kParse;
    } catch (const ftsim::ValidationError& e) {
        err << file.string() << ":\n";
        print_violations(err, e);
        return kViolation;
    }
}

int cmd_batch(const fs::path& dir, const fs::path& out, const RunOptions& opt) {
    std::vector<fs::path> files;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec))
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    if (ec) {
        std::cerr << "cannot list " << dir.string() << ": " << ec.message() << '\n';
        return kIo;
    }
    std::sort(files.begin(), files.end());

    std::vector<int> codes(files.size(), kOk);
    std::vector<std::string> logs(files.size()), errs(files.size());
    std::atomic<std::size_t> next{0};
    const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                             static_cast<unsigned>(files.size())));
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < files.size(); i = next++) {
                    std::ostringstream log, err;
                    codes[i] = run_one(files[i], out / files[i].stem(), opt, log, err);
                    logs[i] = log.str();
                    errs[i] = err.str();
                }
            });
    }
    int worst = kOk;
    for (std::size_t i = 0; i < files.size(); ++i) {
        std::cout << logs[i];
        std::cerr << errs[i];
        worst = std::max(worst, codes[i]);
    }
    std::cout << files.size() << " scenario(s), exit " << worst << '\n';
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ftsim: replicated-lane reconfiguration simulator"};
    app.require_subcommand(1);

    std::string file, dir;
    std::string out;
    RunOptions ropt;

    auto* validate = app.add_subcommand("validate", "check a scenario document");
    validate->add_option("file", file, "scenario file")->required();

    auto* run = app.add_subcommand("run", "simulate one scenario");
    run->add_option("file", file, "scenario file")->required();
    run->add_option("--out", out, "output directory (default $FTSIM_OUT_DIR or ./out)");
    run->add_option("--seed", ropt.seed, "override the scenario seed");
    run->add_option("--horizon", ropt.horizon_ms, "override the horizon, ms")->check(CLI::PositiveNumber);

    auto* batch = app.add_subcommand("batch", "simulate every scenario in a directory");
    batch->add_option("dir", dir, "directory of scenario files")->required();
    batch->add_option("--out", out, "output directory (default $FTSIM_OUT_DIR or ./out)");

    ftsim::GenerateParams gp;
    std::string arch = "FullyIntegrated";
    auto* gen = app.add_subcommand("generate", "emit a random scenario");
    gen->add_option("--lanes", gp.lanes);
    gen->add_option("--procs", gp.procs, "processors per lane, spares included");
    gen->add_option("--spares", gp.spares);
    gen->add_option("--apps", gp.apps);
    gen->add_option("--util", gp.utilization, "target utilization per allocated processor");
    gen->add_option("--seed", gp.seed);
    gen->add_flag("--infeasible", gp.infeasible, "draw per-processor U above 1");
    gen->add_option("--faults", gp.faults, "random processor/task faults");
    gen->add_option("--arch", arch)->check(CLI::IsMember({"FederatedQuadruplex", "RestrictedIntegrated", "FullyIntegrated"}));
    gen->add_option("--horizon", gp.horizon_ms, "horizon, ms");
    gen->add_option("--out", out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kViolation;
    }

    if (*validate) return cmd_validate(file);
    if (*run) return run_one(file, out.empty() ? default_out() : fs::path(out), ropt, std::cout, std::cerr);
    if (*batch) return cmd_batch(dir, out.empty() ? default_out() : fs::path(out), ropt);
    if (*gen) {
        for (auto a : ftsim::detail::kArchitectures)
            if (to_string(a) == arch) gp.architecture = a;
        try {
            const auto doc = ftsim::to_document(ftsim::generate(gp));
            if (out.empty()) std::cout << doc;
            else ftsim::write_file(out, doc);
            return kOk;
        } catch (const std::invalid_argument& e) {
            std::cerr << "generate: " << e.what() << '\n';
            return kViolation;
        } catch (const ftsim::IoError& e) {
            std::cerr << e.what() << '\n';
            return kIo;
        }
    }
    return kOk;
}
