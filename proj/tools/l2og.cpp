// Copyright 2026 The l2og Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "l2og/bench.hpp"
#include "l2og/circuits_io.hpp"
#include "l2og/l2o_train.hpp"

namespace {

using namespace l2og;

int cmd_meta_train(const std::string &task_path, const std::string &config_path,
                   const std::string &out, std::uint64_t seed, bool quiet) {
    const auto task = circuits::load_task(task_path);
    l2o::MetaConfig cfg;
    if (!config_path.empty()) {
        cfg = l2o::MetaConfig::from_json(read_json_file(config_path));
    }
    l2o::ProgressFn progress;
    if (!quiet) {
        progress = [](const std::string &msg) { std::cerr << msg << "\n"; };
    }
    const auto result = l2o::meta_train(task, cfg, seed, progress);
    l2o::save_checkpoint(result.checkpoint, out);
    write_text_file(out + ".log.json", result.log.to_json().dump(1) + "\n");
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_run(const std::string &task_path, const std::string &optimizer,
            std::optional<double> lr, std::size_t steps, std::size_t seeds,
            const std::string &out, std::uint64_t seed, std::size_t threads,
            bool quiet) {
    bench::SuiteSpec suite;
    suite.seed = seed;
    suite.threads = threads;
    bench::SuiteEntry entry;
    entry.task = circuits::load_task(task_path);
    entry.optimizers.push_back(bench::OptimizerSpec::parse(optimizer, lr));
    for (std::size_t k = 0; k < seeds; ++k) {
        entry.replicates.push_back(k);
    }
    entry.steps = steps;
    suite.entries.push_back(std::move(entry));
    bench::LogFn log;
    if (!quiet) {
        log = [](const std::string &msg) { std::cerr << msg << "\n"; };
    }
    const auto records = bench::run_suite(suite, out, log);
    std::cout << bench::summary_table(bench::summarize(records));
    return 0;
}

int cmd_bench(const std::string &suite_path, const std::string &out,
              std::optional<std::uint64_t> seed, std::size_t threads,
              bool quiet) {
    auto suite = bench::load_suite(suite_path);
    if (seed) {
        suite.seed = *seed;
    }
    suite.threads = threads;
    bench::LogFn log;
    if (!quiet) {
        log = [](const std::string &msg) { std::cerr << msg << "\n"; };
    }
    const auto records = bench::run_suite(suite, out, log);
    const std::string table = bench::summary_table(bench::summarize(records));
    write_text_file(std::filesystem::path(out) / "summary.md", table);
    std::cout << table;
    return 0;
}

int cmd_report(const std::string &in, const std::string &kind,
               const std::string &out) {
    const auto records = bench::load_results(in);
    bench::report(records, bench::parse_report_kind(kind), out);
    std::cout << "wrote " << out << "\n";
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"l2og: learned optimizers for variational quantum circuits"};
    app.require_subcommand(1);
    std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    app.add_option("--threads", threads, "worker threads")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "global seed");
    app.add_flag("-q,--quiet", quiet, "suppress progress output");

    std::string task_path, config_path, out, optimizer, suite_path, in, kind;
    std::optional<double> lr;
    std::size_t steps = 200, seeds = 5;

    auto *mt = app.add_subcommand("meta-train", "meta-train an L2O checkpoint");
    mt->add_option("--task", task_path, "task spec JSON")->required();
    mt->add_option("--config", config_path, "meta-training config JSON");
    mt->add_option("--out", out, "checkpoint path")->required();

    auto *run = app.add_subcommand("run", "run one optimizer on one task");
    run->add_option("--task", task_path, "task spec JSON")->required();
    run->add_option("--optimizer", optimizer, "name or l2o:<checkpoint>")
        ->required();
    run->add_option("--lr", lr, "learning rate (baselines)");
    run->add_option("--steps", steps, "iterations")->check(CLI::PositiveNumber);
    run->add_option("--seeds", seeds, "replicates")->check(CLI::PositiveNumber);
    run->add_option("--out", out, "output directory")->required();

    auto *be = app.add_subcommand("bench", "run a benchmark suite");
    be->add_option("--suite", suite_path, "suite JSON")->required();
    be->add_option("--out", out, "output directory")->required();

    auto *rep = app.add_subcommand("report", "render results");
    rep->add_option("--in", in, "results directory")->required();
    rep->add_option("--kind", kind, "csv|json|svg_curves|svg_bars")
        ->required()
        ->check(CLI::IsMember({"csv", "json", "svg_curves", "svg_bars"}));
    rep->add_option("--out", out, "output file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*mt) {
            return cmd_meta_train(task_path, config_path, out, seed.value_or(0),
                                  quiet);
        }
        if (*run) {
            return cmd_run(task_path, optimizer, lr, steps, seeds, out,
                           seed.value_or(0), threads, quiet);
        }
        if (*be) {
            return cmd_bench(suite_path, out, seed, threads, quiet);
        }
        if (*rep) {
            return cmd_report(in, kind, out);
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
