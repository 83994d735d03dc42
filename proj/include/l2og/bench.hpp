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

// Experiment harness: suites of (task, optimizer, replicate) cells, metrics,
// summaries and CSV/JSON/SVG reports.

#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "l2og/circuits.hpp"
#include "l2og/circuits_io.hpp"
#include "l2og/l2o.hpp"
#include "l2og/l2o_train.hpp"
#include "l2og/opt.hpp"
#include "l2og/oracles.hpp"
#include "l2og/record.hpp"

namespace l2og::bench {

namespace fs = std::filesystem;

/// Shortest round-trip decimal; "inf"/"-inf"/"nan" for non-finite values.
inline std::string format_double(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

inline double parse_double(const std::string &s) {
    if (s == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (s == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    if (s == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError("bad number '" + s + "'");
    }
    return x;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
inline void parallel_for(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t)> &fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) {
                    return;
                }
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mu);
                    if (!error) {
                        error = std::current_exception();
                    }
                    next = n;
                }
            }
        });
    }
    for (auto &th : pool) {
        th.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

// ---------------------------------------------------------------------------
// Metrics

/// Expected-cut approximation ratio per step: -loss / c_max.
inline std::vector<double> approximation_ratio(const RunRecord &rec,
                                               double c_max) {
    if (!(c_max > 0.0)) {
        throw std::invalid_argument("c_max must be positive");
    }
    std::vector<double> out;
    out.reserve(rec.losses.size());
    for (double l : rec.losses) {
        out.push_back(-l / c_max);
    }
    return out;
}

inline double classifier_accuracy(const circuits::Task &task,
                                  const Vector &weights,
                                  const circuits::LabeledDataset &data) {
    if (!task.reupload) {
        throw std::invalid_argument("accuracy needs a re-upload task");
    }
    task.check_length(weights);
    if (data.size() == 0) {
        return 0.0;
    }
    std::size_t correct = 0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        correct += circuits::reupload_predict(task, data.points[k], weights) ==
                   data.labels[k];
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

/// Task-specific reference values computed once per task.
struct TaskReference {
    std::optional<double> c_max;         // MaxCut
    std::optional<double> ground_energy; // VQE / SK / MaxCut minimum
};

inline TaskReference task_reference(const circuits::Task &task) {
    TaskReference ref;
    switch (task.kind) {
    case circuits::TaskKind::QaoaMaxCut:
        ref.c_max = circuits::brute_force_maxcut(*task.graph).value;
        ref.ground_energy = -*ref.c_max;
        break;
    case circuits::TaskKind::QaoaSK:
        ref.ground_energy = circuits::sk_ground_energy(task.couplings);
        break;
    case circuits::TaskKind::VqeHea:
        if (task.circuit.n_qubits <= 12) {
            ref.ground_energy = circuits::exact_ground_energy(
                *task.observable, task.circuit.n_qubits);
        }
        break;
    default:
        break;
    }
    return ref;
}

inline void attach_metrics(RunRecord &rec, const circuits::Task &task,
                           const TaskReference &ref) {
    auto &m = rec.final_metrics;
    double best = std::numeric_limits<double>::infinity();
    for (double l : rec.losses) {
        best = std::min(best, l);
    }
    m["final_loss"] = rec.final_loss();
    m["min_loss"] = best;
    if (rec.diverged) {
        return;
    }
    if (ref.c_max) {
        m["approx_ratio"] = approximation_ratio(rec, *ref.c_max).back();
        m["c_max"] = *ref.c_max;
    }
    if (ref.ground_energy) {
        m["ground_energy"] = *ref.ground_energy;
        m["energy_error"] = rec.final_loss() - *ref.ground_energy;
    }
    if (task.reupload) {
        m["train_accuracy"] =
            classifier_accuracy(task, rec.final_params, task.reupload->train);
        m["test_accuracy"] =
            classifier_accuracy(task, rec.final_params, task.reupload->test);
        m["radius"] = task.reupload->radius;
    }
}

// ---------------------------------------------------------------------------
// Suites

struct OptimizerSpec {
    std::string id;
    std::optional<opt::BaselineConfig> baseline;
    std::optional<l2o::Checkpoint> checkpoint;
    std::string checkpoint_path;

    static OptimizerSpec from_baseline(opt::BaselineConfig cfg) {
        cfg.validate();
        OptimizerSpec s;
        s.id = cfg.id();
        s.baseline = cfg;
        return s;
    }

    static OptimizerSpec from_checkpoint(l2o::Checkpoint ck, std::string id,
                                         std::string path = {}) {
        OptimizerSpec s;
        s.id = std::move(id);
        s.checkpoint = std::move(ck);
        s.checkpoint_path = std::move(path);
        return s;
    }

    /// "adam", "qngd", ... or "l2o:<checkpoint path>"; lr applies to
    /// baselines only.
    static OptimizerSpec parse(const std::string &name,
                               std::optional<double> lr = std::nullopt,
                               const fs::path &base_dir = {}) {
        if (name.rfind("l2o:", 0) == 0) {
            fs::path p = name.substr(4);
            if (p.is_relative() && !base_dir.empty()) {
                p = base_dir / p;
            }
            auto ck = l2o::load_checkpoint(p);
            const std::string id =
                ck.mode == l2o::PrecondMode::Full ? "l2o" : "l2o_dm";
            return from_checkpoint(std::move(ck), id, p.string());
        }
        auto cfg = opt::BaselineConfig::defaults(opt::parse_optimizer(name));
        if (lr) {
            cfg.lr = *lr;
        }
        return from_baseline(cfg);
    }

    static OptimizerSpec from_json(const Json &j, const fs::path &base_dir) {
        if (j.is_string()) {
            return parse(j.get<std::string>(), std::nullopt, base_dir);
        }
        std::optional<double> lr;
        if (j.contains("lr")) {
            lr = j.at("lr").get<double>();
        }
        auto s = parse(j.at("name").get<std::string>(), lr, base_dir);
        if (j.contains("id")) {
            s.id = j.at("id").get<std::string>();
        }
        return s;
    }
};

struct SuiteEntry {
    circuits::Task task;
    std::vector<OptimizerSpec> optimizers;
    std::vector<std::size_t> replicates;
    std::size_t steps = 200;
};

struct SuiteSpec {
    std::uint64_t seed = 0;
    std::vector<SuiteEntry> entries;
    std::size_t threads = 1;

    void validate() const {
        if (entries.empty()) {
            throw std::invalid_argument("suite has no entries");
        }
        for (const auto &e : entries) {
            if (e.optimizers.empty() || e.replicates.empty()) {
                throw std::invalid_argument("suite entry '" + e.task.id +
                                            "' has no optimizers or seeds");
            }
            if (e.steps < 1) {
                throw std::invalid_argument("steps must be >= 1");
            }
        }
    }
};

inline std::vector<std::size_t> replicate_list(const Json &j) {
    std::vector<std::size_t> out;
    if (j.is_number_integer()) {
        for (std::size_t k = 0; k < j.get<std::size_t>(); ++k) {
            out.push_back(k);
        }
    } else {
        out = j.get<std::vector<std::size_t>>();
    }
    return out;
}

/// Schema: {"seed": u64, "entries": [{"task": {...}, "optimizers": [...],
/// "seeds": count | [replicate indices], "steps": n}]}.
inline SuiteSpec suite_from_json(const Json &j, const fs::path &base_dir = {}) {
    SuiteSpec s;
    try {
        s.seed = j.value("seed", std::uint64_t{0});
        const std::size_t default_steps = j.value("steps", std::size_t{200});
        const Json default_seeds = j.value("seeds", Json(5));
        for (const auto &e : j.at("entries")) {
            SuiteEntry entry;
            entry.task = circuits::task_from_json(e.at("task"), base_dir);
            for (const auto &o : e.at("optimizers")) {
                entry.optimizers.push_back(
                    OptimizerSpec::from_json(o, base_dir));
            }
            entry.replicates = replicate_list(e.value("seeds", default_seeds));
            entry.steps = e.value("steps", default_steps);
            s.entries.push_back(std::move(entry));
        }
    } catch (const Json::exception &e) {
        throw ParseError(std::string("suite: ") + e.what());
    }
    s.validate();
    return s;
}

inline SuiteSpec load_suite(const fs::path &path) {
    return suite_from_json(read_json_file(path), path.parent_path());
}

/// Initial-parameter seed shared by every optimizer of a replicate.
inline std::uint64_t cell_seed(std::uint64_t suite_seed,
                               const std::string &task_id,
                               std::size_t replicate) {
    return mix_seeds({suite_seed, fnv1a(task_id), replicate}) >> 1;
}

inline RunRecord run_cell(const circuits::Task &task, const OptimizerSpec &o,
                          std::uint64_t seed, std::size_t steps) {
    const Vector theta0 = circuits::sample_initial_params(task.n_params(), seed);
    RunRecord rec;
    if (o.baseline) {
        rec = opt::run_baseline(task, *o.baseline, theta0, steps);
    } else if (o.checkpoint) {
        rec = l2o::run_l2o(task, o.checkpoint->weights, theta0, steps,
                           o.checkpoint->mode, o.checkpoint->pinv_cutoff,
                           o.id);
    } else {
        throw std::invalid_argument("optimizer '" + o.id +
                                    "' has no configuration");
    }
    rec.optimizer_id = o.id;
    rec.seed = seed;
    return rec;
}

inline Json record_to_json(const RunRecord &r) {
    auto nums = [](const std::vector<double> &v) {
        std::vector<std::string> s;
        for (double x : v) {
            s.push_back(format_double(x));
        }
        return s;
    };
    Json metrics = Json::object();
    for (const auto &[k, v] : r.final_metrics) {
        metrics[k] = format_double(v);
    }
    std::vector<double> params(r.final_params.data(),
                               r.final_params.data() + r.final_params.size());
    return Json{{"task_id", r.task_id},
                {"optimizer_id", r.optimizer_id},
                {"seed", r.seed},
                {"diverged", r.diverged},
                {"losses", nums(r.losses)},
                {"wall_ms", nums(r.wall_ms)},
                {"final_metrics", metrics},
                {"final_params", nums(params)}};
}

inline RunRecord record_from_json(const Json &j) {
    RunRecord r;
    r.task_id = j.at("task_id").get<std::string>();
    r.optimizer_id = j.at("optimizer_id").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.diverged = j.at("diverged").get<bool>();
    for (const auto &s : j.at("losses")) {
        r.losses.push_back(parse_double(s.get<std::string>()));
    }
    for (const auto &s : j.at("wall_ms")) {
        r.wall_ms.push_back(parse_double(s.get<std::string>()));
    }
    for (const auto &[k, v] : j.at("final_metrics").items()) {
        r.final_metrics[k] = parse_double(v.get<std::string>());
    }
    const auto &p = j.at("final_params");
    r.final_params.resize(static_cast<Eigen::Index>(p.size()));
    for (std::size_t k = 0; k < p.size(); ++k) {
        r.final_params[static_cast<Eigen::Index>(k)] =
            parse_double(p[k].get<std::string>());
    }
    return r;
}

inline std::string sanitize(const std::string &s) {
    std::string out;
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '-' ||
                        c == '.';
        out += ok ? c : '_';
    }
    return out;
}

inline bool record_less(const RunRecord &a, const RunRecord &b) {
    return std::tie(a.task_id, a.optimizer_id, a.seed) <
           std::tie(b.task_id, b.optimizer_id, b.seed);
}

inline void sort_records(std::vector<RunRecord> &records) {
    std::sort(records.begin(), records.end(), record_less);
}

// ---------------------------------------------------------------------------
// Summaries

struct SummaryRow {
    std::string task_id;
    std::string optimizer_id;
    std::size_t n = 0; // finite runs
    double mean = std::numeric_limits<double>::quiet_NaN();
    double std = std::numeric_limits<double>::quiet_NaN();
    double min = std::numeric_limits<double>::quiet_NaN();
    double max = std::numeric_limits<double>::quiet_NaN();
    std::size_t diverged = 0;
};

using ValueFn = std::function<std::optional<double>(const RunRecord &)>;

inline ValueFn final_loss_value() {
    return [](const RunRecord &r) -> std::optional<double> {
        return r.final_loss();
    };
}

inline ValueFn metric_value(const std::string &name) {
    return [name](const RunRecord &r) -> std::optional<double> {
        auto it = r.final_metrics.find(name);
        if (it == r.final_metrics.end()) {
            return std::nullopt;
        }
        return it->second;
    };
}

inline ValueFn loss_at_step(std::size_t step) {
    return [step](const RunRecord &r) -> std::optional<double> {
        if (step >= r.losses.size()) {
            return std::nullopt;
        }
        return r.losses[step];
    };
}

/// Per (task, optimizer): mean, sample std, min, max over non-diverged runs;
/// diverged runs are counted separately. Rows are sorted by key.
inline std::vector<SummaryRow> summarize(const std::vector<RunRecord> &records,
                                         const ValueFn &value =
                                             final_loss_value()) {
    if (records.empty()) {
        throw std::invalid_argument("no records to summarize");
    }
    std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
    std::map<std::pair<std::string, std::string>, std::size_t> diverged;
    for (const auto &r : records) {
        const auto key = std::make_pair(r.task_id, r.optimizer_id);
        groups[key];
        const auto v = value(r);
        if (r.diverged || !v || !std::isfinite(*v)) {
            ++diverged[key];
            continue;
        }
        groups[key].push_back(*v);
    }
    std::vector<SummaryRow> rows;
    for (auto &[key, vals] : groups) {
        SummaryRow row;
        row.task_id = key.first;
        row.optimizer_id = key.second;
        row.diverged = diverged[key];
        row.n = vals.size();
        // Sorting first makes the sums independent of record order.
        std::sort(vals.begin(), vals.end());
        if (!vals.empty()) {
            double sum = 0.0;
            for (double v : vals) {
                sum += v;
            }
            row.mean = sum / static_cast<double>(vals.size());
            double ss = 0.0;
            for (double v : vals) {
                ss += (v - row.mean) * (v - row.mean);
            }
            row.std = vals.size() > 1
                          ? std::sqrt(ss / static_cast<double>(vals.size() - 1))
                          : 0.0;
            row.min = vals.front();
            row.max = vals.back();
        }
        rows.push_back(row);
    }
    return rows;
}

inline std::string summary_csv(const std::vector<SummaryRow> &rows) {
    std::ostringstream os;
    os << "task_id,optimizer_id,n,mean,std,min,max,diverged\n";
    for (const auto &r : rows) {
        os << r.task_id << ',' << r.optimizer_id << ',' << r.n << ','
           << format_double(r.mean) << ',' << format_double(r.std) << ','
           << format_double(r.min) << ',' << format_double(r.max) << ','
           << r.diverged << '\n';
    }
    return os.str();
}

/// Markdown table: one row per task, one "mean ± std" column per optimizer.
inline std::string summary_table(const std::vector<SummaryRow> &rows) {
    std::vector<std::string> tasks;
    std::vector<std::string> opts;
    std::map<std::pair<std::string, std::string>, const SummaryRow *> cell;
    for (const auto &r : rows) {
        if (std::find(tasks.begin(), tasks.end(), r.task_id) == tasks.end()) {
            tasks.push_back(r.task_id);
        }
        if (std::find(opts.begin(), opts.end(), r.optimizer_id) ==
            opts.end()) {
            opts.push_back(r.optimizer_id);
        }
        cell[{r.task_id, r.optimizer_id}] = &r;
    }
    std::ostringstream os;
    os << "| task |";
    for (const auto &o : opts) {
        os << ' ' << o << " |";
    }
    os << "\n|---|";
    for (std::size_t k = 0; k < opts.size(); ++k) {
        os << "---|";
    }
    os << '\n';
    char buf[64];
    for (const auto &t : tasks) {
        os << "| " << t << " |";
        for (const auto &o : opts) {
            auto it = cell.find({t, o});
            if (it == cell.end() || it->second->n == 0) {
                os << " - |";
                continue;
            }
            std::snprintf(buf, sizeof(buf), " %.2f ± %.2f", it->second->mean,
                          it->second->std);
            os << buf;
            if (it->second->diverged) {
                os << " (" << it->second->diverged << " diverged)";
            }
            os << " |";
        }
        os << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Persistence

inline std::string results_csv(const std::vector<RunRecord> &records) {
    std::ostringstream os;
    os << "task_id,optimizer_id,seed,step,loss\n";
    for (const auto &r : records) {
        for (std::size_t s = 0; s < r.losses.size(); ++s) {
            os << r.task_id << ',' << r.optimizer_id << ',' << r.seed << ','
               << s << ',' << format_double(r.losses[s]) << '\n';
        }
    }
    return os.str();
}

inline std::string metrics_csv(const std::vector<RunRecord> &records) {
    std::ostringstream os;
    os << "task_id,optimizer_id,seed,diverged,metric,value\n";
    for (const auto &r : records) {
        for (const auto &[k, v] : r.final_metrics) {
            os << r.task_id << ',' << r.optimizer_id << ',' << r.seed << ','
               << (r.diverged ? 1 : 0) << ',' << k << ',' << format_double(v)
               << '\n';
        }
    }
    return os.str();
}

inline std::string timing_csv(const std::vector<RunRecord> &records) {
    std::ostringstream os;
    os << "task_id,optimizer_id,seed,step,wall_ms\n";
    for (const auto &r : records) {
        for (std::size_t s = 0; s < r.wall_ms.size(); ++s) {
            os << r.task_id << ',' << r.optimizer_id << ',' << r.seed << ','
               << s << ',' << format_double(r.wall_ms[s]) << '\n';
        }
    }
    return os.str();
}

inline std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

/// Reads results.csv (and metrics.csv when present) from a results directory.
inline std::vector<RunRecord> load_results(const fs::path &dir) {
    const std::string text = read_text_file(dir / "results.csv");
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (line != "task_id,optimizer_id,seed,step,loss") {
        throw ParseError("results.csv: unexpected header");
    }
    std::map<std::tuple<std::string, std::string, std::uint64_t>, RunRecord>
        recs;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 5) {
            throw ParseError("results.csv line " + std::to_string(line_no) +
                             ": expected 5 fields");
        }
        const std::uint64_t seed = std::stoull(f[2]);
        auto &r = recs[{f[0], f[1], seed}];
        r.task_id = f[0];
        r.optimizer_id = f[1];
        r.seed = seed;
        const std::size_t step = std::stoul(f[3]);
        if (step != r.losses.size()) {
            throw ParseError("results.csv line " + std::to_string(line_no) +
                             ": steps out of order");
        }
        const double loss = parse_double(f[4]);
        r.losses.push_back(loss);
        if (std::isinf(loss) && loss > 0) {
            r.diverged = true;
        }
    }
    if (fs::exists(dir / "metrics.csv")) {
        std::istringstream min(read_text_file(dir / "metrics.csv"));
        std::getline(min, line);
        while (std::getline(min, line)) {
            if (line.empty()) {
                continue;
            }
            const auto f = split_csv_line(line);
            if (f.size() != 6) {
                throw ParseError("metrics.csv: expected 6 fields");
            }
            auto it = recs.find({f[0], f[1], std::stoull(f[2])});
            if (it != recs.end()) {
                it->second.diverged = it->second.diverged || f[3] == "1";
                it->second.final_metrics[f[4]] = parse_double(f[5]);
            }
        }
    }
    std::vector<RunRecord> out;
    for (auto &[k, r] : recs) {
        out.push_back(std::move(r));
    }
    sort_records(out);
    return out;
}

inline void write_results(const std::vector<RunRecord> &records,
                          const fs::path &dir) {
    write_text_file(dir / "results.csv", results_csv(records));
    write_text_file(dir / "metrics.csv", metrics_csv(records));
    write_text_file(dir / "timing.csv", timing_csv(records));
    write_text_file(dir / "summary.csv", summary_csv(summarize(records)));
}

using LogFn = std::function<void(const std::string &)>;

/// Executes every (task, optimizer, replicate) cell. Finished cells are
/// stored under out_dir/cells and reused on rerun. Output is ordered by
/// (task, optimizer, seed) regardless of thread count.
inline std::vector<RunRecord> run_suite(const SuiteSpec &suite,
                                        const fs::path &out_dir = {},
                                        const LogFn &log = {}) {
    suite.validate();
    struct Cell {
        std::size_t entry;
        std::size_t optimizer;
        std::size_t replicate;
    };
    std::vector<Cell> cells;
    std::vector<TaskReference> refs;
    for (std::size_t e = 0; e < suite.entries.size(); ++e) {
        refs.push_back(task_reference(suite.entries[e].task));
        for (std::size_t o = 0; o < suite.entries[e].optimizers.size(); ++o) {
            for (auto rep : suite.entries[e].replicates) {
                cells.push_back({e, o, rep});
            }
        }
    }
    const bool persist = !out_dir.empty();
    const fs::path cell_dir = out_dir / "cells";
    if (persist) {
        fs::create_directories(cell_dir);
    }
    std::vector<RunRecord> records(cells.size());
    std::mutex io_mu;
    parallel_for(cells.size(), suite.threads, [&](std::size_t i) {
        const auto &c = cells[i];
        const auto &entry = suite.entries[c.entry];
        const auto &o = entry.optimizers[c.optimizer];
        const std::uint64_t seed =
            cell_seed(suite.seed, entry.task.id, c.replicate);
        const fs::path file =
            cell_dir / (sanitize(entry.task.id) + "__" + sanitize(o.id) +
                        "__" + std::to_string(seed) + ".json");
        if (persist && fs::exists(file)) {
            try {
                RunRecord r = record_from_json(read_json_file(file));
                if (r.losses.size() == entry.steps + 1) {
                    records[i] = std::move(r);
                    return;
                }
            } catch (const std::exception &) {
                // Incomplete cell files are recomputed.
            }
        }
        RunRecord r = run_cell(entry.task, o, seed, entry.steps);
        attach_metrics(r, entry.task, refs[c.entry]);
        if (persist || log) {
            std::lock_guard lock(io_mu);
            if (persist) {
                write_text_file(file, record_to_json(r).dump() + "\n");
            }
            if (log) {
                log(r.task_id + " " + r.optimizer_id + " seed " +
                    std::to_string(seed) + " final " +
                    format_double(r.final_loss()));
            }
        }
        records[i] = std::move(r);
    });
    sort_records(records);
    if (persist) {
        write_results(records, out_dir);
    }
    return records;
}

// ---------------------------------------------------------------------------
// Reports

enum class ReportKind { Csv, Json, SvgCurves, SvgBars };

inline ReportKind parse_report_kind(const std::string &s) {
    if (s == "csv") {
        return ReportKind::Csv;
    }
    if (s == "json") {
        return ReportKind::Json;
    }
    if (s == "svg_curves") {
        return ReportKind::SvgCurves;
    }
    if (s == "svg_bars") {
        return ReportKind::SvgBars;
    }
    throw std::invalid_argument("unknown report kind '" + s + "'");
}

namespace svg {

inline const char *palette(std::size_t k) {
    static const char *colors[] = {"#d62728", "#1f77b4", "#2ca02c",
                                   "#ff7f0e", "#9467bd", "#8c564b",
                                   "#e377c2", "#7f7f7f", "#17becf"};
    return colors[k % 9];
}

inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", x);
    return buf;
}

inline std::string escape(const std::string &s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '&':
            out += "&amp;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

struct Frame {
    double x0, y0, w, h;
    double xmin, xmax, ymin, ymax;

    [[nodiscard]] double px(double x) const {
        return x0 + w * (x - xmin) / std::max(xmax - xmin, 1e-12);
    }
    [[nodiscard]] double py(double y) const {
        return y0 + h - h * (y - ymin) / std::max(ymax - ymin, 1e-12);
    }
};

inline void axes(std::ostringstream &os, const Frame &f,
                 const std::string &title, const std::string &xlabel,
                 const std::string &ylabel) {
    os << "<rect x=\"" << num(f.x0) << "\" y=\"" << num(f.y0) << "\" width=\""
       << num(f.w) << "\" height=\"" << num(f.h)
       << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double yv = f.ymin + (f.ymax - f.ymin) * k / 4.0;
        const double y = f.py(yv);
        os << "<line x1=\"" << num(f.x0) << "\" y1=\"" << num(y) << "\" x2=\""
           << num(f.x0 + f.w) << "\" y2=\"" << num(y)
           << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << num(f.x0 - 6) << "\" y=\"" << num(y + 4)
           << "\" font-size=\"11\" text-anchor=\"end\">" << num(yv)
           << "</text>\n";
    }
    os << "<text x=\"" << num(f.x0 + f.w / 2) << "\" y=\"" << num(f.y0 - 10)
       << "\" font-size=\"14\" text-anchor=\"middle\">" << escape(title)
       << "</text>\n";
    os << "<text x=\"" << num(f.x0 + f.w / 2) << "\" y=\""
       << num(f.y0 + f.h + 32)
       << "\" font-size=\"12\" text-anchor=\"middle\">" << escape(xlabel)
       << "</text>\n";
    os << "<text x=\"" << num(f.x0 - 48) << "\" y=\"" << num(f.y0 + f.h / 2)
       << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 "
       << num(f.x0 - 48) << ' ' << num(f.y0 + f.h / 2) << ")\">"
       << escape(ylabel) << "</text>\n";
}

} // namespace svg

inline std::vector<std::string>
unique_in_order(const std::vector<RunRecord> &records,
                std::string RunRecord::*field) {
    std::vector<std::string> out;
    for (const auto &r : records) {
        if (std::find(out.begin(), out.end(), r.*field) == out.end()) {
            out.push_back(r.*field);
        }
    }
    return out;
}

/// One panel per task: light per-seed traces, the mean curve and a +-1 std
/// ribbon per optimizer.
inline std::string svg_curves(std::vector<RunRecord> records) {
    sort_records(records);
    const auto tasks = unique_in_order(records, &RunRecord::task_id);
    const auto opts = unique_in_order(records, &RunRecord::optimizer_id);
    const double pw = 640, ph = 320, margin = 70;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
       << svg::num(pw + 2 * margin + 140) << "\" height=\""
       << svg::num(tasks.size() * (ph + 2 * margin)) << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
        std::vector<const RunRecord *> rs;
        for (const auto &r : records) {
            if (r.task_id == tasks[ti]) {
                rs.push_back(&r);
            }
        }
        std::size_t steps = 0;
        double ymin = std::numeric_limits<double>::infinity();
        double ymax = -ymin;
        for (auto *r : rs) {
            steps = std::max(steps, r->losses.size());
            for (double l : r->losses) {
                if (std::isfinite(l)) {
                    ymin = std::min(ymin, l);
                    ymax = std::max(ymax, l);
                }
            }
        }
        if (!std::isfinite(ymin)) {
            ymin = 0;
            ymax = 1;
        }
        const double pad = 0.05 * std::max(ymax - ymin, 1e-6);
        svg::Frame f{margin, ti * (ph + 2 * margin) + margin, pw, ph, 0.0,
                     static_cast<double>(std::max<std::size_t>(steps, 2) - 1),
                     ymin - pad, ymax + pad};
        svg::axes(os, f, tasks[ti], "iteration", "loss");
        for (std::size_t oi = 0; oi < opts.size(); ++oi) {
            const char *color = svg::palette(oi);
            std::vector<const RunRecord *> group;
            for (auto *r : rs) {
                if (r->optimizer_id == opts[oi] && !r->diverged) {
                    group.push_back(r);
                }
            }
            if (group.empty()) {
                continue;
            }
            const std::size_t len = group.front()->losses.size();
            std::vector<double> mean(len, 0.0), sd(len, 0.0);
            for (std::size_t s = 0; s < len; ++s) {
                for (auto *r : group) {
                    mean[s] += r->losses[s];
                }
                mean[s] /= static_cast<double>(group.size());
                for (auto *r : group) {
                    sd[s] += (r->losses[s] - mean[s]) * (r->losses[s] - mean[s]);
                }
                sd[s] = group.size() > 1
                            ? std::sqrt(sd[s] / static_cast<double>(
                                                    group.size() - 1))
                            : 0.0;
            }
            os << "<polygon fill=\"" << color
               << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
            for (std::size_t s = 0; s < len; ++s) {
                os << svg::num(f.px(s)) << ',' << svg::num(f.py(mean[s] + sd[s]))
                   << ' ';
            }
            for (std::size_t s = len; s-- > 0;) {
                os << svg::num(f.px(s)) << ',' << svg::num(f.py(mean[s] - sd[s]))
                   << ' ';
            }
            os << "\"/>\n";
            for (auto *r : group) {
                os << "<polyline class=\"trace\" fill=\"none\" stroke=\""
                   << color << "\" stroke-opacity=\"0.3\" stroke-width=\"1\" "
                   << "points=\"";
                for (std::size_t s = 0; s < r->losses.size(); ++s) {
                    os << svg::num(f.px(s)) << ','
                       << svg::num(f.py(r->losses[s])) << ' ';
                }
                os << "\"/>\n";
            }
            os << "<polyline class=\"mean\" fill=\"none\" stroke=\"" << color
               << "\" stroke-width=\"2.2\" points=\"";
            for (std::size_t s = 0; s < len; ++s) {
                os << svg::num(f.px(s)) << ',' << svg::num(f.py(mean[s]))
                   << ' ';
            }
            os << "\"/>\n";
            const double ly = f.y0 + 16 + 18 * oi;
            os << "<line x1=\"" << svg::num(f.x0 + f.w + 16) << "\" y1=\""
               << svg::num(ly) << "\" x2=\"" << svg::num(f.x0 + f.w + 40)
               << "\" y2=\"" << svg::num(ly) << "\" stroke=\"" << color
               << "\" stroke-width=\"2.2\"/>\n";
            os << "<text x=\"" << svg::num(f.x0 + f.w + 46) << "\" y=\""
               << svg::num(ly + 4) << "\" font-size=\"11\">"
               << svg::escape(opts[oi]) << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

/// Paired bars per optimizer: mean loss after `early` iterations (light)
/// and at the final step (full color), with +-1 std whiskers.
inline std::string svg_bars(std::vector<RunRecord> records,
                            std::size_t early = 10) {
    sort_records(records);
    const auto tasks = unique_in_order(records, &RunRecord::task_id);
    const auto opts = unique_in_order(records, &RunRecord::optimizer_id);
    const double pw = 640, ph = 300, margin = 70;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
       << svg::num(pw + 2 * margin) << "\" height=\""
       << svg::num(tasks.size() * (ph + 2 * margin)) << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
        std::vector<RunRecord> rs;
        for (const auto &r : records) {
            if (r.task_id == tasks[ti]) {
                rs.push_back(r);
            }
        }
        const auto at_early = summarize(rs, loss_at_step(early));
        const auto at_final = summarize(rs, final_loss_value());
        double lo = 0.0, hi = 0.0;
        for (const auto *rows : {&at_early, &at_final}) {
            for (const auto &r : *rows) {
                if (r.n > 0) {
                    lo = std::min(lo, r.mean - r.std);
                    hi = std::max(hi, r.mean + r.std);
                }
            }
        }
        const double pad = 0.05 * std::max(hi - lo, 1e-6);
        svg::Frame f{margin, ti * (ph + 2 * margin) + margin, pw, ph, 0.0,
                     static_cast<double>(opts.size()), lo - pad, hi + pad};
        svg::axes(os, f, tasks[ti],
                  "optimizer (light: step " + std::to_string(early) +
                      ", full: final step)",
                  "objective");
        const double slot = pw / static_cast<double>(opts.size());
        for (std::size_t oi = 0; oi < opts.size(); ++oi) {
            const char *color = svg::palette(oi);
            for (int which = 0; which < 2; ++which) {
                const auto &rows = which == 0 ? at_early : at_final;
                auto it = std::find_if(rows.begin(), rows.end(), [&](auto &r) {
                    return r.optimizer_id == opts[oi];
                });
                if (it == rows.end() || it->n == 0) {
                    continue;
                }
                const double bw = slot * 0.35;
                const double x = f.x0 + slot * oi + slot * 0.12 + which * bw;
                const double y0 = f.py(0.0);
                const double y1 = f.py(it->mean);
                os << "<rect class=\"" << (which == 0 ? "early" : "final")
                   << "\" x=\"" << svg::num(x) << "\" y=\""
                   << svg::num(std::min(y0, y1)) << "\" width=\""
                   << svg::num(bw) << "\" height=\""
                   << svg::num(std::abs(y1 - y0)) << "\" fill=\"" << color
                   << "\" fill-opacity=\"" << (which == 0 ? "0.35" : "0.9")
                   << "\"/>\n";
                os << "<line x1=\"" << svg::num(x + bw / 2) << "\" y1=\""
                   << svg::num(f.py(it->mean - it->std)) << "\" x2=\""
                   << svg::num(x + bw / 2) << "\" y2=\""
                   << svg::num(f.py(it->mean + it->std))
                   << "\" stroke=\"#222\"/>\n";
            }
            os << "<text x=\"" << svg::num(f.x0 + slot * (oi + 0.5))
               << "\" y=\"" << svg::num(f.y0 + f.h + 16)
               << "\" font-size=\"11\" text-anchor=\"middle\">"
               << svg::escape(opts[oi]) << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

inline std::string report_json(const std::vector<RunRecord> &records) {
    Json recs = Json::array();
    for (const auto &r : records) {
        Json j = record_to_json(r);
        j.erase("wall_ms");
        recs.push_back(j);
    }
    Json summary = Json::array();
    for (const auto &s : summarize(records)) {
        summary.push_back({{"task_id", s.task_id},
                           {"optimizer_id", s.optimizer_id},
                           {"n", s.n},
                           {"mean", format_double(s.mean)},
                           {"std", format_double(s.std)},
                           {"min", format_double(s.min)},
                           {"max", format_double(s.max)},
                           {"diverged", s.diverged}});
    }
    return Json{{"records", recs}, {"summary", summary}}.dump(1) + "\n";
}

inline void report(const std::vector<RunRecord> &records, ReportKind kind,
                   const fs::path &path) {
    if (records.empty()) {
        throw std::invalid_argument("no records to report");
    }
    switch (kind) {
    case ReportKind::Csv:
        write_text_file(path, results_csv(records));
        return;
    case ReportKind::Json:
        write_text_file(path, report_json(records));
        return;
    case ReportKind::SvgCurves:
        write_text_file(path, svg_curves(records));
        return;
    case ReportKind::SvgBars:
        write_text_file(path, svg_bars(records));
        return;
    }
}

} // namespace l2og::bench
