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

// Curriculum meta-training and checkpoint persistence for the learned
// optimizer.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "l2og/circuits.hpp"
#include "l2og/circuits_io.hpp"
#include "l2og/l2o.hpp"
#include "l2og/random.hpp"

namespace l2og::l2o {

struct MetaConfig {
    std::vector<std::size_t> schedule{10, 20, 40, 60, 80};
    double meta_lr = 1e-3;
    double meta_beta1 = 0.9;
    double meta_beta2 = 0.999;
    double meta_eps = 1e-8;
    /// Rescales the meta-gradient to at most this 2-norm; 0 disables.
    double grad_clip = 0.0;
    std::size_t trajectories_per_stage = 20;
    /// Optimizee steps per trajectory; each trajectory is cut into
    /// max(1, trajectory_length / T) unrolls of length T.
    std::size_t trajectory_length = 200;
    std::size_t validation_seeds = 5;
    std::vector<double> step_weights; // empty: w_t = 1
    std::size_t hidden = 20;
    std::size_t lstm_layers = 2;
    PrecondMode mode = PrecondMode::Full;
    double pinv_cutoff = 1e-2;
    bool detach_gradient = true;
    bool detach_metric = true;
    double init_scale = 0.1;

    void validate() const {
        if (schedule.empty()) {
            throw std::invalid_argument("unroll schedule is empty");
        }
        for (std::size_t k = 0; k < schedule.size(); ++k) {
            if (schedule[k] < 1 || (k > 0 && schedule[k] <= schedule[k - 1])) {
                throw std::invalid_argument(
                    "unroll schedule must be strictly increasing and >= 1");
            }
        }
        if (!step_weights.empty() &&
            step_weights.size() < *std::max_element(schedule.begin(),
                                                    schedule.end())) {
            throw std::invalid_argument(
                "step weights shorter than the longest unroll");
        }
        if (!(meta_lr > 0.0) || trajectories_per_stage < 1 ||
            validation_seeds < 1) {
            throw std::invalid_argument("invalid meta-training settings");
        }
        if (!detach_gradient || !detach_metric) {
            throw std::invalid_argument(
                "only the detached meta-gradient policy is implemented");
        }
    }

    /// Validation length after stage i: the next stage's unroll, or one
    /// more increment past the last stage.
    [[nodiscard]] std::size_t validation_length(std::size_t stage) const {
        if (stage + 1 < schedule.size()) {
            return schedule[stage + 1];
        }
        const std::size_t last = schedule.back();
        const std::size_t inc =
            schedule.size() > 1 ? last - schedule[schedule.size() - 2] : last;
        return last + inc;
    }

    [[nodiscard]] Json to_json() const {
        return Json{{"schedule", schedule},
                    {"meta_lr", meta_lr},
                    {"meta_beta1", meta_beta1},
                    {"meta_beta2", meta_beta2},
                    {"meta_eps", meta_eps},
                    {"grad_clip", grad_clip},
                    {"trajectories_per_stage", trajectories_per_stage},
                    {"trajectory_length", trajectory_length},
                    {"validation_seeds", validation_seeds},
                    {"step_weights", step_weights},
                    {"hidden", hidden},
                    {"lstm_layers", lstm_layers},
                    {"mode", mode_name(mode)},
                    {"pinv_cutoff", pinv_cutoff},
                    {"detach_gradient", detach_gradient},
                    {"detach_metric", detach_metric},
                    {"init_scale", init_scale}};
    }

    static MetaConfig from_json(const Json &j) {
        MetaConfig c;
        try {
            c.schedule = j.value("schedule", c.schedule);
            c.meta_lr = j.value("meta_lr", c.meta_lr);
            c.meta_beta1 = j.value("meta_beta1", c.meta_beta1);
            c.meta_beta2 = j.value("meta_beta2", c.meta_beta2);
            c.meta_eps = j.value("meta_eps", c.meta_eps);
            c.grad_clip = j.value("grad_clip", c.grad_clip);
            c.trajectories_per_stage =
                j.value("trajectories_per_stage", c.trajectories_per_stage);
            c.trajectory_length =
                j.value("trajectory_length", c.trajectory_length);
            c.validation_seeds = j.value("validation_seeds", c.validation_seeds);
            c.step_weights = j.value("step_weights", c.step_weights);
            c.hidden = j.value("hidden", c.hidden);
            c.lstm_layers = j.value("lstm_layers", c.lstm_layers);
            c.mode = parse_mode(j.value("mode", std::string("full")));
            c.pinv_cutoff = j.value("pinv_cutoff", c.pinv_cutoff);
            c.detach_gradient = j.value("detach_gradient", c.detach_gradient);
            c.detach_metric = j.value("detach_metric", c.detach_metric);
            c.init_scale = j.value("init_scale", c.init_scale);
        } catch (const Json::exception &e) {
            throw ParseError(std::string("meta config: ") + e.what());
        }
        c.validate();
        return c;
    }

    [[nodiscard]] std::string hash() const {
        std::ostringstream os;
        os << std::hex << std::setw(16) << std::setfill('0')
           << fnv1a(to_json().dump());
        return os.str();
    }
};

struct Checkpoint {
    L2OWeights weights;
    PrecondMode mode = PrecondMode::Full;
    double pinv_cutoff = 1e-6;
    bool detach_gradient = true;
    bool detach_metric = true;
    std::string config_hash;
};

inline constexpr int kCheckpointVersion = 1;

struct VersionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline Json matrix_json(const Matrix &m) {
    return Json{{"rows", m.rows()},
                {"cols", m.cols()},
                {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

inline Matrix matrix_from_json(const Json &j) {
    const auto r = j.at("rows").get<Eigen::Index>();
    const auto c = j.at("cols").get<Eigen::Index>();
    const auto d = j.at("data").get<std::vector<double>>();
    if (r < 0 || c < 0 || static_cast<std::size_t>(r * c) != d.size()) {
        throw ParseError("checkpoint: matrix shape does not match data");
    }
    Matrix m(r, c);
    std::copy(d.begin(), d.end(), m.data());
    if (!m.allFinite()) {
        throw ParseError("checkpoint: non-finite weight");
    }
    return m;
}

} // namespace detail

inline Json checkpoint_to_json(const Checkpoint &ck) {
    const auto &w = ck.weights;
    Json layers = Json::array();
    for (const auto &l : w.layers) {
        layers.push_back(Json{{"w_x", detail::matrix_json(l.w_x)},
                              {"w_h", detail::matrix_json(l.w_h)},
                              {"b", detail::matrix_json(l.b)}});
    }
    auto head = [](const Head &h) {
        return Json{{"w", detail::matrix_json(h.w)}, {"b", h.b}};
    };
    return Json{{"format", "l2og-checkpoint"},
                {"version", kCheckpointVersion},
                {"hidden", w.hidden},
                {"lstm_layers", w.n_layers()},
                {"lambda_a", w.lambda_a},
                {"lambda_b", w.lambda_b},
                {"preprocess_p", w.preprocess_p},
                {"mode", mode_name(ck.mode)},
                {"pinv_cutoff", ck.pinv_cutoff},
                {"detach_policy",
                 {{"gradient", ck.detach_gradient},
                  {"metric", ck.detach_metric}}},
                {"config_hash", ck.config_hash},
                {"layers", layers},
                {"heads",
                 {{"alpha", head(w.alpha)},
                  {"beta", head(w.beta)},
                  {"gamma", head(w.gamma)}}}};
}

inline Checkpoint checkpoint_from_json(const Json &j) {
    try {
        if (j.at("format").get<std::string>() != "l2og-checkpoint") {
            throw ParseError("not an l2og checkpoint");
        }
        const int version = j.at("version").get<int>();
        if (version != kCheckpointVersion) {
            throw VersionError("checkpoint version " + std::to_string(version) +
                               " is not supported (expected " +
                               std::to_string(kCheckpointVersion) + ")");
        }
        Checkpoint ck;
        auto &w = ck.weights;
        w.hidden = j.at("hidden").get<std::size_t>();
        w.lambda_a = j.at("lambda_a").get<double>();
        w.lambda_b = j.at("lambda_b").get<double>();
        w.preprocess_p = j.at("preprocess_p").get<double>();
        ck.mode = parse_mode(j.at("mode").get<std::string>());
        ck.pinv_cutoff = j.at("pinv_cutoff").get<double>();
        ck.detach_gradient = j.at("detach_policy").at("gradient").get<bool>();
        ck.detach_metric = j.at("detach_policy").at("metric").get<bool>();
        ck.config_hash = j.at("config_hash").get<std::string>();
        const auto h = static_cast<Eigen::Index>(w.hidden);
        const auto n_layers = j.at("lstm_layers").get<std::size_t>();
        const auto &layers = j.at("layers");
        if (layers.size() != n_layers || n_layers == 0) {
            throw ParseError("checkpoint: layer count mismatch");
        }
        for (std::size_t l = 0; l < n_layers; ++l) {
            const auto &lj = layers[l];
            LstmLayer layer{detail::matrix_from_json(lj.at("w_x")),
                            detail::matrix_from_json(lj.at("w_h")),
                            detail::matrix_from_json(lj.at("b"))};
            const Eigen::Index in = l == 0 ? 2 : h;
            if (layer.w_x.rows() != 4 * h || layer.w_x.cols() != in ||
                layer.w_h.rows() != 4 * h || layer.w_h.cols() != h ||
                layer.b.size() != 4 * h || layer.b.cols() != 1) {
                throw ParseError("checkpoint: layer shape mismatch");
            }
            w.layers.push_back(std::move(layer));
        }
        auto head = [&](const char *name) {
            const auto &hj = j.at("heads").at(name);
            Head hd{detail::matrix_from_json(hj.at("w")),
                    hj.at("b").get<double>()};
            if (hd.w.size() != h) {
                throw ParseError(std::string("checkpoint: head '") + name +
                                 "' shape mismatch");
            }
            return hd;
        };
        w.alpha = head("alpha");
        w.beta = head("beta");
        w.gamma = head("gamma");
        return ck;
    } catch (const Json::exception &e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
}

inline std::string checkpoint_text(const Checkpoint &ck) {
    return checkpoint_to_json(ck).dump(1) + "\n";
}

inline void save_checkpoint(const Checkpoint &ck,
                            const std::filesystem::path &path) {
    write_text_file(path, checkpoint_text(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path &path) {
    if (!std::filesystem::exists(path)) {
        throw FileNotFound("checkpoint not found: " + path.string());
    }
    return checkpoint_from_json(read_json_file(path));
}

struct SegmentLog {
    std::size_t stage = 0;
    std::size_t unroll = 0;
    std::size_t trajectory = 0;
    std::size_t segment = 0;
    double mean_loss = 0.0; // outer loss / T
    bool diverged = false;
};

struct StageLog {
    std::size_t stage = 0;
    std::size_t unroll = 0;
    std::size_t validation_length = 0;
    std::vector<double> validation;          // this stage's model
    std::vector<double> previous_validation; // best earlier model
    std::size_t diverged_segments = 0;
    bool accepted = true;
};

struct TrainingLog {
    std::vector<SegmentLog> segments;
    std::vector<StageLog> stages;
    std::size_t trajectories = 0;
    std::size_t meta_steps = 0;

    [[nodiscard]] Json to_json() const {
        Json segs = Json::array();
        for (const auto &s : segments) {
            segs.push_back({{"stage", s.stage},
                            {"unroll", s.unroll},
                            {"trajectory", s.trajectory},
                            {"segment", s.segment},
                            {"mean_loss", s.diverged ? Json(nullptr)
                                                     : Json(s.mean_loss)},
                            {"diverged", s.diverged}});
        }
        Json sts = Json::array();
        auto finite_or_null = [](const std::vector<double> &v) {
            Json a = Json::array();
            for (double x : v) {
                a.push_back(std::isfinite(x) ? Json(x) : Json(nullptr));
            }
            return a;
        };
        for (const auto &s : stages) {
            sts.push_back({{"stage", s.stage},
                           {"unroll", s.unroll},
                           {"validation_length", s.validation_length},
                           {"validation", finite_or_null(s.validation)},
                           {"previous_validation",
                            finite_or_null(s.previous_validation)},
                           {"diverged_segments", s.diverged_segments},
                           {"accepted", s.accepted}});
        }
        return Json{{"trajectories", trajectories},
                    {"meta_steps", meta_steps},
                    {"segments", segs},
                    {"stages", sts}};
    }
};

struct MetaTrainResult {
    Checkpoint checkpoint;
    TrainingLog log;
};

inline Vector validation_start(const circuits::Task &task, std::uint64_t seed,
                               std::size_t k) {
    return circuits::sample_initial_params(
        task.n_params(), mix_seeds({seed, 0x56414cULL, k}));
}

/// Outer loss of one forward unroll per validation seed (+inf if diverged).
inline std::vector<double> validation_losses(const circuits::Task &task,
                                             const L2OWeights &w,
                                             const MetaConfig &cfg,
                                             std::uint64_t seed,
                                             std::size_t horizon) {
    UnrollOptions opt;
    opt.mode = cfg.mode;
    opt.pinv_cutoff = cfg.pinv_cutoff;
    opt.step_weights = cfg.step_weights;
    opt.final_gradient = false;
    if (!opt.step_weights.empty() && opt.step_weights.size() < horizon) {
        opt.step_weights.resize(horizon, opt.step_weights.back());
    }
    std::vector<double> out;
    for (std::size_t k = 0; k < cfg.validation_seeds; ++k) {
        out.push_back(
            unroll(task, validation_start(task, seed, k), horizon, w, opt)
                .outer_loss);
    }
    return out;
}

/// Adam over the flattened weights.
struct MetaAdam {
    Vector m, v;
    std::uint64_t t = 0;

    void step(Vector &x, const Vector &g, const MetaConfig &cfg) {
        if (m.size() != x.size()) {
            m = Vector::Zero(x.size());
            v = Vector::Zero(x.size());
        }
        ++t;
        m = cfg.meta_beta1 * m + (1.0 - cfg.meta_beta1) * g;
        v = cfg.meta_beta2 * v + (1.0 - cfg.meta_beta2) * g.cwiseProduct(g);
        const double c1 = 1.0 - std::pow(cfg.meta_beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(cfg.meta_beta2, static_cast<double>(t));
        x -= cfg.meta_lr *
             ((m / c1).array() / ((v / c2).array().sqrt() + cfg.meta_eps))
                 .matrix();
    }
};

using ProgressFn = std::function<void(const std::string &)>;

/// Curriculum meta-training on a single task instance. After stage i the
/// model is validated at the next unroll length against the best earlier
/// model; training stops once no validation seed improves.
inline MetaTrainResult meta_train(const circuits::Task &task,
                                  const MetaConfig &cfg, std::uint64_t seed,
                                  const ProgressFn &progress = {}) {
    cfg.validate();
    L2OWeights w =
        L2OWeights::init(cfg.hidden, cfg.lstm_layers, seed, cfg.init_scale);
    Vector phi = w.flatten();
    MetaAdam adam;
    L2OWeights best = w;
    MetaTrainResult result;
    auto &log = result.log;
    UnrollOptions opt;
    opt.mode = cfg.mode;
    opt.pinv_cutoff = cfg.pinv_cutoff;
    opt.step_weights = cfg.step_weights;

    for (std::size_t stage = 0; stage < cfg.schedule.size(); ++stage) {
        const std::size_t horizon = cfg.schedule[stage];
        const std::size_t segments =
            std::max<std::size_t>(1, cfg.trajectory_length / horizon);
        StageLog slog;
        slog.stage = stage;
        slog.unroll = horizon;
        std::size_t ok = 0;
        for (std::size_t k = 0; k < cfg.trajectories_per_stage; ++k) {
            ++log.trajectories;
            Vector theta = circuits::sample_initial_params(
                task.n_params(), mix_seeds({seed, 0x545241ULL, stage, k}));
            std::optional<CoordState> state;
            std::optional<StepInputs> first;
            std::optional<double> loss0;
            for (std::size_t s = 0; s < segments; ++s) {
                auto mg = meta_grad(task, theta, horizon, w, opt,
                                    std::move(state), std::move(first), loss0);
                SegmentLog sl{stage, horizon, k, s, 0.0, !mg.has_value()};
                if (!mg || !mg->grad.allFinite()) {
                    sl.diverged = true;
                    log.segments.push_back(sl);
                    ++slog.diverged_segments;
                    break;
                }
                sl.mean_loss = mg->outer_loss / static_cast<double>(horizon);
                log.segments.push_back(sl);
                Vector g = mg->grad;
                if (cfg.grad_clip > 0.0 && g.norm() > cfg.grad_clip) {
                    g *= cfg.grad_clip / g.norm();
                }
                adam.step(phi, g, cfg);
                w.assign(phi);
                ++log.meta_steps;
                ++ok;
                theta = mg->traj.thetas.back();
                state = std::move(mg->traj.final_state);
                first = std::move(mg->traj.inputs.back());
                loss0 = mg->traj.losses.back();
            }
        }
        if (ok == 0) {
            throw std::runtime_error("meta-training stage " +
                                     std::to_string(stage) +
                                     ": every trajectory diverged");
        }
        slog.validation_length = cfg.validation_length(stage);
        slog.validation =
            validation_losses(task, w, cfg, seed, slog.validation_length);
        if (stage > 0) {
            slog.previous_validation =
                validation_losses(task, best, cfg, seed, slog.validation_length);
            bool improved = false;
            for (std::size_t v = 0; v < slog.validation.size(); ++v) {
                improved |= slog.validation[v] < slog.previous_validation[v];
            }
            slog.accepted = improved;
        }
        if (progress) {
            double mean = 0.0;
            for (double v : slog.validation) {
                mean += v;
            }
            progress("stage " + std::to_string(stage) + " T=" +
                     std::to_string(horizon) + " validation mean " +
                     std::to_string(mean / static_cast<double>(
                                               slog.validation.size())) +
                     (slog.accepted ? "" : " (rejected, stopping)"));
        }
        log.stages.push_back(slog);
        if (!slog.accepted) {
            break;
        }
        best = w;
    }
    result.checkpoint.weights = best;
    result.checkpoint.mode = cfg.mode;
    result.checkpoint.pinv_cutoff = cfg.pinv_cutoff;
    result.checkpoint.detach_gradient = cfg.detach_gradient;
    result.checkpoint.detach_metric = cfg.detach_metric;
    result.checkpoint.config_hash = cfg.hash();
    return result;
}

} // namespace l2og::l2o
