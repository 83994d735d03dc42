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

// Coordinate-wise LSTM learned optimizer with a metric-blended update and a
// hand-written reverse pass through unrolled trajectories.

#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "l2og/circuits.hpp"
#include "l2og/geom.hpp"
#include "l2og/random.hpp"
#include "l2og/record.hpp"

namespace l2og::l2o {

inline constexpr double kLambdaA = 0.01;
inline constexpr double kLambdaB = 0.01;
inline constexpr double kPreprocessP = 10.0;

/// Log-magnitude / sign features, one row per coordinate.
inline Matrix preprocess_grad(const Vector &grad, double p = kPreprocessP) {
    Matrix z(grad.size(), 2);
    const double threshold = std::exp(-p);
    for (Eigen::Index k = 0; k < grad.size(); ++k) {
        const double g = grad[k];
        if (std::isnan(g)) {
            throw NonFiniteError("NaN gradient fed to preprocessing");
        }
        if (std::abs(g) >= threshold) {
            z(k, 0) = std::log(std::abs(g)) / p;
            z(k, 1) = g > 0 ? 1.0 : (g < 0 ? -1.0 : 0.0);
        } else {
            z(k, 0) = -1.0;
            z(k, 1) = std::exp(p) * g;
        }
    }
    return z;
}

inline double sigmoid(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

/// Gate rows are ordered input, forget, cell, output.
struct LstmLayer {
    Matrix w_x; // 4H x in
    Matrix w_h; // 4H x H
    Vector b;   // 4H
};

struct Head {
    Vector w; // H
    double b = 0.0;
};

struct L2OWeights {
    std::size_t hidden = 20;
    std::vector<LstmLayer> layers;
    Head alpha;
    Head beta;
    Head gamma;
    double lambda_a = kLambdaA;
    double lambda_b = kLambdaB;
    double preprocess_p = kPreprocessP;

    static constexpr std::size_t kInputs = 2;

    /// Uniform(-scale, scale) everywhere except the alpha and beta heads,
    /// which start at zero, and the gamma bias, which starts at zero.
    static L2OWeights init(std::size_t hidden, std::size_t n_layers,
                           std::uint64_t seed, double scale = 0.1) {
        if (hidden < 1 || n_layers < 1) {
            throw std::invalid_argument("hidden width and depth must be >= 1");
        }
        Rng rng(mix_seeds({0x4c324fULL, seed}));
        auto fill = [&](auto &m) {
            for (Eigen::Index k = 0; k < m.size(); ++k) {
                m.data()[k] = uniform(rng, -scale, scale);
            }
        };
        L2OWeights w;
        w.hidden = hidden;
        const auto h = static_cast<Eigen::Index>(hidden);
        for (std::size_t l = 0; l < n_layers; ++l) {
            const Eigen::Index in = l == 0 ? kInputs : h;
            LstmLayer layer{Matrix(4 * h, in), Matrix(4 * h, h),
                            Vector(4 * h)};
            fill(layer.w_x);
            fill(layer.w_h);
            fill(layer.b);
            w.layers.push_back(std::move(layer));
        }
        w.alpha = Head{Vector::Zero(h), 0.0};
        w.beta = Head{Vector::Zero(h), 0.0};
        w.gamma = Head{Vector(h), 0.0};
        fill(w.gamma.w);
        return w;
    }

    /// All-zero weights of the given shape.
    static L2OWeights zeros(std::size_t hidden, std::size_t n_layers) {
        L2OWeights w = init(hidden, n_layers, 0);
        w.assign(Vector::Zero(static_cast<Eigen::Index>(w.n_weights())));
        return w;
    }

    [[nodiscard]] std::size_t n_layers() const { return layers.size(); }

    [[nodiscard]] std::size_t n_weights() const {
        std::size_t n = 0;
        for (const auto &l : layers) {
            n += static_cast<std::size_t>(l.w_x.size() + l.w_h.size() +
                                          l.b.size());
        }
        return n + 3 * (hidden + 1);
    }

    /// Flat view in a fixed order: per layer (w_x, w_h, b) in column-major
    /// storage order, then heads alpha, beta, gamma as (w, b).
    [[nodiscard]] Vector flatten() const {
        Vector out(static_cast<Eigen::Index>(n_weights()));
        Eigen::Index pos = 0;
        auto put = [&](const auto &m) {
            out.segment(pos, m.size()) =
                Eigen::Map<const Vector>(m.data(), m.size());
            pos += m.size();
        };
        for (const auto &l : layers) {
            put(l.w_x);
            put(l.w_h);
            put(l.b);
        }
        for (const Head *hd : {&alpha, &beta, &gamma}) {
            put(hd->w);
            out[pos++] = hd->b;
        }
        return out;
    }

    void assign(const Vector &flat) {
        if (static_cast<std::size_t>(flat.size()) != n_weights()) {
            throw std::invalid_argument("flat weight vector has wrong length");
        }
        Eigen::Index pos = 0;
        auto take = [&](auto &m) {
            Eigen::Map<Vector>(m.data(), m.size()) = flat.segment(pos, m.size());
            pos += m.size();
        };
        for (auto &l : layers) {
            take(l.w_x);
            take(l.w_h);
            take(l.b);
        }
        for (Head *hd : {&alpha, &beta, &gamma}) {
            take(hd->w);
            hd->b = flat[pos++];
        }
    }
};

/// Per-coordinate recurrent state; column p belongs to parameter p.
struct CoordState {
    std::vector<Matrix> h;
    std::vector<Matrix> c;

    static CoordState zeros(const L2OWeights &w, std::size_t n_coords) {
        CoordState s;
        const auto h = static_cast<Eigen::Index>(w.hidden);
        const auto p = static_cast<Eigen::Index>(n_coords);
        for (std::size_t l = 0; l < w.n_layers(); ++l) {
            s.h.push_back(Matrix::Zero(h, p));
            s.c.push_back(Matrix::Zero(h, p));
        }
        return s;
    }

    [[nodiscard]] std::size_t n_coords() const {
        return h.empty() ? 0 : static_cast<std::size_t>(h[0].cols());
    }
};

struct CellOutput {
    Vector alpha;
    Vector beta;
    Vector gamma;
};

namespace detail {

struct LayerCache {
    Matrix x;      // in x P
    Matrix h_prev; // H x P
    Matrix c_prev;
    Matrix i, f, g, o; // activated gates
    Matrix tanh_c;
};

struct CellCache {
    std::vector<LayerCache> layers;
    Matrix h_top;
};

} // namespace detail

/// One recurrent step for all coordinates with shared weights. z is P x 2.
inline CellOutput l2o_cell(const Matrix &z, CoordState &state,
                           const L2OWeights &w,
                           detail::CellCache *cache = nullptr) {
    const Eigen::Index p = z.rows();
    if (z.cols() != static_cast<Eigen::Index>(L2OWeights::kInputs)) {
        throw std::invalid_argument("feature matrix must have 2 columns");
    }
    if (state.h.size() != w.n_layers() ||
        state.n_coords() != static_cast<std::size_t>(p)) {
        throw std::invalid_argument("coordinate state shape mismatch");
    }
    const auto h = static_cast<Eigen::Index>(w.hidden);
    if (cache) {
        cache->layers.resize(w.n_layers());
    }
    Matrix x = z.transpose();
    for (std::size_t l = 0; l < w.n_layers(); ++l) {
        const auto &lw = w.layers[l];
        if (state.h[l].rows() != h) {
            throw std::invalid_argument("hidden state width mismatch");
        }
        Matrix pre = lw.w_x * x + lw.w_h * state.h[l];
        pre.colwise() += lw.b;
        Matrix i = pre.topRows(h).unaryExpr(&sigmoid);
        Matrix f = pre.middleRows(h, h).unaryExpr(&sigmoid);
        Matrix g = pre.middleRows(2 * h, h).array().tanh().matrix();
        Matrix o = pre.bottomRows(h).unaryExpr(&sigmoid);
        Matrix c = f.cwiseProduct(state.c[l]) + i.cwiseProduct(g);
        Matrix tc = c.array().tanh().matrix();
        Matrix hn = o.cwiseProduct(tc);
        if (cache) {
            auto &lc = cache->layers[l];
            lc.x = std::move(x);
            lc.h_prev = state.h[l];
            lc.c_prev = state.c[l];
            lc.i = std::move(i);
            lc.f = std::move(f);
            lc.g = std::move(g);
            lc.o = std::move(o);
            lc.tanh_c = tc;
        }
        state.c[l] = std::move(c);
        state.h[l] = hn;
        x = std::move(hn);
    }
    CellOutput out;
    out.alpha = (w.alpha.w.transpose() * x).transpose();
    out.alpha.array() += w.alpha.b;
    out.beta = (w.beta.w.transpose() * x).transpose();
    out.beta.array() += w.beta.b;
    Vector gpre = (w.gamma.w.transpose() * x).transpose();
    gpre.array() += w.gamma.b;
    out.gamma = gpre.unaryExpr(&sigmoid);
    if (cache) {
        cache->h_top = std::move(x);
    }
    return out;
}

enum class PrecondMode { Full, IdentityPrecond };

inline const char *mode_name(PrecondMode m) {
    return m == PrecondMode::Full ? "full" : "identity_precond";
}

inline PrecondMode parse_mode(const std::string &s) {
    if (s == "full") {
        return PrecondMode::Full;
    }
    if (s == "identity_precond") {
        return PrecondMode::IdentityPrecond;
    }
    throw std::invalid_argument("unknown preconditioner mode '" + s + "'");
}

/// theta - exp(lambda_b alpha) o (B v), v = lambda_a beta and
/// B = diag(1 - gamma) g_pinv + diag(gamma). An empty g_pinv means B = I.
inline Vector l2o_update(const Vector &theta, const Vector &alpha,
                         const Vector &beta, const Vector &gamma,
                         const Matrix &g_pinv, double lambda_a = kLambdaA,
                         double lambda_b = kLambdaB) {
    const Eigen::Index n = theta.size();
    if (alpha.size() != n || beta.size() != n || gamma.size() != n ||
        (g_pinv.size() != 0 && (g_pinv.rows() != n || g_pinv.cols() != n))) {
        throw std::invalid_argument("l2o_update shape mismatch");
    }
    const Vector eta = (lambda_b * alpha).array().exp().matrix();
    const Vector v = lambda_a * beta;
    const Vector bv = g_pinv.size() == 0 ? v : geom::blend(g_pinv, gamma) * v;
    Vector out = theta - eta.cwiseProduct(bv);
    if (!out.allFinite()) {
        throw NonFiniteError("non-finite L2O update");
    }
    return out;
}

/// Inputs fed to the optimizer at one step; held constant for meta-gradients.
struct StepInputs {
    Vector grad;
    Matrix g_pinv; // empty in identity_precond mode
};

struct UnrollOptions {
    PrecondMode mode = PrecondMode::Full;
    double pinv_cutoff = 1e-6;
    std::vector<double> step_weights; // w_t for t = 1..T; empty means all 1
    /// Replays recorded inputs instead of recomputing them from theta_t.
    const std::vector<StepInputs> *frozen = nullptr;
    bool record_tape = false;
    /// Computes the gradient at theta_T (needed for meta-gradients).
    bool final_gradient = true;
};

struct StepTape {
    detail::CellCache cell;
    CellOutput out;
    Vector eta;
    Vector v;
    Vector gv; // g_pinv v (full mode)
};

struct Trajectory {
    std::vector<Vector> thetas;     // T + 1 entries when not diverged
    std::vector<double> losses;     // C(theta_t), t = 0..T
    std::vector<StepInputs> inputs; // inputs at t = 0..T-1 (+ grad at T)
    std::vector<StepTape> tape;
    CoordState final_state;
    bool diverged = false;
    std::size_t metric_evaluations = 0;
};

struct UnrollResult {
    double outer_loss = std::numeric_limits<double>::infinity();
    Trajectory traj;
};

inline double step_weight(const UnrollOptions &opt, std::size_t t) {
    if (opt.step_weights.empty()) {
        return 1.0;
    }
    if (t - 1 >= opt.step_weights.size()) {
        throw std::invalid_argument("step weight list shorter than horizon");
    }
    return opt.step_weights[t - 1];
}

inline StepInputs compute_inputs(const circuits::Task &task,
                                 const Vector &theta, const UnrollOptions &opt,
                                 std::size_t &metric_count) {
    StepInputs in;
    in.grad = geom::param_shift_grad(task, theta);
    if (!in.grad.allFinite()) {
        throw NonFiniteError("non-finite gradient");
    }
    if (opt.mode == PrecondMode::Full) {
        in.g_pinv = geom::pinv_psd(geom::task_metric(task, theta),
                                   opt.pinv_cutoff);
        ++metric_count;
    }
    return in;
}

/// Runs T optimizer steps from theta0 starting at `state` (zero state when
/// absent). outer_loss = sum_t w_t C(theta_t); +inf when diverged.
inline UnrollResult unroll(const circuits::Task &task, const Vector &theta0,
                           std::size_t horizon, const L2OWeights &w,
                           const UnrollOptions &opt = {},
                           std::optional<CoordState> state = std::nullopt,
                           std::optional<StepInputs> first_inputs = std::nullopt,
                           std::optional<double> initial_loss = std::nullopt) {
    if (horizon < 1) {
        throw std::invalid_argument("unroll horizon must be >= 1");
    }
    task.check_length(theta0);
    if (opt.frozen && opt.frozen->size() < horizon) {
        throw std::invalid_argument("frozen inputs shorter than horizon");
    }
    const auto n = static_cast<std::size_t>(theta0.size());
    UnrollResult res;
    auto &tr = res.traj;
    CoordState st = state ? std::move(*state) : CoordState::zeros(w, n);
    Vector theta = theta0;
    tr.thetas.push_back(theta);
    tr.losses.push_back(initial_loss ? *initial_loss : task.cost(theta));
    double outer = 0.0;
    try {
        for (std::size_t t = 0; t < horizon; ++t) {
            StepInputs in;
            if (opt.frozen) {
                in = (*opt.frozen)[t];
            } else if (t == 0 && first_inputs) {
                in = std::move(*first_inputs);
            } else {
                in = compute_inputs(task, theta, opt, tr.metric_evaluations);
            }
            const Matrix z = preprocess_grad(in.grad, w.preprocess_p);
            StepTape tape;
            CellOutput out =
                l2o_cell(z, st, w, opt.record_tape ? &tape.cell : nullptr);
            const Matrix &gp = opt.mode == PrecondMode::Full ? in.g_pinv
                                                              : Matrix();
            if (opt.mode == PrecondMode::Full && gp.size() == 0) {
                throw std::invalid_argument("full mode needs a metric");
            }
            theta = l2o_update(theta, out.alpha, out.beta, out.gamma, gp,
                               w.lambda_a, w.lambda_b);
            const double loss = task.cost(theta);
            if (!std::isfinite(loss)) {
                throw NonFiniteError("non-finite loss");
            }
            outer += step_weight(opt, t + 1) * loss;
            if (opt.record_tape) {
                tape.eta = (w.lambda_b * out.alpha).array().exp().matrix();
                tape.v = w.lambda_a * out.beta;
                if (opt.mode == PrecondMode::Full) {
                    tape.gv = gp * tape.v;
                }
                tape.out = std::move(out);
                tr.tape.push_back(std::move(tape));
            }
            tr.inputs.push_back(std::move(in));
            tr.thetas.push_back(theta);
            tr.losses.push_back(loss);
        }
        if (opt.final_gradient && !opt.frozen) {
            tr.inputs.push_back(
                compute_inputs(task, theta, opt, tr.metric_evaluations));
        }
    } catch (const NonFiniteError &) {
        tr.diverged = true;
        res.outer_loss = std::numeric_limits<double>::infinity();
        tr.final_state = std::move(st);
        return res;
    }
    res.outer_loss = outer;
    tr.final_state = std::move(st);
    return res;
}

namespace detail {

struct WeightGrads {
    std::vector<LstmLayer> layers;
    Head alpha, beta, gamma;

    explicit WeightGrads(const L2OWeights &w) {
        for (const auto &l : w.layers) {
            layers.push_back(LstmLayer{Matrix::Zero(l.w_x.rows(), l.w_x.cols()),
                                       Matrix::Zero(l.w_h.rows(), l.w_h.cols()),
                                       Vector::Zero(l.b.size())});
        }
        const auto h = static_cast<Eigen::Index>(w.hidden);
        alpha = beta = gamma = Head{Vector::Zero(h), 0.0};
    }

    [[nodiscard]] Vector flatten(const L2OWeights &shape) const {
        L2OWeights tmp = shape;
        tmp.layers = layers;
        tmp.alpha = alpha;
        tmp.beta = beta;
        tmp.gamma = gamma;
        return tmp.flatten();
    }
};

} // namespace detail

/// Reverse pass over a recorded trajectory. grads[t] is dC/dtheta at
/// theta_t for t = 1..T, treated (with g_pinv) as constants.
inline Vector backprop_trajectory(const Trajectory &tr, const L2OWeights &w,
                                  const UnrollOptions &opt,
                                  const std::vector<Vector> &loss_grads) {
    const std::size_t horizon = tr.tape.size();
    if (horizon == 0) {
        throw std::invalid_argument("empty tape");
    }
    const auto h = static_cast<Eigen::Index>(w.hidden);
    const Eigen::Index p = tr.thetas.front().size();
    detail::WeightGrads dw(w);
    std::vector<Matrix> dh_next(w.n_layers(), Matrix::Zero(h, p));
    std::vector<Matrix> dc_next(w.n_layers(), Matrix::Zero(h, p));
    Vector acc = Vector::Zero(p);
    for (std::size_t s = horizon; s-- > 0;) {
        acc += step_weight(opt, s + 1) * loss_grads[s + 1];
        const Vector du = -acc;
        const StepTape &tp = tr.tape[s];
        const auto &out = tp.out;
        const Matrix &gp = tr.inputs[s].g_pinv;
        const bool full = opt.mode == PrecondMode::Full;
        const Vector bv =
            full ? Vector((Vector::Ones(p) - out.gamma).cwiseProduct(tp.gv) +
                          out.gamma.cwiseProduct(tp.v))
                 : tp.v;
        const Vector d_eta = du.cwiseProduct(bv);
        const Vector d_alpha = w.lambda_b * d_eta.cwiseProduct(tp.eta);
        const Vector d_bv = du.cwiseProduct(tp.eta);
        Vector d_v;
        Vector d_gamma_pre = Vector::Zero(p);
        if (full) {
            d_v = gp.transpose() *
                      (Vector::Ones(p) - out.gamma).cwiseProduct(d_bv) +
                  out.gamma.cwiseProduct(d_bv);
            const Vector d_gamma = d_bv.cwiseProduct(tp.v - tp.gv);
            d_gamma_pre = d_gamma.cwiseProduct(
                out.gamma.cwiseProduct(Vector::Ones(p) - out.gamma));
        } else {
            d_v = d_bv;
        }
        const Vector d_beta = w.lambda_a * d_v;

        const Matrix &ht = tp.cell.h_top;
        dw.alpha.w += ht * d_alpha;
        dw.alpha.b += d_alpha.sum();
        dw.beta.w += ht * d_beta;
        dw.beta.b += d_beta.sum();
        dw.gamma.w += ht * d_gamma_pre;
        dw.gamma.b += d_gamma_pre.sum();
        Matrix dh_above = w.alpha.w * d_alpha.transpose() +
                          w.beta.w * d_beta.transpose() +
                          w.gamma.w * d_gamma_pre.transpose();

        for (std::size_t l = w.n_layers(); l-- > 0;) {
            const auto &lc = tp.cell.layers[l];
            const auto &lw = w.layers[l];
            const Matrix dh = dh_above + dh_next[l];
            const Matrix d_o = dh.cwiseProduct(lc.tanh_c);
            const Matrix dc =
                dc_next[l] +
                dh.cwiseProduct(lc.o).cwiseProduct(
                    (1.0 - lc.tanh_c.array().square()).matrix());
            Matrix d_pre(4 * h, p);
            d_pre.topRows(h) = dc.cwiseProduct(lc.g).cwiseProduct(
                lc.i.cwiseProduct((1.0 - lc.i.array()).matrix()));
            d_pre.middleRows(h, h) = dc.cwiseProduct(lc.c_prev).cwiseProduct(
                lc.f.cwiseProduct((1.0 - lc.f.array()).matrix()));
            d_pre.middleRows(2 * h, h) = dc.cwiseProduct(lc.i).cwiseProduct(
                (1.0 - lc.g.array().square()).matrix());
            d_pre.bottomRows(h) = d_o.cwiseProduct(
                lc.o.cwiseProduct((1.0 - lc.o.array()).matrix()));
            dc_next[l] = dc.cwiseProduct(lc.f);
            auto &gl = dw.layers[l];
            gl.w_x.noalias() += d_pre * lc.x.transpose();
            gl.w_h.noalias() += d_pre * lc.h_prev.transpose();
            gl.b += d_pre.rowwise().sum();
            dh_next[l] = lw.w_h.transpose() * d_pre;
            dh_above = lw.w_x.transpose() * d_pre;
        }
    }
    return dw.flatten(w);
}

struct MetaGradResult {
    double outer_loss = 0.0;
    Vector grad;
    Trajectory traj;
};

/// Outer loss and its gradient w.r.t. the flattened weights, with gradients
/// and metrics of the cost held constant. Returns nullopt when the
/// trajectory diverges.
inline std::optional<MetaGradResult>
meta_grad(const circuits::Task &task, const Vector &theta0, std::size_t horizon,
          const L2OWeights &w, UnrollOptions opt = {},
          std::optional<CoordState> state = std::nullopt,
          std::optional<StepInputs> first_inputs = std::nullopt,
          std::optional<double> initial_loss = std::nullopt) {
    if (horizon < 1) {
        throw std::invalid_argument("meta-gradient horizon must be >= 1");
    }
    opt.record_tape = true;
    opt.final_gradient = true;
    auto res = unroll(task, theta0, horizon, w, opt, std::move(state),
                      std::move(first_inputs), initial_loss);
    if (res.traj.diverged) {
        return std::nullopt;
    }
    std::vector<Vector> loss_grads(horizon + 1);
    if (opt.frozen) {
        // Frozen replay: gradient at theta_t is the recorded input at t,
        // and the one at theta_T is the extra entry when supplied.
        for (std::size_t t = 1; t <= horizon; ++t) {
            if (t < opt.frozen->size()) {
                loss_grads[t] = (*opt.frozen)[t].grad;
            } else {
                loss_grads[t] =
                    geom::param_shift_grad(task, res.traj.thetas[t]);
            }
        }
    } else {
        for (std::size_t t = 1; t <= horizon; ++t) {
            loss_grads[t] = res.traj.inputs[t].grad;
        }
    }
    MetaGradResult out;
    out.outer_loss = res.outer_loss;
    out.grad = backprop_trajectory(res.traj, w, opt, loss_grads);
    out.traj = std::move(res.traj);
    return out;
}

/// Evaluates the learned optimizer for `steps` steps as a RunRecord.
inline RunRecord run_l2o(const circuits::Task &task, const L2OWeights &w,
                         const Vector &theta0, std::size_t steps,
                         PrecondMode mode, double pinv_cutoff = 1e-6,
                         const std::string &optimizer_id = "l2o") {
    if (steps < 1) {
        throw std::invalid_argument("steps must be >= 1");
    }
    using Clock = std::chrono::steady_clock;
    RunRecord rec;
    rec.task_id = task.id;
    rec.optimizer_id = optimizer_id;
    UnrollOptions opt;
    opt.mode = mode;
    opt.pinv_cutoff = pinv_cutoff;
    opt.final_gradient = false;
    CoordState st = CoordState::zeros(w, task.n_params());
    Vector theta = theta0;
    auto t0 = Clock::now();
    rec.losses.push_back(task.cost(theta));
    rec.wall_ms.push_back(
        std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    for (std::size_t s = 0; s < steps; ++s) {
        t0 = Clock::now();
        auto r = unroll(task, theta, 1, w, opt, std::move(st), std::nullopt,
                        rec.losses.back());
        if (r.traj.diverged) {
            rec.mark_diverged(steps);
            break;
        }
        theta = r.traj.thetas.back();
        st = std::move(r.traj.final_state);
        rec.losses.push_back(r.traj.losses.back());
        rec.wall_ms.push_back(
            std::chrono::duration<double, std::milli>(Clock::now() - t0)
                .count());
    }
    rec.final_params = theta;
    return rec;
}

} // namespace l2og::l2o
