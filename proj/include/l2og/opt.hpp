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

// Hand-designed baseline optimizers with their default hyperparameters.

#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "l2og/circuits.hpp"
#include "l2og/geom.hpp"
#include "l2og/record.hpp"

namespace l2og::opt {

enum class OptimizerKind { GD, Momentum, Adam, Adagrad, RMSprop, QNGD };

inline const char *optimizer_name(OptimizerKind k) {
    switch (k) {
    case OptimizerKind::GD:
        return "gd";
    case OptimizerKind::Momentum:
        return "momentum";
    case OptimizerKind::Adam:
        return "adam";
    case OptimizerKind::Adagrad:
        return "adagrad";
    case OptimizerKind::RMSprop:
        return "rmsprop";
    case OptimizerKind::QNGD:
        return "qngd";
    }
    return "?";
}

inline OptimizerKind parse_optimizer(const std::string &name) {
    for (auto k : {OptimizerKind::GD, OptimizerKind::Momentum,
                   OptimizerKind::Adam, OptimizerKind::Adagrad,
                   OptimizerKind::RMSprop, OptimizerKind::QNGD}) {
        if (name == optimizer_name(k)) {
            return k;
        }
    }
    if (name == "vanilla_gd" || name == "sgd") {
        return OptimizerKind::GD;
    }
    throw std::invalid_argument("unknown optimizer '" + name + "'");
}

struct BaselineConfig {
    OptimizerKind kind = OptimizerKind::GD;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double rho = 0.9;
    double momentum = 0.9;
    double lambda = 0.01; // QNGD Tikhonov term

    static BaselineConfig defaults(OptimizerKind k) {
        BaselineConfig c;
        c.kind = k;
        return c;
    }

    void validate() const {
        if (!(lr > 0.0)) {
            throw std::invalid_argument("learning rate must be positive");
        }
        if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 &&
              rho >= 0.0 && rho < 1.0 && momentum >= 0.0 && momentum < 1.0)) {
            throw std::invalid_argument("decay constants must lie in [0, 1)");
        }
        if (!(eps >= 0.0 && lambda >= 0.0)) {
            throw std::invalid_argument("eps and lambda must be >= 0");
        }
    }

    /// "adam", or "adam@0.001" when lr differs from the default.
    [[nodiscard]] std::string id() const {
        std::string s = optimizer_name(kind);
        if (lr != 0.01) {
            std::ostringstream os;
            os << lr;
            s += "@" + os.str();
        }
        return s;
    }
};

struct OptState {
    Vector first;  // Adam m, Momentum velocity
    Vector second; // Adam v, Adagrad sum, RMSprop running mean
    std::uint64_t step = 0;
};

/// One update. `metric` is required for QNGD and ignored otherwise.
inline Vector baseline_step(const BaselineConfig &cfg, OptState &state,
                            const Vector &theta, const Vector &grad,
                            const Matrix *metric = nullptr) {
    if (grad.size() != theta.size()) {
        throw std::invalid_argument("gradient length mismatch");
    }
    if (!grad.allFinite()) {
        throw NonFiniteError("non-finite gradient");
    }
    if (state.step == 0 || state.first.size() != theta.size()) {
        state.first = Vector::Zero(theta.size());
        state.second = Vector::Zero(theta.size());
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    switch (cfg.kind) {
    case OptimizerKind::GD:
        return theta - cfg.lr * grad;
    case OptimizerKind::Momentum:
        state.first = cfg.momentum * state.first + grad;
        return theta - cfg.lr * state.first;
    case OptimizerKind::Adam: {
        state.first = cfg.beta1 * state.first + (1.0 - cfg.beta1) * grad;
        state.second = cfg.beta2 * state.second +
                       (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
        const Vector m_hat = state.first / (1.0 - std::pow(cfg.beta1, t));
        const Vector v_hat = state.second / (1.0 - std::pow(cfg.beta2, t));
        return theta -
               cfg.lr *
                   m_hat.cwiseQuotient(
                       (v_hat.cwiseSqrt().array() + cfg.eps).matrix());
    }
    case OptimizerKind::Adagrad:
        state.second += grad.cwiseProduct(grad);
        return theta - cfg.lr * grad.cwiseQuotient(
                                    (state.second.cwiseSqrt().array() + cfg.eps)
                                        .matrix());
    case OptimizerKind::RMSprop:
        state.second = cfg.rho * state.second +
                       (1.0 - cfg.rho) * grad.cwiseProduct(grad);
        return theta - cfg.lr * grad.cwiseQuotient(
                                    (state.second.cwiseSqrt().array() + cfg.eps)
                                        .matrix());
    case OptimizerKind::QNGD: {
        if (metric == nullptr) {
            throw std::invalid_argument("QNGD requires a metric tensor");
        }
        if (metric->rows() != theta.size() || metric->cols() != theta.size()) {
            throw std::invalid_argument("metric dimension mismatch");
        }
        Matrix reg = *metric;
        reg.diagonal().array() += cfg.lambda;
        const Vector step = reg.ldlt().solve(grad);
        return theta - cfg.lr * step;
    }
    }
    throw std::logic_error("unhandled optimizer kind");
}

/// Runs `steps` updates from theta0 and records the loss after each.
inline RunRecord run_baseline(const circuits::Task &task,
                              const BaselineConfig &cfg, const Vector &theta0,
                              std::size_t steps) {
    if (steps < 1) {
        throw std::invalid_argument("steps must be >= 1");
    }
    cfg.validate();
    task.check_length(theta0);
    using Clock = std::chrono::steady_clock;
    RunRecord rec;
    rec.task_id = task.id;
    rec.optimizer_id = cfg.id();
    rec.losses.reserve(steps + 1);
    auto t0 = Clock::now();
    Vector theta = theta0;
    OptState state;
    rec.losses.push_back(task.cost(theta));
    rec.wall_ms.push_back(
        std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    for (std::size_t s = 0; s < steps; ++s) {
        t0 = Clock::now();
        try {
            const Vector grad = geom::param_shift_grad(task, theta);
            std::optional<Matrix> g;
            if (cfg.kind == OptimizerKind::QNGD) {
                g = geom::task_metric(task, theta);
            }
            theta = baseline_step(cfg, state, theta, grad, g ? &*g : nullptr);
            const double loss = task.cost(theta);
            if (!std::isfinite(loss) || !theta.allFinite()) {
                throw NonFiniteError("non-finite loss");
            }
            rec.losses.push_back(loss);
        } catch (const NonFiniteError &) {
            rec.mark_diverged(steps);
            break;
        }
        rec.wall_ms.push_back(
            std::chrono::duration<double, std::milli>(Clock::now() - t0)
                .count());
    }
    rec.final_params = theta;
    return rec;
}

} // namespace l2og::opt
