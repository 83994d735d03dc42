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

// Exact parameter-shift gradients, the Fubini-Study metric tensor and the
// blended preconditioner built from its pseudo-inverse.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "l2og/circuits.hpp"
#include "l2og/sim.hpp"

namespace l2og::geom {

using circuits::CircuitTemplate;
using circuits::Task;
using sim::StateVector;

namespace detail {

inline constexpr double kShift = std::numbers::pi / 2.0;

// Calls fn(gate_index, plus_state, minus_state) for every parameterized gate,
// where the states are the circuit outputs with that gate's angle shifted by
// +-pi/2. Prefix states are advanced incrementally.
template <class Fn>
void for_each_shifted_pair(const CircuitTemplate &c, const Vector &angles,
                           Fn &&fn) {
    StateVector prefix = sim::init_zero_state(c.n_qubits);
    for (std::size_t gi = 0; gi < c.gates.size(); ++gi) {
        const auto &g = c.gates[gi];
        if (g.param_slot) {
            const double a = c.angle_of(g, angles);
            StateVector plus = prefix;
            StateVector minus = prefix;
            sim::apply_gate(plus, g, a + kShift);
            sim::apply_gate(minus, g, a - kShift);
            for (std::size_t k = gi + 1; k < c.gates.size(); ++k) {
                c.apply_gate(plus, c.gates[k], angles);
                c.apply_gate(minus, c.gates[k], angles);
            }
            fn(gi, plus, minus);
        }
        c.apply_gate(prefix, g, angles);
    }
}

// d<obs>/dtheta by the two-point shift rule applied per gate occurrence.
inline Vector observable_gradient(const CircuitTemplate &c,
                                  const sim::PauliSum &obs,
                                  const Vector &theta) {
    Vector grad = Vector::Zero(static_cast<Eigen::Index>(c.n_params));
    for_each_shifted_pair(
        c, theta,
        [&](std::size_t gi, const StateVector &plus, const StateVector &minus) {
            const auto &g = c.gates[gi];
            const double d = 0.5 * (sim::expectation(plus, obs) -
                                    sim::expectation(minus, obs));
            grad[static_cast<Eigen::Index>(*g.param_slot)] += g.scale * d;
        });
    return grad;
}

// dF0/da for each angle slot of a one-qubit circuit.
inline Vector fidelity0_gradient(const CircuitTemplate &c,
                                 const Vector &angles) {
    Vector grad = Vector::Zero(static_cast<Eigen::Index>(c.n_params));
    for_each_shifted_pair(
        c, angles,
        [&](std::size_t gi, const StateVector &plus, const StateVector &minus) {
            const auto &g = c.gates[gi];
            grad[static_cast<Eigen::Index>(*g.param_slot)] +=
                g.scale * 0.5 * (std::norm(plus[0]) - std::norm(minus[0]));
        });
    return grad;
}

inline Vector reupload_gradient(const Task &task, const Vector &w) {
    const auto &m = *task.reupload;
    const auto na = static_cast<Eigen::Index>(m.n_angles());
    const double a0 = m.alpha0(w);
    const double a1 = m.alpha1(w);
    Vector grad = Vector::Zero(w.size());
    for (std::size_t p = 0; p < m.train.size(); ++p) {
        const auto &x = m.train.points[p];
        const int y = m.train.labels[p];
        const Vector angles = m.angles(x, w);
        const StateVector s = task.circuit.run(angles);
        const double f0 = std::norm(s[0]);
        const double f1 = std::norm(s[1]);
        const double r0 = a0 * f0 - (1.0 - y);
        const double r1 = a1 * f1 - y;
        // F1 = 1 - F0 on one qubit.
        const double d_f0 = 2.0 * r0 * a0 - 2.0 * r1 * a1;
        const Vector df0 = fidelity0_gradient(task.circuit, angles);
        for (Eigen::Index k = 0; k < na; ++k) {
            const double da = d_f0 * df0[k];
            grad[k] += da;
            grad[na + k] +=
                da * circuits::ReuploadModel::feature(
                         x, static_cast<std::size_t>(k));
        }
        grad[2 * na] += 2.0 * r0 * f0;
        grad[2 * na + 1] += 2.0 * r1 * f1;
    }
    return grad / static_cast<double>(m.train.size());
}

} // namespace detail

/// Exact gradient of task.cost at theta via the +-pi/2 shift rule.
inline Vector param_shift_grad(const Task &task, const Vector &theta) {
    task.check_length(theta);
    if (task.reupload) {
        return detail::reupload_gradient(task, theta);
    }
    return detail::observable_gradient(task.circuit, *task.observable, theta);
}

struct DerivativeStates {
    StateVector psi;
    std::vector<StateVector> d_psi; // one per slot
};

/// |psi> and |d_k psi> for every slot. A slot shared by several gates gets
/// the scale-weighted sum of the per-gate derivative states.
inline DerivativeStates derivative_states(const CircuitTemplate &c,
                                          const Vector &theta) {
    c.check_length(theta);
    DerivativeStates out;
    StateVector zero_like = sim::init_zero_state(c.n_qubits);
    for (auto &a : zero_like.amplitudes()) {
        a = 0.0;
    }
    out.d_psi.assign(c.n_params, zero_like);
    StateVector prefix = sim::init_zero_state(c.n_qubits);
    for (std::size_t gi = 0; gi < c.gates.size(); ++gi) {
        const auto &g = c.gates[gi];
        c.apply_gate(prefix, g, theta);
        if (!g.param_slot) {
            continue;
        }
        StateVector d = sim::apply_pauli_generator(prefix, g);
        for (std::size_t k = gi + 1; k < c.gates.size(); ++k) {
            c.apply_gate(d, c.gates[k], theta);
        }
        auto &acc = out.d_psi[*g.param_slot].amplitudes();
        const auto &src = d.amplitudes();
        for (std::size_t k = 0; k < acc.size(); ++k) {
            acc[k] += g.scale * src[k];
        }
    }
    out.psi = std::move(prefix);
    return out;
}

/// g_ij = Re(<d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi>), full matrix.
inline Matrix metric_tensor(const CircuitTemplate &c, const Vector &theta) {
    const auto ds = derivative_states(c, theta);
    const auto n = static_cast<Eigen::Index>(c.n_params);
    std::vector<sim::Complex> berry(c.n_params);
    for (std::size_t i = 0; i < c.n_params; ++i) {
        berry[i] = sim::inner_product(ds.psi, ds.d_psi[i]); // <psi|d_i psi>
    }
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const auto ui = static_cast<std::size_t>(i);
            const auto uj = static_cast<std::size_t>(j);
            const sim::Complex v =
                sim::inner_product(ds.d_psi[ui], ds.d_psi[uj]) -
                std::conj(berry[ui]) * berry[uj];
            g(i, j) = g(j, i) = v.real();
        }
    }
    return g;
}

/// Metric used to precondition a task. For the re-upload classifier this is
/// the training-set average of the pulled-back angle metric on (theta, omega)
/// with identity coordinates for the two alpha weights.
inline Matrix task_metric(const Task &task, const Vector &theta) {
    task.check_length(theta);
    if (!task.reupload) {
        return metric_tensor(task.circuit, theta);
    }
    const auto &m = *task.reupload;
    const auto na = static_cast<Eigen::Index>(m.n_angles());
    const auto np = static_cast<Eigen::Index>(m.n_trainables());
    Matrix g = Matrix::Zero(np, np);
    Matrix jac = Matrix::Zero(na, 2 * na);
    for (std::size_t p = 0; p < m.train.size(); ++p) {
        const auto &x = m.train.points[p];
        const Matrix ga = metric_tensor(task.circuit, m.angles(x, theta));
        for (Eigen::Index k = 0; k < na; ++k) {
            jac(k, k) = 1.0;
            jac(k, na + k) =
                circuits::ReuploadModel::feature(x, static_cast<std::size_t>(k));
        }
        g.topLeftCorner(2 * na, 2 * na) += jac.transpose() * ga * jac;
    }
    g.topLeftCorner(2 * na, 2 * na) /= static_cast<double>(m.train.size());
    g(2 * na, 2 * na) = 1.0;
    g(2 * na + 1, 2 * na + 1) = 1.0;
    return g;
}

inline void check_symmetric(const Matrix &g) {
    if (g.rows() != g.cols()) {
        throw std::invalid_argument("metric must be square");
    }
    const double tol = 1e-10 * std::max(1.0, g.cwiseAbs().maxCoeff());
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > tol) {
        throw std::invalid_argument("metric is not symmetric");
    }
}

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix; eigenvalues below
/// `cutoff` are treated as zero.
inline Matrix pinv_psd(const Matrix &g, double cutoff = 1e-6) {
    check_symmetric(g);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("eigendecomposition failed");
    }
    Vector inv = es.eigenvalues();
    for (Eigen::Index k = 0; k < inv.size(); ++k) {
        inv[k] = inv[k] < cutoff ? 0.0 : 1.0 / inv[k];
    }
    const Matrix &v = es.eigenvectors();
    Matrix out = v * inv.asDiagonal() * v.transpose();
    return 0.5 * (out + out.transpose());
}

/// B = diag(1 - gamma) g_pinv + diag(gamma), i.e. each row of g_pinv is
/// blended with the matching identity row.
inline Matrix blend(const Matrix &g_pinv, const Vector &gamma) {
    Matrix b = (Vector::Ones(gamma.size()) - gamma).asDiagonal() * g_pinv;
    b.diagonal() += gamma;
    return b;
}

inline Matrix blend_preconditioner(const Matrix &g_pinv, const Vector &gamma) {
    if (g_pinv.rows() != gamma.size() || g_pinv.cols() != gamma.size()) {
        throw std::invalid_argument("preconditioner dimension mismatch");
    }
    for (Eigen::Index k = 0; k < gamma.size(); ++k) {
        if (!(gamma[k] > 0.0 && gamma[k] < 1.0)) {
            throw std::invalid_argument("gamma must lie in (0, 1)");
        }
    }
    return blend(g_pinv, gamma);
}

} // namespace l2og::geom
