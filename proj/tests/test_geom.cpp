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

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "l2og/circuits.hpp"
#include "l2og/circuits_io.hpp"
#include "l2og/geom.hpp"
#include "test_util.hpp"

using namespace l2og;
using namespace l2og::geom;
using l2og::testing::CVector;
using Catch::Approx;
using sim::GateKind;
using sim::GateOp;
using sim::Pauli;

namespace {

std::vector<circuits::Task> one_of_each_family(std::uint64_t seed) {
    std::vector<circuits::Task> tasks;
    tasks.push_back(circuits::build_random_pqc(4, 3, seed));
    sim::PauliSum h;
    h.add(0.4, {{0, Pauli::X}, {1, Pauli::X}})
        .add(-0.7, {{2, Pauli::Z}})
        .add(0.3, {{1, Pauli::Y}, {3, Pauli::Y}})
        .add(0.1);
    tasks.push_back(circuits::build_vqe_hea(h, 4, 2));
    tasks.push_back(
        circuits::build_qaoa_maxcut(circuits::gen_er_graph(5, 0.6, seed), 2));
    tasks.push_back(circuits::build_qaoa_sk(5, 2, seed));
    tasks.push_back(circuits::build_reupload(2, 30, 1, seed));
    return tasks;
}

/// Metric tensor built from finite-difference derivative states.
Matrix fd_metric(const circuits::CircuitTemplate &c, const Vector &theta,
                 double h = 1e-5) {
    const auto n = theta.size();
    const CVector psi = l2og::testing::to_eigen(c.run(theta));
    std::vector<CVector> d(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        Vector tp = theta, tm = theta;
        tp[k] += h;
        tm[k] -= h;
        d[static_cast<std::size_t>(k)] =
            (l2og::testing::to_eigen(c.run(tp)) -
             l2og::testing::to_eigen(c.run(tm))) /
            (2 * h);
    }
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto &di = d[static_cast<std::size_t>(i)];
            const auto &dj = d[static_cast<std::size_t>(j)];
            g(i, j) = (di.dot(dj) - di.dot(psi) * psi.dot(dj)).real();
        }
    }
    return g;
}

} // namespace

TEST_CASE("param-shift gradient of <Z> after RY", "[geom]") {
    circuits::Task t;
    t.kind = circuits::TaskKind::VqeHea;
    t.circuit.n_qubits = 1;
    t.circuit.n_params = 1;
    t.circuit.gates.push_back(GateOp::rotation(GateKind::RY, 0, 0));
    t.observable = sim::PauliSum{}.add(1.0, {{0, Pauli::Z}});
    Vector th(1);
    th << std::numbers::pi / 3;
    CHECK(param_shift_grad(t, th)[0] ==
          Approx(-std::sin(std::numbers::pi / 3)).margin(1e-12));
    CHECK_THROWS_AS(param_shift_grad(t, Vector::Zero(2)),
                    std::invalid_argument);
}

TEST_CASE("gradient vanishes at the single-edge QAOA optimum", "[geom]") {
    circuits::Graph g;
    g.n_vertices = 2;
    g.edges.push_back({0, 1, 1.0});
    const auto t = circuits::build_qaoa_maxcut(g, 1);
    // <H_C> = -1/2 -+ sin(4 beta) sin(gamma) / 2 for one edge at p = 1, so
    // one of the sign choices below is a global minimum.
    Vector th(2);
    double best = 1e9;
    for (double sg : {-1.0, 1.0}) {
        for (double sb : {-1.0, 1.0}) {
            Vector cand(2);
            cand << sg * std::numbers::pi / 2, sb * std::numbers::pi / 8;
            if (t.cost(cand) < best) {
                best = t.cost(cand);
                th = cand;
            }
        }
    }
    CHECK(best == Approx(-1.0).margin(1e-12));
    CHECK(param_shift_grad(t, th).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("param-shift matches finite differences on every task family",
          "[geom][property]") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        for (const auto &task : one_of_each_family(seed)) {
            const Vector th =
                circuits::sample_initial_params(task.n_params(), seed + 10);
            const Vector ps = param_shift_grad(task, th);
            const Vector fd = l2og::testing::finite_difference(
                [&](const Vector &x) { return task.cost(x); }, th);
            INFO(task.id);
            CHECK((ps - fd).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
}

TEST_CASE("metric of a single RX is 1/4", "[geom]") {
    circuits::CircuitTemplate c;
    c.n_qubits = 1;
    c.n_params = 1;
    c.gates.push_back(GateOp::rotation(GateKind::RX, 0, 0));
    for (double a : {0.0, 0.7, -2.1}) {
        Vector th(1);
        th << a;
        CHECK(std::abs(metric_tensor(c, th)(0, 0) - 0.25) < 1e-10);
    }
}

TEST_CASE("metric of a product of RY rotations is diagonal", "[geom]") {
    circuits::CircuitTemplate c;
    c.n_qubits = 2;
    c.n_params = 2;
    c.gates.push_back(GateOp::rotation(GateKind::RY, 0, 0));
    c.gates.push_back(GateOp::rotation(GateKind::RY, 1, 1));
    Vector th(2);
    th << 0.3, -1.2;
    const Matrix g = metric_tensor(c, th);
    CHECK(std::abs(g(0, 0) - 0.25) < 1e-10);
    CHECK(std::abs(g(1, 1) - 0.25) < 1e-10);
    CHECK(std::abs(g(0, 1)) < 1e-10);
    CHECK(std::abs(g(1, 0)) < 1e-10);
}

TEST_CASE("depth-1 product circuits have the analytic block-diagonal metric",
          "[geom][property]") {
    // After RY(pi/4) on |0>, RX has variance (1 - <X>^2)/4 and RZ
    // (1 - <Z>^2)/4 of its generator.
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        circuits::CircuitTemplate c;
        c.n_qubits = 3;
        c.n_params = 3;
        std::vector<GateKind> kinds;
        for (std::size_t q = 0; q < 3; ++q) {
            c.gates.push_back(
                GateOp::fixed_rotation(GateKind::RY, q, std::numbers::pi / 4));
        }
        for (std::size_t q = 0; q < 3; ++q) {
            kinds.push_back(static_cast<GateKind>(rng() % 3));
            c.gates.push_back(GateOp::rotation(kinds.back(), q, q));
        }
        const Vector th = l2og::testing::random_vector(3, rng);
        const Matrix g = metric_tensor(c, th);
        const double s = std::sin(std::numbers::pi / 4);
        for (std::size_t q = 0; q < 3; ++q) {
            double expect = 0.25; // RY: |0> rotated in XZ plane, <Y> = 0
            if (kinds[q] == GateKind::RX) {
                expect = 0.25 * (1 - s * s);
            } else if (kinds[q] == GateKind::RZ) {
                expect = 0.25 * (1 - s * s);
            }
            const auto i = static_cast<Eigen::Index>(q);
            CHECK(std::abs(g(i, i) - expect) < 1e-8);
            for (Eigen::Index j = 0; j < 3; ++j) {
                if (j != i) {
                    CHECK(std::abs(g(i, j)) < 1e-8);
                }
            }
        }
    }
}

TEST_CASE("metric matches finite-difference inner products",
          "[geom][property]") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 1 + rep % 5;
        const std::size_t p = 1 + rep % 10;
        const auto c = l2og::testing::random_circuit(n, p, 2 * n, rng);
        const Vector th = l2og::testing::random_vector(p, rng);
        const Matrix g = metric_tensor(c, th);
        CHECK((g - fd_metric(c, th)).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("metric is symmetric positive semidefinite", "[geom][property]") {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 2 + rep % 4;
        const auto c = l2og::testing::random_circuit(n, 8, 6, rng);
        const Matrix g = metric_tensor(c, l2og::testing::random_vector(8, rng));
        CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::SelfAdjointEigenSolver<Matrix> es(g);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8);
        // Prepending fixed gates keeps both properties.
        auto c2 = c;
        c2.gates.insert(c2.gates.begin(), l2og::testing::random_gate(n, rng));
        const Matrix g2 =
            metric_tensor(c2, l2og::testing::random_vector(8, rng));
        CHECK((g2 - g2.transpose()).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(g2).eigenvalues().minCoeff() >=
              -1e-8);
    }
}

TEST_CASE("shared QAOA slots sum their derivative states", "[geom]") {
    const auto t = circuits::build_qaoa_sk(4, 2, 3);
    const Vector th = circuits::sample_initial_params(4, 1);
    CHECK((metric_tensor(t.circuit, th) - fd_metric(t.circuit, th))
              .cwiseAbs()
              .maxCoeff() < 1e-6);
}

TEST_CASE("re-upload metric is the averaged pullback", "[geom]") {
    const auto t = circuits::build_reupload(2, 10, 1, 4);
    const Vector w = circuits::sample_initial_params(t.n_params(), 2);
    const Matrix g = task_metric(t, w);
    const auto &m = *t.reupload;
    const auto np = static_cast<Eigen::Index>(t.n_params());
    // Oracle: finite-difference derivative states of each data point's
    // circuit as a function of the trainables.
    Matrix expect = Matrix::Zero(np, np);
    for (const auto &x : m.train.points) {
        circuits::CircuitTemplate wrapped;
        wrapped.n_qubits = 1;
        wrapped.n_params = t.n_params();
        auto run = [&](const Vector &ww) { return t.circuit.run(m.angles(x, ww)); };
        const CVector psi = l2og::testing::to_eigen(run(w));
        std::vector<CVector> d;
        for (Eigen::Index k = 0; k < np; ++k) {
            Vector a = w, b = w;
            a[k] += 1e-5;
            b[k] -= 1e-5;
            d.push_back((l2og::testing::to_eigen(run(a)) -
                         l2og::testing::to_eigen(run(b))) /
                        2e-5);
        }
        for (Eigen::Index i = 0; i < np - 2; ++i) {
            for (Eigen::Index j = 0; j < np - 2; ++j) {
                const auto &di = d[static_cast<std::size_t>(i)];
                const auto &dj = d[static_cast<std::size_t>(j)];
                expect(i, j) +=
                    (di.dot(dj) - di.dot(psi) * psi.dot(dj)).real();
            }
        }
    }
    expect /= static_cast<double>(m.train.size());
    expect(np - 2, np - 2) = 1.0;
    expect(np - 1, np - 1) = 1.0;
    CHECK((g - expect).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("pinv_psd", "[geom]") {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 0.25;
    d(1, 1) = 0.25;
    CHECK((pinv_psd(d) - 4.0 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <
          1e-12);
    d(1, 1) = 0.0;
    Matrix e = Matrix::Zero(2, 2);
    e(0, 0) = 4.0;
    CHECK((pinv_psd(d) - e).cwiseAbs().maxCoeff() < 1e-12);
    Matrix ns(2, 2);
    ns << 1, 0.5, 0, 1;
    CHECK_THROWS_AS(pinv_psd(ns), std::invalid_argument);
    // Eigenvalues below the cutoff are dropped.
    Matrix small = Matrix::Identity(2, 2) * 1e-3;
    CHECK(pinv_psd(small, 1e-2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pinv_psd satisfies the Penrose identities", "[geom][property]") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 30; ++rep) {
        const int n = 2 + rep % 6;
        const int rank = 1 + rep % n;
        Matrix a(n, rank);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < rank; ++j) {
                a(i, j) = nd(rng);
            }
        }
        const Matrix g = a * a.transpose();
        const Matrix gp = pinv_psd(g);
        CHECK((g * gp * g - g).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((gp * g * gp - gp).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("blend_preconditioner", "[geom]") {
    const Matrix gp = 4.0 * Matrix::Identity(2, 2);
    CHECK((blend(gp, Vector::Ones(2)) - Matrix::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((blend(gp, Vector::Zero(2)) - gp).cwiseAbs().maxCoeff() == 0.0);
    const Matrix b = blend_preconditioner(gp, Vector::Constant(2, 0.5));
    CHECK((b - 2.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THROWS_AS(blend_preconditioner(gp, Vector::Ones(2)),
                    std::invalid_argument);
    CHECK_THROWS_AS(blend_preconditioner(gp, Vector::Zero(2)),
                    std::invalid_argument);
    CHECK_THROWS_AS(blend_preconditioner(gp, Vector::Constant(3, 0.5)),
                    std::invalid_argument);
    // Rows are scaled: B = diag(1 - gamma) g + diag(gamma).
    Matrix full(2, 2);
    full << 2, 1, 1, 3;
    Vector gamma(2);
    gamma << 0.2, 0.7;
    Matrix expect(2, 2);
    expect << 0.8 * 2 + 0.2, 0.8 * 1, 0.3 * 1, 0.3 * 3 + 0.7;
    CHECK((blend_preconditioner(full, gamma) - expect).cwiseAbs().maxCoeff() <
          1e-15);
}
