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

#include "l2og/sim.hpp"
#include "test_util.hpp"

using namespace l2og;
using namespace l2og::sim;
using l2og::testing::CMatrix;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

bool near(Complex a, Complex b, double tol = 1e-12) {
    return std::abs(a - b) < tol;
}

} // namespace

TEST_CASE("init_zero_state", "[sim]") {
    auto s1 = init_zero_state(1);
    REQUIRE(s1.size() == 2);
    CHECK(s1[0] == Complex(1, 0));
    CHECK(s1[1] == Complex(0, 0));
    auto s2 = init_zero_state(2);
    REQUIRE(s2.size() == 4);
    CHECK(s2[0] == Complex(1, 0));
    for (std::size_t k = 1; k < 4; ++k) {
        CHECK(s2[k] == Complex(0, 0));
    }
    CHECK_THROWS_AS(init_zero_state(25), std::invalid_argument);
    CHECK_THROWS_AS(init_zero_state(0), std::invalid_argument);
}

TEST_CASE("state vector length must be a power of two", "[sim]") {
    CHECK_THROWS(StateVector(std::vector<Complex>(3)));
    CHECK_THROWS(StateVector(std::vector<Complex>(1)));
    CHECK_NOTHROW(StateVector(std::vector<Complex>(8)));
}

TEST_CASE("gate validation", "[sim]") {
    CHECK_THROWS_AS(GateOp::cz(1, 1), std::invalid_argument);
    CHECK_THROWS_AS(GateOp::cnot(0, 0), std::invalid_argument);
    GateOp both{GateKind::RX, {0}, 0, 0.3, 1.0};
    CHECK_THROWS_AS(both.validate(), std::invalid_argument);
    GateOp none{GateKind::RY, {0}, std::nullopt, std::nullopt, 1.0};
    CHECK_THROWS_AS(none.validate(), std::invalid_argument);
    GateOp h_angle{GateKind::H, {0}, std::nullopt, 0.1, 1.0};
    CHECK_THROWS_AS(h_angle.validate(), std::invalid_argument);
}

TEST_CASE("apply_gate examples", "[sim]") {
    SECTION("RX(pi) on |0> gives (0, -i)") {
        auto s = init_zero_state(1);
        apply_gate(s, GateOp::fixed_rotation(GateKind::RX, 0, kPi));
        CHECK(near(s[0], {0, 0}));
        CHECK(near(s[1], {0, -1}));
    }
    SECTION("H on |0>") {
        auto s = init_zero_state(1);
        apply_gate(s, GateOp::hadamard(0));
        CHECK(near(s[0], {kInvSqrt2, 0}));
        CHECK(near(s[1], {kInvSqrt2, 0}));
    }
    SECTION("CZ on |11> flips the sign") {
        StateVector s(std::vector<Complex>{0, 0, 0, 1});
        apply_gate(s, GateOp::cz(0, 1));
        CHECK(near(s[3], {-1, 0}));
    }
    SECTION("qubit 0 is the most significant bit") {
        auto s = init_zero_state(2);
        apply_gate(s, GateOp::fixed_rotation(GateKind::RX, 0, kPi));
        CHECK(near(s[2], {0, -1}));
        CHECK(near(s[1], {0, 0}));
    }
    SECTION("CNOT control and target") {
        StateVector s(std::vector<Complex>{0, 0, 1, 0}); // |10>
        apply_gate(s, GateOp::cnot(0, 1));
        CHECK(near(s[3], {1, 0}));
        apply_gate(s, GateOp::cnot(1, 0));
        CHECK(near(s[1], {1, 0}));
    }
    SECTION("errors") {
        auto s = init_zero_state(2);
        CHECK_THROWS_AS(apply_gate(s, GateOp::hadamard(2)), std::out_of_range);
        CHECK_THROWS_AS(apply_gate(s, GateOp::rotation(GateKind::RY, 0, 0)),
                        std::invalid_argument);
    }
}

TEST_CASE("apply_gate matches dense Kronecker reference", "[sim][property]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + trial % 4;
        auto s = l2og::testing::random_state(n, rng);
        const auto g = l2og::testing::random_gate(n, rng, std::size_t{0});
        const double a = ang(rng);
        const l2og::testing::CVector expect =
            l2og::testing::gate_matrix(g, a, n) * l2og::testing::to_eigen(s);
        apply_gate(s, g, a);
        CHECK((l2og::testing::to_eigen(s) - expect).cwiseAbs().maxCoeff() <
              1e-12);
    }
}

TEST_CASE("circuit templates scale slot angles", "[sim]") {
    circuits::CircuitTemplate c;
    c.n_qubits = 1;
    c.n_params = 1;
    c.gates.push_back(GateOp::rotation(GateKind::RY, 0, 0, 2.5));
    Vector theta(1);
    theta << 0.4;
    const auto a = c.run(theta);
    auto b = init_zero_state(1);
    apply_gate(b, GateOp::fixed_rotation(GateKind::RY, 0, 1.0));
    CHECK(near(a[0], b[0]));
    CHECK(near(a[1], b[1]));
}

TEST_CASE("norm is preserved by random circuits", "[sim][property]") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + trial % 10;
        auto s = init_zero_state(n);
        for (int k = 0; k < 50; ++k) {
            apply_gate(s, l2og::testing::random_gate(n, rng));
        }
        CHECK(std::abs(s.norm_squared() - 1.0) < 1e-10);
    }
}

TEST_CASE("gates are undone by the inverse angle", "[sim][property]") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + trial % 4;
        const auto s0 = l2og::testing::random_state(n, rng);
        auto s = s0;
        const auto g = l2og::testing::random_gate(n, rng, std::size_t{0});
        const double a = ang(rng);
        apply_gate(s, g, a);
        apply_gate(s, g, is_rotation(g.kind) ? -a : a);
        for (std::size_t k = 0; k < s.size(); ++k) {
            CHECK(std::abs(s[k] - s0[k]) < 1e-10);
        }
    }
}

TEST_CASE("apply_pauli_generator examples", "[sim]") {
    const auto zero = init_zero_state(1);
    auto x = apply_pauli_generator(zero, GateOp::rotation(GateKind::RX, 0, 0));
    CHECK(near(x[0], {0, 0}));
    CHECK(near(x[1], {0, -0.5}));
    auto z = apply_pauli_generator(zero, GateOp::rotation(GateKind::RZ, 0, 0));
    CHECK(near(z[0], {0, -0.5}));
    CHECK(near(z[1], {0, 0}));
    StateVector one(std::vector<Complex>{0, 1});
    auto y = apply_pauli_generator(one, GateOp::rotation(GateKind::RY, 0, 0));
    CHECK(near(y[0], {-0.5, 0}));
    CHECK(near(y[1], {0, 0}));
    CHECK_THROWS_AS(apply_pauli_generator(zero, GateOp::hadamard(0)),
                    std::invalid_argument);
}

TEST_CASE("generator output has half the input norm", "[sim][property]") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        const auto s = l2og::testing::random_state(3, rng);
        const auto g = GateOp::rotation(
            static_cast<GateKind>(trial % 3), trial % 3, 0);
        const auto d = apply_pauli_generator(s, g);
        CHECK(std::sqrt(d.norm_squared()) == Approx(0.5).margin(1e-12));
    }
}

TEST_CASE("expectation examples", "[sim]") {
    PauliSum z0;
    z0.add(1.0, {{0, Pauli::Z}});
    CHECK(expectation(init_zero_state(1), z0) == Approx(1.0).margin(1e-12));

    auto s = init_zero_state(2);
    apply_gate(s, GateOp::fixed_rotation(GateKind::RY, 0, kPi / 4));
    apply_gate(s, GateOp::fixed_rotation(GateKind::RY, 1, kPi / 4));
    PauliSum zz;
    zz.add(1.0, {{0, Pauli::Z}, {1, Pauli::Z}});
    CHECK(expectation(s, zz) == Approx(0.5).margin(1e-12));

    auto plus = init_zero_state(1);
    apply_gate(plus, GateOp::hadamard(0));
    PauliSum x0;
    x0.add(1.0, {{0, Pauli::X}});
    CHECK(expectation(plus, x0) == Approx(1.0).margin(1e-12));

    PauliSum bad;
    bad.add(1.0, {{3, Pauli::Z}});
    CHECK_THROWS_AS(expectation(init_zero_state(2), bad), std::out_of_range);
}

TEST_CASE("identity term contributes its coefficient", "[sim]") {
    PauliSum h;
    h.add(-0.5);
    h.add(2.0, {{0, Pauli::Z}});
    CHECK(expectation(init_zero_state(1), h) == Approx(1.5).margin(1e-12));
}

TEST_CASE("Pauli terms reject duplicates and explicit identities", "[sim]") {
    CHECK_THROWS_AS(PauliTerm(1.0, {{0, Pauli::Z}, {0, Pauli::X}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(PauliTerm(1.0, {{0, Pauli::I}}), std::invalid_argument);
}

TEST_CASE("expectation matches the dense Hermitian reference",
          "[sim][property]") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> coef(-1, 1);
    std::uniform_int_distribution<int> pd(0, 3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + trial % 5;
        PauliSum h;
        for (int t = 0; t < 6; ++t) {
            std::vector<std::pair<std::size_t, Pauli>> ops;
            for (std::size_t q = 0; q < n; ++q) {
                const int p = pd(rng);
                if (p != 0) {
                    ops.emplace_back(q, static_cast<Pauli>(p));
                }
            }
            h.add(coef(rng), ops);
        }
        const auto s = l2og::testing::random_state(n, rng);
        const auto v = l2og::testing::to_eigen(s);
        const Complex ref =
            v.dot(l2og::testing::pauli_sum_matrix(h, n) * v);
        CHECK(std::abs(ref.imag()) < 1e-10);
        CHECK(expectation(s, h) == Approx(ref.real()).margin(1e-12));

        Complex raw = 0;
        for (const auto &t : h.terms) {
            raw += t.coeff * pauli_string_expectation(s, t);
        }
        CHECK(std::abs(raw.imag()) < 1e-10);

        const auto hs = apply_pauli_sum(s, h);
        const l2og::testing::CVector hv = l2og::testing::pauli_sum_matrix(h, n) * v;
        CHECK((l2og::testing::to_eigen(hs) - hv).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("inner_product examples", "[sim]") {
    const auto zero = init_zero_state(1);
    StateVector one(std::vector<Complex>{0, 1});
    auto plus = init_zero_state(1);
    apply_gate(plus, GateOp::hadamard(0));
    CHECK(near(inner_product(zero, zero), {1, 0}));
    CHECK(near(inner_product(zero, one), {0, 0}));
    CHECK(near(inner_product(zero, plus), {kInvSqrt2, 0}));
    CHECK_THROWS_AS(inner_product(zero, init_zero_state(2)),
                    std::invalid_argument);
}

TEST_CASE("inner product is conjugate symmetric", "[sim][property]") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = l2og::testing::random_state(3, rng);
        const auto b = l2og::testing::random_state(3, rng);
        CHECK(near(inner_product(a, b), std::conj(inner_product(b, a)), 1e-12));
    }
}
