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

// Exhaustive and dense-matrix reference solutions.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "l2og/circuits.hpp"
#include "l2og/sim.hpp"

namespace l2og::circuits {

/// Cut value of an assignment; vertex v is on side (bits >> v) & 1.
inline double cut_value(const Graph &g, std::uint64_t bits) {
    double c = 0.0;
    for (const auto &e : g.edges) {
        if (((bits >> e.i) & 1U) != ((bits >> e.j) & 1U)) {
            c += e.weight;
        }
    }
    return c;
}

struct MaxCutSolution {
    double value = 0.0;
    std::vector<int> assignment;
};

inline MaxCutSolution brute_force_maxcut(const Graph &g) {
    if (g.n_vertices > 24) {
        throw std::invalid_argument("brute-force MaxCut limited to 24 vertices");
    }
    const std::uint64_t count = std::uint64_t{1} << g.n_vertices;
    double best = -std::numeric_limits<double>::infinity();
    std::uint64_t arg = 0;
    for (std::uint64_t b = 0; b < count; ++b) {
        const double c = cut_value(g, b);
        if (c > best) {
            best = c;
            arg = b;
        }
    }
    MaxCutSolution s;
    s.value = best;
    s.assignment.resize(g.n_vertices);
    for (std::size_t v = 0; v < g.n_vertices; ++v) {
        s.assignment[v] = static_cast<int>((arg >> v) & 1U);
    }
    return s;
}

/// (1/sqrt n) sum_{i<j} J_ij z_i z_j for spins z in {-1, +1}.
inline double sk_energy(const std::vector<std::vector<int>> &j,
                        const std::vector<int> &spins) {
    const std::size_t n = j.size();
    double e = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            e += j[a][b] * spins[a] * spins[b];
        }
    }
    return e / std::sqrt(static_cast<double>(n));
}

inline double sk_ground_energy(const std::vector<std::vector<int>> &j) {
    const std::size_t n = j.size();
    if (n > 24) {
        throw std::invalid_argument("SK enumeration limited to 24 spins");
    }
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> z(n);
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << n); ++b) {
        for (std::size_t v = 0; v < n; ++v) {
            z[v] = ((b >> v) & 1U) ? -1 : 1;
        }
        best = std::min(best, sk_energy(j, z));
    }
    return best;
}

/// Dense 2^n x 2^n matrix of a Pauli sum.
inline Eigen::MatrixXcd dense_matrix(const sim::PauliSum &h,
                                     std::size_t n_qubits) {
    if (n_qubits > 12) {
        throw std::invalid_argument("dense matrix limited to 12 qubits");
    }
    if (h.min_qubits() > n_qubits) {
        throw std::out_of_range("Hamiltonian references qubit beyond register");
    }
    const std::size_t dim = std::size_t{1} << n_qubits;
    Eigen::MatrixXcd m(dim, dim);
    for (std::size_t col = 0; col < dim; ++col) {
        std::vector<sim::Complex> e(dim, 0.0);
        e[col] = 1.0;
        const auto out = sim::apply_pauli_sum(sim::StateVector(std::move(e)), h);
        for (std::size_t row = 0; row < dim; ++row) {
            m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) =
                out[row];
        }
    }
    return m;
}

inline double exact_ground_energy(const sim::PauliSum &h,
                                  std::size_t n_qubits) {
    if (n_qubits > 12) {
        throw std::invalid_argument(
            "exact diagonalization limited to 12 qubits");
    }
    const Eigen::MatrixXcd m = dense_matrix(h, n_qubits);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

} // namespace l2og::circuits
