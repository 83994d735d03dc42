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

// Circuit programs and the benchmark task families built on them.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "l2og/random.hpp"
#include "l2og/sim.hpp"

namespace l2og {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace circuits {

using sim::GateKind;
using sim::GateOp;
using sim::Pauli;
using sim::PauliSum;
using sim::StateVector;

struct CircuitTemplate {
    std::size_t n_qubits = 0;
    std::vector<GateOp> gates;
    std::size_t n_params = 0;

    /// Checks gate invariants and that slots 0..n_params-1 are all used.
    void validate() const {
        std::vector<int> seen(n_params, 0);
        for (const auto &g : gates) {
            g.validate();
            for (auto q : g.targets) {
                if (q >= n_qubits) {
                    throw std::out_of_range("gate target out of range");
                }
            }
            if (g.param_slot) {
                if (*g.param_slot >= n_params) {
                    throw std::out_of_range("param slot out of range");
                }
                ++seen[*g.param_slot];
            }
        }
        for (std::size_t k = 0; k < n_params; ++k) {
            if (seen[k] == 0) {
                throw std::invalid_argument("param slot " + std::to_string(k) +
                                            " is never used");
            }
        }
    }

    [[nodiscard]] bool slots_unique() const {
        std::vector<int> seen(n_params, 0);
        for (const auto &g : gates) {
            if (g.param_slot && ++seen[*g.param_slot] > 1) {
                return false;
            }
        }
        return true;
    }

    [[nodiscard]] double angle_of(const GateOp &g, const Vector &theta) const {
        return g.param_slot ? g.scale * theta[static_cast<Eigen::Index>(
                                            *g.param_slot)]
                            : 0.0;
    }

    void apply_gate(StateVector &s, const GateOp &g,
                    const Vector &theta) const {
        if (g.param_slot) {
            sim::apply_gate(s, g, angle_of(g, theta));
        } else {
            sim::apply_gate(s, g);
        }
    }

    /// U(theta)|0...0>.
    [[nodiscard]] StateVector run(const Vector &theta) const {
        check_length(theta);
        StateVector s = sim::init_zero_state(n_qubits);
        for (const auto &g : gates) {
            apply_gate(s, g, theta);
        }
        return s;
    }

    void check_length(const Vector &theta) const {
        if (static_cast<std::size_t>(theta.size()) != n_params) {
            throw std::invalid_argument(
                "parameter vector has length " + std::to_string(theta.size()) +
                ", circuit expects " + std::to_string(n_params));
        }
    }
};

struct Edge {
    std::size_t i = 0;
    std::size_t j = 0;
    double weight = 1.0;
};

struct Graph {
    std::size_t n_vertices = 0;
    std::vector<Edge> edges;

    void validate() const {
        for (std::size_t a = 0; a < edges.size(); ++a) {
            const auto &e = edges[a];
            if (e.i >= e.j) {
                throw std::invalid_argument(
                    "edges must satisfy i < j (no self-loops)");
            }
            if (e.j >= n_vertices) {
                throw std::out_of_range("edge vertex out of range");
            }
            if (!std::isfinite(e.weight)) {
                throw std::invalid_argument("edge weight must be finite");
            }
            for (std::size_t b = 0; b < a; ++b) {
                if (edges[b].i == e.i && edges[b].j == e.j) {
                    throw std::invalid_argument("duplicate edge");
                }
            }
        }
    }
};

struct LabeledDataset {
    std::vector<std::array<double, 2>> points;
    std::vector<int> labels;

    [[nodiscard]] std::size_t size() const { return points.size(); }
};

enum class TaskKind { RandomPQC, VqeHea, QaoaMaxCut, QaoaSK, Reupload };

inline const char *task_kind_name(TaskKind k) {
    switch (k) {
    case TaskKind::RandomPQC:
        return "random_pqc";
    case TaskKind::VqeHea:
        return "vqe_hea";
    case TaskKind::QaoaMaxCut:
        return "qaoa_maxcut";
    case TaskKind::QaoaSK:
        return "qaoa_sk";
    case TaskKind::Reupload:
        return "reupload";
    }
    return "?";
}

/// Single-qubit data re-uploading classifier. Trainables are laid out as
/// [theta (3L) | omega (3L) | alpha0 | alpha1]; gate slot k of the circuit
/// reads angle x~_{k mod 3} * omega_k + theta_k with x~ = (x1, x2, 0).
struct ReuploadModel {
    std::size_t layers = 0;
    double radius = 0.0;
    LabeledDataset train;
    LabeledDataset test;

    [[nodiscard]] std::size_t n_angles() const { return 3 * layers; }
    [[nodiscard]] std::size_t n_trainables() const { return 6 * layers + 2; }

    static double feature(const std::array<double, 2> &x, std::size_t slot) {
        const std::size_t c = slot % 3;
        return c < 2 ? x[c] : 0.0;
    }

    [[nodiscard]] Vector angles(const std::array<double, 2> &x,
                                const Vector &w) const {
        const auto na = static_cast<Eigen::Index>(n_angles());
        Vector a(na);
        for (Eigen::Index k = 0; k < na; ++k) {
            a[k] = feature(x, static_cast<std::size_t>(k)) * w[na + k] + w[k];
        }
        return a;
    }

    [[nodiscard]] double alpha0(const Vector &w) const {
        return w[static_cast<Eigen::Index>(2 * n_angles())];
    }
    [[nodiscard]] double alpha1(const Vector &w) const {
        return w[static_cast<Eigen::Index>(2 * n_angles() + 1)];
    }

    static double point_cost(double a0, double a1, double f0, double f1,
                             int y) {
        const double r0 = a0 * f0 - (1.0 - y);
        const double r1 = a1 * f1 - y;
        return r0 * r0 + r1 * r1;
    }
};

struct Task {
    TaskKind kind = TaskKind::RandomPQC;
    std::string id;
    CircuitTemplate circuit;
    std::optional<PauliSum> observable;
    std::optional<ReuploadModel> reupload;

    // Metadata.
    std::optional<Graph> graph;
    std::vector<std::vector<int>> couplings; // SK J_ij, upper triangle used
    std::size_t p_layer = 0;
    std::size_t layers = 0;
    std::uint64_t seed = 0;
    std::string hamiltonian_source;

    [[nodiscard]] std::size_t n_params() const {
        return reupload ? reupload->n_trainables() : circuit.n_params;
    }

    void check_length(const Vector &theta) const {
        if (static_cast<std::size_t>(theta.size()) != n_params()) {
            throw std::invalid_argument(
                "parameter vector has length " + std::to_string(theta.size()) +
                ", task expects " + std::to_string(n_params()));
        }
    }

    /// Fidelities (F0, F1) of the classifier output for one data point.
    [[nodiscard]] std::pair<double, double>
    fidelities(const std::array<double, 2> &x, const Vector &w) const {
        const StateVector s = circuit.run(reupload->angles(x, w));
        return {std::norm(s[0]), std::norm(s[1])};
    }

    [[nodiscard]] double cost(const Vector &theta) const {
        check_length(theta);
        if (!reupload) {
            return sim::expectation(circuit.run(theta), *observable);
        }
        const auto &m = *reupload;
        const double a0 = m.alpha0(theta);
        const double a1 = m.alpha1(theta);
        double total = 0.0;
        for (std::size_t p = 0; p < m.train.size(); ++p) {
            const auto [f0, f1] = fidelities(m.train.points[p], theta);
            total += ReuploadModel::point_cost(a0, a1, f0, f1,
                                               m.train.labels[p]);
        }
        return total / static_cast<double>(m.train.size());
    }
};

/// Uniform initial parameters in [-pi, pi).
inline Vector sample_initial_params(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        v[k] = uniform(rng, -std::numbers::pi, std::numbers::pi);
    }
    return v;
}

inline Task build_random_pqc(std::size_t n_qubits, std::size_t layers,
                             std::uint64_t seed) {
    if (n_qubits < 2) {
        throw std::invalid_argument("random PQC needs at least 2 qubits");
    }
    if (layers < 1) {
        throw std::invalid_argument("random PQC needs at least 1 layer");
    }
    Task t;
    t.kind = TaskKind::RandomPQC;
    t.layers = layers;
    t.seed = seed;
    t.id = "random_pqc_q" + std::to_string(n_qubits) + "_l" +
           std::to_string(layers) + "_s" + std::to_string(seed);
    auto &c = t.circuit;
    c.n_qubits = n_qubits;
    c.n_params = n_qubits * layers;
    for (std::size_t q = 0; q < n_qubits; ++q) {
        c.gates.push_back(GateOp::fixed_rotation(GateKind::RY, q,
                                                 std::numbers::pi / 4.0));
    }
    Rng rng(mix_seeds({0x52504f43ULL, seed}));
    constexpr std::array<Pauli, 3> axes{Pauli::X, Pauli::Y, Pauli::Z};
    for (std::size_t l = 0; l < layers; ++l) {
        for (std::size_t q = 0; q < n_qubits; ++q) {
            const Pauli p = axes[uniform_index(rng, 3)];
            c.gates.push_back(
                GateOp::rotation(sim::rotation_for(p), q, l * n_qubits + q));
        }
        for (std::size_t q = 0; q + 1 < n_qubits; ++q) {
            c.gates.push_back(GateOp::cz(q, q + 1));
        }
    }
    t.observable = PauliSum{}.add(1.0, {{0, Pauli::Z}, {1, Pauli::Z}});
    c.validate();
    return t;
}

inline Task build_vqe_hea(const PauliSum &hamiltonian, std::size_t n_qubits,
                          std::size_t layers) {
    if (layers < 1) {
        throw std::invalid_argument("HEA needs at least 1 layer");
    }
    if (hamiltonian.min_qubits() > n_qubits) {
        throw std::out_of_range("Hamiltonian references qubit beyond " +
                                std::to_string(n_qubits));
    }
    Task t;
    t.kind = TaskKind::VqeHea;
    t.layers = layers;
    t.id = "vqe_hea_q" + std::to_string(n_qubits) + "_l" +
           std::to_string(layers);
    auto &c = t.circuit;
    c.n_qubits = n_qubits;
    c.n_params = 2 * n_qubits * layers;
    for (std::size_t l = 0; l < layers; ++l) {
        for (std::size_t q = 0; q < n_qubits; ++q) {
            const std::size_t slot = 2 * (l * n_qubits + q);
            c.gates.push_back(GateOp::rotation(GateKind::RY, q, slot));
            c.gates.push_back(GateOp::rotation(GateKind::RZ, q, slot + 1));
        }
        for (std::size_t q = 0; q + 1 < n_qubits; ++q) {
            c.gates.push_back(GateOp::cnot(q, q + 1));
        }
    }
    t.observable = hamiltonian;
    c.validate();
    return t;
}

namespace detail {

struct ZZTerm {
    std::size_t i;
    std::size_t j;
    double coeff; // H_C contains coeff * Z_i Z_j
};

// Slot 2l is gamma_l, slot 2l+1 is beta_l. exp(-i gamma c Z_i Z_j) is
// CNOT(i,j) RZ_j(2 c gamma) CNOT(i,j); exp(-i beta X) is RX(2 beta).
inline CircuitTemplate qaoa_circuit(std::size_t n,
                                    const std::vector<ZZTerm> &terms,
                                    std::size_t p_layer) {
    CircuitTemplate c;
    c.n_qubits = n;
    c.n_params = 2 * p_layer;
    for (std::size_t q = 0; q < n; ++q) {
        c.gates.push_back(GateOp::hadamard(q));
    }
    for (std::size_t l = 0; l < p_layer; ++l) {
        for (const auto &t : terms) {
            c.gates.push_back(GateOp::cnot(t.i, t.j));
            c.gates.push_back(
                GateOp::rotation(GateKind::RZ, t.j, 2 * l, 2.0 * t.coeff));
            c.gates.push_back(GateOp::cnot(t.i, t.j));
        }
        for (std::size_t q = 0; q < n; ++q) {
            c.gates.push_back(
                GateOp::rotation(GateKind::RX, q, 2 * l + 1, 2.0));
        }
    }
    c.validate();
    return c;
}

} // namespace detail

/// H_C = sum_(i,j) (w_ij / 2)(Z_i Z_j - I); -<H_C> is the expected cut.
inline PauliSum maxcut_hamiltonian(const Graph &g) {
    PauliSum h;
    double offset = 0.0;
    for (const auto &e : g.edges) {
        h.add(0.5 * e.weight, {{e.i, Pauli::Z}, {e.j, Pauli::Z}});
        offset -= 0.5 * e.weight;
    }
    h.add(offset);
    return h;
}

inline Task build_qaoa_maxcut(const Graph &graph, std::size_t p_layer) {
    if (p_layer < 1) {
        throw std::invalid_argument("p_layer must be >= 1");
    }
    if (graph.edges.empty()) {
        throw std::invalid_argument("MaxCut graph has no edges");
    }
    graph.validate();
    if (graph.n_vertices > sim::kMaxQubits) {
        throw std::invalid_argument("graph too large to simulate");
    }
    std::vector<detail::ZZTerm> terms;
    for (const auto &e : graph.edges) {
        terms.push_back({e.i, e.j, 0.5 * e.weight});
    }
    Task t;
    t.kind = TaskKind::QaoaMaxCut;
    t.p_layer = p_layer;
    t.graph = graph;
    t.id = "qaoa_maxcut_v" + std::to_string(graph.n_vertices) + "_e" +
           std::to_string(graph.edges.size()) + "_p" + std::to_string(p_layer);
    t.circuit = detail::qaoa_circuit(graph.n_vertices, terms, p_layer);
    t.observable = maxcut_hamiltonian(graph);
    return t;
}

/// Symmetric +-1 couplings for an n-spin SK instance (diagonal 0).
inline std::vector<std::vector<int>> sk_couplings(std::size_t n,
                                                  std::uint64_t seed) {
    std::vector<std::vector<int>> j(n, std::vector<int>(n, 0));
    Rng rng(mix_seeds({0x534bULL, seed}));
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            j[a][b] = j[b][a] = uniform_index(rng, 2) ? 1 : -1;
        }
    }
    return j;
}

inline PauliSum sk_hamiltonian(const std::vector<std::vector<int>> &j) {
    const std::size_t n = j.size();
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    PauliSum h;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            h.add(norm * j[a][b], {{a, Pauli::Z}, {b, Pauli::Z}});
        }
    }
    return h;
}

inline Task build_qaoa_sk(std::size_t n, std::size_t p_layer,
                          std::uint64_t seed) {
    if (n < 2) {
        throw std::invalid_argument("SK model needs at least 2 spins");
    }
    if (p_layer < 1) {
        throw std::invalid_argument("p_layer must be >= 1");
    }
    Task t;
    t.kind = TaskKind::QaoaSK;
    t.p_layer = p_layer;
    t.seed = seed;
    t.couplings = sk_couplings(n, seed);
    t.id = "qaoa_sk_n" + std::to_string(n) + "_p" + std::to_string(p_layer) +
           "_s" + std::to_string(seed);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<detail::ZZTerm> terms;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            terms.push_back({a, b, norm * t.couplings[a][b]});
        }
    }
    t.circuit = detail::qaoa_circuit(n, terms, p_layer);
    t.observable = sk_hamiltonian(t.couplings);
    return t;
}

/// G(V, p) with unit weights. An empty draw is resampled with a derived seed.
inline Graph gen_er_graph(std::size_t v, double p, std::uint64_t seed) {
    if (v < 2) {
        throw std::invalid_argument("ER graph needs at least 2 vertices");
    }
    if (!(p > 0.0 && p <= 1.0)) {
        throw std::invalid_argument("edge probability must lie in (0, 1]");
    }
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(mix_seeds({0x4552ULL, seed, attempt}));
        Graph g;
        g.n_vertices = v;
        for (std::size_t i = 0; i < v; ++i) {
            for (std::size_t j = i + 1; j < v; ++j) {
                if (uniform01(rng) < p) {
                    g.edges.push_back({i, j, 1.0});
                }
            }
        }
        if (!g.edges.empty()) {
            return g;
        }
    }
}

/// Class-balanced radius for points uniform in [-1, 1]^2.
inline double balanced_radius() { return std::sqrt(2.0 / std::numbers::pi); }

/// 1 strictly inside the circle. Points within rounding of the boundary
/// count as outside, so (1, 1) is outside radius sqrt(2).
inline int circle_label(const std::array<double, 2> &x, double radius) {
    const double d = x[0] * x[0] + x[1] * x[1];
    const double r2 = radius * radius;
    return r2 - d > 4.0 * std::numeric_limits<double>::epsilon() * r2 ? 1 : 0;
}

inline LabeledDataset sample_circle_points(std::size_t n, double radius,
                                           Rng &rng) {
    LabeledDataset d;
    d.points.reserve(n);
    d.labels.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::array<double, 2> x{uniform(rng, -1.0, 1.0),
                                uniform(rng, -1.0, 1.0)};
        d.points.push_back(x);
        d.labels.push_back(circle_label(x, radius));
    }
    return d;
}

inline std::pair<LabeledDataset, LabeledDataset>
gen_circle_dataset(std::size_t n_train, std::size_t n_test,
                   std::uint64_t seed, double radius = balanced_radius()) {
    if (n_train < 1 || n_test < 1) {
        throw std::invalid_argument("dataset sizes must be >= 1");
    }
    if (!(radius > 0.0)) {
        throw std::invalid_argument("radius must be positive");
    }
    Rng rng(mix_seeds({0x43495243ULL, seed}));
    auto train = sample_circle_points(n_train, radius, rng);
    auto test = sample_circle_points(n_test, radius, rng);
    return {std::move(train), std::move(test)};
}

inline Task build_reupload(std::size_t layers, LabeledDataset train,
                           LabeledDataset test, double radius) {
    if (layers < 1) {
        throw std::invalid_argument("re-upload classifier needs >= 1 layer");
    }
    if (train.size() == 0) {
        throw std::invalid_argument("re-upload training set is empty");
    }
    Task t;
    t.kind = TaskKind::Reupload;
    t.layers = layers;
    t.id = "reupload_l" + std::to_string(layers);
    auto &c = t.circuit;
    c.n_qubits = 1;
    c.n_params = 3 * layers;
    for (std::size_t l = 0; l < layers; ++l) {
        c.gates.push_back(GateOp::rotation(GateKind::RZ, 0, 3 * l));
        c.gates.push_back(GateOp::rotation(GateKind::RY, 0, 3 * l + 1));
        c.gates.push_back(GateOp::rotation(GateKind::RZ, 0, 3 * l + 2));
    }
    c.validate();
    t.reupload = ReuploadModel{layers, radius, std::move(train),
                               std::move(test)};
    return t;
}

inline Task build_reupload(std::size_t layers, std::size_t n_train = 200,
                           std::size_t n_test = 4000,
                           std::uint64_t data_seed = 0,
                           double radius = balanced_radius()) {
    auto [train, test] = gen_circle_dataset(n_train, n_test, data_seed, radius);
    Task t = build_reupload(layers, std::move(train), std::move(test), radius);
    t.seed = data_seed;
    return t;
}

/// argmax(F0, F1) with ties going to label 0.
inline int reupload_predict(const Task &task, const std::array<double, 2> &x,
                            const Vector &w) {
    const auto [f0, f1] = task.fidelities(x, w);
    return f1 > f0 ? 1 : 0;
}

} // namespace circuits
} // namespace l2og
