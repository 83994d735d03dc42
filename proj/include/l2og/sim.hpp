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

// Dense statevector simulator. Qubit 0 is the most significant bit of the
// amplitude index. Rotations follow R_P(t) = exp(-i t P / 2).

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace l2og::sim {

using Complex = std::complex<double>;

inline constexpr std::size_t kMaxQubits = 24;

enum class GateKind : std::uint8_t { RX, RY, RZ, H, CZ, CNOT };

enum class Pauli : std::uint8_t { I, X, Y, Z };

inline bool is_rotation(GateKind k) {
    return k == GateKind::RX || k == GateKind::RY || k == GateKind::RZ;
}

inline Pauli generator_of(GateKind k) {
    switch (k) {
    case GateKind::RX:
        return Pauli::X;
    case GateKind::RY:
        return Pauli::Y;
    case GateKind::RZ:
        return Pauli::Z;
    default:
        throw std::invalid_argument("gate has no Pauli generator");
    }
}

inline GateKind rotation_for(Pauli p) {
    switch (p) {
    case Pauli::X:
        return GateKind::RX;
    case Pauli::Y:
        return GateKind::RY;
    case Pauli::Z:
        return GateKind::RZ;
    default:
        throw std::invalid_argument("identity has no rotation gate");
    }
}

inline const char *gate_name(GateKind k) {
    switch (k) {
    case GateKind::RX:
        return "RX";
    case GateKind::RY:
        return "RY";
    case GateKind::RZ:
        return "RZ";
    case GateKind::H:
        return "H";
    case GateKind::CZ:
        return "CZ";
    case GateKind::CNOT:
        return "CNOT";
    }
    return "?";
}

/// One gate of a circuit program. A parameterized rotation reads its angle as
/// `scale * theta[param_slot]`; a fixed rotation carries `fixed_angle`.
struct GateOp {
    GateKind kind = GateKind::H;
    std::vector<std::size_t> targets;
    std::optional<std::size_t> param_slot;
    std::optional<double> fixed_angle;
    double scale = 1.0;

    static GateOp rotation(GateKind kind, std::size_t qubit, std::size_t slot,
                           double scale = 1.0) {
        GateOp g{kind, {qubit}, slot, std::nullopt, scale};
        g.validate();
        return g;
    }
    static GateOp fixed_rotation(GateKind kind, std::size_t qubit,
                                 double angle) {
        GateOp g{kind, {qubit}, std::nullopt, angle, 1.0};
        g.validate();
        return g;
    }
    static GateOp hadamard(std::size_t qubit) {
        return GateOp{GateKind::H, {qubit}, std::nullopt, std::nullopt, 1.0};
    }
    static GateOp cz(std::size_t a, std::size_t b) {
        GateOp g{GateKind::CZ, {a, b}, std::nullopt, std::nullopt, 1.0};
        g.validate();
        return g;
    }
    static GateOp cnot(std::size_t control, std::size_t target) {
        GateOp g{GateKind::CNOT, {control, target}, std::nullopt,
                 std::nullopt, 1.0};
        g.validate();
        return g;
    }

    [[nodiscard]] bool is_parameterized() const {
        return param_slot.has_value();
    }

    void validate() const {
        if (is_rotation(kind)) {
            if (targets.size() != 1) {
                throw std::invalid_argument(
                    "rotation gate needs exactly one target");
            }
            if (param_slot.has_value() == fixed_angle.has_value()) {
                throw std::invalid_argument(
                    "rotation gate needs exactly one of param_slot and "
                    "fixed_angle");
            }
            return;
        }
        if (param_slot || fixed_angle) {
            throw std::invalid_argument(std::string(gate_name(kind)) +
                                        " takes no angle");
        }
        if (kind == GateKind::H) {
            if (targets.size() != 1) {
                throw std::invalid_argument("H needs exactly one target");
            }
            return;
        }
        if (targets.size() != 2 || targets[0] == targets[1]) {
            throw std::invalid_argument(std::string(gate_name(kind)) +
                                        " needs two distinct targets");
        }
    }
};

class StateVector {
  public:
    StateVector() = default;

    /// Wraps raw amplitudes; the length must be a power of two.
    explicit StateVector(std::vector<Complex> amplitudes)
        : amps_(std::move(amplitudes)) {
        const std::size_t len = amps_.size();
        if (len < 2 || !std::has_single_bit(len)) {
            throw std::invalid_argument(
                "amplitude count must be a power of two >= 2");
        }
        n_qubits_ = static_cast<std::size_t>(std::countr_zero(len));
        if (n_qubits_ > kMaxQubits) {
            throw std::invalid_argument("too many qubits");
        }
    }

    [[nodiscard]] std::size_t n_qubits() const { return n_qubits_; }
    [[nodiscard]] std::size_t size() const { return amps_.size(); }
    [[nodiscard]] const std::vector<Complex> &amplitudes() const {
        return amps_;
    }
    [[nodiscard]] std::vector<Complex> &amplitudes() { return amps_; }
    Complex operator[](std::size_t i) const { return amps_[i]; }
    Complex &operator[](std::size_t i) { return amps_[i]; }

    [[nodiscard]] double norm_squared() const {
        double s = 0.0;
        for (const auto &a : amps_) {
            s += std::norm(a);
        }
        return s;
    }

    /// Bit mask selecting `qubit` in an amplitude index.
    [[nodiscard]] std::size_t mask(std::size_t qubit) const {
        if (qubit >= n_qubits_) {
            throw std::out_of_range("qubit index " + std::to_string(qubit) +
                                    " out of range for " +
                                    std::to_string(n_qubits_) + " qubits");
        }
        return std::size_t{1} << (n_qubits_ - 1 - qubit);
    }

  private:
    std::size_t n_qubits_ = 0;
    std::vector<Complex> amps_;
};

inline StateVector init_zero_state(std::size_t n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw std::invalid_argument("n_qubits must lie in [1, 24], got " +
                                    std::to_string(n_qubits));
    }
    std::vector<Complex> amps(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
    amps[0] = 1.0;
    return StateVector(std::move(amps));
}

namespace detail {

// Applies the 2x2 matrix [[m00, m01], [m10, m11]] to one qubit.
inline void apply_1q(StateVector &s, std::size_t qubit, Complex m00,
                     Complex m01, Complex m10, Complex m11) {
    const std::size_t bit = s.mask(qubit);
    auto &a = s.amplitudes();
    const std::size_t n = a.size();
    for (std::size_t base = 0; base < n; base += 2 * bit) {
        for (std::size_t k = base; k < base + bit; ++k) {
            const Complex a0 = a[k];
            const Complex a1 = a[k + bit];
            a[k] = m00 * a0 + m01 * a1;
            a[k + bit] = m10 * a0 + m11 * a1;
        }
    }
}

} // namespace detail

/// Applies `gate` in place. Parameterized rotations need `angle` (already
/// scaled); fixed rotations use their own angle and ignore the argument.
inline void apply_gate(StateVector &state, const GateOp &gate,
                       std::optional<double> angle = std::nullopt) {
    gate.validate();
    for (auto q : gate.targets) {
        (void)state.mask(q);
    }
    double theta = 0.0;
    if (is_rotation(gate.kind)) {
        if (gate.fixed_angle) {
            theta = *gate.fixed_angle;
        } else if (angle) {
            theta = *angle;
        } else {
            throw std::invalid_argument(
                std::string("missing angle for parameterized ") +
                gate_name(gate.kind));
        }
    }
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    const Complex i{0.0, 1.0};
    switch (gate.kind) {
    case GateKind::RX:
        detail::apply_1q(state, gate.targets[0], c, -i * s, -i * s, c);
        return;
    case GateKind::RY:
        detail::apply_1q(state, gate.targets[0], c, -s, s, c);
        return;
    case GateKind::RZ:
        detail::apply_1q(state, gate.targets[0], Complex{c, -s}, 0.0, 0.0,
                         Complex{c, s});
        return;
    case GateKind::H: {
        const double r = 1.0 / std::sqrt(2.0);
        detail::apply_1q(state, gate.targets[0], r, r, r, -r);
        return;
    }
    case GateKind::CZ: {
        const std::size_t m =
            state.mask(gate.targets[0]) | state.mask(gate.targets[1]);
        auto &a = state.amplitudes();
        for (std::size_t k = 0; k < a.size(); ++k) {
            if ((k & m) == m) {
                a[k] = -a[k];
            }
        }
        return;
    }
    case GateKind::CNOT: {
        const std::size_t mc = state.mask(gate.targets[0]);
        const std::size_t mt = state.mask(gate.targets[1]);
        auto &a = state.amplitudes();
        for (std::size_t k = 0; k < a.size(); ++k) {
            if ((k & mc) && !(k & mt)) {
                std::swap(a[k], a[k | mt]);
            }
        }
        return;
    }
    }
}

/// Returns (-i/2) P |state>, where P is the Pauli generator of the rotation
/// `gate`. This is the derivative of R_P(t)|state> at t = 0.
inline StateVector apply_pauli_generator(const StateVector &state,
                                         const GateOp &gate) {
    if (!is_rotation(gate.kind) || !gate.is_parameterized()) {
        throw std::invalid_argument(
            "pauli generator requires a parameterized rotation");
    }
    StateVector out = state;
    const std::size_t bit = out.mask(gate.targets[0]);
    auto &a = out.amplitudes();
    const Complex mi{0.0, -0.5};
    switch (gate.kind) {
    case GateKind::RX:
        detail::apply_1q(out, gate.targets[0], 0.0, mi, mi, 0.0);
        break;
    case GateKind::RY:
        // Y = [[0, -i], [i, 0]]
        detail::apply_1q(out, gate.targets[0], 0.0, -0.5, 0.5, 0.0);
        break;
    default:
        for (std::size_t k = 0; k < a.size(); ++k) {
            a[k] *= (k & bit) ? -mi : mi;
        }
        break;
    }
    return out;
}

/// <a|b>, conjugate-linear in a.
inline Complex inner_product(const StateVector &a, const StateVector &b) {
    if (a.n_qubits() != b.n_qubits()) {
        throw std::invalid_argument("inner product dimension mismatch");
    }
    Complex s{0.0, 0.0};
    const auto &x = a.amplitudes();
    const auto &y = b.amplitudes();
    for (std::size_t k = 0; k < x.size(); ++k) {
        s += std::conj(x[k]) * y[k];
    }
    return s;
}

/// Weighted Pauli string; `ops` is kept sorted by qubit.
struct PauliTerm {
    double coeff = 0.0;
    std::vector<std::pair<std::size_t, Pauli>> ops;

    PauliTerm() = default;
    PauliTerm(double c, std::vector<std::pair<std::size_t, Pauli>> o)
        : coeff(c), ops(std::move(o)) {
        std::sort(ops.begin(), ops.end());
        for (std::size_t k = 0; k < ops.size(); ++k) {
            if (ops[k].second == Pauli::I) {
                throw std::invalid_argument(
                    "identity factors are implicit; use an empty op list");
            }
            if (k > 0 && ops[k].first == ops[k - 1].first) {
                throw std::invalid_argument(
                    "duplicate qubit index in Pauli term");
            }
        }
    }

    [[nodiscard]] bool is_identity() const { return ops.empty(); }
};

struct PauliSum {
    std::vector<PauliTerm> terms;

    PauliSum() = default;
    explicit PauliSum(std::vector<PauliTerm> t) : terms(std::move(t)) {}

    PauliSum &add(double coeff,
                  std::vector<std::pair<std::size_t, Pauli>> ops = {}) {
        terms.emplace_back(coeff, std::move(ops));
        return *this;
    }

    /// Smallest register that holds every referenced qubit (at least 1).
    [[nodiscard]] std::size_t min_qubits() const {
        std::size_t n = 0;
        for (const auto &t : terms) {
            for (const auto &[q, p] : t.ops) {
                n = std::max(n, q + 1);
            }
        }
        return std::max<std::size_t>(n, 1);
    }
};

namespace detail {

struct PauliMasks {
    std::size_t flip = 0;
    std::size_t phase = 0; // qubits contributing (-1)^bit (Y and Z)
    int n_y = 0;
};

inline PauliMasks masks_of(const StateVector &s, const PauliTerm &term) {
    PauliMasks m;
    for (const auto &[q, p] : term.ops) {
        const std::size_t b = s.mask(q);
        if (p == Pauli::X || p == Pauli::Y) {
            m.flip |= b;
        }
        if (p == Pauli::Y || p == Pauli::Z) {
            m.phase |= b;
        }
        if (p == Pauli::Y) {
            ++m.n_y;
        }
    }
    return m;
}

inline Complex i_power(int k) {
    switch (((k % 4) + 4) % 4) {
    case 0:
        return {1.0, 0.0};
    case 1:
        return {0.0, 1.0};
    case 2:
        return {-1.0, 0.0};
    default:
        return {0.0, -1.0};
    }
}

} // namespace detail

/// Complex <state| P |state> for a single Pauli string (coefficient ignored).
inline Complex pauli_string_expectation(const StateVector &state,
                                        const PauliTerm &term) {
    const auto m = detail::masks_of(state, term);
    const auto &a = state.amplitudes();
    Complex acc{0.0, 0.0};
    for (std::size_t k = 0; k < a.size(); ++k) {
        const Complex v = std::conj(a[k ^ m.flip]) * a[k];
        acc += (std::popcount(k & m.phase) & 1) ? -v : v;
    }
    return acc * detail::i_power(m.n_y);
}

/// Real expectation sum_k c_k <P_k>; the imaginary residue is checked and
/// dropped.
inline double expectation(const StateVector &state, const PauliSum &obs) {
    Complex total{0.0, 0.0};
    double scale = 1.0;
    for (const auto &t : obs.terms) {
        total += t.coeff * pauli_string_expectation(state, t);
        scale = std::max(scale, std::abs(t.coeff));
    }
    if (std::abs(total.imag()) > 1e-10 * scale) {
        throw std::logic_error("non-Hermitian residue in expectation value");
    }
    return total.real();
}

/// Returns obs |state> (not normalized).
inline StateVector apply_pauli_sum(const StateVector &state,
                                   const PauliSum &obs) {
    std::vector<Complex> out(state.size(), Complex{0.0, 0.0});
    const auto &a = state.amplitudes();
    for (const auto &t : obs.terms) {
        const auto m = detail::masks_of(state, t);
        const Complex ph = t.coeff * detail::i_power(m.n_y);
        for (std::size_t k = 0; k < a.size(); ++k) {
            const Complex v = ph * a[k];
            out[k ^ m.flip] += (std::popcount(k & m.phase) & 1) ? -v : v;
        }
    }
    return StateVector(std::move(out));
}

} // namespace l2og::sim
