// Copyright 2026 The vqgan Authors
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
#include "vqgan/qsim.hpp"

#include <cmath>
#include <string>

#include "vqgan/common.hpp"

namespace vqgan::qsim {

namespace {

constexpr Complex kI{0.0, 1.0};

// d/dtheta of ry_matrix(theta).
Matrix2 ry_derivative(double theta) {
    const double c = 0.5 * std::cos(theta / 2);
    const double s = 0.5 * std::sin(theta / 2);
    return {Complex{-s, 0}, Complex{-c, 0}, Complex{c, 0}, Complex{-s, 0}};
}

// Partial derivatives of u3_matrix with respect to a, b and c.
std::array<Matrix2, 3> u3_derivatives(double a, double b, double c) {
    const double ch = std::cos(a / 2);
    const double sh = std::sin(a / 2);
    const Complex eb = std::polar(1.0, b);
    const Complex ec = std::polar(1.0, c);
    const Complex ebc = std::polar(1.0, b + c);
    return {{
        {Complex{-0.5 * sh, 0}, -0.5 * ec * ch, 0.5 * eb * ch, -0.5 * ebc * sh},
        {Complex{}, Complex{}, kI * eb * sh, kI * ebc * ch},
        {Complex{}, -kI * ec * sh, Complex{}, kI * ebc * ch},
    }};
}

// Re <mu| (d on `qubit`) |psi> without materializing d|psi>.
double real_inner_with_gate(std::span<const Complex> mu, std::span<const Complex> psi,
                            const Matrix2 &d, std::size_t qubit) {
    const std::size_t stride = std::size_t{1} << qubit;
    double acc = 0.0;
    for (std::size_t base = 0; base < psi.size(); base += 2 * stride) {
        for (std::size_t k = base; k < base + stride; ++k) {
            const Complex p0 = psi[k];
            const Complex p1 = psi[k + stride];
            const Complex v0 = d[0] * p0 + d[1] * p1;
            const Complex v1 = d[2] * p0 + d[3] * p1;
            acc += (std::conj(mu[k]) * v0 + std::conj(mu[k + stride]) * v1).real();
        }
    }
    return acc;
}

void check_shapes(std::span<const double> z, const SubGenParams &params) {
    if (params.n_qubits() < 1 || z.size() != params.n_qubits()) {
        throw Error("sub-generator shape mismatch: latent length " + std::to_string(z.size()) +
                    " vs " + std::to_string(params.n_qubits()) + " qubits");
    }
    if (params.size() != params.n_layers() * params.n_qubits() * 3) {
        throw Error("sub-generator angle buffer has the wrong length");
    }
}

void apply_entangler(StateVector &state) {
    const std::size_t n = state.n_qubits();
    if (n < 2) {
        return;
    }
    for (std::size_t q = 0; q + 1 < n; ++q) {
        state.apply_cnot(q, q + 1);
    }
    state.apply_cnot(n - 1, 0);
}

void undo_entangler(StateVector &state) {
    const std::size_t n = state.n_qubits();
    if (n < 2) {
        return;
    }
    state.apply_cnot(n - 1, 0);
    for (std::size_t q = n - 1; q-- > 0;) {
        state.apply_cnot(q, q + 1);
    }
}

} // namespace

Matrix2 ry_matrix(double theta) {
    const double c = std::cos(theta / 2);
    const double s = std::sin(theta / 2);
    return {Complex{c, 0}, Complex{-s, 0}, Complex{s, 0}, Complex{c, 0}};
}

Matrix2 u3_matrix(double a, double b, double c) {
    const double ch = std::cos(a / 2);
    const double sh = std::sin(a / 2);
    return {Complex{ch, 0}, -std::polar(1.0, c) * sh, std::polar(1.0, b) * sh,
            std::polar(1.0, b + c) * ch};
}

Matrix2 adjoint(const Matrix2 &m) {
    return {std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])};
}

StateVector::StateVector(std::size_t n_qubits)
    : n_qubits_(n_qubits), amps_(std::size_t{1} << n_qubits) {
    if (n_qubits == 0 || n_qubits > 30) {
        throw Error("StateVector: qubit count must be in [1, 30]");
    }
    amps_[0] = 1.0;
}

StateVector::StateVector(std::vector<Complex> amplitudes) : n_qubits_(0), amps_(std::move(amplitudes)) {
    if (amps_.size() < 2 || (amps_.size() & (amps_.size() - 1)) != 0) {
        throw Error("StateVector: amplitude count must be a power of two >= 2");
    }
    while ((std::size_t{1} << n_qubits_) < amps_.size()) {
        ++n_qubits_;
    }
}

double StateVector::norm_squared() const {
    double s = 0.0;
    for (const Complex &a : amps_) {
        s += std::norm(a);
    }
    return s;
}

void StateVector::apply(const Matrix2 &gate, std::size_t qubit) {
    if (qubit >= n_qubits_) {
        throw Error("apply_one_qubit: qubit " + std::to_string(qubit) + " out of range");
    }
    const std::size_t stride = std::size_t{1} << qubit;
    for (std::size_t base = 0; base < amps_.size(); base += 2 * stride) {
        for (std::size_t k = base; k < base + stride; ++k) {
            const Complex a0 = amps_[k];
            const Complex a1 = amps_[k + stride];
            amps_[k] = gate[0] * a0 + gate[1] * a1;
            amps_[k + stride] = gate[2] * a0 + gate[3] * a1;
        }
    }
}

void StateVector::apply_cnot(std::size_t control, std::size_t target) {
    if (control == target) {
        throw Error("apply_cnot: control and target coincide");
    }
    if (control >= n_qubits_ || target >= n_qubits_) {
        throw Error("apply_cnot: qubit out of range");
    }
    const std::size_t cmask = std::size_t{1} << control;
    const std::size_t tmask = std::size_t{1} << target;
    for (std::size_t k = 0; k < amps_.size(); ++k) {
        if ((k & cmask) != 0 && (k & tmask) == 0) {
            std::swap(amps_[k], amps_[k | tmask]);
        }
    }
}

StateVector apply_one_qubit(StateVector state, const Matrix2 &gate, std::size_t qubit) {
    state.apply(gate, qubit);
    return state;
}

StateVector apply_cnot(StateVector state, std::size_t control, std::size_t target) {
    state.apply_cnot(control, target);
    return state;
}

StateVector encode_latent(std::span<const double> z) {
    StateVector state(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        state.apply(ry_matrix(z[i]), i);
    }
    return state;
}

SubGenParams::SubGenParams(std::size_t n_layers, std::size_t n_qubits)
    : n_layers_(n_layers), n_qubits_(n_qubits), angles_(n_layers * n_qubits * 3, 0.0) {}

SubGenParams::SubGenParams(std::size_t n_layers, std::size_t n_qubits, std::vector<double> angles)
    : n_layers_(n_layers), n_qubits_(n_qubits), angles_(std::move(angles)) {
    if (angles_.size() != n_layers * n_qubits * 3) {
        throw Error("SubGenParams: expected " + std::to_string(n_layers * n_qubits * 3) +
                    " angles, got " + std::to_string(angles_.size()));
    }
}

StateVector run_subgenerator(std::span<const double> z, const SubGenParams &params) {
    check_shapes(z, params);
    StateVector state = encode_latent(z);
    for (std::size_t l = 0; l < params.n_layers(); ++l) {
        for (std::size_t q = 0; q < params.n_qubits(); ++q) {
            state.apply(u3_matrix(params.at(l, q, 0), params.at(l, q, 1), params.at(l, q, 2)), q);
        }
        apply_entangler(state);
    }
    return state;
}

PostSelectResult postselect_probs(const StateVector &state, std::size_t n_ancilla) {
    if (n_ancilla < 1 || n_ancilla >= state.n_qubits()) {
        throw Error("postselect_probs: ancilla count must be in [1, n_qubits)");
    }
    const std::size_t n_data = std::size_t{1} << (state.n_qubits() - n_ancilla);
    PostSelectResult out;
    out.probs.resize(n_data);
    double keep = 0.0;
    for (std::size_t k = 0; k < n_data; ++k) {
        out.probs[k] = std::norm(state[k]);
        keep += out.probs[k];
    }
    if (!(keep >= kMinKeepProb)) {
        throw DegeneratePostSelection(keep, "postselect_probs");
    }
    for (double &p : out.probs) {
        p /= keep;
    }
    out.keep_prob = keep;
    return out;
}

SubGenGradient subgen_backward(std::span<const double> z, const SubGenParams &params,
                               std::size_t n_ancilla, std::span<const double> upstream) {
    return subgen_backward(z, params, n_ancilla, upstream, run_subgenerator(z, params));
}

SubGenGradient subgen_backward(std::span<const double> z, const SubGenParams &params,
                               std::size_t n_ancilla, std::span<const double> upstream,
                               const StateVector &final_state) {
    check_shapes(z, params);
    const std::size_t n = params.n_qubits();
    if (final_state.n_qubits() != n) {
        throw Error("subgen_backward: final state does not match parameters");
    }
    const PostSelectResult post = postselect_probs(final_state, n_ancilla);
    if (upstream.size() != post.probs.size()) {
        throw Error("subgen_backward: upstream gradient has the wrong length");
    }

    SubGenGradient grad;
    grad.grad_z.assign(n, 0.0);
    grad.grad_angles.assign(params.size(), 0.0);

    // d loss / d |amp_k|^2 through the renormalization p_k = |amp_k|^2 / keep.
    double weighted = 0.0;
    for (std::size_t k = 0; k < post.probs.size(); ++k) {
        weighted += upstream[k] * post.probs[k];
    }
    std::vector<Complex> adj(final_state.size(), Complex{});
    for (std::size_t k = 0; k < post.probs.size(); ++k) {
        const double coeff = (upstream[k] - weighted) / post.keep_prob;
        adj[k] = 2.0 * coeff * final_state[k];
    }

    StateVector psi = final_state;
    StateVector mu(std::move(adj));

    for (std::size_t l = params.n_layers(); l-- > 0;) {
        undo_entangler(psi);
        undo_entangler(mu);
        for (std::size_t q = n; q-- > 0;) {
            const double a = params.at(l, q, 0);
            const double b = params.at(l, q, 1);
            const double c = params.at(l, q, 2);
            const Matrix2 inv = adjoint(u3_matrix(a, b, c));
            psi.apply(inv, q);
            const auto derivs = u3_derivatives(a, b, c);
            for (std::size_t k = 0; k < 3; ++k) {
                grad.grad_angles[(l * n + q) * 3 + k] =
                    real_inner_with_gate(mu.amplitudes(), psi.amplitudes(), derivs[k], q);
            }
            mu.apply(inv, q);
        }
    }
    for (std::size_t q = n; q-- > 0;) {
        const Matrix2 inv = adjoint(ry_matrix(z[q]));
        psi.apply(inv, q);
        grad.grad_z[q] = real_inner_with_gate(mu.amplitudes(), psi.amplitudes(), ry_derivative(z[q]), q);
        mu.apply(inv, q);
    }
    return grad;
}

} // namespace vqgan::qsim
