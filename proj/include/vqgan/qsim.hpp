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
/**
 * @file qsim.hpp
 * Exact statevector simulation of one patch sub-generator circuit:
 * Ry angle encoding, L layers of U3 rotations followed by a CNOT ring,
 * ancilla post-selection and Born probabilities, plus adjoint-mode
 * gradients of those probabilities.
 *
 * Qubit i is bit i of the basis-state index (little-endian). Ancilla
 * qubits are the highest-index qubits.
 */
#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace vqgan::qsim {

using Complex = std::complex<double>;

/// Row-major 2x2 complex matrix {m00, m01, m10, m11}.
using Matrix2 = std::array<Complex, 4>;

Matrix2 ry_matrix(double theta);

/// General single-qubit rotation
/// [[cos(a/2), -e^{ic} sin(a/2)], [e^{ib} sin(a/2), e^{i(b+c)} cos(a/2)]].
Matrix2 u3_matrix(double a, double b, double c);

Matrix2 adjoint(const Matrix2 &m);

class StateVector {
  public:
    /// |0...0> on n qubits.
    explicit StateVector(std::size_t n_qubits);
    /// Takes ownership of amplitudes; length must be a power of two >= 2.
    explicit StateVector(std::vector<Complex> amplitudes);

    std::size_t n_qubits() const { return n_qubits_; }
    std::size_t size() const { return amps_.size(); }
    std::span<const Complex> amplitudes() const { return amps_; }
    std::span<Complex> amplitudes() { return amps_; }
    const Complex &operator[](std::size_t k) const { return amps_[k]; }

    double norm_squared() const;

    /// In-place 2x2 gate on `qubit`. Throws on out-of-range qubit.
    void apply(const Matrix2 &gate, std::size_t qubit);
    /// In-place CNOT. Throws when control == target or either is out of range.
    void apply_cnot(std::size_t control, std::size_t target);

  private:
    std::size_t n_qubits_;
    std::vector<Complex> amps_;
};

StateVector apply_one_qubit(StateVector state, const Matrix2 &gate, std::size_t qubit);
StateVector apply_cnot(StateVector state, std::size_t control, std::size_t target);

/// Product state of Ry(z_i)|0> on qubit i.
StateVector encode_latent(std::span<const double> z);

/// Rotation angles of one sub-generator, laid out [layer][qubit][a, b, c].
class SubGenParams {
  public:
    SubGenParams() = default;
    SubGenParams(std::size_t n_layers, std::size_t n_qubits);
    SubGenParams(std::size_t n_layers, std::size_t n_qubits, std::vector<double> angles);

    std::size_t n_layers() const { return n_layers_; }
    std::size_t n_qubits() const { return n_qubits_; }
    std::size_t size() const { return angles_.size(); }

    double &at(std::size_t layer, std::size_t qubit, std::size_t k) {
        return angles_[(layer * n_qubits_ + qubit) * 3 + k];
    }
    double at(std::size_t layer, std::size_t qubit, std::size_t k) const {
        return angles_[(layer * n_qubits_ + qubit) * 3 + k];
    }
    std::span<double> angles() { return angles_; }
    std::span<const double> angles() const { return angles_; }

  private:
    std::size_t n_layers_ = 0;
    std::size_t n_qubits_ = 0;
    std::vector<double> angles_;
};

/// Encodes z, then per layer: U3 on every qubit, CNOT(i -> i+1) for
/// i = 0..n-2, then CNOT(n-1 -> 0).
StateVector run_subgenerator(std::span<const double> z, const SubGenParams &params);

struct PostSelectResult {
    std::vector<double> probs; // length 2^(n - n_ancilla)
    double keep_prob = 0.0;
};

inline constexpr double kMinKeepProb = 1e-12;

/// Projects the n_ancilla top qubits onto |0> and returns the normalized
/// data-register Born probabilities. Throws DegeneratePostSelection when
/// the kept weight is below kMinKeepProb.
PostSelectResult postselect_probs(const StateVector &state, std::size_t n_ancilla);

struct SubGenGradient {
    std::vector<double> grad_z;      // length n
    std::vector<double> grad_angles; // same layout as SubGenParams
};

/**
 * Exact gradient of a scalar loss with respect to z and every angle, given
 * upstream = d loss / d probs. Reverse-mode over the stored trajectory: the
 * final state and the adjoint are un-computed gate by gate.
 */
SubGenGradient subgen_backward(std::span<const double> z, const SubGenParams &params,
                               std::size_t n_ancilla, std::span<const double> upstream);

/// Same as above, reusing an already simulated final state.
SubGenGradient subgen_backward(std::span<const double> z, const SubGenParams &params,
                               std::size_t n_ancilla, std::span<const double> upstream,
                               const StateVector &final_state);

} // namespace vqgan::qsim
