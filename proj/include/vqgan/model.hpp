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
 * @file model.hpp
 * The three networks: the patch quantum generator, the convolutional
 * Gaussian encoder and the dense critic.
 */
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "vqgan/common.hpp"
#include "vqgan/nn.hpp"
#include "vqgan/qsim.hpp"

namespace vqgan::model {

struct GeneratorConfig {
    std::size_t n_qubits = 7;
    std::size_t n_layers = 12;
    std::size_t n_subgens = 14;
    std::size_t n_ancilla = 1;
    std::size_t image_rows = 28;
    std::size_t image_cols = 28;

    std::size_t image_size() const { return image_rows * image_cols; }
    std::size_t patch_pixels() const { return image_size() / n_subgens; }
    std::size_t data_states() const { return std::size_t{1} << (n_qubits - n_ancilla); }
    std::size_t param_count() const { return n_subgens * n_layers * n_qubits * 3; }
    /// Throws when the patch geometry or register split is inconsistent.
    void validate() const;
};

/// One SubGenParams per patch; patch j fills pixels [j*P, (j+1)*P) in
/// row-major order, i.e. horizontal strips stacked top to bottom.
class GeneratorParams {
  public:
    GeneratorParams() = default;
    explicit GeneratorParams(const GeneratorConfig &config);

    const GeneratorConfig &config() const { return config_; }
    std::vector<qsim::SubGenParams> &subgens() { return subgens_; }
    const std::vector<qsim::SubGenParams> &subgens() const { return subgens_; }

    std::size_t count_params() const;
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);

  private:
    GeneratorConfig config_;
    std::vector<qsim::SubGenParams> subgens_;
};

/// Divides by the largest probability and keeps the first P entries.
std::vector<double> patch_postprocess(std::span<const double> probs, std::size_t pixels);

/// d loss / d probs given d loss / d (patch_postprocess output).
std::vector<double> patch_postprocess_backward(std::span<const double> probs, std::size_t pixels,
                                               std::span<const double> upstream);

struct GeneratorTrace {
    std::vector<qsim::StateVector> final_states;
    std::vector<std::vector<double>> probs;
    std::vector<double> image;
};

GeneratorTrace generate_trace(std::span<const double> z, const GeneratorParams &params);
std::vector<double> generate(std::span<const double> z, const GeneratorParams &params);

struct GeneratorGradient {
    std::vector<double> grad_z;     // summed over sub-generators (every patch sees the same z)
    std::vector<double> grad_theta; // flattened like GeneratorParams::flatten
};

GeneratorGradient generate_backward(std::span<const double> z, const GeneratorParams &params,
                                    const GeneratorTrace &trace, std::span<const double> grad_image);

/// Uniform U[0, 2pi) angles.
void init_generator(GeneratorParams &params, Rng &rng);

struct EncoderConfig {
    std::size_t image_rows = 28;
    std::size_t image_cols = 28;
    std::array<std::size_t, 3> channels{32, 64, 128};
    std::size_t hidden = 128;
    std::size_t latent = 7;
    double leaky_slope = 0.2;
};

/**
 * conv(1->c0) -> LReLU -> conv(c0->c1) -> LReLU -> conv(c1->c2) -> LReLU ->
 * flatten -> dense(hidden) -> LReLU, then two linear heads for mu and
 * log-variance. All parameters share one flat buffer: trunk, mu head,
 * log-variance head.
 */
class Encoder {
  public:
    struct Pass {
        nn::Sequential::Trace trunk;
        std::vector<double> mu;
        std::vector<double> logvar;
    };

    Encoder() = default;
    explicit Encoder(const EncoderConfig &config);

    const EncoderConfig &config() const { return config_; }
    std::size_t param_count() const { return logvar_head_.param_end(); }
    const nn::Sequential &trunk() const { return trunk_; }

    void init(std::span<double> params, Rng &rng) const;
    Pass forward(std::span<const double> params, std::span<const double> image) const;
    /// Accumulates parameter gradients; returns d loss / d image.
    std::vector<double> backward(std::span<const double> params, const Pass &pass, std::span<const double> grad_mu,
                                 std::span<const double> grad_logvar, std::span<double> grad_params) const;

  private:
    EncoderConfig config_;
    nn::Sequential trunk_;
    nn::Sequential mu_head_;
    nn::Sequential logvar_head_;
};

struct CriticConfig {
    std::size_t input = 784;
    std::vector<std::size_t> hidden{512, 256};
    double leaky_slope = 0.2;
};

/// Dense critic: input -> hidden... (each followed by LeakyReLU) -> 1.
class Critic {
  public:
    Critic() = default;
    explicit Critic(const CriticConfig &config);

    const CriticConfig &config() const { return config_; }
    std::size_t param_count() const { return net_.param_count(); }
    const nn::Sequential &net() const { return net_; }

    void init(std::span<double> params, Rng &rng) const;
    double score(std::span<const double> params, std::span<const double> image) const;
    /// d score / d image.
    std::vector<double> input_gradient(std::span<const double> params, std::span<const double> image) const;

  private:
    CriticConfig config_;
    nn::Sequential net_;
};

/// z = mu + exp(logvar / 2) * eps.
std::vector<double> reparameterize(std::span<const double> mu, std::span<const double> logvar,
                                   std::span<const double> eps);

/// Backprop of reparameterize: returns {d mu, d logvar}.
std::pair<std::vector<double>, std::vector<double>> reparameterize_backward(std::span<const double> logvar,
                                                                            std::span<const double> eps,
                                                                            std::span<const double> grad_z);

} // namespace vqgan::model
