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
#include "vqgan/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace vqgan::model {

namespace {

std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

} // namespace

void GeneratorConfig::validate() const {
    if (n_qubits < 2 || n_qubits > 20) {
        throw Error("generator: n_qubits must be in [2, 20]");
    }
    if (n_ancilla < 1 || n_ancilla >= n_qubits) {
        throw Error("generator: n_ancilla must be in [1, n_qubits)");
    }
    if (n_subgens == 0 || image_size() % n_subgens != 0) {
        throw Error("generator: image size " + std::to_string(image_size()) + " not divisible into " +
                    std::to_string(n_subgens) + " patches");
    }
    if (patch_pixels() > data_states()) {
        throw Error("generator: patch of " + std::to_string(patch_pixels()) + " pixels exceeds " +
                    std::to_string(data_states()) + " data-register outcomes");
    }
}

GeneratorParams::GeneratorParams(const GeneratorConfig &config) : config_(config) {
    config_.validate();
    subgens_.assign(config_.n_subgens, qsim::SubGenParams(config_.n_layers, config_.n_qubits));
}

std::size_t GeneratorParams::count_params() const {
    std::size_t n = 0;
    for (const auto &s : subgens_) {
        n += s.size();
    }
    return n;
}

std::vector<double> GeneratorParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(count_params());
    for (const auto &s : subgens_) {
        flat.insert(flat.end(), s.angles().begin(), s.angles().end());
    }
    return flat;
}

void GeneratorParams::assign(std::span<const double> flat) {
    if (flat.size() != count_params()) {
        throw Error("GeneratorParams::assign: expected " + std::to_string(count_params()) + " values, got " +
                    std::to_string(flat.size()));
    }
    std::size_t pos = 0;
    for (auto &s : subgens_) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), s.size(), s.angles().begin());
        pos += s.size();
    }
}

std::vector<double> patch_postprocess(std::span<const double> probs, std::size_t pixels) {
    if (pixels > probs.size()) {
        throw Error("patch_postprocess: more pixels than probabilities");
    }
    const double peak = probs.empty() ? 0.0 : probs[argmax(probs)];
    if (!(peak > 0.0)) {
        throw Error("patch_postprocess: probabilities are all zero");
    }
    std::vector<double> out(pixels);
    for (std::size_t i = 0; i < pixels; ++i) {
        out[i] = probs[i] / peak;
    }
    return out;
}

std::vector<double> patch_postprocess_backward(std::span<const double> probs, std::size_t pixels,
                                               std::span<const double> upstream) {
    if (upstream.size() != pixels || pixels > probs.size()) {
        throw Error("patch_postprocess_backward: shape mismatch");
    }
    const std::size_t m = argmax(probs);
    const double peak = probs[m];
    std::vector<double> grad(probs.size(), 0.0);
    double through_peak = 0.0;
    for (std::size_t i = 0; i < pixels; ++i) {
        grad[i] += upstream[i] / peak;
        through_peak += upstream[i] * probs[i];
    }
    grad[m] -= through_peak / (peak * peak);
    return grad;
}

GeneratorTrace generate_trace(std::span<const double> z, const GeneratorParams &params) {
    const GeneratorConfig &cfg = params.config();
    if (z.size() != cfg.n_qubits) {
        throw Error("generate: latent length " + std::to_string(z.size()) + " != " + std::to_string(cfg.n_qubits));
    }
    const std::size_t pixels = cfg.patch_pixels();
    GeneratorTrace trace;
    trace.image.resize(cfg.image_size());
    trace.final_states.reserve(cfg.n_subgens);
    trace.probs.reserve(cfg.n_subgens);
    for (std::size_t j = 0; j < cfg.n_subgens; ++j) {
        trace.final_states.push_back(qsim::run_subgenerator(z, params.subgens()[j]));
        trace.probs.push_back(qsim::postselect_probs(trace.final_states.back(), cfg.n_ancilla).probs);
        const std::vector<double> patch = patch_postprocess(trace.probs.back(), pixels);
        std::copy(patch.begin(), patch.end(), trace.image.begin() + static_cast<std::ptrdiff_t>(j * pixels));
    }
    return trace;
}

std::vector<double> generate(std::span<const double> z, const GeneratorParams &params) {
    return std::move(generate_trace(z, params).image);
}

GeneratorGradient generate_backward(std::span<const double> z, const GeneratorParams &params,
                                    const GeneratorTrace &trace, std::span<const double> grad_image) {
    const GeneratorConfig &cfg = params.config();
    if (grad_image.size() != cfg.image_size() || trace.final_states.size() != cfg.n_subgens) {
        throw Error("generate_backward: shape mismatch");
    }
    const std::size_t pixels = cfg.patch_pixels();
    GeneratorGradient grad;
    grad.grad_z.assign(cfg.n_qubits, 0.0);
    grad.grad_theta.reserve(params.count_params());
    for (std::size_t j = 0; j < cfg.n_subgens; ++j) {
        const auto up = grad_image.subspan(j * pixels, pixels);
        const std::vector<double> grad_probs = patch_postprocess_backward(trace.probs[j], pixels, up);
        const qsim::SubGenGradient g =
            qsim::subgen_backward(z, params.subgens()[j], cfg.n_ancilla, grad_probs, trace.final_states[j]);
        for (std::size_t i = 0; i < cfg.n_qubits; ++i) {
            grad.grad_z[i] += g.grad_z[i];
        }
        grad.grad_theta.insert(grad.grad_theta.end(), g.grad_angles.begin(), g.grad_angles.end());
    }
    return grad;
}

void init_generator(GeneratorParams &params, Rng &rng) {
    for (auto &s : params.subgens()) {
        for (double &a : s.angles()) {
            a = 2.0 * std::numbers::pi * rng.uniform();
        }
    }
}

Encoder::Encoder(const EncoderConfig &config) : config_(config) {
    trunk_ = nn::Sequential({1, config.image_rows, config.image_cols}, 0);
    for (std::size_t c : config.channels) {
        trunk_.conv(c).leaky_relu(config.leaky_slope);
    }
    trunk_.dense(config.hidden).leaky_relu(config.leaky_slope);
    mu_head_ = nn::Sequential({config.hidden}, trunk_.param_end());
    mu_head_.dense(config.latent);
    logvar_head_ = nn::Sequential({config.hidden}, mu_head_.param_end());
    logvar_head_.dense(config.latent);
}

void Encoder::init(std::span<double> params, Rng &rng) const {
    trunk_.init_kaiming(params, rng);
    mu_head_.init_kaiming(params, rng);
    logvar_head_.init_kaiming(params, rng);
}

Encoder::Pass Encoder::forward(std::span<const double> params, std::span<const double> image) const {
    Pass pass;
    pass.trunk = trunk_.forward_trace(params, image);
    pass.mu = mu_head_.forward(params, pass.trunk.back());
    pass.logvar = logvar_head_.forward(params, pass.trunk.back());
    return pass;
}

std::vector<double> Encoder::backward(std::span<const double> params, const Pass &pass,
                                      std::span<const double> grad_mu, std::span<const double> grad_logvar,
                                      std::span<double> grad_params) const {
    const nn::Sequential::Trace head_trace_mu{pass.trunk.back(), pass.mu};
    const nn::Sequential::Trace head_trace_lv{pass.trunk.back(), pass.logvar};
    std::vector<double> grad_hidden = mu_head_.backward(params, head_trace_mu, grad_mu, grad_params);
    const std::vector<double> from_lv = logvar_head_.backward(params, head_trace_lv, grad_logvar, grad_params);
    for (std::size_t i = 0; i < grad_hidden.size(); ++i) {
        grad_hidden[i] += from_lv[i];
    }
    return trunk_.backward(params, pass.trunk, grad_hidden, grad_params);
}

Critic::Critic(const CriticConfig &config) : config_(config) {
    net_ = nn::Sequential({config.input}, 0);
    for (std::size_t h : config.hidden) {
        net_.dense(h).leaky_relu(config.leaky_slope);
    }
    net_.dense(1);
}

void Critic::init(std::span<double> params, Rng &rng) const { net_.init_kaiming(params, rng); }

double Critic::score(std::span<const double> params, std::span<const double> image) const {
    return net_.forward(params, image).front();
}

std::vector<double> Critic::input_gradient(std::span<const double> params, std::span<const double> image) const {
    const auto trace = net_.forward_trace(params, image);
    const double seed = 1.0;
    return net_.backward(params, trace, std::span<const double>(&seed, 1), {});
}

std::vector<double> reparameterize(std::span<const double> mu, std::span<const double> logvar,
                                   std::span<const double> eps) {
    if (mu.size() != logvar.size() || mu.size() != eps.size()) {
        throw Error("reparameterize: length mismatch");
    }
    std::vector<double> z(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        z[i] = mu[i] + std::exp(0.5 * logvar[i]) * eps[i];
    }
    return z;
}

std::pair<std::vector<double>, std::vector<double>> reparameterize_backward(std::span<const double> logvar,
                                                                            std::span<const double> eps,
                                                                            std::span<const double> grad_z) {
    std::vector<double> grad_mu(grad_z.begin(), grad_z.end());
    std::vector<double> grad_logvar(grad_z.size());
    for (std::size_t i = 0; i < grad_z.size(); ++i) {
        grad_logvar[i] = grad_z[i] * 0.5 * std::exp(0.5 * logvar[i]) * eps[i];
    }
    return {std::move(grad_mu), std::move(grad_logvar)};
}

} // namespace vqgan::model
