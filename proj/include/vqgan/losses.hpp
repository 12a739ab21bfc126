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
 * @file losses.hpp
 * Training objectives. Batch quantities are means over the batch.
 *
 * Critic sign conventions:
 *   - CriticSign::Paper     critic descends mean D(real) - mean D(fake) + lambda * GP,
 *                           generator descends gamma * recon + mean D(fake).
 *   - CriticSign::Textbook  critic descends mean D(fake) - mean D(real) + lambda * GP,
 *                           generator descends gamma * recon - mean D(fake).
 */
#pragma once

#include <span>
#include <string>
#include <vector>

#include "vqgan/image_batch.hpp"
#include "vqgan/model.hpp"

namespace vqgan::losses {

enum class CriticSign { Paper, Textbook };

CriticSign parse_critic_sign(const std::string &text);
std::string to_string(CriticSign sign);

struct LossBreakdown {
    double recon = 0.0;
    double kl = 0.0;
    double critic = 0.0;
    double gp = 0.0;
    double wasserstein_estimate = 0.0;
};

/// Mean over the batch of 0.5 * ||x - x_recon||^2.
double recon_loss(const ImageBatch &x, const ImageBatch &x_recon);
/// d recon_loss / d x_recon, i.e. (x_recon - x) / batch.
ImageBatch recon_loss_grad(const ImageBatch &x, const ImageBatch &x_recon);

/// Mean over the batch of 0.5 * sum(mu^2 + exp(logvar) - 1 - logvar).
/// mu and logvar are [batch][latent].
double kl_prior(const std::vector<std::vector<double>> &mu, const std::vector<std::vector<double>> &logvar);
/// Per-sample {d mu, d logvar} of kl_prior (already divided by batch).
std::pair<std::vector<double>, std::vector<double>> kl_prior_grad(std::span<const double> mu,
                                                                  std::span<const double> logvar,
                                                                  std::size_t batch);

/// x_hat_i = eps_i * real_i + (1 - eps_i) * fake_i.
ImageBatch interpolate(const ImageBatch &real, const ImageBatch &fake, std::span<const double> eps);

/// Mean over the batch of (||grad_x D(x_hat)||_2 - 1)^2.
double gradient_penalty(const model::Critic &critic, std::span<const double> params, const ImageBatch &real,
                        const ImageBatch &fake, std::span<const double> eps);

struct CriticLoss {
    double loss = 0.0;
    double gp = 0.0;
    double mean_real = 0.0;
    double mean_fake = 0.0;
    std::vector<double> grad; // d loss / d critic params; empty unless requested
};

/// Signed Wasserstein loss plus lambda * GP, with optional parameter gradient.
CriticLoss critic_loss(const model::Critic &critic, std::span<const double> params, const ImageBatch &real,
                       const ImageBatch &fake, std::span<const double> eps, double lambda, CriticSign sign,
                       bool want_grad = true, unsigned threads = 1);

/// gamma * recon - qgan_loss.
double generator_objective(double recon, double qgan_loss, double gamma);
/// kl + recon. Carries no adversarial term.
double encoder_objective(double recon, double kl);

/**
 * d(adversarial part of the generator objective) / d fake_i. Under the
 * default sign the generator descends +mean D(fake); under the textbook sign
 * it descends -mean D(fake).
 */
ImageBatch generator_adversarial_grad(const model::Critic &critic, std::span<const double> params,
                                      const ImageBatch &fake, CriticSign sign, unsigned threads = 1);

} // namespace vqgan::losses
