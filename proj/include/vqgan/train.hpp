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
 * @file train.hpp
 * Joint encoder / quantum generator / critic training with per-epoch
 * evaluation, checkpoints and latent collection.
 *
 * Every random consumer owns a stream derived from the master seed, so
 * adding one never shifts the draws of another, and per-sample work is
 * reduced in sample order so results do not depend on the thread count.
 */
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vqgan/config.hpp"
#include "vqgan/data.hpp"
#include "vqgan/infer.hpp"
#include "vqgan/losses.hpp"
#include "vqgan/metrics.hpp"
#include "vqgan/model.hpp"
#include "vqgan/nn.hpp"

namespace vqgan::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::uint32_t version = kCheckpointVersion;
    std::uint64_t epoch = 0;
    std::vector<double> theta; // generator angles
    std::vector<double> omega; // encoder; empty for the pqwgan variants
    std::vector<double> phi;   // critic
    nn::AdamState adam_theta;
    nn::AdamState adam_omega;
    nn::AdamState adam_phi;
    std::map<std::string, std::string> rng; // stream label -> engine state
    std::string config;                     // to_text of the run configuration
    std::map<std::string, std::string> meta;
};

/// Generator geometry recorded in the checkpoint meta section.
model::GeneratorConfig generator_config(const Checkpoint &ckpt);
model::GeneratorParams generator_params(const Checkpoint &ckpt);

void save_checkpoint(const Checkpoint &ckpt, const std::filesystem::path &path);
Checkpoint load_checkpoint(const std::filesystem::path &path);
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint &ckpt);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t> &bytes);

struct IterationStats {
    double recon = 0.0;
    double kl = 0.0;
    double critic_loss = 0.0;
    double gp = 0.0;
    double mean_real = 0.0; // critic scores at the last critic step
    double mean_fake = 0.0;
    bool skipped = false; // degenerate post-selection aborted the step
};

struct EpochStats {
    std::size_t epoch = 0;
    std::size_t iterations = 0;
    std::size_t skipped = 0;
    double wasserstein_estimate = 0.0; // mean over iterations of |mean D(real) - mean D(fake)|
    double recon = 0.0;                // NaN for the pqwgan variants
    double kl = 0.0;
    metrics::MetricReport metrics;
};

/// The three objectives that the updates descend, on one fixed batch.
struct ObjectiveValues {
    double critic = 0.0;    // sign-adjusted critic loss including lambda * GP
    double encoder = 0.0;   // KL + recon; NaN without an encoder
    double generator = 0.0; // gamma * recon + adversarial term
};

struct ObjectiveGradients {
    ObjectiveValues values;
    std::vector<double> phi;   // d critic / d phi
    std::vector<double> omega; // d encoder / d omega; empty without an encoder
    std::vector<double> theta; // d generator / d theta
};

/// Update counters, for loop-structure assertions.
struct UpdateCounts {
    std::size_t critic = 0;
    std::size_t encoder = 0;
    std::size_t generator = 0;
};

class Trainer {
  public:
    /// Draws fresh parameters from the "init" stream; `dataset` must outlive the trainer.
    Trainer(const config::RunConfig &config, const data::Dataset &dataset,
            const model::GeneratorConfig &generator = {});

    const config::RunConfig &config() const { return config_; }
    bool has_encoder() const { return config_.train.variant == config::Variant::VaeQwgan; }

    const model::GeneratorParams &generator() const { return generator_; }
    const model::Encoder &encoder() const { return encoder_; }
    const model::Critic &critic() const { return critic_; }
    std::vector<double> theta() const { return generator_.flatten(); }
    const std::vector<double> &omega() const { return omega_; }
    const std::vector<double> &phi() const { return phi_; }
    const UpdateCounts &counts() const { return counts_; }
    std::size_t epoch() const { return epoch_; }

    /// Parameters only (optimizer moments start fresh); used for warm start.
    void load_parameters(const Checkpoint &ckpt);
    /// Full state: parameters, optimizers, RNG streams and epoch counter.
    void restore(const Checkpoint &ckpt);
    Checkpoint checkpoint() const;

    /**
     * Objectives at explicit parameters for a fixed batch. `noise` holds the
     * reparameterization draws (vae-qwgan) or the prior latents (baselines),
     * one row per sample; `interp` the interpolation weights.
     */
    ObjectiveValues objectives(const std::vector<std::size_t> &batch, const std::vector<std::vector<double>> &noise,
                               std::span<const double> interp, std::span<const double> theta,
                               std::span<const double> omega, std::span<const double> phi) const;
    /// Analytic gradients of objectives() at the current parameters.
    ObjectiveGradients gradients(const std::vector<std::size_t> &batch, const std::vector<std::vector<double>> &noise,
                                 std::span<const double> interp) const;

    /// One outer iteration on the given sample indices.
    IterationStats iteration(const std::vector<std::size_t> &batch);
    /// Shuffles, runs floor(N / m) iterations and returns loss aggregates (no metrics).
    EpochStats run_epoch();

    /// One latent per training sample (posterior mean or draw, per config).
    Eigen::MatrixXd collect_latents();
    /// z for the generator: GMM on collected latents for vae-qwgan, else the fixed prior.
    Eigen::MatrixXd eval_latents(std::size_t n, infer::GmmModel *chosen = nullptr);
    ImageBatch generate(const Eigen::MatrixXd &z) const;

  private:
    struct Forward {
        ImageBatch x;
        ImageBatch fake;
        std::vector<model::Encoder::Pass> passes;
        std::vector<std::vector<double>> z;
        std::vector<model::GeneratorTrace> traces;
        double recon = 0.0;
        double kl = 0.0;
    };
    struct GenEncGradients {
        std::vector<double> theta;
        std::vector<double> omega;
    };

    std::vector<double> draw_prior(Rng &rng) const;
    std::vector<std::vector<double>> draw_noise(std::size_t m);
    Forward forward(const std::vector<std::size_t> &batch, const std::vector<std::vector<double>> &noise,
                    const model::GeneratorParams &gen, std::span<const double> omega) const;
    GenEncGradients generator_encoder_gradients(const Forward &fwd, const std::vector<std::vector<double>> &noise,
                                                std::span<const double> phi) const;

    config::RunConfig config_;
    const data::Dataset *dataset_;
    unsigned threads_;
    model::GeneratorParams generator_;
    model::Encoder encoder_;
    model::Critic critic_;
    std::vector<double> omega_;
    std::vector<double> phi_;
    nn::AdamState adam_theta_;
    nn::AdamState adam_omega_;
    nn::AdamState adam_phi_;
    Rng rng_shuffle_;
    Rng rng_reparam_;
    Rng rng_interp_;
    Rng rng_eval_;
    std::size_t epoch_ = 0;
    UpdateCounts counts_;
};

struct TrainResult {
    Checkpoint final_checkpoint;
    std::vector<EpochStats> history;
    Eigen::MatrixXd latents;
};

/// Per-epoch hook, called after metrics are filled in.
using EpochCallback = std::function<void(const EpochStats &)>;

/**
 * The full loop: epochs of iterations, then per-epoch evaluation against
 * the training subset. When config.out_dir is non-empty the run writes
 * metrics.csv, checkpoint_epoch_NN.vqg, samples_epoch_NN.pgm and
 * latents.txt there.
 */
TrainResult train(const config::RunConfig &config, const data::Dataset &dataset, const EpochCallback &on_epoch = {},
                  const model::GeneratorConfig &generator = {});

/// The configured class subset of one split, drawn from the "subsample"
/// (train) or "subsample/test" stream of the run seed.
data::Dataset load_run_dataset(const config::RunConfig &config, data::Split split);

/// Header line of metrics.csv.
std::string metrics_csv_header();
std::string metrics_csv_row(const EpochStats &stats);

void write_latents(const Eigen::MatrixXd &latents, const std::filesystem::path &path);
Eigen::MatrixXd read_latents(const std::filesystem::path &path);

} // namespace vqgan::train
