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
 * @file infer.hpp
 * Gaussian-mixture prior over collected latents: EM fitting, BIC model
 * selection over components x covariance structure, and sampling images
 * through the generator.
 */
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "vqgan/common.hpp"
#include "vqgan/image_batch.hpp"
#include "vqgan/model.hpp"

namespace vqgan::infer {

enum class CovarianceType { Spherical, Tied, Diag, Full };

CovarianceType parse_covariance_type(const std::string &text);
std::string to_string(CovarianceType type);

inline constexpr double kCovarianceFloor = 1e-6;

struct GmmModel {
    CovarianceType type = CovarianceType::Full;
    Eigen::VectorXd weights;                  // K
    Eigen::MatrixXd means;                    // K x D
    std::vector<Eigen::MatrixXd> covariances; // K full D x D matrices, whatever the type
    double log_likelihood = 0.0;              // total over the fitted data
    std::vector<double> log_likelihood_history;
    std::vector<std::size_t> reinit_steps; // history entries that follow a component reinitialization
    std::size_t iterations = 0;

    std::size_t components() const { return static_cast<std::size_t>(weights.size()); }
    std::size_t dim() const { return static_cast<std::size_t>(means.cols()); }
};

struct EmOptions {
    double tolerance = 1e-6; // on the mean per-sample log-likelihood
    std::size_t max_iter = 500;
    std::size_t max_reinit = 10;
    double covariance_floor = kCovarianceFloor;
};

/// latents is N x D with N > K. Initialized from k-means on greedy k-means++ seeds.
GmmModel gmm_fit_em(const Eigen::MatrixXd &latents, std::size_t k, CovarianceType type, Rng &rng,
                    const EmOptions &options = {});

/// Total log-likelihood of the rows under the model.
double log_likelihood(const GmmModel &model, const Eigen::MatrixXd &data);

/// Free parameters: (K-1) + K D + covariance terms.
std::size_t free_parameters(std::size_t k, std::size_t dim, CovarianceType type);

/// -2 log L + p ln N.
double bic(const GmmModel &model, const Eigen::MatrixXd &latents);

struct GridEntry {
    std::size_t k;
    CovarianceType type;
    double bic;
    std::size_t params;
};

struct Selection {
    GmmModel best;
    std::vector<GridEntry> grid; // K-major, types in {spherical, tied, diag, full} order
};

/// Lowest BIC over K in [1, max_k] and all four covariance types; ties go
/// to fewer parameters, then lower K. A configuration whose fit keeps
/// collapsing is scored +inf. Each configuration draws from its own
/// stream derived from `seed`, so results do not depend on `threads`.
Selection select_gmm(const Eigen::MatrixXd &latents, std::uint64_t seed, std::size_t max_k = 7,
                     unsigned threads = 1);

/// Draws one latent per row: component by weight, then N(mean_k, Sigma_k).
Eigen::MatrixXd sample_latents(const GmmModel &model, std::size_t n, Rng &rng);

/// Latent draws pushed through the generator.
ImageBatch sample_and_generate(const GmmModel &model, const model::GeneratorParams &generator, std::size_t n,
                               Rng &rng, unsigned threads = 1);

/// Text export: type, K, D, weights, means, covariances in the native
/// layout of the type, every value printed with 17 significant digits.
void write_gmm(std::ostream &os, const GmmModel &model);
GmmModel read_gmm(std::istream &is);

} // namespace vqgan::infer
