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
 * @file metrics.hpp
 * Sample-quality and diversity metrics for generated image sets.
 *
 * JSD and NDB/K compare occupancy of K-means bins fit on the training
 * images. PSNR, SSIM and cosine similarity are pairwise and need a
 * generated-to-real pairing. FD compares Gaussian fits of raw pixels.
 */
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vqgan/common.hpp"
#include "vqgan/image_batch.hpp"

namespace vqgan::metrics {

struct KMeansResult {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<double> centroids; // k x dim, row-major
    std::vector<std::size_t> assignments;
    std::vector<double> objective_history; // within-cluster SS after each assignment step
    std::size_t iterations = 0;
};

/// Lloyd iterations from greedy k-means++ seeds until assignments are stable or
/// max_iter passes. data is n x dim row-major.
KMeansResult kmeans(std::span<const double> data, std::size_t n, std::size_t dim, std::size_t k, Rng &rng,
                    std::size_t max_iter = 300);

/// Index of the nearest centroid (L2) for each row; ties go to the lower index.
std::vector<std::size_t> assign_to_centroids(std::span<const double> data, std::size_t n,
                                             std::span<const double> centroids, std::size_t k, std::size_t dim);

struct BinHistogram {
    std::vector<std::size_t> counts;
    std::size_t total = 0;
    std::vector<double> centroids; // K x dim
};

BinHistogram make_histogram(std::span<const std::size_t> assignments, std::size_t k);

/// Base-2 Jensen-Shannon divergence of two count vectors (normalized
/// internally); in [0, 1], with 0 log 0 = 0.
double jsd(std::span<const double> p, std::span<const double> q);
double jsd(const BinHistogram &p, const BinHistogram &q);

struct NdbResult {
    std::size_t count = 0;
    double over_k = 0.0;
};

/// Two-sided critical value of the standard normal at level alpha
/// (+inf for alpha = 0).
double two_sided_critical_value(double alpha);

/// Per-bin pooled two-proportion z-test; bins with |z| above the critical
/// value count as statistically different.
NdbResult ndb(std::span<const std::size_t> real_assign, std::span<const std::size_t> gen_assign, std::size_t k,
              double alpha);

inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

/// 10 log10(max^2 / mse); +inf when mse == 0.
double psnr_from_mse(double mse, double max_value = 1.0);
double psnr(std::span<const double> x, std::span<const double> y, double max_value = 1.0);

/// Whole-image SSIM with c1 = (0.01 max)^2, c2 = (0.03 max)^2.
double ssim(std::span<const double> x, std::span<const double> y, double max_value = 1.0);

/// Cosine similarity rescaled to [0, 1] as 0.5 + 0.5 cos. A zero vector
/// counts as orthogonal.
double cosine_similarity(std::span<const double> x, std::span<const double> y);

/// ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2}); the square-root trace is
/// taken from the eigenvalues of S1^{1/2} S2 S1^{1/2}, negatives clipped.
double frechet_distance_gaussian(const Eigen::VectorXd &mu1, const Eigen::MatrixXd &cov1,
                                 const Eigen::VectorXd &mu2, const Eigen::MatrixXd &cov2);

/// Sample mean and unbiased covariance of the flattened images.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> mean_and_covariance(const ImageBatch &batch);

/// FD between Gaussian fits of two batches (each needs >= 2 images).
double frechet_distance(const ImageBatch &real, const ImageBatch &gen);

enum class PairingPolicy { Nearest, Index };
PairingPolicy parse_pairing(const std::string &text);
std::string to_string(PairingPolicy policy);

/// For each generated image, the index of its paired real image.
std::vector<std::size_t> pair_generated_to_real(const ImageBatch &gen, const ImageBatch &real,
                                                PairingPolicy policy = PairingPolicy::Nearest);

struct MetricReport {
    double wasserstein_estimate = 0.0;
    double jsd = 0.0;
    double ndb_k = 0.0;
    double ssim = 0.0;
    double psnr = 0.0;
    double cosine = 0.0;
    double fd = 0.0;
};

struct MetricOptions {
    std::size_t kbins = 20;
    double alpha = 0.05;
    PairingPolicy pairing = PairingPolicy::Nearest;
};

/// K-means bins fit once on the training images; reused for every evaluation.
struct Discretizer {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<double> centroids;
    std::vector<std::size_t> train_assignments;

    static Discretizer fit(const ImageBatch &train, std::size_t k, Rng &rng);
    std::vector<std::size_t> assign(const ImageBatch &batch) const;
};

/**
 * All six metrics for a generated set. JSD/NDB compare the generated bin
 * occupancy against the training occupancy held in the discretizer; FD
 * and the pairwise metrics compare against `real`. When `pairs` is given
 * it overrides the pairing policy (reconstruction mode pairs each input
 * with its own reconstruction).
 */
MetricReport evaluate(const ImageBatch &real, const ImageBatch &gen, const Discretizer &bins,
                      const MetricOptions &options, const std::vector<std::size_t> *pairs = nullptr);

} // namespace vqgan::metrics
