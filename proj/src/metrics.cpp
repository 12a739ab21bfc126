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
#include "vqgan/metrics.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace vqgan::metrics {

namespace {

double squared_distance(const double *a, const double *b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void check_finite(const ImageBatch &b, const char *what) {
    for (double v : b.pixels()) {
        if (!std::isfinite(v)) {
            throw Error(std::string(what) + ": non-finite pixel value");
        }
    }
}

double kl_base2(std::span<const double> p, std::span<const double> m) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) {
            s += p[i] * std::log2(p[i] / m[i]);
        }
    }
    return s;
}

} // namespace

std::vector<std::size_t> assign_to_centroids(std::span<const double> data, std::size_t n,
                                             std::span<const double> centroids, std::size_t k, std::size_t dim) {
    if (data.size() != n * dim || centroids.size() != k * dim || k == 0) {
        throw Error("assign_to_centroids: shape mismatch");
    }
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            const double d = squared_distance(data.data() + i * dim, centroids.data() + c * dim, dim);
            if (d < best) {
                best = d;
                out[i] = c;
            }
        }
    }
    return out;
}

KMeansResult kmeans(std::span<const double> data, std::size_t n, std::size_t dim, std::size_t k, Rng &rng,
                    std::size_t max_iter) {
    if (k == 0 || n < k || data.size() != n * dim) {
        throw Error("kmeans: need 1 <= k <= n and an n x dim data matrix");
    }
    KMeansResult res;
    res.k = k;
    res.dim = dim;
    res.centroids.assign(k * dim, 0.0);

    // Greedy k-means++ seeding: each new centroid is the best of a few
    // D^2-sampled candidates, judged by the resulting potential.
    const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
    const auto sample_d2 = [&](const std::vector<double> &w, double total) {
        double target = rng.uniform() * total;
        for (std::size_t i = 0; i < n; ++i) {
            target -= w[i];
            if (target < 0.0) {
                return i;
            }
        }
        return n - 1;
    };
    std::vector<double> d2(n);
    std::size_t pick = rng.below(n);
    for (std::size_t i = 0; i < n; ++i) {
        d2[i] = squared_distance(data.data() + i * dim, data.data() + pick * dim, dim);
    }
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(pick * dim), dim, res.centroids.begin());
    std::vector<double> cand_d2(n);
    std::vector<double> best_d2(n);
    for (std::size_t c = 1; c < k; ++c) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        double best_potential = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < trials; ++t) {
            const std::size_t cand = total > 0.0 ? sample_d2(d2, total) : rng.below(n);
            double potential = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cand_d2[i] = std::min(d2[i], squared_distance(data.data() + i * dim, data.data() + cand * dim, dim));
                potential += cand_d2[i];
            }
            if (potential < best_potential) {
                best_potential = potential;
                pick = cand;
                best_d2.swap(cand_d2);
            }
        }
        d2.swap(best_d2);
        std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(pick * dim), dim,
                    res.centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
    }

    res.assignments.assign(n, k);
    for (std::size_t it = 0; it < max_iter; ++it) {
        const std::vector<std::size_t> next = assign_to_centroids(data, n, res.centroids, k, dim);
        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            objective += squared_distance(data.data() + i * dim, res.centroids.data() + next[i] * dim, dim);
        }
        res.objective_history.push_back(objective);
        const bool stable = next == res.assignments;
        res.assignments = next;
        res.iterations = it + 1;
        if (stable) {
            break;
        }
        std::vector<double> sums(k * dim, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = res.assignments[i];
            ++counts[c];
            for (std::size_t j = 0; j < dim; ++j) {
                sums[c * dim + j] += data[i * dim + j];
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                continue; // empty cluster keeps its centroid
            }
            for (std::size_t j = 0; j < dim; ++j) {
                res.centroids[c * dim + j] = sums[c * dim + j] / static_cast<double>(counts[c]);
            }
        }
    }
    return res;
}

BinHistogram make_histogram(std::span<const std::size_t> assignments, std::size_t k) {
    BinHistogram h;
    h.counts.assign(k, 0);
    for (std::size_t a : assignments) {
        if (a >= k) {
            throw Error("make_histogram: assignment out of range");
        }
        ++h.counts[a];
    }
    h.total = assignments.size();
    return h;
}

double jsd(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size() || p.empty()) {
        throw Error("jsd: histograms must be non-empty and the same length");
    }
    double sp = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) {
            throw Error("jsd: negative mass");
        }
        sp += p[i];
        sq += q[i];
    }
    if (sp <= 0.0 || sq <= 0.0) {
        throw Error("jsd: empty histogram");
    }
    std::vector<double> pn(p.size());
    std::vector<double> qn(q.size());
    std::vector<double> m(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        pn[i] = p[i] / sp;
        qn[i] = q[i] / sq;
        m[i] = 0.5 * (pn[i] + qn[i]);
    }
    const double v = 0.5 * kl_base2(pn, m) + 0.5 * kl_base2(qn, m);
    return std::clamp(v, 0.0, 1.0);
}

double jsd(const BinHistogram &p, const BinHistogram &q) {
    std::vector<double> a(p.counts.begin(), p.counts.end());
    std::vector<double> b(q.counts.begin(), q.counts.end());
    return jsd(a, b);
}

double two_sided_critical_value(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw Error("ndb: alpha must lie in [0, 1]");
    }
    if (alpha == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    if (alpha == 1.0) {
        return 0.0;
    }
    const boost::math::normal_distribution<double> standard;
    return boost::math::quantile(standard, 1.0 - alpha / 2.0);
}

NdbResult ndb(std::span<const std::size_t> real_assign, std::span<const std::size_t> gen_assign, std::size_t k,
              double alpha) {
    if (k == 0 || real_assign.empty() || gen_assign.empty()) {
        throw Error("ndb: need k > 0 and non-empty assignment sets");
    }
    const double crit = two_sided_critical_value(alpha);
    const BinHistogram hr = make_histogram(real_assign, k);
    const BinHistogram hg = make_histogram(gen_assign, k);
    const double n1 = static_cast<double>(hr.total);
    const double n2 = static_cast<double>(hg.total);
    NdbResult out;
    for (std::size_t b = 0; b < k; ++b) {
        const double p1 = static_cast<double>(hr.counts[b]) / n1;
        const double p2 = static_cast<double>(hg.counts[b]) / n2;
        const double pooled = static_cast<double>(hr.counts[b] + hg.counts[b]) / (n1 + n2);
        const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
        double z = 0.0;
        if (se > 0.0) {
            z = (p1 - p2) / se;
        } else if (p1 != p2) {
            z = std::numeric_limits<double>::infinity();
        }
        if (std::abs(z) > crit) {
            ++out.count;
        }
    }
    out.over_k = static_cast<double>(out.count) / static_cast<double>(k);
    return out;
}

double psnr_from_mse(double mse, double max_value) {
    if (mse < 0.0) {
        throw Error("psnr: negative MSE");
    }
    if (mse == 0.0) {
        return kPsnrInfinite;
    }
    return 10.0 * std::log10(max_value * max_value / mse);
}

double psnr(std::span<const double> x, std::span<const double> y, double max_value) {
    if (x.size() != y.size() || x.empty()) {
        throw Error("psnr: size mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += (x[i] - y[i]) * (x[i] - y[i]);
    }
    return psnr_from_mse(s / static_cast<double>(x.size()), max_value);
}

double ssim(std::span<const double> x, std::span<const double> y, double max_value) {
    if (x.size() != y.size() || x.size() < 2) {
        throw Error("ssim: images must match in size and have at least two pixels");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double vx = 0.0;
    double vy = 0.0;
    double cxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (y[i] - my) * (y[i] - my);
        cxy += (x[i] - mx) * (y[i] - my);
    }
    vx /= n - 1.0;
    vy /= n - 1.0;
    cxy /= n - 1.0;
    const double c1 = (0.01 * max_value) * (0.01 * max_value);
    const double c2 = (0.03 * max_value) * (0.03 * max_value);
    return ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
}

double cosine_similarity(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw Error("cosine_similarity: size mismatch");
    }
    double dot = 0.0;
    double nx = 0.0;
    double ny = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        nx += x[i] * x[i];
        ny += y[i] * y[i];
    }
    const double raw = (nx > 0.0 && ny > 0.0) ? dot / (std::sqrt(nx) * std::sqrt(ny)) : 0.0;
    return std::clamp(0.5 + 0.5 * raw, 0.0, 1.0);
}

double frechet_distance_gaussian(const Eigen::VectorXd &mu1, const Eigen::MatrixXd &cov1,
                                 const Eigen::VectorXd &mu2, const Eigen::MatrixXd &cov2) {
    const auto d = mu1.size();
    if (mu2.size() != d || cov1.rows() != d || cov1.cols() != d || cov2.rows() != d || cov2.cols() != d) {
        throw Error("frechet_distance: dimension mismatch");
    }
    if (!mu1.allFinite() || !mu2.allFinite() || !cov1.allFinite() || !cov2.allFinite()) {
        throw Error("frechet_distance: non-finite input");
    }
    const Eigen::MatrixXd s1 = 0.5 * (cov1 + cov1.transpose());
    const Eigen::MatrixXd s2 = 0.5 * (cov2 + cov2.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig1(s1);
    const Eigen::VectorXd root_vals = eig1.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd root1 = eig1.eigenvectors() * root_vals.asDiagonal() * eig1.eigenvectors().transpose();
    Eigen::MatrixXd inner = root1 * s2 * root1;
    inner = 0.5 * (inner + inner.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig2(inner, Eigen::EigenvaluesOnly);
    const double trace_sqrt = eig2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

    const double fd = (mu1 - mu2).squaredNorm() + s1.trace() + s2.trace() - 2.0 * trace_sqrt;
    return std::max(fd, 0.0);
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> mean_and_covariance(const ImageBatch &batch) {
    if (batch.size() < 2) {
        throw Error("mean_and_covariance: need at least two samples");
    }
    const auto n = static_cast<Eigen::Index>(batch.size());
    const auto d = static_cast<Eigen::Index>(batch.image_size());
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
        batch.pixels().data(), n, d);
    Eigen::VectorXd mu = x.colwise().mean().transpose();
    const Eigen::MatrixXd centered = x.rowwise() - mu.transpose();
    Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    return {std::move(mu), std::move(cov)};
}

double frechet_distance(const ImageBatch &real, const ImageBatch &gen) {
    if (real.image_size() != gen.image_size()) {
        throw Error("frechet_distance: image sizes differ");
    }
    check_finite(real, "frechet_distance");
    check_finite(gen, "frechet_distance");
    const auto [mu_r, cov_r] = mean_and_covariance(real);
    const auto [mu_g, cov_g] = mean_and_covariance(gen);
    return frechet_distance_gaussian(mu_r, cov_r, mu_g, cov_g);
}

PairingPolicy parse_pairing(const std::string &text) {
    if (text == "nearest") {
        return PairingPolicy::Nearest;
    }
    if (text == "index") {
        return PairingPolicy::Index;
    }
    throw Error("pairing must be 'nearest' or 'index', got '" + text + "'");
}

std::string to_string(PairingPolicy policy) { return policy == PairingPolicy::Nearest ? "nearest" : "index"; }

std::vector<std::size_t> pair_generated_to_real(const ImageBatch &gen, const ImageBatch &real, PairingPolicy policy) {
    if (real.empty()) {
        throw Error("pair_generated_to_real: no real images");
    }
    if (gen.image_size() != real.image_size()) {
        throw Error("pair_generated_to_real: image sizes differ");
    }
    std::vector<std::size_t> pairs(gen.size());
    if (policy == PairingPolicy::Index) {
        if (gen.size() > real.size()) {
            throw Error("pair_generated_to_real: index pairing needs at least as many real images");
        }
        for (std::size_t i = 0; i < gen.size(); ++i) {
            pairs[i] = i;
        }
        return pairs;
    }
    return assign_to_centroids(gen.pixels(), gen.size(), real.pixels(), real.size(), real.image_size());
}

Discretizer Discretizer::fit(const ImageBatch &train, std::size_t k, Rng &rng) {
    KMeansResult km = kmeans(train.pixels(), train.size(), train.image_size(), k, rng);
    Discretizer d;
    d.k = k;
    d.dim = train.image_size();
    d.centroids = std::move(km.centroids);
    d.train_assignments = std::move(km.assignments);
    return d;
}

std::vector<std::size_t> Discretizer::assign(const ImageBatch &batch) const {
    return assign_to_centroids(batch.pixels(), batch.size(), centroids, k, dim);
}

MetricReport evaluate(const ImageBatch &real, const ImageBatch &gen, const Discretizer &bins,
                      const MetricOptions &options, const std::vector<std::size_t> *pairs) {
    if (gen.empty()) {
        throw Error("evaluate: no generated images");
    }
    MetricReport r;
    const std::vector<std::size_t> gen_assign = bins.assign(gen);
    r.jsd = jsd(make_histogram(gen_assign, bins.k), make_histogram(bins.train_assignments, bins.k));
    r.ndb_k = ndb(bins.train_assignments, gen_assign, bins.k, options.alpha).over_k;
    r.fd = frechet_distance(real, gen);

    const std::vector<std::size_t> chosen = pairs != nullptr ? *pairs : pair_generated_to_real(gen, real, options.pairing);
    if (chosen.size() != gen.size()) {
        throw Error("evaluate: pairing does not cover every generated image");
    }
    double sq = 0.0;
    double ssim_sum = 0.0;
    double cos_sum = 0.0;
    for (std::size_t i = 0; i < gen.size(); ++i) {
        const auto x = real.image(chosen.at(i));
        const auto y = gen.image(i);
        for (std::size_t p = 0; p < x.size(); ++p) {
            sq += (x[p] - y[p]) * (x[p] - y[p]);
        }
        ssim_sum += ssim(x, y);
        cos_sum += cosine_similarity(x, y);
    }
    const double count = static_cast<double>(gen.size());
    r.psnr = psnr_from_mse(sq / (count * static_cast<double>(gen.image_size())));
    r.ssim = ssim_sum / count;
    r.cosine = cos_sum / count;
    return r;
}

} // namespace vqgan::metrics
