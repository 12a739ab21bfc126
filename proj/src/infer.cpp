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
#include "vqgan/infer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "vqgan/metrics.hpp"

namespace vqgan::infer {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr std::array<CovarianceType, 4> kAllTypes{CovarianceType::Spherical, CovarianceType::Tied,
                                                  CovarianceType::Diag, CovarianceType::Full};

// Weighted log-densities: out(i, k) = log w_k + log N(x_i | mu_k, Sigma_k).
MatrixXd weighted_log_prob(const GmmModel &m, const MatrixXd &x) {
    const Index n = x.rows();
    const Index d = x.cols();
    const Index k = m.means.rows();
    MatrixXd out(n, k);
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    for (Index c = 0; c < k; ++c) {
        Eigen::LLT<MatrixXd> llt(m.covariances[static_cast<std::size_t>(c)]);
        if (llt.info() != Eigen::Success) {
            throw Error("GMM: covariance of component " + std::to_string(c) + " is not positive definite");
        }
        const MatrixXd &l = llt.matrixL();
        const double log_det = 2.0 * l.diagonal().array().log().sum();
        const double log_w = std::log(m.weights(c));
        MatrixXd centered = (x.rowwise() - m.means.row(c)).transpose(); // d x n
        llt.matrixL().solveInPlace(centered);
        for (Index i = 0; i < n; ++i) {
            out(i, c) = log_w - 0.5 * (static_cast<double>(d) * log_2pi + log_det + centered.col(i).squaredNorm());
        }
    }
    return out;
}

// Row-wise log-sum-exp; writes normalized responsibilities into resp.
double e_step(const GmmModel &m, const MatrixXd &x, MatrixXd &resp) {
    resp = weighted_log_prob(m, x);
    double total = 0.0;
    for (Index i = 0; i < resp.rows(); ++i) {
        const double peak = resp.row(i).maxCoeff();
        const double lse = peak + std::log((resp.row(i).array() - peak).exp().sum());
        resp.row(i) = (resp.row(i).array() - lse).exp();
        total += lse;
    }
    return total;
}

MatrixXd global_covariance(const MatrixXd &x, double floor) {
    const VectorXd mu = x.colwise().mean();
    const MatrixXd c = x.rowwise() - mu.transpose();
    const double denom = std::max<double>(1.0, static_cast<double>(x.rows()));
    MatrixXd cov = (c.transpose() * c) / denom;
    cov.diagonal().array() += floor;
    return cov;
}

void m_step(GmmModel &m, const MatrixXd &x, const MatrixXd &resp, const EmOptions &opt, Rng &rng,
            std::size_t &reinits) {
    const Index n = x.rows();
    const Index d = x.cols();
    const Index k = resp.cols();
    VectorXd nk = resp.colwise().sum().transpose();

    m.means.resize(k, d);
    m.covariances.assign(static_cast<std::size_t>(k), MatrixXd::Zero(d, d));
    // A component holding fewer points than its covariance needs sits on a
    // likelihood singularity (variance at the floor); treat it like an empty one.
    const double support = m.type == CovarianceType::Full ? static_cast<double>(d + 1)
                           : m.type == CovarianceType::Tied ? 1e-8
                                                            : 2.0;
    std::vector<bool> empty(static_cast<std::size_t>(k), false);
    for (Index c = 0; c < k; ++c) {
        if (nk(c) < support) {
            empty[static_cast<std::size_t>(c)] = true;
            continue;
        }
        m.means.row(c) = (resp.col(c).transpose() * x) / nk(c);
    }

    MatrixXd tied = MatrixXd::Zero(d, d);
    for (Index c = 0; c < k; ++c) {
        if (empty[static_cast<std::size_t>(c)]) {
            continue;
        }
        const MatrixXd centered = x.rowwise() - m.means.row(c);
        const MatrixXd scatter = centered.transpose() * resp.col(c).asDiagonal() * centered;
        switch (m.type) {
        case CovarianceType::Full:
            m.covariances[static_cast<std::size_t>(c)] = scatter / nk(c);
            break;
        case CovarianceType::Tied:
            tied += scatter;
            break;
        case CovarianceType::Diag:
            m.covariances[static_cast<std::size_t>(c)] = (scatter.diagonal() / nk(c)).asDiagonal();
            break;
        case CovarianceType::Spherical: {
            const double var = scatter.diagonal().sum() / (nk(c) * static_cast<double>(d));
            m.covariances[static_cast<std::size_t>(c)] = MatrixXd::Identity(d, d) * var;
            break;
        }
        }
    }
    if (m.type == CovarianceType::Tied) {
        tied /= static_cast<double>(n);
        for (auto &cov : m.covariances) {
            cov = tied;
        }
    }
    for (auto &cov : m.covariances) {
        cov.diagonal().array() += opt.covariance_floor;
    }

    for (Index c = 0; c < k; ++c) {
        if (!empty[static_cast<std::size_t>(c)]) {
            continue;
        }
        if (++reinits > opt.max_reinit) {
            throw Error("GMM: component collapsed more than " + std::to_string(opt.max_reinit) + " times");
        }
        m.means.row(c) = x.row(static_cast<Index>(rng.below(static_cast<std::size_t>(n))));
        if (m.type != CovarianceType::Tied) {
            m.covariances[static_cast<std::size_t>(c)] = global_covariance(x, opt.covariance_floor);
        }
        nk(c) = 1.0;
    }
    m.weights = nk / nk.sum();
}

void write_row(std::ostream &os, const double *v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        os << (i == 0 ? "" : " ") << v[i];
    }
    os << '\n';
}

std::vector<double> read_values(std::istream &is, std::size_t n, const char *what) {
    std::vector<double> v(n);
    for (double &x : v) {
        if (!(is >> x)) {
            throw Error(std::string("GMM file: truncated ") + what);
        }
    }
    return v;
}

void expect_key(std::istream &is, const std::string &key) {
    std::string got;
    if (!(is >> got) || got != key) {
        throw Error("GMM file: expected '" + key + "', got '" + got + "'");
    }
}

} // namespace

CovarianceType parse_covariance_type(const std::string &text) {
    for (CovarianceType t : kAllTypes) {
        if (to_string(t) == text) {
            return t;
        }
    }
    throw Error("unknown covariance type '" + text + "'");
}

std::string to_string(CovarianceType type) {
    switch (type) {
    case CovarianceType::Spherical:
        return "spherical";
    case CovarianceType::Tied:
        return "tied";
    case CovarianceType::Diag:
        return "diag";
    case CovarianceType::Full:
        return "full";
    }
    return "full";
}

GmmModel gmm_fit_em(const MatrixXd &latents, std::size_t k, CovarianceType type, Rng &rng, const EmOptions &options) {
    const auto n = static_cast<std::size_t>(latents.rows());
    const auto d = static_cast<std::size_t>(latents.cols());
    if (k == 0 || n <= k || d == 0) {
        throw Error("gmm_fit_em: need N > K >= 1 and D >= 1");
    }
    if (!latents.allFinite()) {
        throw Error("gmm_fit_em: non-finite latents");
    }

    std::vector<double> flat(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            flat[i * d + j] = latents(static_cast<Index>(i), static_cast<Index>(j));
        }
    }
    const metrics::KMeansResult km = metrics::kmeans(flat, n, d, k, rng);
    MatrixXd resp = MatrixXd::Zero(static_cast<Index>(n), static_cast<Index>(k));
    for (std::size_t i = 0; i < n; ++i) {
        resp(static_cast<Index>(i), static_cast<Index>(km.assignments[i])) = 1.0;
    }

    GmmModel m;
    m.type = type;
    std::size_t reinits = 0;
    m_step(m, latents, resp, options, rng, reinits);
    double ll = e_step(m, latents, resp);
    m.log_likelihood_history.push_back(ll);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t it = 0; it < options.max_iter; ++it) {
        const std::size_t before = reinits;
        m_step(m, latents, resp, options, rng, reinits);
        const double next = e_step(m, latents, resp);
        m.log_likelihood_history.push_back(next);
        m.iterations = it + 1;
        const double gain = (next - ll) * scale;
        ll = next;
        if (reinits != before) {
            m.reinit_steps.push_back(m.log_likelihood_history.size() - 1);
            continue; // a reinitialization restarts the ascent
        }
        if (gain < options.tolerance) {
            break;
        }
    }
    m.log_likelihood = ll;
    return m;
}

double log_likelihood(const GmmModel &model, const MatrixXd &data) {
    MatrixXd resp;
    return e_step(model, data, resp);
}

std::size_t free_parameters(std::size_t k, std::size_t dim, CovarianceType type) {
    const std::size_t tri = dim * (dim + 1) / 2;
    std::size_t cov = 0;
    switch (type) {
    case CovarianceType::Spherical:
        cov = k;
        break;
    case CovarianceType::Diag:
        cov = k * dim;
        break;
    case CovarianceType::Tied:
        cov = tri;
        break;
    case CovarianceType::Full:
        cov = k * tri;
        break;
    }
    return (k - 1) + k * dim + cov;
}

double bic(const GmmModel &model, const MatrixXd &latents) {
    const double ll = log_likelihood(model, latents);
    const auto p = static_cast<double>(free_parameters(model.components(), model.dim(), model.type));
    return -2.0 * ll + p * std::log(static_cast<double>(latents.rows()));
}

Selection select_gmm(const MatrixXd &latents, std::uint64_t seed, std::size_t max_k, unsigned threads) {
    const auto n = static_cast<std::size_t>(latents.rows());
    const std::size_t top = std::min(max_k, n > 0 ? n - 1 : 0);
    if (top == 0) {
        throw Error("select_gmm: need at least two latent vectors");
    }
    struct Slot {
        GmmModel model;
        GridEntry entry;
    };
    std::vector<Slot> slots(top * kAllTypes.size());
    parallel_for(slots.size(), threads, [&](std::size_t s) {
        const std::size_t k = s / kAllTypes.size() + 1;
        const CovarianceType type = kAllTypes[s % kAllTypes.size()];
        Rng rng = derive_stream(seed, "gmm/" + std::to_string(k) + "/" + to_string(type));
        slots[s].entry = {k, type, std::numeric_limits<double>::infinity(), free_parameters(k, latents.cols(), type)};
        try {
            slots[s].model = gmm_fit_em(latents, k, type, rng);
            slots[s].entry.bic = bic(slots[s].model, latents);
        } catch (const Error &) {
            // Keeps collapsing: this configuration cannot be selected.
        }
    });
    if (std::none_of(slots.begin(), slots.end(), [](const Slot &sl) { return std::isfinite(sl.entry.bic); })) {
        throw Error("select_gmm: every configuration collapsed");
    }

    Selection out;
    std::size_t best = 0;
    for (std::size_t s = 0; s < slots.size(); ++s) {
        out.grid.push_back(slots[s].entry);
        const GridEntry &a = slots[s].entry;
        const GridEntry &b = slots[best].entry;
        if (a.bic < b.bic || (a.bic == b.bic && (a.params < b.params || (a.params == b.params && a.k < b.k)))) {
            best = s;
        }
    }
    out.best = std::move(slots[best].model);
    return out;
}

MatrixXd sample_latents(const GmmModel &model, std::size_t n, Rng &rng) {
    const auto k = static_cast<Index>(model.components());
    const auto d = static_cast<Index>(model.dim());
    std::vector<MatrixXd> roots;
    roots.reserve(static_cast<std::size_t>(k));
    for (const MatrixXd &cov : model.covariances) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (cov + cov.transpose()));
        roots.push_back(eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
    }
    MatrixXd out(static_cast<Index>(n), d);
    VectorXd eps(d);
    for (Index i = 0; i < static_cast<Index>(n); ++i) {
        double u = rng.uniform();
        Index c = k - 1;
        for (Index j = 0; j < k; ++j) {
            u -= model.weights(j);
            if (u < 0.0) {
                c = j;
                break;
            }
        }
        for (Index j = 0; j < d; ++j) {
            eps(j) = rng.normal();
        }
        out.row(i) = model.means.row(c) + (roots[static_cast<std::size_t>(c)] * eps).transpose();
    }
    return out;
}

ImageBatch sample_and_generate(const GmmModel &model, const model::GeneratorParams &generator, std::size_t n,
                               Rng &rng, unsigned threads) {
    const auto &cfg = generator.config();
    if (model.dim() != cfg.n_qubits) {
        throw Error("sample_and_generate: GMM dimension does not match the generator latent size");
    }
    const MatrixXd z = sample_latents(model, n, rng);
    ImageBatch out(n, cfg.image_rows, cfg.image_cols);
    parallel_for(n, threads, [&](std::size_t i) {
        std::vector<double> zi(cfg.n_qubits);
        for (std::size_t j = 0; j < zi.size(); ++j) {
            zi[j] = z(static_cast<Index>(i), static_cast<Index>(j));
        }
        const std::vector<double> img = model::generate(zi, generator);
        std::copy(img.begin(), img.end(), out.image(i).begin());
    });
    return out;
}

void write_gmm(std::ostream &os, const GmmModel &model) {
    const std::size_t k = model.components();
    const std::size_t d = model.dim();
    const auto old_precision = os.precision(17);
    os << "covariance_type " << to_string(model.type) << '\n';
    os << "n_components " << k << '\n';
    os << "dim " << d << '\n';
    os << "weights\n";
    write_row(os, model.weights.data(), k);
    os << "means\n";
    for (std::size_t c = 0; c < k; ++c) {
        const VectorXd row = model.means.row(static_cast<Index>(c));
        write_row(os, row.data(), d);
    }
    os << "covariances\n";
    switch (model.type) {
    case CovarianceType::Spherical: {
        std::vector<double> v(k);
        for (std::size_t c = 0; c < k; ++c) {
            v[c] = model.covariances[c](0, 0);
        }
        write_row(os, v.data(), k);
        break;
    }
    case CovarianceType::Diag:
        for (std::size_t c = 0; c < k; ++c) {
            const VectorXd diag = model.covariances[c].diagonal();
            write_row(os, diag.data(), d);
        }
        break;
    case CovarianceType::Tied:
    case CovarianceType::Full: {
        const std::size_t blocks = model.type == CovarianceType::Tied ? 1 : k;
        for (std::size_t c = 0; c < blocks; ++c) {
            for (std::size_t r = 0; r < d; ++r) {
                const VectorXd row = model.covariances[c].row(static_cast<Index>(r));
                write_row(os, row.data(), d);
            }
        }
        break;
    }
    }
    os.precision(old_precision);
}

GmmModel read_gmm(std::istream &is) {
    GmmModel m;
    std::string type;
    std::size_t k = 0;
    std::size_t d = 0;
    expect_key(is, "covariance_type");
    is >> type;
    m.type = parse_covariance_type(type);
    expect_key(is, "n_components");
    is >> k;
    expect_key(is, "dim");
    is >> d;
    if (!is || k == 0 || d == 0) {
        throw Error("GMM file: bad header");
    }
    const auto ki = static_cast<Index>(k);
    const auto di = static_cast<Index>(d);
    expect_key(is, "weights");
    const auto w = read_values(is, k, "weights");
    m.weights = Eigen::Map<const VectorXd>(w.data(), ki);
    expect_key(is, "means");
    const auto mu = read_values(is, k * d, "means");
    m.means = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(mu.data(), ki, di);
    expect_key(is, "covariances");
    m.covariances.assign(k, MatrixXd::Zero(di, di));
    switch (m.type) {
    case CovarianceType::Spherical: {
        const auto v = read_values(is, k, "covariances");
        for (std::size_t c = 0; c < k; ++c) {
            m.covariances[c] = MatrixXd::Identity(di, di) * v[c];
        }
        break;
    }
    case CovarianceType::Diag: {
        const auto v = read_values(is, k * d, "covariances");
        for (std::size_t c = 0; c < k; ++c) {
            m.covariances[c] = Eigen::Map<const VectorXd>(v.data() + c * d, di).asDiagonal();
        }
        break;
    }
    case CovarianceType::Tied:
    case CovarianceType::Full: {
        const std::size_t blocks = m.type == CovarianceType::Tied ? 1 : k;
        const auto v = read_values(is, blocks * d * d, "covariances");
        for (std::size_t c = 0; c < k; ++c) {
            const std::size_t src = m.type == CovarianceType::Tied ? 0 : c;
            m.covariances[c] =
                Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                    v.data() + src * d * d, di, di);
        }
        break;
    }
    }
    const double wsum = m.weights.sum();
    if (!(std::abs(wsum - 1.0) < 1e-9) || (m.weights.array() < 0.0).any()) {
        throw Error("GMM file: weights do not form a probability vector");
    }
    return m;
}

} // namespace vqgan::infer
