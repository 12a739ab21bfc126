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
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "vqgan/infer.hpp"

using namespace vqgan;
using namespace vqgan::infer;

namespace {

// Isotropic clusters of `per` points around the given centers.
Eigen::MatrixXd clusters(Rng &rng, const std::vector<Eigen::VectorXd> &centers, std::size_t per, double spread) {
    const Eigen::Index d = centers.front().size();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(centers.size() * per), d);
    Eigen::Index row = 0;
    for (const auto &c : centers) {
        for (std::size_t i = 0; i < per; ++i, ++row) {
            for (Eigen::Index j = 0; j < d; ++j) {
                x(row, j) = c(j) + spread * rng.normal();
            }
        }
    }
    return x;
}

Eigen::VectorXd filled(Eigen::Index d, double v) { return Eigen::VectorXd::Constant(d, v); }

// Likelihood never decreases between reinitializations.
bool monotone(const GmmModel &m) {
    for (std::size_t i = 1; i < m.log_likelihood_history.size(); ++i) {
        const bool restart = std::find(m.reinit_steps.begin(), m.reinit_steps.end(), i) != m.reinit_steps.end();
        if (!restart && m.log_likelihood_history[i] < m.log_likelihood_history[i - 1] - 1e-9) {
            return false;
        }
    }
    return true;
}

constexpr CovarianceType kTypes[] = {CovarianceType::Spherical, CovarianceType::Tied, CovarianceType::Diag,
                                     CovarianceType::Full};

} // namespace

TEST_CASE("single component fit is the sample moments") {
    Rng rng(1);
    Eigen::MatrixXd x(200, 3);
    for (Eigen::Index i = 0; i < 200; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = 0.5 * x(i, 0) + rng.normal();
        x(i, 2) = 2.0 + 0.3 * rng.normal();
    }
    const GmmModel m = gmm_fit_em(x, 1, CovarianceType::Full, rng);
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / 200.0;
    CHECK((m.means.row(0) - mean).norm() <= 1e-10);
    CHECK((m.covariances[0] - cov).cwiseAbs().maxCoeff() <= 2e-6);
    CHECK(m.weights(0) == doctest::Approx(1.0));

    // Closed-form Gaussian log-likelihood at the fitted moments.
    const Eigen::LLT<Eigen::MatrixXd> llt(m.covariances[0]);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    double ll = 0.0;
    for (Eigen::Index i = 0; i < 200; ++i) {
        const Eigen::VectorXd r = (x.row(i) - m.means.row(0)).transpose();
        ll += -0.5 * (3 * std::log(2 * std::numbers::pi) + logdet + r.dot(llt.solve(r)));
    }
    CHECK(log_likelihood(m, x) == doctest::Approx(ll).epsilon(1e-10));
}

TEST_CASE("EM recovers separated clusters and never decreases the likelihood") {
    Rng rng(2);
    const Eigen::MatrixXd x = clusters(rng, {filled(7, -3.0), filled(7, 3.0)}, 150, 0.5);
    for (CovarianceType t : kTypes) {
        const GmmModel m = gmm_fit_em(x, 2, t, rng);
        CHECK(m.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
        const Eigen::Index lo = m.means(0, 0) < m.means(1, 0) ? 0 : 1;
        CHECK((m.means.row(lo).transpose() - filled(7, -3.0)).cwiseAbs().maxCoeff() < 0.1 + 0.5 * 0.3);
        CHECK((m.means.row(1 - lo).transpose() - filled(7, 3.0)).cwiseAbs().maxCoeff() < 0.1 + 0.5 * 0.3);
        CHECK(monotone(m));
        for (const auto &c : m.covariances) {
            CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c).eigenvalues().minCoeff() >= kCovarianceFloor * 0.999);
        }
    }

    // Overlapping, heavier fit: monotone on every configuration of the grid.
    const Eigen::MatrixXd y = clusters(rng, {filled(7, 0.0), filled(7, 0.8), filled(7, -0.5)}, 60, 1.0);
    for (std::size_t k = 1; k <= 5; ++k) {
        for (CovarianceType t : kTypes) {
            CHECK(monotone(gmm_fit_em(y, k, t, rng)));
        }
    }
    CHECK_THROWS_AS(gmm_fit_em(y.topRows(3), 3, CovarianceType::Full, rng), Error);
}

TEST_CASE("a component collapsing onto one point is reinitialized") {
    Rng rng(7);
    Eigen::MatrixXd x = clusters(rng, {filled(7, -3.0), filled(7, 3.0)}, 60, 0.5);
    x.conservativeResize(x.rows() + 1, Eigen::NoChange);
    x.row(x.rows() - 1) = filled(7, 40.0).transpose(); // isolated outlier
    // Either the refit escapes the singularity or the fit gives up with an error.
    for (CovarianceType t : {CovarianceType::Spherical, CovarianceType::Diag, CovarianceType::Full}) {
        try {
            const GmmModel m = gmm_fit_em(x, 3, t, rng);
            CHECK(monotone(m));
            for (const auto &c : m.covariances) {
                CHECK(c.diagonal().minCoeff() > 1e-3);
            }
        } catch (const Error &e) {
            CHECK(std::string(e.what()).find("collapsed") != std::string::npos);
        }
    }
    const Selection s = select_gmm(x, 3);
    for (const auto &c : s.best.covariances) {
        CHECK(c.diagonal().minCoeff() > 1e-3);
    }
    CHECK(std::isfinite(bic(s.best, x)));
}

TEST_CASE("BIC parameter counts") {
    for (std::size_t k = 1; k <= 7; ++k) {
        CHECK(free_parameters(k, 7, CovarianceType::Spherical) == (k - 1) + 7 * k + k);
        CHECK(free_parameters(k, 7, CovarianceType::Diag) == (k - 1) + 7 * k + 7 * k);
        CHECK(free_parameters(k, 7, CovarianceType::Tied) == (k - 1) + 7 * k + 28);
        CHECK(free_parameters(k, 7, CovarianceType::Full) == (k - 1) + 7 * k + 28 * k);
    }

    Rng rng(3);
    Eigen::MatrixXd x(50, 1);
    for (Eigen::Index i = 0; i < 50; ++i) {
        x(i, 0) = 1.0 + 2.0 * rng.normal();
    }
    const GmmModel m = gmm_fit_em(x, 1, CovarianceType::Spherical, rng);
    CHECK(free_parameters(1, 1, CovarianceType::Spherical) == 2);
    CHECK(bic(m, x) == doctest::Approx(-2.0 * log_likelihood(m, x) + 2.0 * std::log(50.0)).epsilon(1e-14));

    const Eigen::MatrixXd two = clusters(rng, {filled(7, -2.0), filled(7, 2.0)}, 100, 0.5);
    const GmmModel k1 = gmm_fit_em(two, 1, CovarianceType::Full, rng);
    const GmmModel k2 = gmm_fit_em(two, 2, CovarianceType::Full, rng);
    CHECK(bic(k2, two) < bic(k1, two));
}

TEST_CASE("model selection over the grid") {
    Rng rng(4);
    int blob_k1 = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng data(seed + 10);
        const Eigen::MatrixXd blob = clusters(data, {filled(7, 0.5)}, 200, 0.2);
        const Selection s = select_gmm(blob, seed);
        CHECK(s.grid.size() == 28);
        blob_k1 += s.best.components() == 1 ? 1 : 0;
    }
    CHECK(blob_k1 >= 9);

    Eigen::VectorXd a = filled(7, 0.0);
    Eigen::VectorXd b = filled(7, 0.0);
    Eigen::VectorXd c = filled(7, 0.0);
    a(0) = 4.0;
    b(1) = 4.0;
    c(2) = -4.0;
    const Eigen::MatrixXd three = clusters(rng, {a, b, c}, 100, 0.4);
    const Selection s = select_gmm(three, 7);
    CHECK(s.best.components() == 3);

    // Grid order: K-major, types in declaration order; the winner has the lowest BIC.
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        CHECK(s.grid[i].k == i / 4 + 1);
        CHECK(s.grid[i].type == kTypes[i % 4]);
        CHECK(s.grid[i].bic >= bic(s.best, three) - 1e-9);
    }
    const Selection again = select_gmm(three, 7, 7, 3);
    CHECK(again.best.means == s.best.means);
}

TEST_CASE("sampling from a fitted mixture") {
    GmmModel m;
    m.type = CovarianceType::Full;
    m.weights = Eigen::VectorXd::Ones(1);
    m.means = Eigen::MatrixXd(1, 7);
    m.means << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7;
    m.covariances = {Eigen::MatrixXd::Zero(7, 7)};
    Rng rng(5);
    const Eigen::MatrixXd z = sample_latents(m, 5, rng);
    for (Eigen::Index i = 0; i < 5; ++i) {
        CHECK(z.row(i) == m.means.row(0));
    }

    model::GeneratorParams gen(model::GeneratorConfig{});
    model::init_generator(gen, rng);
    const ImageBatch imgs = sample_and_generate(m, gen, 3, rng);
    CHECK(imgs.size() == 3);
    CHECK(imgs.rows() == 28);
    CHECK(imgs.cols() == 28);
    for (double v : imgs.pixels()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(std::equal(imgs.image(0).begin(), imgs.image(0).end(), imgs.image(2).begin()));
    CHECK(sample_and_generate(m, gen, 0, rng).size() == 0);

    // Component frequencies: separated unit-variance components, 1e5 draws.
    GmmModel mix;
    mix.type = CovarianceType::Spherical;
    mix.weights = Eigen::Vector3d(0.2, 0.5, 0.3);
    mix.means = Eigen::MatrixXd::Zero(3, 2);
    mix.means(1, 0) = 100.0;
    mix.means(2, 0) = 200.0;
    mix.covariances.assign(3, Eigen::MatrixXd::Identity(2, 2));
    const Eigen::MatrixXd draws = sample_latents(mix, 100000, rng);
    std::array<double, 3> freq{};
    for (Eigen::Index i = 0; i < draws.rows(); ++i) {
        freq[static_cast<std::size_t>(std::lround(draws(i, 0) / 100.0))] += 1.0 / 100000;
    }
    for (Eigen::Index k = 0; k < 3; ++k) {
        CHECK(std::abs(freq[static_cast<std::size_t>(k)] - mix.weights(k)) <= 0.01);
    }

    Rng r1(9), r2(9);
    CHECK(sample_latents(mix, 50, r1) == sample_latents(mix, 50, r2));
}

TEST_CASE("text export round-trips") {
    Rng rng(6);
    const Eigen::MatrixXd x = clusters(rng, {filled(7, -1.0), filled(7, 1.0)}, 40, 0.3);
    for (CovarianceType t : kTypes) {
        const GmmModel m = gmm_fit_em(x, 2, t, rng);
        std::stringstream ss;
        write_gmm(ss, m);
        const GmmModel back = read_gmm(ss);
        CHECK(back.type == t);
        CHECK(back.weights == m.weights);
        CHECK(back.means == m.means);
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(back.covariances[k] == m.covariances[k]);
        }
    }
    std::stringstream bad("covariance_type full\nn_components two\n");
    CHECK_THROWS_AS(read_gmm(bad), Error);
}
