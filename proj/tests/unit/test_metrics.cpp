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

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "vqgan/metrics.hpp"

using namespace vqgan;
using namespace vqgan::metrics;

namespace {

std::vector<double> gaussian_cloud(Rng &rng, std::size_t n, std::size_t dim, double center, double spread) {
    std::vector<double> v(n * dim);
    for (double &x : v) {
        x = center + spread * rng.normal();
    }
    return v;
}

ImageBatch random_images(Rng &rng, std::size_t n, std::size_t rows, std::size_t cols) {
    ImageBatch b(n, rows, cols);
    for (double &v : b.pixels()) {
        v = rng.uniform();
    }
    return b;
}

} // namespace

TEST_CASE("k-means") {
    Rng rng(1);
    const auto data = gaussian_cloud(rng, 50, 3, 0.0, 1.0);
    const auto one = kmeans(data, 50, 3, 1, rng);
    for (std::size_t d = 0; d < 3; ++d) {
        double mean = 0.0;
        for (std::size_t i = 0; i < 50; ++i) {
            mean += data[i * 3 + d];
        }
        CHECK(one.centroids[d] == doctest::Approx(mean / 50).epsilon(1e-12));
    }

    auto two = gaussian_cloud(rng, 40, 4, -5.0, 0.3);
    const auto far = gaussian_cloud(rng, 40, 4, 5.0, 0.3);
    two.insert(two.end(), far.begin(), far.end());
    const auto res = kmeans(two, 80, 4, 2, rng);
    for (std::size_t i = 0; i < 80; ++i) {
        CHECK(res.assignments[i] == res.assignments[i < 40 ? 0 : 40]);
    }
    CHECK(res.assignments[0] != res.assignments[40]);

    const auto messy = gaussian_cloud(rng, 200, 5, 0.0, 1.0);
    const auto m = kmeans(messy, 200, 5, 6, rng);
    for (std::size_t i = 1; i < m.objective_history.size(); ++i) {
        CHECK(m.objective_history[i] <= m.objective_history[i - 1] + 1e-9);
    }
}

TEST_CASE("Jensen-Shannon divergence") {
    const std::vector<double> p{3, 1, 4, 1, 5};
    CHECK(jsd(p, p) == 0.0);
    CHECK(jsd(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == doctest::Approx(1.0).epsilon(1e-12));
    // Hand evaluation: M = (3/4, 1/4); 0.5 KL(P||M) + 0.5 KL(Q||M) = 1.5 - 0.75 log2 3.
    CHECK(jsd(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 0}) ==
          doctest::Approx(1.5 - 0.75 * std::log2(3.0)).epsilon(1e-12));
    const std::vector<double> q{1, 1, 0, 2, 7};
    CHECK(jsd(p, q) == doctest::Approx(jsd(q, p)).epsilon(1e-14));
    CHECK(jsd(p, q) > 0.0);
    CHECK(jsd(p, q) < 1.0);
}

TEST_CASE("number of statistically different bins") {
    const std::vector<std::size_t> a{0, 1, 1, 2, 3, 3, 3};
    const std::vector<std::size_t> b{3, 1, 0, 3, 2, 1, 3};
    CHECK(ndb(a, b, 4, 0.05).count == 0);

    const std::vector<std::size_t> real(1000, 0);
    const std::vector<std::size_t> gen(1000, 1);
    const auto r = ndb(real, gen, 20, 0.05);
    CHECK(r.count == 2);
    CHECK(r.over_k == doctest::Approx(2.0 / 20));
    CHECK(ndb(real, gen, 20, 0.0).count == 0);

    CHECK(two_sided_critical_value(0.05) == doctest::Approx(1.959963984540054).epsilon(1e-9));
    Rng rng(2);
    std::vector<std::size_t> x(300);
    std::vector<std::size_t> y(300);
    for (std::size_t i = 0; i < 300; ++i) {
        x[i] = rng.below(10);
        y[i] = rng.below(3) == 0 ? 0 : rng.below(10);
    }
    std::size_t prev = 10;
    for (double alpha : {0.5, 0.2, 0.05, 0.01, 1e-4, 0.0}) {
        const auto res = ndb(x, y, 10, alpha);
        CHECK(res.count <= prev);
        CHECK(res.over_k >= 0.0);
        CHECK(res.over_k <= 1.0);
        prev = res.count;
    }
}

TEST_CASE("PSNR") {
    const std::vector<double> x{0.1, 0.5, 0.9};
    CHECK(psnr(x, x) == kPsnrInfinite);
    CHECK(psnr_from_mse(0.01) == 20.0);
    CHECK(psnr_from_mse(1.0) == 0.0);
    CHECK(psnr_from_mse(0.02) < psnr_from_mse(0.01));
}

TEST_CASE("SSIM") {
    Rng rng(3);
    const auto x = oracle::uniform_vec(rng, 784, 0.0, 1.0);
    const auto y = oracle::uniform_vec(rng, 784, 0.0, 1.0);
    CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ssim(x, y) == ssim(y, x));
    CHECK(ssim(x, y) >= -1.0);
    CHECK(ssim(x, y) <= 1.0);

    const double mu = 0.3;
    const double mv = 0.7;
    const double c1 = 0.01 * 0.01;
    const std::vector<double> a(784, mu);
    const std::vector<double> b(784, mv);
    CHECK(ssim(a, b) == doctest::Approx((2 * mu * mv + c1) / (mu * mu + mv * mv + c1)).epsilon(1e-12));
}

TEST_CASE("rescaled cosine similarity") {
    const std::vector<double> x{1.0, 2.0, -0.5};
    CHECK(cosine_similarity(x, x) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 3}) == 0.5);
    CHECK(cosine_similarity(x, std::vector<double>{-1.0, -2.0, 0.5}) == 0.0);
}

TEST_CASE("Frechet distance") {
    Eigen::VectorXd m0(1), m1(1);
    m0 << 0.0;
    m1 << 1.0;
    const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
    CHECK(std::abs(frechet_distance_gaussian(m0, one, m1, one) - 1.0) <= 1e-9);

    Rng rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::MatrixXd a(3, 3), b(3, 3);
        Eigen::VectorXd u(3), v(3);
        for (Eigen::Index i = 0; i < 3; ++i) {
            u(i) = rng.normal();
            v(i) = rng.normal();
            for (Eigen::Index j = 0; j < 3; ++j) {
                a(i, j) = rng.normal();
                b(i, j) = rng.normal();
            }
        }
        const Eigen::MatrixXd s1 = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(3, 3);
        const Eigen::MatrixXd s2 = b * b.transpose() + 0.1 * Eigen::MatrixXd::Identity(3, 3);
        const double expected = oracle::frechet(u, s1, v, s2);
        CHECK(std::abs(frechet_distance_gaussian(u, s1, v, s2) - expected) <= 1e-6 * std::abs(expected));
    }

    const ImageBatch imgs = random_images(rng, 40, 4, 4);
    const double self = frechet_distance(imgs, imgs);
    CHECK(self >= 0.0);
    CHECK(self <= 1e-6);
    CHECK(frechet_distance(imgs, random_images(rng, 40, 4, 4)) > 0.0);
    CHECK_THROWS_AS(frechet_distance(random_images(rng, 1, 4, 4), imgs), Error);
}

TEST_CASE("pairing generated images to real ones") {
    Rng rng(5);
    const ImageBatch real = random_images(rng, 5, 2, 3);
    ImageBatch subset(0, 2, 3);
    subset.push_back(real.image(3));
    subset.push_back(real.image(1));
    CHECK(pair_generated_to_real(subset, real) == std::vector<std::size_t>{3, 1});

    const ImageBatch single = random_images(rng, 1, 2, 3);
    CHECK(pair_generated_to_real(real, single) == std::vector<std::size_t>(5, 0));

    const ImageBatch gen = random_images(rng, 3, 2, 3);
    const auto pairs = pair_generated_to_real(gen, real);
    for (std::size_t g = 0; g < 3; ++g) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < 5; ++r) {
            double d = 0.0;
            for (std::size_t p = 0; p < 6; ++p) {
                d += (gen.image(g)[p] - real.image(r)[p]) * (gen.image(g)[p] - real.image(r)[p]);
            }
            if (d < best_d) {
                best_d = d;
                best = r;
            }
        }
        CHECK(pairs[g] == best);
    }
    CHECK(pair_generated_to_real(gen, real, PairingPolicy::Index) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("evaluation pipeline") {
    Rng rng(6);
    ImageBatch train(0, 4, 4);
    for (std::size_t i = 0; i < 60; ++i) {
        std::vector<double> img(16);
        const double base = (i % 3) * 0.3;
        for (double &v : img) {
            v = base + 0.1 * rng.uniform();
        }
        train.push_back(img);
    }
    const Discretizer bins = Discretizer::fit(train, 5, rng);
    const MetricOptions opts;

    const MetricReport self = evaluate(train, train, bins, opts);
    CHECK(self.jsd == 0.0);
    CHECK(self.ndb_k == 0.0);
    CHECK(self.fd <= 1e-6);
    CHECK(self.ssim == doctest::Approx(1.0));
    CHECK(self.psnr == kPsnrInfinite);
    CHECK(self.cosine == doctest::Approx(1.0));

    // Reversed copy: nearest pairing recovers the own copy, index pairing does not.
    ImageBatch rev(0, 4, 4);
    for (std::size_t i = 60; i-- > 0;) {
        rev.push_back(train.image(i));
    }
    MetricOptions by_index = opts;
    by_index.pairing = PairingPolicy::Index;
    const MetricReport a = evaluate(train, rev, bins, opts);
    const MetricReport b = evaluate(train, rev, bins, by_index);
    CHECK(a.jsd == b.jsd);
    CHECK(a.ndb_k == b.ndb_k);
    CHECK(a.fd == b.fd);
    CHECK(a.psnr != b.psnr);
    CHECK(a.ssim != b.ssim);

    const std::vector<std::size_t> own(60, 7);
    const MetricReport forced = evaluate(train, rev, bins, opts, &own);
    CHECK(forced.psnr < a.psnr);
}
