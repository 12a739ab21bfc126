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
#include "vqgan/losses.hpp"

#include <cmath>

namespace vqgan::losses {

namespace {

void require_same(const ImageBatch &a, const ImageBatch &b, const char *what) {
    if (!a.same_shape(b)) {
        throw Error(std::string(what) + ": batches differ in shape");
    }
}

struct PenaltyTerm {
    double value = 0.0;
    double score = 0.0;
};

// One interpolated sample: value of (||g|| - 1)^2 and, when grad is non-empty,
// coeff * d/dparams of it.
PenaltyTerm penalty_one(const nn::Sequential &net, std::span<const double> params, std::span<const double> x_hat,
                        double coeff, std::span<double> grad) {
    const auto trace = net.forward_trace(params, x_hat);
    nn::Sequential::Trace deltas;
    const double seed = 1.0;
    net.backward(params, trace, std::span<const double>(&seed, 1), {}, &deltas);
    const std::vector<double> &g = deltas.front();
    double sq = 0.0;
    for (double v : g) {
        sq += v * v;
    }
    const double norm = std::sqrt(sq);
    PenaltyTerm out{(norm - 1.0) * (norm - 1.0), trace.back().front()};
    if (!grad.empty() && norm > 0.0) {
        std::vector<double> r(g.size());
        const double scale = coeff * 2.0 * (norm - 1.0) / norm;
        for (std::size_t i = 0; i < g.size(); ++i) {
            r[i] = scale * g[i];
        }
        net.input_gradient_backward(params, trace, deltas, r, grad);
    }
    return out;
}

double score_with_grad(const nn::Sequential &net, std::span<const double> params, std::span<const double> x,
                       double coeff, std::span<double> grad) {
    const auto trace = net.forward_trace(params, x);
    if (!grad.empty()) {
        net.backward(params, trace, std::span<const double>(&coeff, 1), grad);
    }
    return trace.back().front();
}

} // namespace

CriticSign parse_critic_sign(const std::string &text) {
    if (text == "paper") {
        return CriticSign::Paper;
    }
    if (text == "textbook") {
        return CriticSign::Textbook;
    }
    throw Error("critic_sign must be 'paper' or 'textbook', got '" + text + "'");
}

std::string to_string(CriticSign sign) { return sign == CriticSign::Paper ? "paper" : "textbook"; }

double recon_loss(const ImageBatch &x, const ImageBatch &x_recon) {
    require_same(x, x_recon, "recon_loss");
    if (x.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double s = 0.0;
        const auto a = x.image(i);
        const auto b = x_recon.image(i);
        for (std::size_t p = 0; p < a.size(); ++p) {
            const double d = a[p] - b[p];
            s += d * d;
        }
        total += 0.5 * s;
    }
    return total / static_cast<double>(x.size());
}

ImageBatch recon_loss_grad(const ImageBatch &x, const ImageBatch &x_recon) {
    require_same(x, x_recon, "recon_loss_grad");
    ImageBatch g(x.size(), x.rows(), x.cols());
    const double inv = x.empty() ? 0.0 : 1.0 / static_cast<double>(x.size());
    for (std::size_t p = 0; p < g.pixels().size(); ++p) {
        g.pixels()[p] = (x_recon.pixels()[p] - x.pixels()[p]) * inv;
    }
    return g;
}

double kl_prior(const std::vector<std::vector<double>> &mu, const std::vector<std::vector<double>> &logvar) {
    if (mu.size() != logvar.size()) {
        throw Error("kl_prior: batch size mismatch");
    }
    if (mu.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t b = 0; b < mu.size(); ++b) {
        if (mu[b].size() != logvar[b].size()) {
            throw Error("kl_prior: latent size mismatch");
        }
        double s = 0.0;
        for (std::size_t i = 0; i < mu[b].size(); ++i) {
            s += mu[b][i] * mu[b][i] + std::exp(logvar[b][i]) - 1.0 - logvar[b][i];
        }
        total += 0.5 * s;
    }
    return total / static_cast<double>(mu.size());
}

std::pair<std::vector<double>, std::vector<double>> kl_prior_grad(std::span<const double> mu,
                                                                  std::span<const double> logvar,
                                                                  std::size_t batch) {
    const double inv = 1.0 / static_cast<double>(batch);
    std::vector<double> gm(mu.size());
    std::vector<double> gl(logvar.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        gm[i] = mu[i] * inv;
        gl[i] = 0.5 * (std::exp(logvar[i]) - 1.0) * inv;
    }
    return {std::move(gm), std::move(gl)};
}

ImageBatch interpolate(const ImageBatch &real, const ImageBatch &fake, std::span<const double> eps) {
    require_same(real, fake, "interpolate");
    if (eps.size() != real.size()) {
        throw Error("interpolate: need one epsilon per sample");
    }
    ImageBatch out(real.size(), real.rows(), real.cols());
    for (std::size_t i = 0; i < real.size(); ++i) {
        const auto r = real.image(i);
        const auto f = fake.image(i);
        auto o = out.image(i);
        for (std::size_t p = 0; p < r.size(); ++p) {
            o[p] = eps[i] * r[p] + (1.0 - eps[i]) * f[p];
        }
    }
    return out;
}

double gradient_penalty(const model::Critic &critic, std::span<const double> params, const ImageBatch &real,
                        const ImageBatch &fake, std::span<const double> eps) {
    const ImageBatch x_hat = interpolate(real, fake, eps);
    if (x_hat.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < x_hat.size(); ++i) {
        total += penalty_one(critic.net(), params, x_hat.image(i), 0.0, {}).value;
    }
    return total / static_cast<double>(x_hat.size());
}

CriticLoss critic_loss(const model::Critic &critic, std::span<const double> params, const ImageBatch &real,
                       const ImageBatch &fake, std::span<const double> eps, double lambda, CriticSign sign,
                       bool want_grad, unsigned threads) {
    const ImageBatch x_hat = interpolate(real, fake, eps);
    const std::size_t m = real.size();
    CriticLoss out;
    if (m == 0) {
        throw Error("critic_loss: empty batch");
    }
    const double inv = 1.0 / static_cast<double>(m);
    const double s_real = sign == CriticSign::Paper ? inv : -inv;
    const std::size_t n_params = critic.param_count();

    struct Sample {
        double real = 0.0, fake = 0.0, gp = 0.0;
        std::vector<double> grad;
    };
    std::vector<Sample> samples(m);
    parallel_for(m, threads, [&](std::size_t i) {
        Sample &s = samples[i];
        if (want_grad) {
            s.grad.assign(n_params, 0.0);
        }
        s.real = score_with_grad(critic.net(), params, real.image(i), s_real, s.grad);
        s.fake = score_with_grad(critic.net(), params, fake.image(i), -s_real, s.grad);
        s.gp = penalty_one(critic.net(), params, x_hat.image(i), lambda * inv, s.grad).value;
    });

    for (const Sample &s : samples) {
        out.mean_real += s.real;
        out.mean_fake += s.fake;
        out.gp += s.gp;
    }
    out.mean_real *= inv;
    out.mean_fake *= inv;
    out.gp *= inv;
    const double w = out.mean_real - out.mean_fake;
    out.loss = (sign == CriticSign::Paper ? w : -w) + lambda * out.gp;
    if (want_grad) {
        out.grad.assign(n_params, 0.0);
        for (const Sample &s : samples) {
            for (std::size_t p = 0; p < out.grad.size(); ++p) {
                out.grad[p] += s.grad[p];
            }
        }
    }
    return out;
}

double generator_objective(double recon, double qgan_loss, double gamma) { return gamma * recon - qgan_loss; }

double encoder_objective(double recon, double kl) { return kl + recon; }

ImageBatch generator_adversarial_grad(const model::Critic &critic, std::span<const double> params,
                                      const ImageBatch &fake, CriticSign sign, unsigned threads) {
    ImageBatch g(fake.size(), fake.rows(), fake.cols());
    if (fake.empty()) {
        return g;
    }
    const double coeff = (sign == CriticSign::Paper ? 1.0 : -1.0) / static_cast<double>(fake.size());
    parallel_for(fake.size(), threads, [&](std::size_t i) {
        const std::vector<double> gi = critic.input_gradient(params, fake.image(i));
        auto dst = g.image(i);
        for (std::size_t p = 0; p < gi.size(); ++p) {
            dst[p] = coeff * gi[p];
        }
    });
    return g;
}

} // namespace vqgan::losses
