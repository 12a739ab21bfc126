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
#include "vqgan/train.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

namespace vqgan::train {

namespace {

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

std::string epoch_tag(std::size_t epoch) {
    std::string s = std::to_string(epoch);
    return std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s;
}

model::GeneratorConfig with_layers(model::GeneratorConfig g, const config::RunConfig &c) {
    g.n_layers = c.train.n_layers;
    g.validate();
    return g;
}

void require_finite(double v, const char *what, std::size_t epoch) {
    if (!std::isfinite(v)) {
        throw Error(std::string("non-finite ") + what + " (" + fmt(v) + ") during epoch " +
                    std::to_string(epoch + 1) + "; aborting training");
    }
}

// Sums per-sample buffers in sample order.
std::vector<double> reduce(const std::vector<std::vector<double>> &parts, std::size_t n) {
    std::vector<double> out(n, 0.0);
    for (const auto &p : parts) {
        for (std::size_t i = 0; i < n; ++i) {
            out[i] += p[i];
        }
    }
    return out;
}

} // namespace

Trainer::Trainer(const config::RunConfig &config, const data::Dataset &dataset, const model::GeneratorConfig &generator)
    : config_(config), dataset_(&dataset), threads_(resolve_threads(config.train.threads)),
      generator_(with_layers(generator, config)) {
    config_.validate();
    const model::GeneratorConfig &g = generator_.config();
    if (dataset.images.rows() != g.image_rows || dataset.images.cols() != g.image_cols) {
        throw Error("Trainer: dataset image size does not match the generator output");
    }
    const config::TrainConfig &tc = config_.train;
    const std::uint64_t seed = tc.seed;
    Rng init = derive_stream(seed, "init");
    model::init_generator(generator_, init);
    if (has_encoder()) {
        model::EncoderConfig ec;
        ec.image_rows = g.image_rows;
        ec.image_cols = g.image_cols;
        ec.latent = g.n_qubits;
        ec.leaky_slope = tc.leaky_slope;
        encoder_ = model::Encoder(ec);
        omega_.assign(encoder_.param_count(), 0.0);
        encoder_.init(omega_, init);
    }
    model::CriticConfig cc;
    cc.input = g.image_size();
    cc.leaky_slope = tc.leaky_slope;
    critic_ = model::Critic(cc);
    phi_.assign(critic_.param_count(), 0.0);
    critic_.init(phi_, init);

    adam_theta_ = nn::AdamState(generator_.count_params(), tc.lr_generator, tc.beta1, tc.beta2, tc.adam_eps);
    adam_omega_ = nn::AdamState(omega_.size(), tc.lr_encoder, tc.beta1, tc.beta2, tc.adam_eps);
    adam_phi_ = nn::AdamState(phi_.size(), tc.lr_critic, tc.beta1, tc.beta2, tc.adam_eps);
    rng_shuffle_ = derive_stream(seed, "shuffle");
    rng_reparam_ = derive_stream(seed, "reparam");
    rng_interp_ = derive_stream(seed, "interp");
    rng_eval_ = derive_stream(seed, "eval");
}

void Trainer::load_parameters(const Checkpoint &ckpt) {
    if (ckpt.theta.size() != generator_.count_params()) {
        throw Error("warm start: generator size differs (" + std::to_string(ckpt.theta.size()) + " vs " +
                    std::to_string(generator_.count_params()) + ")");
    }
    if (ckpt.phi.size() != phi_.size()) {
        throw Error("warm start: critic size differs");
    }
    if (has_encoder() && !ckpt.omega.empty() && ckpt.omega.size() != omega_.size()) {
        throw Error("warm start: encoder size differs");
    }
    generator_.assign(ckpt.theta);
    phi_ = ckpt.phi;
    // A baseline checkpoint carries no encoder; keep the fresh one then.
    if (has_encoder() && !ckpt.omega.empty()) {
        omega_ = ckpt.omega;
    }
}

void Trainer::restore(const Checkpoint &ckpt) {
    load_parameters(ckpt);
    if (has_encoder() && ckpt.omega.size() != omega_.size()) {
        throw Error("restore: checkpoint has no encoder parameters");
    }
    adam_theta_ = ckpt.adam_theta;
    adam_omega_ = ckpt.adam_omega;
    adam_phi_ = ckpt.adam_phi;
    const auto state = [&](const char *label) -> const std::string & {
        const auto it = ckpt.rng.find(label);
        if (it == ckpt.rng.end()) {
            throw Error(std::string("restore: missing RNG stream '") + label + "'");
        }
        return it->second;
    };
    rng_shuffle_.set_state(state("shuffle"));
    rng_reparam_.set_state(state("reparam"));
    rng_interp_.set_state(state("interp"));
    rng_eval_.set_state(state("eval"));
    epoch_ = ckpt.epoch;
}

Checkpoint Trainer::checkpoint() const {
    Checkpoint c;
    c.epoch = epoch_;
    c.theta = generator_.flatten();
    c.omega = omega_;
    c.phi = phi_;
    c.adam_theta = adam_theta_;
    c.adam_omega = adam_omega_;
    c.adam_phi = adam_phi_;
    c.rng = {{"shuffle", rng_shuffle_.state()},
             {"reparam", rng_reparam_.state()},
             {"interp", rng_interp_.state()},
             {"eval", rng_eval_.state()}};
    // The worker count never changes results, so it stays out of the artifact.
    config::RunConfig snapshot = config_;
    snapshot.train.threads = 0;
    c.config = config::to_text(snapshot);
    const model::GeneratorConfig &g = generator_.config();
    c.meta = {{"n_qubits", std::to_string(g.n_qubits)},   {"n_layers", std::to_string(g.n_layers)},
              {"n_subgens", std::to_string(g.n_subgens)}, {"n_ancilla", std::to_string(g.n_ancilla)},
              {"image_rows", std::to_string(g.image_rows)}, {"image_cols", std::to_string(g.image_cols)},
              {"variant", config::to_string(config_.train.variant)}};
    return c;
}

std::vector<double> Trainer::draw_prior(Rng &rng) const {
    std::vector<double> z(generator_.config().n_qubits);
    for (double &v : z) {
        v = config_.train.variant == config::Variant::PqwganUniform ? rng.uniform() : rng.normal();
    }
    return z;
}

std::vector<std::vector<double>> Trainer::draw_noise(std::size_t m) {
    const std::size_t d = generator_.config().n_qubits;
    std::vector<std::vector<double>> noise(m);
    for (auto &row : noise) {
        if (has_encoder()) {
            row.resize(d);
            for (double &v : row) {
                v = rng_reparam_.normal();
            }
        } else {
            row = draw_prior(rng_reparam_);
        }
    }
    return noise;
}

Trainer::Forward Trainer::forward(const std::vector<std::size_t> &batch, const std::vector<std::vector<double>> &noise,
                                  const model::GeneratorParams &gen, std::span<const double> omega) const {
    const std::size_t m = batch.size();
    if (m == 0 || noise.size() != m) {
        throw Error("Trainer: batch and noise sizes differ or are zero");
    }
    Forward f;
    f.x = ImageBatch(0, dataset_->images.rows(), dataset_->images.cols());
    for (std::size_t idx : batch) {
        f.x.push_back(dataset_->images.image(idx));
    }
    f.passes.resize(has_encoder() ? m : 0);
    f.z.resize(m);
    f.traces.resize(m);
    parallel_for(m, threads_, [&](std::size_t i) {
        if (has_encoder()) {
            f.passes[i] = encoder_.forward(omega, f.x.image(i));
            f.z[i] = model::reparameterize(f.passes[i].mu, f.passes[i].logvar, noise[i]);
        } else {
            f.z[i] = noise[i];
        }
        f.traces[i] = model::generate_trace(f.z[i], gen);
    });
    f.fake = ImageBatch(0, f.x.rows(), f.x.cols());
    for (const auto &t : f.traces) {
        f.fake.push_back(t.image);
    }
    if (has_encoder()) {
        std::vector<std::vector<double>> mus(m);
        std::vector<std::vector<double>> lvs(m);
        for (std::size_t i = 0; i < m; ++i) {
            mus[i] = f.passes[i].mu;
            lvs[i] = f.passes[i].logvar;
        }
        f.kl = losses::kl_prior(mus, lvs);
        f.recon = losses::recon_loss(f.x, f.fake);
    } else {
        f.kl = std::numeric_limits<double>::quiet_NaN();
        f.recon = std::numeric_limits<double>::quiet_NaN();
    }
    return f;
}

// The reconstruction backward serves both the encoder and the generator;
// the adversarial backward only reaches theta.
Trainer::GenEncGradients Trainer::generator_encoder_gradients(const Forward &f,
                                                              const std::vector<std::vector<double>> &noise,
                                                              std::span<const double> phi) const {
    const config::TrainConfig &tc = config_.train;
    const std::size_t m = f.x.size();
    const std::size_t d = generator_.config().n_qubits;
    const std::size_t n_theta = generator_.count_params();
    const ImageBatch adv = losses::generator_adversarial_grad(critic_, phi, f.fake, tc.critic_sign, threads_);
    const ImageBatch rgrad = has_encoder() ? losses::recon_loss_grad(f.x, f.fake) : ImageBatch{};
    std::vector<std::vector<double>> g_theta(m);
    std::vector<std::vector<double>> g_omega(m);
    parallel_for(m, threads_, [&](std::size_t i) {
        g_theta[i] = model::generate_backward(f.z[i], generator_, f.traces[i], adv.image(i)).grad_theta;
        if (!has_encoder()) {
            return;
        }
        const model::GeneratorGradient gr = model::generate_backward(f.z[i], generator_, f.traces[i], rgrad.image(i));
        for (std::size_t p = 0; p < n_theta; ++p) {
            g_theta[i][p] += tc.gamma * gr.grad_theta[p];
        }
        auto [gmu, glv] = model::reparameterize_backward(f.passes[i].logvar, noise[i], gr.grad_z);
        const auto [kmu, klv] = losses::kl_prior_grad(f.passes[i].mu, f.passes[i].logvar, m);
        for (std::size_t j = 0; j < d; ++j) {
            gmu[j] += kmu[j];
            glv[j] += klv[j];
        }
        g_omega[i].assign(omega_.size(), 0.0);
        encoder_.backward(omega_, f.passes[i], gmu, glv, g_omega[i]);
    });
    GenEncGradients out;
    out.theta = reduce(g_theta, n_theta);
    if (has_encoder()) {
        out.omega = reduce(g_omega, omega_.size());
    }
    return out;
}

ObjectiveValues Trainer::objectives(const std::vector<std::size_t> &batch,
                                    const std::vector<std::vector<double>> &noise, std::span<const double> interp,
                                    std::span<const double> theta, std::span<const double> omega,
                                    std::span<const double> phi) const {
    const config::TrainConfig &tc = config_.train;
    model::GeneratorParams gen(generator_.config());
    gen.assign(theta);
    const Forward f = forward(batch, noise, gen, omega);
    ObjectiveValues v;
    v.critic = losses::critic_loss(critic_, phi, f.x, f.fake, interp, tc.lambda, tc.critic_sign, false, threads_).loss;
    double mean_fake = 0.0;
    for (std::size_t i = 0; i < f.fake.size(); ++i) {
        mean_fake += critic_.score(phi, f.fake.image(i));
    }
    mean_fake /= static_cast<double>(f.fake.size());
    const double adversarial = tc.critic_sign == losses::CriticSign::Paper ? mean_fake : -mean_fake;
    if (has_encoder()) {
        v.encoder = losses::encoder_objective(f.recon, f.kl);
        v.generator = tc.gamma * f.recon + adversarial;
    } else {
        v.encoder = std::numeric_limits<double>::quiet_NaN();
        v.generator = adversarial;
    }
    return v;
}

ObjectiveGradients Trainer::gradients(const std::vector<std::size_t> &batch,
                                      const std::vector<std::vector<double>> &noise,
                                      std::span<const double> interp) const {
    const config::TrainConfig &tc = config_.train;
    const Forward f = forward(batch, noise, generator_, omega_);
    ObjectiveGradients out;
    const losses::CriticLoss cl =
        losses::critic_loss(critic_, phi_, f.x, f.fake, interp, tc.lambda, tc.critic_sign, true, threads_);
    out.phi = cl.grad;
    GenEncGradients ge = generator_encoder_gradients(f, noise, phi_);
    out.theta = std::move(ge.theta);
    out.omega = std::move(ge.omega);
    out.values = objectives(batch, noise, interp, generator_.flatten(), omega_, phi_);
    return out;
}

IterationStats Trainer::iteration(const std::vector<std::size_t> &batch) {
    const config::TrainConfig &tc = config_.train;
    const std::size_t m = batch.size();
    const std::vector<std::vector<double>> noise = draw_noise(m);

    IterationStats stats;
    Forward f;
    try {
        f = forward(batch, noise, generator_, omega_);
    } catch (const DegeneratePostSelection &e) {
        std::cerr << "warning: skipping step: " << e.what() << '\n';
        stats.skipped = true;
        return stats;
    }
    stats.recon = f.recon;
    stats.kl = f.kl;
    if (has_encoder()) {
        require_finite(f.kl, "KL term", epoch_);
        require_finite(f.recon, "reconstruction loss", epoch_);
    }

    // n_critic steps on the same (X, X'), fresh interpolation weights each time.
    std::vector<double> interp(m);
    for (std::size_t step = 0; step < tc.n_critic; ++step) {
        if (tc.interp_per_sample) {
            for (double &e : interp) {
                e = rng_interp_.uniform();
            }
        } else {
            std::fill(interp.begin(), interp.end(), rng_interp_.uniform());
        }
        const losses::CriticLoss cl =
            losses::critic_loss(critic_, phi_, f.x, f.fake, interp, tc.lambda, tc.critic_sign, true, threads_);
        require_finite(cl.loss, "critic loss", epoch_);
        nn::adam_step(phi_, cl.grad, adam_phi_);
        ++counts_.critic;
        stats.critic_loss = cl.loss;
        stats.gp = cl.gp;
        stats.mean_real = cl.mean_real;
        stats.mean_fake = cl.mean_fake;
    }

    // Encoder and generator from the same forward pass, against the updated critic.
    const GenEncGradients g = generator_encoder_gradients(f, noise, phi_);
    if (has_encoder()) {
        nn::adam_step(omega_, g.omega, adam_omega_);
        ++counts_.encoder;
    }
    std::vector<double> theta = generator_.flatten();
    nn::adam_step(theta, g.theta, adam_theta_);
    generator_.assign(theta);
    ++counts_.generator;
    return stats;
}

EpochStats Trainer::run_epoch() {
    const std::size_t n = dataset_->size();
    const std::size_t m = config_.train.batch_size;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[rng_shuffle_.below(i)]);
    }
    EpochStats st;
    st.epoch = epoch_ + 1;
    st.iterations = data::iterations_per_epoch(n, m);
    std::size_t used = 0;
    for (std::size_t it = 0; it < st.iterations; ++it) {
        const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(it * m),
                                             order.begin() + static_cast<std::ptrdiff_t>((it + 1) * m));
        const IterationStats s = iteration(batch);
        if (s.skipped) {
            ++st.skipped;
            continue;
        }
        ++used;
        st.wasserstein_estimate += std::abs(s.mean_real - s.mean_fake);
        st.recon += s.recon;
        st.kl += s.kl;
    }
    const double inv = used > 0 ? 1.0 / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
    st.wasserstein_estimate *= inv;
    st.recon *= inv;
    st.kl *= inv;
    ++epoch_;
    return st;
}

Eigen::MatrixXd Trainer::collect_latents() {
    if (!has_encoder()) {
        throw Error("collect_latents: the baseline variants have no encoder");
    }
    const std::size_t n = dataset_->size();
    const std::size_t d = generator_.config().n_qubits;
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::vector<std::vector<double>> eps(n);
    if (config_.train.latents == config::LatentMode::Sample) {
        Rng rng = derive_stream(config_.train.seed, "latents/" + std::to_string(epoch_));
        for (auto &e : eps) {
            e.resize(d);
            for (double &v : e) {
                v = rng.normal();
            }
        }
    }
    parallel_for(n, threads_, [&](std::size_t i) {
        const model::Encoder::Pass p = encoder_.forward(omega_, dataset_->images.image(i));
        const std::vector<double> z = eps[i].empty() ? p.mu : model::reparameterize(p.mu, p.logvar, eps[i]);
        for (std::size_t j = 0; j < d; ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = z[j];
        }
    });
    return out;
}

Eigen::MatrixXd Trainer::eval_latents(std::size_t n, infer::GmmModel *chosen) {
    const std::size_t d = generator_.config().n_qubits;
    if (has_encoder()) {
        const Eigen::MatrixXd latents = collect_latents();
        const std::uint64_t gmm_seed = derive_stream(config_.train.seed, "gmm/" + std::to_string(epoch_)).next_u64();
        infer::Selection sel = infer::select_gmm(latents, gmm_seed, 7, threads_);
        Eigen::MatrixXd z = infer::sample_latents(sel.best, n, rng_eval_);
        if (chosen != nullptr) {
            *chosen = std::move(sel.best);
        }
        return z;
    }
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> zi = draw_prior(rng_eval_);
        for (std::size_t j = 0; j < d; ++j) {
            z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = zi[j];
        }
    }
    return z;
}

ImageBatch Trainer::generate(const Eigen::MatrixXd &z) const {
    const model::GeneratorConfig &g = generator_.config();
    const auto n = static_cast<std::size_t>(z.rows());
    ImageBatch out(n, g.image_rows, g.image_cols);
    parallel_for(n, threads_, [&](std::size_t i) {
        std::vector<double> zi(g.n_qubits);
        for (std::size_t j = 0; j < zi.size(); ++j) {
            zi[j] = z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        const std::vector<double> img = model::generate(zi, generator_);
        std::copy(img.begin(), img.end(), out.image(i).begin());
    });
    return out;
}

data::Dataset load_run_dataset(const config::RunConfig &config, data::Split split) {
    const data::Dataset full = data::load_idx_dataset(config.data_dir, split, config.dataset_name);
    Rng rng = derive_stream(config.train.seed, split == data::Split::Train ? "subsample" : "subsample/test");
    return data::subsample(full, config.classes, config.n_samples, rng);
}

std::string metrics_csv_header() { return "epoch,wasserstein_estimate,recon,kl,jsd,ndb_k,ssim,psnr,cosine,fd"; }

std::string metrics_csv_row(const EpochStats &s) {
    const metrics::MetricReport &r = s.metrics;
    return std::to_string(s.epoch) + ',' + fmt(s.wasserstein_estimate) + ',' + fmt(s.recon) + ',' + fmt(s.kl) + ',' +
           fmt(r.jsd) + ',' + fmt(r.ndb_k) + ',' + fmt(r.ssim) + ',' + fmt(r.psnr) + ',' + fmt(r.cosine) + ',' +
           fmt(r.fd);
}

void write_latents(const Eigen::MatrixXd &latents, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    for (Eigen::Index i = 0; i < latents.rows(); ++i) {
        for (Eigen::Index j = 0; j < latents.cols(); ++j) {
            out << (j ? " " : "") << fmt(latents(i, j));
        }
        out << '\n';
    }
}

Eigen::MatrixXd read_latents(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open latents file " + path.string());
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::istringstream ls(line);
        std::vector<double> row;
        std::string tok;
        while (ls >> tok) {
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
                throw Error("latents line " + std::to_string(lineno) + ": bad value '" + tok + "'");
            }
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw Error("latents line " + std::to_string(lineno) + ": ragged row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw Error("latents file " + path.string() + " is empty");
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return out;
}

TrainResult train(const config::RunConfig &config, const data::Dataset &dataset, const EpochCallback &on_epoch,
                  const model::GeneratorConfig &generator) {
    config.validate();
    Trainer trainer(config, dataset, generator);
    if (!config.train.init_from.empty()) {
        trainer.load_parameters(load_checkpoint(config.train.init_from));
    }
    Rng kbins_rng = derive_stream(config.train.seed, "kbins");
    const metrics::Discretizer bins = metrics::Discretizer::fit(dataset.images, config.metric.kbins, kbins_rng);

    const bool write = !config.out_dir.empty();
    const std::filesystem::path out_dir(config.out_dir);
    std::ofstream csv;
    if (write) {
        std::filesystem::create_directories(out_dir);
        csv.open(out_dir / "metrics.csv");
        if (!csv) {
            throw Error("cannot write " + (out_dir / "metrics.csv").string());
        }
        csv << metrics_csv_header() << '\n';
    }

    TrainResult result;
    for (std::size_t e = 0; e < config.train.epochs; ++e) {
        EpochStats st = trainer.run_epoch();
        const ImageBatch samples = trainer.generate(trainer.eval_latents(config.eval_samples));
        st.metrics = metrics::evaluate(dataset.images, samples, bins, config.metric);
        st.metrics.wasserstein_estimate = st.wasserstein_estimate;
        if (write) {
            csv << metrics_csv_row(st) << '\n' << std::flush;
            const std::string tag = epoch_tag(st.epoch);
            if (config.save_checkpoints) {
                save_checkpoint(trainer.checkpoint(), out_dir / ("checkpoint_epoch_" + tag + ".vqg"));
            }
            if (config.save_grids) {
                data::export_image_grid(samples, 8, 8, out_dir / ("samples_epoch_" + tag + ".pgm"));
            }
        }
        result.history.push_back(st);
        if (on_epoch) {
            on_epoch(st);
        }
    }
    if (trainer.has_encoder()) {
        result.latents = trainer.collect_latents();
        if (write) {
            write_latents(result.latents, out_dir / "latents.txt");
        }
    }
    result.final_checkpoint = trainer.checkpoint();
    return result;
}

} // namespace vqgan::train
