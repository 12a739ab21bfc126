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
// Command-line front end: train, gmm, generate, evaluate, subsample.
//
// Exit status: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "vqgan/config.hpp"
#include "vqgan/data.hpp"
#include "vqgan/infer.hpp"
#include "vqgan/metrics.hpp"
#include "vqgan/train.hpp"

namespace fs = std::filesystem;
using namespace vqgan;

namespace {

// Shortest text that reads back to the same double.
std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

// Configuration problems map to exit code 1, everything else to 2.
struct UsageError : Error {
    using Error::Error;
};

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
};

void add_common(CLI::App *cmd, Common &c) {
    cmd->add_option("-c,--config", c.config_path, "key = value configuration file");
    cmd->add_option("--set", c.overrides, "override one key, as key=value (repeatable)");
}

config::RunConfig resolve_config(const Common &c, std::map<std::string, std::string> extra = {}) {
    try {
        config::RunConfig cfg;
        if (!c.config_path.empty()) {
            cfg = config::load(c.config_path);
        }
        std::map<std::string, std::string> pairs;
        for (const std::string &kv : c.overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) {
                throw Error("--set expects key=value, got '" + kv + "'");
            }
            pairs[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
        for (auto &[k, v] : extra) {
            pairs[k] = v;
        }
        cfg = config::apply_pairs(cfg, pairs);
        cfg.validate();
        return cfg;
    } catch (const UsageError &) {
        throw;
    } catch (const Error &e) {
        throw UsageError(e.what());
    }
}

std::size_t grid_side(std::size_t n) {
    std::size_t s = 1;
    while (s * s < n) {
        ++s;
    }
    return s;
}

int cmd_train(const Common &common, const std::string &variant, const std::string &init_from,
              const std::string &out_dir) {
    std::map<std::string, std::string> extra;
    if (!variant.empty()) {
        extra["variant"] = variant;
    }
    if (!init_from.empty()) {
        extra["init_from"] = init_from;
    }
    if (!out_dir.empty()) {
        extra["out_dir"] = out_dir;
    }
    const config::RunConfig cfg = resolve_config(common, extra);
    std::cout << "seed " << cfg.train.seed << "  variant " << config::to_string(cfg.train.variant) << '\n';
    const data::Dataset ds = train::load_run_dataset(cfg, data::Split::Train);
    std::cout << "training on " << ds.size() << " images of classes";
    for (int c : cfg.classes) {
        std::cout << ' ' << c;
    }
    std::cout << "; " << data::iterations_per_epoch(ds.size(), cfg.train.batch_size) << " iterations per epoch\n";
    train::train(cfg, ds, [](const train::EpochStats &s) {
        std::cout << "epoch " << s.epoch << "  W " << s.wasserstein_estimate << "  recon " << s.recon << "  kl "
                  << s.kl << "  fd " << s.metrics.fd << "  jsd " << s.metrics.jsd << '\n'
                  << std::flush;
    });
    return 0;
}

int cmd_gmm(const std::string &latents_path, const std::string &out_path, std::string bic_path,
            std::uint64_t seed, unsigned threads, std::size_t max_k) {
    const Eigen::MatrixXd latents = train::read_latents(latents_path);
    std::cout << "seed " << seed << '\n';
    const infer::Selection sel = infer::select_gmm(latents, seed, max_k, threads);
    std::ofstream model(out_path);
    if (!model) {
        throw Error("cannot write " + out_path);
    }
    infer::write_gmm(model, sel.best);
    if (bic_path.empty()) {
        bic_path = out_path + ".bic.csv";
    }
    std::ofstream csv(bic_path);
    if (!csv) {
        throw Error("cannot write " + bic_path);
    }
    csv << "k,covariance_type,bic,free_parameters,selected\n";
    for (const infer::GridEntry &g : sel.grid) {
        const bool chosen = g.k == sel.best.components() && g.type == sel.best.type;
        csv << g.k << ',' << infer::to_string(g.type) << ',' << num(g.bic) << ',' << g.params << ',' << (chosen ? 1 : 0)
            << '\n';
    }
    std::cout << "selected K=" << sel.best.components() << " " << infer::to_string(sel.best.type) << " over "
              << sel.grid.size() << " configurations\n";
    return 0;
}

int cmd_generate(const std::string &ckpt_path, const std::string &gmm_path, const std::string &prior,
                 std::size_t n, const std::string &out_dir, std::uint64_t seed, unsigned threads) {
    const train::Checkpoint ckpt = train::load_checkpoint(ckpt_path);
    const model::GeneratorParams gen = train::generator_params(ckpt);
    std::cout << "seed " << seed << '\n';
    if (n == 0) {
        return 0;
    }
    Rng rng = derive_stream(seed, "generate");
    ImageBatch images;
    if (!gmm_path.empty()) {
        std::ifstream in(gmm_path);
        if (!in) {
            throw Error("cannot open GMM file " + gmm_path);
        }
        images = infer::sample_and_generate(infer::read_gmm(in), gen, n, rng, threads);
    } else {
        const auto &g = gen.config();
        images = ImageBatch(n, g.image_rows, g.image_cols);
        std::vector<std::vector<double>> zs(n, std::vector<double>(g.n_qubits));
        for (auto &z : zs) {
            for (double &v : z) {
                v = prior == "uniform" ? rng.uniform() : rng.normal();
            }
        }
        parallel_for(n, threads, [&](std::size_t i) {
            const auto img = model::generate(zs[i], gen);
            std::copy(img.begin(), img.end(), images.image(i).begin());
        });
    }
    fs::create_directories(out_dir);
    data::write_tensor(images, fs::path(out_dir) / "generated.vqt");
    const std::size_t side = grid_side(n);
    data::export_image_grid(images, (n + side - 1) / side, side, fs::path(out_dir) / "generated.pgm");
    std::cout << "wrote " << n << " images to " << out_dir << '\n';
    return 0;
}

int cmd_evaluate(const Common &common, const std::string &generated, const std::string &reconstruct_from,
                 const std::string &out_csv) {
    const config::RunConfig cfg = resolve_config(common);
    const data::Dataset train_set = train::load_run_dataset(cfg, data::Split::Train);
    Rng kbins_rng = derive_stream(cfg.train.seed, "kbins");
    const metrics::Discretizer bins = metrics::Discretizer::fit(train_set.images, cfg.metric.kbins, kbins_rng);

    metrics::MetricReport report;
    std::string mode;
    if (!reconstruct_from.empty()) {
        // Test inputs against their own reconstructions through the encoder mean.
        const train::Checkpoint ckpt = train::load_checkpoint(reconstruct_from);
        const model::GeneratorParams gen = train::generator_params(ckpt);
        const data::Dataset test = train::load_run_dataset(cfg, data::Split::Test);
        model::EncoderConfig ec;
        ec.image_rows = gen.config().image_rows;
        ec.image_cols = gen.config().image_cols;
        ec.latent = gen.config().n_qubits;
        ec.leaky_slope = cfg.train.leaky_slope;
        const model::Encoder enc(ec);
        if (ckpt.omega.size() != enc.param_count()) {
            throw Error("checkpoint has no matching encoder; reconstruction needs a vae-qwgan checkpoint");
        }
        ImageBatch recon(test.size(), ec.image_rows, ec.image_cols);
        parallel_for(test.size(), cfg.train.threads, [&](std::size_t i) {
            const auto pass = enc.forward(ckpt.omega, test.images.image(i));
            const auto img = model::generate(pass.mu, gen);
            std::copy(img.begin(), img.end(), recon.image(i).begin());
        });
        std::vector<std::size_t> pairs(test.size());
        std::iota(pairs.begin(), pairs.end(), std::size_t{0});
        report = metrics::evaluate(test.images, recon, bins, cfg.metric, &pairs);
        mode = "reconstruction";
    } else {
        const ImageBatch gen = data::read_tensor(generated);
        report = metrics::evaluate(train_set.images, gen, bins, cfg.metric);
        mode = "generation";
    }
    std::ostringstream row;
    row << "mode,jsd,ndb_k,ssim,psnr,cosine,fd,kbins,alpha,pairing,seed\n"
        << mode << ',' << num(report.jsd) << ',' << num(report.ndb_k) << ',' << num(report.ssim) << ','
        << num(report.psnr) << ',' << num(report.cosine) << ',' << num(report.fd) << ',' << cfg.metric.kbins << ','
        << num(cfg.metric.alpha) << ','
        << metrics::to_string(cfg.metric.pairing) << ',' << cfg.train.seed << '\n';
    if (out_csv.empty() || out_csv == "-") {
        std::cout << row.str();
    } else {
        std::ofstream out(out_csv);
        if (!(out << row.str())) {
            throw Error("cannot write " + out_csv);
        }
    }
    return 0;
}

int cmd_subsample(const Common &common, const std::string &split, const std::string &out) {
    const config::RunConfig cfg = resolve_config(common);
    if (split != "train" && split != "test") {
        throw UsageError("--split must be train or test");
    }
    const data::Dataset ds = train::load_run_dataset(cfg, split == "train" ? data::Split::Train : data::Split::Test);
    data::write_tensor(ds.images, out);
    std::cout << "seed " << cfg.train.seed << "\nwrote " << ds.size() << " images to " << out << '\n';
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Hybrid quantum-classical image generator: training, GMM inference and evaluation"};
    app.require_subcommand(1);

    Common train_common;
    std::string variant, init_from, out_dir;
    auto *train_cmd = app.add_subcommand("train", "train a model; writes checkpoints, metrics.csv, latents, PGM sheets");
    add_common(train_cmd, train_common);
    train_cmd->add_option("--variant", variant, "vae-qwgan | pqwgan-normal | pqwgan-uniform");
    train_cmd->add_option("--init-from", init_from, "warm-start parameters from a checkpoint");
    train_cmd->add_option("-o,--out", out_dir, "output directory (overrides out_dir)");

    std::string latents_path, gmm_out, bic_out;
    std::uint64_t gmm_seed = 0;
    unsigned gmm_threads = 0;
    std::size_t max_k = 7;
    auto *gmm_cmd = app.add_subcommand("gmm", "fit the BIC-selected Gaussian mixture over collected latents");
    gmm_cmd->add_option("--latents", latents_path, "latents.txt from a training run")->required();
    gmm_cmd->add_option("-o,--out", gmm_out, "output model file")->required();
    gmm_cmd->add_option("--bic-csv", bic_out, "grid scores (default: <out>.bic.csv)");
    gmm_cmd->add_option("--seed", gmm_seed, "random seed");
    gmm_cmd->add_option("--threads", gmm_threads, "worker threads (0 = auto)");
    gmm_cmd->add_option("--max-k", max_k, "largest component count")->check(CLI::Range(1, 64));

    std::string ckpt_path, gmm_path, prior = "normal", gen_out;
    std::size_t n_gen = 64;
    std::uint64_t gen_seed = 0;
    unsigned gen_threads = 0;
    auto *gen_cmd = app.add_subcommand("generate", "sample images from a trained generator");
    gen_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    gen_cmd->add_option("--gmm", gmm_path, "GMM model file (omit to draw from --prior)");
    gen_cmd->add_option("--prior", prior, "latent prior without a GMM")->check(CLI::IsMember({"normal", "uniform"}));
    gen_cmd->add_option("-n", n_gen, "number of images");
    gen_cmd->add_option("-o,--out", gen_out, "output directory")->required();
    gen_cmd->add_option("--seed", gen_seed, "random seed");
    gen_cmd->add_option("--threads", gen_threads, "worker threads (0 = auto)");

    Common eval_common;
    std::string generated, reconstruct_from, eval_out;
    auto *eval_cmd = app.add_subcommand("evaluate", "compute JSD, NDB/K, SSIM, PSNR, cosine and FD");
    add_common(eval_cmd, eval_common);
    auto *g_opt = eval_cmd->add_option("--generated", generated, "generated images (.vqt)");
    auto *r_opt = eval_cmd->add_option("--reconstruct-from", reconstruct_from,
                                       "checkpoint; score test inputs against their reconstructions");
    g_opt->excludes(r_opt);
    eval_cmd->add_option("-o,--out", eval_out, "CSV output (default stdout)");

    Common sub_common;
    std::string split = "train", sub_out;
    auto *sub_cmd = app.add_subcommand("subsample", "write the configured real subset as a .vqt tensor");
    add_common(sub_cmd, sub_common);
    sub_cmd->add_option("--split", split, "train | test");
    sub_cmd->add_option("-o,--out", sub_out, "output tensor file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*train_cmd) {
            return cmd_train(train_common, variant, init_from, out_dir);
        }
        if (*gmm_cmd) {
            return cmd_gmm(latents_path, gmm_out, bic_out, gmm_seed, gmm_threads, max_k);
        }
        if (*gen_cmd) {
            return cmd_generate(ckpt_path, gmm_path, prior, n_gen, gen_out, gen_seed, gen_threads);
        }
        if (*eval_cmd) {
            if (generated.empty() && reconstruct_from.empty()) {
                throw UsageError("evaluate needs --generated or --reconstruct-from");
            }
            return cmd_evaluate(eval_common, generated, reconstruct_from, eval_out);
        }
        if (*sub_cmd) {
            return cmd_subsample(sub_common, split, sub_out);
        }
    } catch (const UsageError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
