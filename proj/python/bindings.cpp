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

// Python bindings. Images cross the boundary as float64 arrays of shape
// (N, rows, cols); latents as (N, D).

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <cstring>

#include "vqgan/common.hpp"
#include "vqgan/config.hpp"
#include "vqgan/data.hpp"
#include "vqgan/infer.hpp"
#include "vqgan/metrics.hpp"
#include "vqgan/model.hpp"
#include "vqgan/qsim.hpp"
#include "vqgan/train.hpp"

namespace py = pybind11;
using namespace vqgan;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

ImageBatch to_batch(const Array &a) {
    if (a.ndim() != 3) {
        throw Error("expected an image array of shape (N, rows, cols)");
    }
    const auto n = static_cast<std::size_t>(a.shape(0));
    const auto r = static_cast<std::size_t>(a.shape(1));
    const auto c = static_cast<std::size_t>(a.shape(2));
    return ImageBatch(n, r, c, std::vector<double>(a.data(), a.data() + n * r * c));
}

Array from_batch(const ImageBatch &b) {
    Array out({b.size(), b.rows(), b.cols()});
    std::memcpy(out.mutable_data(), b.pixels().data(), b.pixels().size() * sizeof(double));
    return out;
}

std::vector<double> to_vector(const Array &a) { return {a.data(), a.data() + a.size()}; }

config::RunConfig run_config(const std::map<std::string, std::string> &overrides) {
    config::RunConfig cfg = config::apply_pairs(config::RunConfig{}, overrides);
    cfg.validate();
    return cfg;
}

py::dict report_dict(const metrics::MetricReport &m) {
    py::dict d;
    d["wasserstein_estimate"] = m.wasserstein_estimate;
    d["jsd"] = m.jsd;
    d["ndb_k"] = m.ndb_k;
    d["ssim"] = m.ssim;
    d["psnr"] = m.psnr;
    d["cosine"] = m.cosine;
    d["fd"] = m.fd;
    return d;
}

py::dict epoch_dict(const train::EpochStats &s) {
    py::dict d = report_dict(s.metrics);
    d["epoch"] = s.epoch;
    d["iterations"] = s.iterations;
    d["skipped"] = s.skipped;
    d["wasserstein_estimate"] = s.wasserstein_estimate;
    d["recon"] = s.recon;
    d["kl"] = s.kl;
    return d;
}

model::GeneratorParams load_generator(const std::string &checkpoint) {
    return train::generator_params(train::load_checkpoint(checkpoint));
}

} // namespace

PYBIND11_MODULE(_vqgan, m) {
    m.doc() = "Hybrid VAE and patch quantum WGAN: simulator, training and evaluation";

    py::register_exception<Error>(m, "VqganError", PyExc_RuntimeError);

    // Circuit level.
    m.def(
        "subgenerator_probs",
        [](const Array &z, const Array &angles, std::size_t n_layers, std::size_t n_ancilla) {
            const std::size_t n = static_cast<std::size_t>(z.size());
            const qsim::SubGenParams params(n_layers, n, to_vector(angles));
            const std::vector<double> zv = to_vector(z);
            return qsim::postselect_probs(qsim::run_subgenerator(zv, params), n_ancilla).probs;
        },
        "Post-selected data-register probabilities of one sub-generator.", py::arg("z"), py::arg("angles"),
        py::arg("n_layers"), py::arg("n_ancilla") = 1);

    m.def(
        "generate",
        [](const Array &z, const std::string &checkpoint) {
            const model::GeneratorParams gen = load_generator(checkpoint);
            const auto &gc = gen.config();
            const std::size_t d = gc.n_qubits;
            if (z.ndim() != 2 || static_cast<std::size_t>(z.shape(1)) != d) {
                throw Error("generate: z must have shape (N, " + std::to_string(d) + ")");
            }
            const auto n = static_cast<std::size_t>(z.shape(0));
            ImageBatch out(n, gc.image_rows, gc.image_cols);
            for (std::size_t i = 0; i < n; ++i) {
                const std::vector<double> img = model::generate({z.data() + i * d, d}, gen);
                std::copy(img.begin(), img.end(), out.image(i).begin());
            }
            return from_batch(out);
        },
        "Images for each latent row under a checkpoint's generator.", py::arg("z"), py::arg("checkpoint"));

    // Configuration, data and training.
    m.def(
        "default_config", [] { return config::parse_key_values(config::to_text(config::RunConfig{})); },
        "Every configuration key with its default value.");

    m.def(
        "load_dataset",
        [](const std::map<std::string, std::string> &overrides, const std::string &split) {
            if (split != "train" && split != "test") {
                throw Error("split must be 'train' or 'test'");
            }
            const data::Dataset ds = train::load_run_dataset(
                run_config(overrides), split == "train" ? data::Split::Train : data::Split::Test);
            return py::make_tuple(from_batch(ds.images), ds.labels);
        },
        "The configured class subset of one split as (images, labels).", py::arg("overrides") = py::dict(),
        py::arg("split") = "train");

    m.def(
        "train",
        [](const std::map<std::string, std::string> &overrides) {
            const config::RunConfig cfg = run_config(overrides);
            const data::Dataset ds = train::load_run_dataset(cfg, data::Split::Train);
            train::TrainResult result;
            {
                py::gil_scoped_release release;
                result = train::train(cfg, ds);
            }
            py::list history;
            for (const auto &s : result.history) {
                history.append(epoch_dict(s));
            }
            py::dict out;
            out["history"] = history;
            out["latents"] = result.latents;
            out["checkpoint"] = py::bytes([&] {
                const auto b = train::serialize_checkpoint(result.final_checkpoint);
                return std::string(b.begin(), b.end());
            }());
            return out;
        },
        "Runs the training loop; returns per-epoch history, latents and checkpoint bytes.",
        py::arg("overrides") = py::dict());

    m.def(
        "load_checkpoint",
        [](const std::string &path) {
            const train::Checkpoint c = train::load_checkpoint(path);
            py::dict d;
            d["epoch"] = c.epoch;
            d["theta"] = c.theta;
            d["omega"] = c.omega;
            d["phi"] = c.phi;
            d["config"] = config::parse_key_values(c.config);
            d["meta"] = c.meta;
            return d;
        },
        py::arg("path"));

    // Latent mixture.
    py::class_<infer::GmmModel>(m, "GaussianMixture")
        .def_property_readonly("covariance_type",
                               [](const infer::GmmModel &g) { return infer::to_string(g.type); })
        .def_readonly("weights", &infer::GmmModel::weights)
        .def_readonly("means", &infer::GmmModel::means)
        .def_readonly("covariances", &infer::GmmModel::covariances)
        .def_readonly("log_likelihood", &infer::GmmModel::log_likelihood)
        .def_readonly("log_likelihood_history", &infer::GmmModel::log_likelihood_history)
        .def_readonly("iterations", &infer::GmmModel::iterations)
        .def_property_readonly("n_components", &infer::GmmModel::components)
        .def("score", [](const infer::GmmModel &g, const Eigen::MatrixXd &x) { return infer::log_likelihood(g, x); })
        .def("bic", [](const infer::GmmModel &g, const Eigen::MatrixXd &x) { return infer::bic(g, x); })
        .def(
            "sample",
            [](const infer::GmmModel &g, std::size_t n, std::uint64_t seed) {
                Rng rng = derive_stream(seed, "generate");
                return infer::sample_latents(g, n, rng);
            },
            py::arg("n"), py::arg("seed") = 0);

    m.def(
        "fit_gmm",
        [](const Eigen::MatrixXd &x, std::size_t k, const std::string &type, std::uint64_t seed) {
            Rng rng(seed);
            return infer::gmm_fit_em(x, k, infer::parse_covariance_type(type), rng);
        },
        py::arg("latents"), py::arg("k"), py::arg("covariance_type") = "full", py::arg("seed") = 0);

    m.def(
        "select_gmm",
        [](const Eigen::MatrixXd &x, std::uint64_t seed, std::size_t max_k) {
            const infer::Selection s = infer::select_gmm(x, seed, max_k);
            py::list grid;
            for (const auto &e : s.grid) {
                grid.append(py::make_tuple(e.k, infer::to_string(e.type), e.bic, e.params));
            }
            return py::make_tuple(s.best, grid);
        },
        "Lowest-BIC mixture and the (k, type, bic, params) grid.", py::arg("latents"), py::arg("seed") = 0,
        py::arg("max_k") = 7);

    // Metrics.
    m.def("jsd", [](const Array &p, const Array &q) { return metrics::jsd(to_vector(p), to_vector(q)); },
          "Jensen-Shannon divergence in bits.", py::arg("p"), py::arg("q"));
    m.def("psnr", [](const Array &x, const Array &y) { return metrics::psnr(to_vector(x), to_vector(y)); });
    m.def("ssim", [](const Array &x, const Array &y) { return metrics::ssim(to_vector(x), to_vector(y)); });
    m.def("cosine_similarity",
          [](const Array &x, const Array &y) { return metrics::cosine_similarity(to_vector(x), to_vector(y)); });
    m.def("frechet_distance",
          [](const Array &real, const Array &gen) { return metrics::frechet_distance(to_batch(real), to_batch(gen)); },
          py::arg("real"), py::arg("generated"));
    m.def(
        "evaluate",
        [](const Array &train_images, const Array &generated, std::size_t kbins, std::uint64_t seed) {
            const ImageBatch real = to_batch(train_images);
            Rng rng = derive_stream(seed, "kbins");
            const auto bins = metrics::Discretizer::fit(real, kbins, rng);
            metrics::MetricOptions opts;
            opts.kbins = kbins;
            return report_dict(metrics::evaluate(real, to_batch(generated), bins, opts));
        },
        "All image metrics of a generated set against training images.", py::arg("train_images"),
        py::arg("generated"), py::arg("kbins") = 20, py::arg("seed") = 0);
}
