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
 * @file config.hpp
 * Run configuration: a flat UTF-8 text file of `key = value` lines with
 * `#` comments. Unknown keys and malformed values are rejected before any
 * work starts.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vqgan/losses.hpp"
#include "vqgan/metrics.hpp"

namespace vqgan::config {

enum class Variant { VaeQwgan, PqwganNormal, PqwganUniform };
Variant parse_variant(const std::string &text);
std::string to_string(Variant v);

enum class LatentMode { Mean, Sample };

struct TrainConfig {
    std::size_t epochs = 15;
    std::size_t batch_size = 8;
    std::size_t n_critic = 5;
    double lambda = 10.0;
    double gamma = 0.0005;
    double lr_generator = 0.01;
    double lr_encoder = 0.0003;
    double lr_critic = 0.0005;
    double beta1 = 0.0;
    double beta2 = 0.9;
    double adam_eps = 1e-8;
    double leaky_slope = 0.2;
    std::size_t n_layers = 12;
    std::uint64_t seed = 0;
    losses::CriticSign critic_sign = losses::CriticSign::Paper;
    bool interp_per_sample = true; // false: one epsilon per critic step
    LatentMode latents = LatentMode::Mean;
    Variant variant = Variant::VaeQwgan;
    unsigned threads = 0; // 0 = hardware concurrency
    std::string init_from;

    void validate() const;
};

struct RunConfig {
    TrainConfig train;
    std::string data_dir = "data/mnist5k";
    std::string dataset_name = "mnist";
    std::vector<int> classes{0, 1};
    std::size_t n_samples = 2600;
    std::size_t eval_samples = 500;
    metrics::MetricOptions metric;
    std::string out_dir = "run";
    bool save_checkpoints = true;
    bool save_grids = true;

    void validate() const;
};

/// Raw pairs in file order; duplicate keys are an error.
std::map<std::string, std::string> parse_key_values(const std::string &text);

/// Applies pairs on top of `base`; unknown keys throw.
RunConfig apply_pairs(RunConfig base, const std::map<std::string, std::string> &pairs);

RunConfig load(const std::filesystem::path &path);

/// Canonical text form; `apply_pairs(RunConfig{}, parse_key_values(to_text(c)))` returns c.
std::string to_text(const RunConfig &config);

/// Lists every accepted key.
std::vector<std::string> known_keys();

} // namespace vqgan::config
