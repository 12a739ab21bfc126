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
#include "vqgan/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace vqgan::config {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T> T parse_number(const std::string &key, const std::string &value) {
    T out{};
    const char *end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) {
        throw Error("config: '" + key + "' expects a number, got '" + value + "'");
    }
    return out;
}

bool parse_bool(const std::string &key, const std::string &value) {
    if (value == "true" || value == "1" || value == "yes") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no") {
        return false;
    }
    throw Error("config: '" + key + "' expects true or false, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string &key, const std::string &value) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_number<int>(key, trim(item)));
    }
    return out;
}

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

using Setter = std::function<void(RunConfig &, const std::string &, const std::string &)>;
using Getter = std::function<std::string(const RunConfig &)>;

struct Field {
    const char *key;
    Setter set;
    Getter get;
};

template <typename T> Field number(const char *key, T TrainConfig::*member) {
    return {key, [member](RunConfig &c, const std::string &k, const std::string &v) {
                c.train.*member = parse_number<T>(k, v);
            },
            [member](const RunConfig &c) {
                if constexpr (std::is_floating_point_v<T>) {
                    return fmt(c.train.*member);
                } else {
                    return std::to_string(c.train.*member);
                }
            }};
}

const std::vector<Field> &fields() {
    static const std::vector<Field> table = {
        number("epochs", &TrainConfig::epochs),
        number("batch_size", &TrainConfig::batch_size),
        number("n_critic", &TrainConfig::n_critic),
        number("lambda", &TrainConfig::lambda),
        number("gamma", &TrainConfig::gamma),
        number("lr_generator", &TrainConfig::lr_generator),
        number("lr_encoder", &TrainConfig::lr_encoder),
        number("lr_critic", &TrainConfig::lr_critic),
        number("beta1", &TrainConfig::beta1),
        number("beta2", &TrainConfig::beta2),
        number("adam_eps", &TrainConfig::adam_eps),
        number("leaky_slope", &TrainConfig::leaky_slope),
        number("n_layers", &TrainConfig::n_layers),
        number("seed", &TrainConfig::seed),
        number("threads", &TrainConfig::threads),
        {"critic_sign", [](RunConfig &c, const std::string &, const std::string &v) {
             c.train.critic_sign = losses::parse_critic_sign(v);
         },
         [](const RunConfig &c) { return losses::to_string(c.train.critic_sign); }},
        {"interp_eps",
         [](RunConfig &c, const std::string &k, const std::string &v) {
             if (v != "per_sample" && v != "per_batch") {
                 throw Error("config: '" + k + "' must be per_sample or per_batch");
             }
             c.train.interp_per_sample = v == "per_sample";
         },
         [](const RunConfig &c) { return std::string(c.train.interp_per_sample ? "per_sample" : "per_batch"); }},
        {"latents",
         [](RunConfig &c, const std::string &k, const std::string &v) {
             if (v != "mean" && v != "sample") {
                 throw Error("config: '" + k + "' must be mean or sample");
             }
             c.train.latents = v == "mean" ? LatentMode::Mean : LatentMode::Sample;
         },
         [](const RunConfig &c) { return std::string(c.train.latents == LatentMode::Mean ? "mean" : "sample"); }},
        {"variant", [](RunConfig &c, const std::string &, const std::string &v) { c.train.variant = parse_variant(v); },
         [](const RunConfig &c) { return to_string(c.train.variant); }},
        {"init_from", [](RunConfig &c, const std::string &, const std::string &v) { c.train.init_from = v; },
         [](const RunConfig &c) { return c.train.init_from; }},
        {"data_dir", [](RunConfig &c, const std::string &, const std::string &v) { c.data_dir = v; },
         [](const RunConfig &c) { return c.data_dir; }},
        {"dataset_name", [](RunConfig &c, const std::string &, const std::string &v) { c.dataset_name = v; },
         [](const RunConfig &c) { return c.dataset_name; }},
        {"classes",
         [](RunConfig &c, const std::string &k, const std::string &v) { c.classes = parse_int_list(k, v); },
         [](const RunConfig &c) {
             std::string s;
             for (std::size_t i = 0; i < c.classes.size(); ++i) {
                 s += (i ? "," : "") + std::to_string(c.classes[i]);
             }
             return s;
         }},
        {"n_samples",
         [](RunConfig &c, const std::string &k, const std::string &v) {
             c.n_samples = parse_number<std::size_t>(k, v);
         },
         [](const RunConfig &c) { return std::to_string(c.n_samples); }},
        {"eval_samples",
         [](RunConfig &c, const std::string &k, const std::string &v) {
             c.eval_samples = parse_number<std::size_t>(k, v);
         },
         [](const RunConfig &c) { return std::to_string(c.eval_samples); }},
        {"kbins",
         [](RunConfig &c, const std::string &k, const std::string &v) {
             c.metric.kbins = parse_number<std::size_t>(k, v);
         },
         [](const RunConfig &c) { return std::to_string(c.metric.kbins); }},
        {"alpha",
         [](RunConfig &c, const std::string &k, const std::string &v) { c.metric.alpha = parse_number<double>(k, v); },
         [](const RunConfig &c) { return fmt(c.metric.alpha); }},
        {"pairing",
         [](RunConfig &c, const std::string &, const std::string &v) { c.metric.pairing = metrics::parse_pairing(v); },
         [](const RunConfig &c) { return metrics::to_string(c.metric.pairing); }},
        {"out_dir", [](RunConfig &c, const std::string &, const std::string &v) { c.out_dir = v; },
         [](const RunConfig &c) { return c.out_dir; }},
        {"save_checkpoints",
         [](RunConfig &c, const std::string &k, const std::string &v) { c.save_checkpoints = parse_bool(k, v); },
         [](const RunConfig &c) { return std::string(c.save_checkpoints ? "true" : "false"); }},
        {"save_grids",
         [](RunConfig &c, const std::string &k, const std::string &v) { c.save_grids = parse_bool(k, v); },
         [](const RunConfig &c) { return std::string(c.save_grids ? "true" : "false"); }},
    };
    return table;
}

} // namespace

Variant parse_variant(const std::string &text) {
    if (text == "vae-qwgan") {
        return Variant::VaeQwgan;
    }
    if (text == "pqwgan-normal") {
        return Variant::PqwganNormal;
    }
    if (text == "pqwgan-uniform") {
        return Variant::PqwganUniform;
    }
    throw Error("unknown variant '" + text + "' (expected vae-qwgan, pqwgan-normal or pqwgan-uniform)");
}

std::string to_string(Variant v) {
    switch (v) {
    case Variant::VaeQwgan:
        return "vae-qwgan";
    case Variant::PqwganNormal:
        return "pqwgan-normal";
    case Variant::PqwganUniform:
        return "pqwgan-uniform";
    }
    return "vae-qwgan";
}

void TrainConfig::validate() const {
    if (epochs < 1) {
        throw Error("config: epochs must be >= 1");
    }
    if (batch_size < 1) {
        throw Error("config: batch_size must be >= 1");
    }
    if (n_critic < 1) {
        throw Error("config: n_critic must be >= 1");
    }
    if (!(lr_generator > 0.0) || !(lr_encoder > 0.0) || !(lr_critic > 0.0)) {
        throw Error("config: learning rates must be > 0");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw Error("config: beta1 and beta2 must lie in [0, 1)");
    }
    if (!(adam_eps > 0.0) || !(lambda >= 0.0) || !(gamma >= 0.0) || !(leaky_slope >= 0.0)) {
        throw Error("config: adam_eps must be > 0; lambda, gamma and leaky_slope must be >= 0");
    }
    if (n_layers < 1) {
        throw Error("config: n_layers must be >= 1");
    }
}

void RunConfig::validate() const {
    train.validate();
    if (classes.empty()) {
        throw Error("config: classes must list at least one label");
    }
    for (int c : classes) {
        if (c < 0 || c > 9) {
            throw Error("config: class labels must lie in [0, 9]");
        }
    }
    if (n_samples < train.batch_size) {
        throw Error("config: n_samples must be at least batch_size");
    }
    if (eval_samples < 2) {
        throw Error("config: eval_samples must be >= 2 (FD needs a covariance)");
    }
    if (metric.kbins < 1 || metric.kbins > n_samples) {
        throw Error("config: kbins must lie in [1, n_samples]");
    }
    if (!(metric.alpha >= 0.0 && metric.alpha <= 1.0)) {
        throw Error("config: alpha must lie in [0, 1]");
    }
}

std::map<std::string, std::string> parse_key_values(const std::string &text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string body = trim(line);
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw Error("config line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        std::string key = trim(std::string_view(body).substr(0, eq));
        std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) {
            throw Error("config line " + std::to_string(lineno) + ": empty key");
        }
        if (!out.emplace(key, value).second) {
            throw Error("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
    }
    return out;
}

RunConfig apply_pairs(RunConfig base, const std::map<std::string, std::string> &pairs) {
    for (const auto &[key, value] : pairs) {
        bool found = false;
        for (const Field &f : fields()) {
            if (key == f.key) {
                f.set(base, key, value);
                found = true;
                break;
            }
        }
        if (!found) {
            throw Error("config: unknown key '" + key + "'");
        }
    }
    return base;
}

RunConfig load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig c = apply_pairs(RunConfig{}, parse_key_values(ss.str()));
    c.validate();
    return c;
}

std::string to_text(const RunConfig &config) {
    std::string out;
    for (const Field &f : fields()) {
        out += std::string(f.key) + " = " + f.get(config) + "\n";
    }
    return out;
}

std::vector<std::string> known_keys() {
    std::vector<std::string> out;
    for (const Field &f : fields()) {
        out.emplace_back(f.key);
    }
    return out;
}

} // namespace vqgan::config
