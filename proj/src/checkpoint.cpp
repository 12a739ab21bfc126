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
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "vqgan/train.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace vqgan::train {

namespace {

constexpr char kMagic[4] = {'V', 'Q', 'G', '1'};

class Writer {
  public:
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void f64s(const std::vector<double> &v) {
        u64(v.size());
        raw(v.data(), v.size() * sizeof(double));
    }
    void text(const std::string &s) { raw(s.data(), s.size()); }
    void raw(const void *p, std::size_t n) {
        const auto *b = static_cast<const std::uint8_t *>(p);
        bytes.insert(bytes.end(), b, b + n);
    }
    std::vector<std::uint8_t> bytes;
};

class Reader {
  public:
    Reader(const std::uint8_t *data, std::size_t size) : data_(data), size_(size) {}
    std::uint32_t u32() { return pod<std::uint32_t>(); }
    std::uint64_t u64() { return pod<std::uint64_t>(); }
    double f64() { return pod<double>(); }
    std::vector<double> f64s() {
        const std::uint64_t n = u64();
        if (n > (size_ - pos_) / sizeof(double)) {
            throw Error("checkpoint: truncated array");
        }
        std::vector<double> v(n);
        take(v.data(), n * sizeof(double));
        return v;
    }
    std::string text(std::size_t n) {
        std::string s(n, '\0');
        take(s.data(), n);
        return s;
    }
    bool done() const { return pos_ == size_; }

  private:
    template <typename T> T pod() {
        T v;
        take(&v, sizeof v);
        return v;
    }
    void take(void *dst, std::size_t n) {
        if (n > size_ - pos_) {
            throw Error("checkpoint: truncated file");
        }
        std::memcpy(dst, data_ + pos_, n);
        pos_ += n;
    }
    const std::uint8_t *data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> adam_bytes(const nn::AdamState &s) {
    Writer w;
    w.u64(s.t);
    w.f64(s.lr);
    w.f64(s.beta1);
    w.f64(s.beta2);
    w.f64(s.eps);
    w.f64s(s.m);
    w.f64s(s.v);
    return w.bytes;
}

nn::AdamState adam_from(const std::vector<std::uint8_t> &b) {
    Reader r(b.data(), b.size());
    nn::AdamState s;
    s.t = r.u64();
    s.lr = r.f64();
    s.beta1 = r.f64();
    s.beta2 = r.f64();
    s.eps = r.f64();
    s.m = r.f64s();
    s.v = r.f64s();
    if (s.m.size() != s.v.size()) {
        throw Error("checkpoint: Adam moment sizes differ");
    }
    return s;
}

std::vector<std::uint8_t> array_bytes(const std::vector<double> &v) {
    Writer w;
    w.f64s(v);
    return w.bytes;
}

std::vector<double> array_from(const std::vector<std::uint8_t> &b) {
    Reader r(b.data(), b.size());
    return r.f64s();
}

// One `key<TAB>value` per line; values must not contain newlines.
std::string map_text(const std::map<std::string, std::string> &m) {
    std::string out;
    for (const auto &[k, v] : m) {
        out += k + '\t' + v + '\n';
    }
    return out;
}

std::map<std::string, std::string> map_from(const std::string &text) {
    std::map<std::string, std::string> m;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw Error("checkpoint: malformed key/value section");
        }
        m[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return m;
}

std::vector<std::uint8_t> as_bytes(const std::string &s) { return {s.begin(), s.end()}; }
std::string as_text(const std::vector<std::uint8_t> &b) { return {b.begin(), b.end()}; }

std::size_t meta_size(const Checkpoint &ckpt, const std::string &key) {
    const auto it = ckpt.meta.find(key);
    if (it == ckpt.meta.end()) {
        throw Error("checkpoint: meta key '" + key + "' missing");
    }
    return std::stoull(it->second);
}

} // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint &ckpt) {
    Writer epoch;
    epoch.u64(ckpt.epoch);
    const std::vector<std::pair<std::string, std::vector<std::uint8_t>>> sections = {
        {"epoch", epoch.bytes},
        {"theta", array_bytes(ckpt.theta)},
        {"omega", array_bytes(ckpt.omega)},
        {"phi", array_bytes(ckpt.phi)},
        {"adam_theta", adam_bytes(ckpt.adam_theta)},
        {"adam_omega", adam_bytes(ckpt.adam_omega)},
        {"adam_phi", adam_bytes(ckpt.adam_phi)},
        {"rng", as_bytes(map_text(ckpt.rng))},
        {"config", as_bytes(ckpt.config)},
        {"meta", as_bytes(map_text(ckpt.meta))},
    };
    Writer w;
    w.raw(kMagic, sizeof kMagic);
    w.u32(ckpt.version);
    w.u32(static_cast<std::uint32_t>(sections.size()));
    // Section table, then payloads in the same order.
    for (const auto &[name, payload] : sections) {
        w.u32(static_cast<std::uint32_t>(name.size()));
        w.text(name);
        w.u64(payload.size());
    }
    for (const auto &[name, payload] : sections) {
        w.raw(payload.data(), payload.size());
    }
    return w.bytes;
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t> &bytes) {
    Reader r(bytes.data(), bytes.size());
    if (r.text(4) != std::string(kMagic, 4)) {
        throw Error("checkpoint: bad magic (not a VQG1 file)");
    }
    Checkpoint ckpt;
    ckpt.version = r.u32();
    if (ckpt.version != kCheckpointVersion) {
        throw Error("checkpoint: version " + std::to_string(ckpt.version) + " is not supported (expected " +
                    std::to_string(kCheckpointVersion) + ")");
    }
    const std::uint32_t n = r.u32();
    std::vector<std::pair<std::string, std::uint64_t>> table;
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t len = r.u32();
        std::string name = r.text(len);
        table.emplace_back(std::move(name), r.u64());
    }
    std::map<std::string, std::vector<std::uint8_t>> payloads;
    for (const auto &[name, size] : table) {
        const std::string raw = r.text(size);
        payloads[name] = as_bytes(raw);
    }
    if (!r.done()) {
        throw Error("checkpoint: trailing bytes");
    }
    const auto need = [&](const std::string &name) -> const std::vector<std::uint8_t> & {
        const auto it = payloads.find(name);
        if (it == payloads.end()) {
            throw Error("checkpoint: missing section '" + name + "'");
        }
        return it->second;
    };
    Reader er(need("epoch").data(), need("epoch").size());
    ckpt.epoch = er.u64();
    ckpt.theta = array_from(need("theta"));
    ckpt.omega = array_from(need("omega"));
    ckpt.phi = array_from(need("phi"));
    ckpt.adam_theta = adam_from(need("adam_theta"));
    ckpt.adam_omega = adam_from(need("adam_omega"));
    ckpt.adam_phi = adam_from(need("adam_phi"));
    ckpt.rng = map_from(as_text(need("rng")));
    ckpt.config = as_text(need("config"));
    ckpt.meta = map_from(as_text(need("meta")));
    return ckpt;
}

void save_checkpoint(const Checkpoint &ckpt, const std::filesystem::path &path) {
    const std::vector<std::uint8_t> bytes = serialize_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary);
    if (!out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
        throw Error("cannot write checkpoint " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open checkpoint " + path.string());
    }
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

model::GeneratorConfig generator_config(const Checkpoint &ckpt) {
    model::GeneratorConfig g;
    g.n_qubits = meta_size(ckpt, "n_qubits");
    g.n_layers = meta_size(ckpt, "n_layers");
    g.n_subgens = meta_size(ckpt, "n_subgens");
    g.n_ancilla = meta_size(ckpt, "n_ancilla");
    g.image_rows = meta_size(ckpt, "image_rows");
    g.image_cols = meta_size(ckpt, "image_cols");
    g.validate();
    return g;
}

model::GeneratorParams generator_params(const Checkpoint &ckpt) {
    model::GeneratorParams params(generator_config(ckpt));
    if (ckpt.theta.size() != params.count_params()) {
        throw Error("checkpoint: theta size does not match the recorded generator geometry");
    }
    params.assign(ckpt.theta);
    return params;
}

} // namespace vqgan::train
