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
#include "vqgan/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

namespace vqgan::data {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    if (offset + 4 > bytes.size()) {
        throw Error("IDX: truncated header");
    }
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::vector<std::uint8_t> &out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t> &in) {
    z_stream zs{};
    // 16 + MAX_WBITS: gzip wrapper only.
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) {
        throw Error("gzip: inflateInit2 failed");
    }
    zs.next_in = const_cast<Bytef *>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    std::vector<std::uint8_t> out;
    std::array<std::uint8_t, 1 << 16> chunk{};
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = chunk.data();
        zs.avail_out = static_cast<uInt>(chunk.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw Error("gzip: corrupt or truncated stream");
        }
        out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw Error("gzip: truncated stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

std::filesystem::path find_idx(const std::filesystem::path &dir, const std::string &stem) {
    for (const auto &candidate : {dir / stem, dir / (stem + ".gz")}) {
        if (std::filesystem::exists(candidate)) {
            return candidate;
        }
    }
    throw Error("missing dataset file " + (dir / stem).string() + "[.gz]");
}

} // namespace

ImageBatch parse_idx_images(std::span<const std::uint8_t> bytes) {
    if (read_be32(bytes, 0) != kImageMagic) {
        throw Error("IDX images: bad magic");
    }
    const std::size_t count = read_be32(bytes, 4);
    const std::size_t rows = read_be32(bytes, 8);
    const std::size_t cols = read_be32(bytes, 12);
    const std::size_t payload = count * rows * cols;
    if (bytes.size() < 16 + payload) {
        throw Error("IDX images: truncated payload");
    }
    std::vector<double> pixels(payload);
    for (std::size_t i = 0; i < payload; ++i) {
        pixels[i] = static_cast<double>(bytes[16 + i]) / 255.0;
    }
    return ImageBatch(count, rows, cols, std::move(pixels));
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
    if (read_be32(bytes, 0) != kLabelMagic) {
        throw Error("IDX labels: bad magic");
    }
    const std::size_t count = read_be32(bytes, 4);
    if (bytes.size() < 8 + count) {
        throw Error("IDX labels: truncated payload");
    }
    return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

std::vector<std::uint8_t> encode_idx_images(const ImageBatch &images) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + images.pixels().size());
    put_be32(out, kImageMagic);
    put_be32(out, static_cast<std::uint32_t>(images.size()));
    put_be32(out, static_cast<std::uint32_t>(images.rows()));
    put_be32(out, static_cast<std::uint32_t>(images.cols()));
    for (double v : images.pixels()) {
        out.push_back(quantize_pixel(v));
    }
    return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels) {
    std::vector<std::uint8_t> out;
    put_be32(out, kLabelMagic);
    put_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.insert(out.end(), labels.begin(), labels.end());
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
        return gunzip(bytes);
    }
    return bytes;
}

Dataset load_idx_dataset(const std::filesystem::path &dir, Split split, const std::string &name) {
    const std::string prefix = split == Split::Train ? "train" : "t10k";
    Dataset ds;
    ds.images = parse_idx_images(read_file_bytes(find_idx(dir, prefix + "-images-idx3-ubyte")));
    ds.labels = parse_idx_labels(read_file_bytes(find_idx(dir, prefix + "-labels-idx1-ubyte")));
    if (ds.labels.size() != ds.images.size()) {
        throw Error("dataset " + dir.string() + ": image and label counts differ");
    }
    ds.name = name.empty() ? dir.filename().string() : name;
    return ds;
}

Dataset subsample(const Dataset &dataset, std::span<const int> classes, std::size_t n, Rng &rng) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < dataset.labels.size(); ++i) {
        if (std::find(classes.begin(), classes.end(), static_cast<int>(dataset.labels[i])) != classes.end()) {
            pool.push_back(i);
        }
    }
    if (pool.size() < n) {
        throw Error("subsample: requested " + std::to_string(n) + " samples but only " +
                    std::to_string(pool.size()) + " match the class filter");
    }
    // Partial Fisher-Yates: the first n slots are a uniform sample.
    for (std::size_t i = 0; i < n; ++i) {
        std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    }
    Dataset out;
    out.name = dataset.name;
    out.images = ImageBatch(0, dataset.images.rows(), dataset.images.cols());
    for (std::size_t i = 0; i < n; ++i) {
        out.images.push_back(dataset.images.image(pool[i]));
        out.labels.push_back(dataset.labels[pool[i]]);
    }
    return out;
}

std::uint8_t quantize_pixel(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void export_image_grid(const ImageBatch &batch, std::size_t grid_rows, std::size_t grid_cols,
                       const std::filesystem::path &path) {
    if (grid_rows == 0 || grid_cols == 0) {
        throw Error("export_image_grid: empty grid");
    }
    const std::size_t h = batch.rows();
    const std::size_t w = batch.cols();
    const std::size_t height = grid_rows * h + (grid_rows - 1);
    const std::size_t width = grid_cols * w + (grid_cols - 1);
    std::vector<std::uint8_t> canvas(height * width, 0);
    const std::size_t shown = std::min(batch.size(), grid_rows * grid_cols);
    for (std::size_t i = 0; i < shown; ++i) {
        const std::size_t top = (i / grid_cols) * (h + 1);
        const std::size_t left = (i % grid_cols) * (w + 1);
        const auto img = batch.image(i);
        for (std::size_t r = 0; r < h; ++r) {
            for (std::size_t c = 0; c < w; ++c) {
                canvas[(top + r) * width + left + c] = quantize_pixel(img[r * w + c]);
            }
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << "P5\n" << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char *>(canvas.data()), static_cast<std::streamsize>(canvas.size()));
}

Pgm read_pgm(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    std::string magic;
    Pgm pgm;
    int maxval = 0;
    if (!(in >> magic >> pgm.width >> pgm.height >> maxval) || magic != "P5" || maxval != 255) {
        throw Error("PGM: unsupported header in " + path.string());
    }
    in.get();
    pgm.pixels.resize(pgm.width * pgm.height);
    if (!in.read(reinterpret_cast<char *>(pgm.pixels.data()), static_cast<std::streamsize>(pgm.pixels.size()))) {
        throw Error("PGM: truncated " + path.string());
    }
    return pgm;
}

void write_tensor(const ImageBatch &batch, const std::filesystem::path &path) {
    static_assert(std::endian::native == std::endian::little, "tensor I/O assumes a little-endian host");
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out.write("VQT1", 4);
    for (std::uint64_t v : {std::uint64_t{batch.size()}, std::uint64_t{batch.rows()}, std::uint64_t{batch.cols()}}) {
        out.write(reinterpret_cast<const char *>(&v), sizeof v);
    }
    out.write(reinterpret_cast<const char *>(batch.pixels().data()),
              static_cast<std::streamsize>(batch.pixels().size() * sizeof(double)));
    if (!out) {
        throw Error("short write to " + path.string());
    }
}

ImageBatch read_tensor(const std::filesystem::path &path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    constexpr std::size_t header = 4 + 3 * sizeof(std::uint64_t);
    if (bytes.size() < header || std::memcmp(bytes.data(), "VQT1", 4) != 0) {
        throw Error("tensor file " + path.string() + ": bad magic or header");
    }
    std::uint64_t dims[3];
    std::memcpy(dims, bytes.data() + 4, sizeof dims);
    if (dims[1] == 0 || dims[2] == 0 || dims[0] > (bytes.size() - header) / (dims[1] * dims[2] * sizeof(double))) {
        throw Error("tensor file " + path.string() + ": truncated payload");
    }
    const std::size_t n = dims[0] * dims[1] * dims[2];
    if (bytes.size() != header + n * sizeof(double)) {
        throw Error("tensor file " + path.string() + ": size does not match header");
    }
    std::vector<double> pixels(n);
    std::memcpy(pixels.data(), bytes.data() + header, n * sizeof(double));
    return ImageBatch(dims[0], dims[1], dims[2], std::move(pixels));
}

} // namespace vqgan::data
