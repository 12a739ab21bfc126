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
 * @file data.hpp
 * IDX ingestion (optionally gzip-compressed), class subsampling and PGM
 * sample sheets.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vqgan/common.hpp"
#include "vqgan/image_batch.hpp"

namespace vqgan::data {

struct Dataset {
    ImageBatch images;
    std::vector<std::uint8_t> labels;
    std::string name;

    std::size_t size() const { return images.size(); }
};

/// Magic 0x00000803; pixel bytes scaled by 1/255.
ImageBatch parse_idx_images(std::span<const std::uint8_t> bytes);
/// Magic 0x00000801.
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_idx_images(const ImageBatch &images);
std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels);

/// Whole file; gzip streams (1f 8b) are inflated transparently.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path);

enum class Split { Train, Test };

/**
 * Loads <dir>/{train,t10k}-{images-idx3,labels-idx1}-ubyte, with or
 * without a .gz suffix.
 */
Dataset load_idx_dataset(const std::filesystem::path &dir, Split split, const std::string &name = "");

/// Uniform draw without replacement among samples whose label is in `classes`.
Dataset subsample(const Dataset &dataset, std::span<const int> classes, std::size_t n, Rng &rng);

/// Number of images per epoch step when the remainder batch is dropped.
inline std::size_t iterations_per_epoch(std::size_t n_samples, std::size_t batch) {
    return batch == 0 ? 0 : n_samples / batch;
}

/**
 * Binary PGM (P5, maxval 255) of the first grid_rows x grid_cols images,
 * tiled row-major with 1-pixel black separators. Missing cells stay black.
 */
void export_image_grid(const ImageBatch &batch, std::size_t grid_rows, std::size_t grid_cols,
                       const std::filesystem::path &path);

struct Pgm {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;
};

Pgm read_pgm(const std::filesystem::path &path);

/**
 * Raw tensor file: "VQT1", then count, rows, cols as little-endian u64,
 * then count*rows*cols little-endian f64 pixels.
 */
void write_tensor(const ImageBatch &batch, const std::filesystem::path &path);
ImageBatch read_tensor(const std::filesystem::path &path);

/// Round-to-nearest byte of a [0, 1] pixel, clamped.
std::uint8_t quantize_pixel(double v);

} // namespace vqgan::data
