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
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vqgan/common.hpp"

namespace vqgan {

/// Row-major stack of grayscale images, pixels nominally in [0, 1].
class ImageBatch {
  public:
    ImageBatch() = default;
    ImageBatch(std::size_t count, std::size_t rows, std::size_t cols)
        : count_(count), rows_(rows), cols_(cols), pixels_(count * rows * cols, 0.0) {}
    ImageBatch(std::size_t count, std::size_t rows, std::size_t cols, std::vector<double> pixels)
        : count_(count), rows_(rows), cols_(cols), pixels_(std::move(pixels)) {
        if (pixels_.size() != count * rows * cols) {
            throw Error("ImageBatch: pixel buffer does not match count x rows x cols");
        }
    }

    std::size_t size() const { return count_; }
    bool empty() const { return count_ == 0; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t image_size() const { return rows_ * cols_; }

    std::span<const double> image(std::size_t i) const { return {pixels_.data() + i * image_size(), image_size()}; }
    std::span<double> image(std::size_t i) { return {pixels_.data() + i * image_size(), image_size()}; }

    const std::vector<double> &pixels() const { return pixels_; }
    std::vector<double> &pixels() { return pixels_; }

    void push_back(std::span<const double> img) {
        if (img.size() != image_size()) {
            throw Error("ImageBatch::push_back: image size mismatch");
        }
        pixels_.insert(pixels_.end(), img.begin(), img.end());
        ++count_;
    }

    bool same_shape(const ImageBatch &other) const {
        return count_ == other.count_ && rows_ == other.rows_ && cols_ == other.cols_;
    }

  private:
    std::size_t count_ = 0;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> pixels_;
};

} // namespace vqgan
