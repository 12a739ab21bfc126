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
 * @file nn.hpp
 * Dense / strided-convolution / LeakyReLU kernels with hand-written
 * reverse-mode gradients, a Sequential container over a flat parameter
 * buffer, Kaiming initialization and Adam.
 *
 * Kernels process one sample at a time; batch parallelism lives in the
 * callers, which reduce per-sample gradients in a fixed order.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "vqgan/common.hpp"

namespace vqgan::nn {

struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    std::vector<double> grad; // empty, or same length as data

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape_, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape_, std::vector<double> data_);

    std::size_t numel() const { return data.size(); }
    bool has_grad() const { return !grad.empty(); }
};

std::size_t shape_numel(std::span<const std::size_t> shape);

struct ConvGeometry {
    std::size_t kernel = 4;
    std::size_t stride = 2;
    std::size_t padding = 1;

    std::size_t output_size(std::size_t input) const { return (input + 2 * padding - kernel) / stride + 1; }
};

/// NCHW convolution; weights are [out][in][k][k], bias [out].
Tensor conv2d_forward(const Tensor &input, std::span<const double> weights,
                      std::span<const double> bias, std::size_t out_channels,
                      ConvGeometry geom = {});

/// Accumulates into grad_weights / grad_bias; returns d loss / d input.
Tensor conv2d_backward(const Tensor &input, const Tensor &grad_output, std::span<const double> weights,
                       std::span<double> grad_weights, std::span<double> grad_bias,
                       ConvGeometry geom = {});

/// y = W x + b with W row-major [out][in]. Input shape {N, in} or {in}.
Tensor dense_forward(const Tensor &input, std::span<const double> weights, std::span<const double> bias,
                     std::size_t out_features);

Tensor dense_backward(const Tensor &input, const Tensor &grad_output, std::span<const double> weights,
                      std::span<double> grad_weights, std::span<double> grad_bias);

Tensor leaky_relu(const Tensor &input, double slope);
Tensor leaky_relu_backward(const Tensor &input, const Tensor &grad_output, double slope);

struct Conv2dLayer {
    std::size_t in_channels;
    std::size_t out_channels;
    std::size_t in_h;
    std::size_t in_w;
    ConvGeometry geom;
    std::size_t offset; // weights start; bias follows

    std::size_t weight_count() const { return out_channels * in_channels * geom.kernel * geom.kernel; }
    std::size_t param_count() const { return weight_count() + out_channels; }
    std::size_t out_h() const { return geom.output_size(in_h); }
    std::size_t out_w() const { return geom.output_size(in_w); }
};

struct DenseLayer {
    std::size_t in_features;
    std::size_t out_features;
    std::size_t offset;

    std::size_t weight_count() const { return in_features * out_features; }
    std::size_t param_count() const { return weight_count() + out_features; }
};

struct LeakyReluLayer {
    double slope;
};

using Layer = std::variant<Conv2dLayer, DenseLayer, LeakyReluLayer>;

/**
 * Ordered stack of layers whose parameters live in a caller-owned flat
 * buffer, starting at a fixed offset. A conv layer consumes [C, H, W]; a
 * dense layer consumes whatever flat vector arrives (flattening is free).
 *
 * trace[i] holds the input of layer i and trace.back() the network output.
 */
class Sequential {
  public:
    using Trace = std::vector<std::vector<double>>;

    Sequential() = default;
    Sequential(std::vector<std::size_t> input_shape, std::size_t param_offset);

    Sequential &conv(std::size_t out_channels, ConvGeometry geom = {});
    Sequential &dense(std::size_t out_features);
    Sequential &leaky_relu(double slope);

    std::size_t param_offset() const { return param_offset_; }
    std::size_t param_end() const { return param_end_; }
    std::size_t param_count() const { return param_end_ - param_offset_; }
    std::size_t input_size() const { return shape_numel(input_shape_); }
    std::size_t output_size() const { return shape_numel(current_shape_); }
    const std::vector<Layer> &layers() const { return layers_; }

    Trace forward_trace(std::span<const double> params, std::span<const double> input) const;
    std::vector<double> forward(std::span<const double> params, std::span<const double> input) const;

    /**
     * Reverse pass. Accumulates parameter gradients into grad_params
     * (indexed like params; may be empty to skip) and returns
     * d loss / d input. When deltas is non-null it receives d loss / d trace[i]
     * for every i.
     */
    std::vector<double> backward(std::span<const double> params, const Trace &trace,
                                 std::span<const double> grad_output, std::span<double> grad_params,
                                 Trace *deltas = nullptr) const;

    /**
     * Second-order pass for piecewise-linear stacks (dense + LeakyReLU only).
     * Given deltas from backward() and r = d P / d(deltas[0]) for some scalar
     * P of the input gradient, accumulates d P / d params. Activation
     * patterns are held fixed, so bias and input contributions vanish.
     */
    void input_gradient_backward(std::span<const double> params, const Trace &trace, const Trace &deltas,
                                 std::span<const double> grad_wrt_input_gradient,
                                 std::span<double> grad_params) const;

    /// Kaiming-normal weights (variance 2 / fan_in), zero biases.
    void init_kaiming(std::span<double> params, Rng &rng) const;

  private:
    std::vector<std::size_t> input_shape_;
    std::vector<std::size_t> current_shape_;
    std::size_t param_offset_ = 0;
    std::size_t param_end_ = 0;
    std::vector<Layer> layers_;
};

/// i.i.d. N(0, 2 / fan_in) entries.
Tensor kaiming_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng &rng);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
    double lr = 1e-3;
    double beta1 = 0.0;
    double beta2 = 0.9;
    double eps = 1e-8;

    AdamState() = default;
    AdamState(std::size_t n, double lr_, double beta1_ = 0.0, double beta2_ = 0.9, double eps_ = 1e-8)
        : m(n, 0.0), v(n, 0.0), lr(lr_), beta1(beta1_), beta2(beta2_), eps(eps_) {}
};

/// Bias-corrected Adam update of params in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState &state);

} // namespace vqgan::nn
