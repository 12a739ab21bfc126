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
#include "vqgan/nn.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace vqgan::nn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

struct ConvShape {
    std::size_t in_c, in_h, in_w, out_c, out_h, out_w;
};

void conv_forward_one(const double *in, const double *w, const double *b, double *out, const ConvShape &s,
                      const ConvGeometry &g) {
    const auto k = g.kernel;
    for (std::size_t o = 0; o < s.out_c; ++o) {
        double *out_plane = out + o * s.out_h * s.out_w;
        for (std::size_t i = 0; i < s.out_h * s.out_w; ++i) {
            out_plane[i] = b[o];
        }
        for (std::size_t c = 0; c < s.in_c; ++c) {
            const double *in_plane = in + c * s.in_h * s.in_w;
            const double *wk = w + (o * s.in_c + c) * k * k;
            for (std::size_t y = 0; y < s.out_h; ++y) {
                for (std::size_t x = 0; x < s.out_w; ++x) {
                    double acc = 0.0;
                    for (std::size_t ky = 0; ky < k; ++ky) {
                        const auto iy = static_cast<std::ptrdiff_t>(y * g.stride + ky) -
                                        static_cast<std::ptrdiff_t>(g.padding);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(s.in_h)) {
                            continue;
                        }
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            const auto ix = static_cast<std::ptrdiff_t>(x * g.stride + kx) -
                                            static_cast<std::ptrdiff_t>(g.padding);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(s.in_w)) {
                                continue;
                            }
                            acc += wk[ky * k + kx] * in_plane[iy * s.in_w + ix];
                        }
                    }
                    out_plane[y * s.out_w + x] += acc;
                }
            }
        }
    }
}

void conv_backward_one(const double *in, const double *grad_out, const double *w, double *grad_w,
                       double *grad_b, double *grad_in, const ConvShape &s, const ConvGeometry &g) {
    const auto k = g.kernel;
    for (std::size_t o = 0; o < s.out_c; ++o) {
        const double *go = grad_out + o * s.out_h * s.out_w;
        if (grad_b != nullptr) {
            double acc = 0.0;
            for (std::size_t i = 0; i < s.out_h * s.out_w; ++i) {
                acc += go[i];
            }
            grad_b[o] += acc;
        }
        for (std::size_t c = 0; c < s.in_c; ++c) {
            const double *in_plane = in + c * s.in_h * s.in_w;
            double *gi_plane = grad_in + c * s.in_h * s.in_w;
            const double *wk = w + (o * s.in_c + c) * k * k;
            double *gwk = grad_w != nullptr ? grad_w + (o * s.in_c + c) * k * k : nullptr;
            for (std::size_t y = 0; y < s.out_h; ++y) {
                for (std::size_t x = 0; x < s.out_w; ++x) {
                    const double gv = go[y * s.out_w + x];
                    for (std::size_t ky = 0; ky < k; ++ky) {
                        const auto iy = static_cast<std::ptrdiff_t>(y * g.stride + ky) -
                                        static_cast<std::ptrdiff_t>(g.padding);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(s.in_h)) {
                            continue;
                        }
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            const auto ix = static_cast<std::ptrdiff_t>(x * g.stride + kx) -
                                            static_cast<std::ptrdiff_t>(g.padding);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(s.in_w)) {
                                continue;
                            }
                            const std::size_t idx = iy * s.in_w + ix;
                            if (gwk != nullptr) {
                                gwk[ky * k + kx] += gv * in_plane[idx];
                            }
                            gi_plane[idx] += gv * wk[ky * k + kx];
                        }
                    }
                }
            }
        }
    }
}

void dense_forward_one(const double *in, const double *w, const double *b, double *out, std::size_t n_in,
                       std::size_t n_out) {
    for (std::size_t o = 0; o < n_out; ++o) {
        const double *row = w + o * n_in;
        double acc = 0.0;
        for (std::size_t j = 0; j < n_in; ++j) {
            acc += row[j] * in[j];
        }
        out[o] = (b != nullptr ? b[o] : 0.0) + acc;
    }
}

void dense_backward_one(const double *in, const double *grad_out, const double *w, double *grad_w,
                        double *grad_b, double *grad_in, std::size_t n_in, std::size_t n_out) {
    for (std::size_t o = 0; o < n_out; ++o) {
        const double g = grad_out[o];
        if (g == 0.0) {
            continue;
        }
        const double *row = w + o * n_in;
        if (grad_b != nullptr) {
            grad_b[o] += g;
        }
        if (grad_w != nullptr) {
            double *grow = grad_w + o * n_in;
            for (std::size_t j = 0; j < n_in; ++j) {
                grow[j] += g * in[j];
            }
        }
        for (std::size_t j = 0; j < n_in; ++j) {
            grad_in[j] += g * row[j];
        }
    }
}

void check_span(std::size_t got, std::size_t want, const char *what) {
    if (got != want) {
        throw Error(std::string("shape mismatch in ") + what + ": expected " + std::to_string(want) +
                    ", got " + std::to_string(got));
    }
}

ConvShape conv_shape_of(const Tensor &input, std::size_t out_channels, const ConvGeometry &geom,
                        std::size_t &batch) {
    if (input.shape.size() != 4) {
        throw Error("conv2d: input must be NCHW");
    }
    if (input.shape[2] + 2 * geom.padding < geom.kernel || input.shape[3] + 2 * geom.padding < geom.kernel) {
        throw Error("conv2d: input smaller than kernel");
    }
    batch = input.shape[0];
    return {input.shape[1],
            input.shape[2],
            input.shape[3],
            out_channels,
            geom.output_size(input.shape[2]),
            geom.output_size(input.shape[3])};
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape_, double fill)
    : shape(std::move(shape_)), data(shape_numel(shape), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    check_span(data.size(), shape_numel(shape), "Tensor");
}

std::size_t shape_numel(std::span<const std::size_t> shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor conv2d_forward(const Tensor &input, std::span<const double> weights, std::span<const double> bias,
                      std::size_t out_channels, ConvGeometry geom) {
    std::size_t batch = 0;
    const ConvShape s = conv_shape_of(input, out_channels, geom, batch);
    check_span(weights.size(), s.out_c * s.in_c * geom.kernel * geom.kernel, "conv2d weights");
    check_span(bias.size(), s.out_c, "conv2d bias");
    Tensor out({batch, s.out_c, s.out_h, s.out_w});
    const std::size_t in_stride = s.in_c * s.in_h * s.in_w;
    const std::size_t out_stride = s.out_c * s.out_h * s.out_w;
    for (std::size_t n = 0; n < batch; ++n) {
        conv_forward_one(input.data.data() + n * in_stride, weights.data(), bias.data(),
                         out.data.data() + n * out_stride, s, geom);
    }
    return out;
}

Tensor conv2d_backward(const Tensor &input, const Tensor &grad_output, std::span<const double> weights,
                       std::span<double> grad_weights, std::span<double> grad_bias, ConvGeometry geom) {
    std::size_t batch = 0;
    const ConvShape s = conv_shape_of(input, grad_output.shape.at(1), geom, batch);
    check_span(grad_output.numel(), batch * s.out_c * s.out_h * s.out_w, "conv2d grad_output");
    check_span(weights.size(), s.out_c * s.in_c * geom.kernel * geom.kernel, "conv2d weights");
    check_span(grad_weights.size(), weights.size(), "conv2d grad_weights");
    check_span(grad_bias.size(), s.out_c, "conv2d grad_bias");
    Tensor grad_in(input.shape);
    const std::size_t in_stride = s.in_c * s.in_h * s.in_w;
    const std::size_t out_stride = s.out_c * s.out_h * s.out_w;
    for (std::size_t n = 0; n < batch; ++n) {
        conv_backward_one(input.data.data() + n * in_stride, grad_output.data.data() + n * out_stride,
                          weights.data(), grad_weights.data(), grad_bias.data(),
                          grad_in.data.data() + n * in_stride, s, geom);
    }
    return grad_in;
}

Tensor dense_forward(const Tensor &input, std::span<const double> weights, std::span<const double> bias,
                     std::size_t out_features) {
    const std::size_t n_in = input.shape.empty() ? 0 : input.shape.back();
    const std::size_t batch = n_in == 0 ? 0 : input.numel() / n_in;
    check_span(weights.size(), n_in * out_features, "dense weights");
    check_span(bias.size(), out_features, "dense bias");
    std::vector<std::size_t> shape = input.shape;
    shape.back() = out_features;
    Tensor out(shape);
    for (std::size_t n = 0; n < batch; ++n) {
        dense_forward_one(input.data.data() + n * n_in, weights.data(), bias.data(),
                          out.data.data() + n * out_features, n_in, out_features);
    }
    return out;
}

Tensor dense_backward(const Tensor &input, const Tensor &grad_output, std::span<const double> weights,
                      std::span<double> grad_weights, std::span<double> grad_bias) {
    const std::size_t n_in = input.shape.back();
    const std::size_t n_out = grad_output.shape.back();
    const std::size_t batch = input.numel() / n_in;
    check_span(weights.size(), n_in * n_out, "dense weights");
    check_span(grad_weights.size(), weights.size(), "dense grad_weights");
    check_span(grad_bias.size(), n_out, "dense grad_bias");
    check_span(grad_output.numel(), batch * n_out, "dense grad_output");
    Tensor grad_in(input.shape);
    for (std::size_t n = 0; n < batch; ++n) {
        dense_backward_one(input.data.data() + n * n_in, grad_output.data.data() + n * n_out, weights.data(),
                           grad_weights.data(), grad_bias.data(), grad_in.data.data() + n * n_in, n_in, n_out);
    }
    return grad_in;
}

Tensor leaky_relu(const Tensor &input, double slope) {
    Tensor out(input.shape);
    for (std::size_t i = 0; i < input.numel(); ++i) {
        const double x = input.data[i];
        out.data[i] = x >= 0.0 ? x : slope * x;
    }
    return out;
}

Tensor leaky_relu_backward(const Tensor &input, const Tensor &grad_output, double slope) {
    check_span(grad_output.numel(), input.numel(), "leaky_relu grad_output");
    Tensor grad_in(input.shape);
    for (std::size_t i = 0; i < input.numel(); ++i) {
        grad_in.data[i] = input.data[i] >= 0.0 ? grad_output.data[i] : slope * grad_output.data[i];
    }
    return grad_in;
}

Sequential::Sequential(std::vector<std::size_t> input_shape, std::size_t param_offset)
    : input_shape_(input_shape), current_shape_(std::move(input_shape)), param_offset_(param_offset),
      param_end_(param_offset) {}

Sequential &Sequential::conv(std::size_t out_channels, ConvGeometry geom) {
    if (current_shape_.size() != 3) {
        throw Error("Sequential::conv: expects a [C, H, W] input");
    }
    Conv2dLayer layer{current_shape_[0], out_channels, current_shape_[1], current_shape_[2], geom, param_end_};
    if (layer.in_h + 2 * geom.padding < geom.kernel || layer.in_w + 2 * geom.padding < geom.kernel) {
        throw Error("Sequential::conv: input smaller than kernel");
    }
    param_end_ += layer.param_count();
    current_shape_ = {out_channels, layer.out_h(), layer.out_w()};
    layers_.emplace_back(layer);
    return *this;
}

Sequential &Sequential::dense(std::size_t out_features) {
    DenseLayer layer{shape_numel(current_shape_), out_features, param_end_};
    param_end_ += layer.param_count();
    current_shape_ = {out_features};
    layers_.emplace_back(layer);
    return *this;
}

Sequential &Sequential::leaky_relu(double slope) {
    layers_.emplace_back(LeakyReluLayer{slope});
    return *this;
}

Sequential::Trace Sequential::forward_trace(std::span<const double> params, std::span<const double> input) const {
    check_span(input.size(), input_size(), "Sequential input");
    if (params.size() < param_end_) {
        throw Error("Sequential: parameter buffer too short");
    }
    Trace trace;
    trace.reserve(layers_.size() + 1);
    trace.emplace_back(input.begin(), input.end());
    for (const Layer &layer : layers_) {
        const std::vector<double> &in = trace.back();
        std::vector<double> out;
        std::visit(Overloaded{
                       [&](const Conv2dLayer &c) {
                           out.assign(c.out_channels * c.out_h() * c.out_w(), 0.0);
                           const ConvShape s{c.in_channels, c.in_h, c.in_w, c.out_channels, c.out_h(), c.out_w()};
                           conv_forward_one(in.data(), params.data() + c.offset,
                                            params.data() + c.offset + c.weight_count(), out.data(), s, c.geom);
                       },
                       [&](const DenseLayer &d) {
                           out.assign(d.out_features, 0.0);
                           dense_forward_one(in.data(), params.data() + d.offset,
                                             params.data() + d.offset + d.weight_count(), out.data(),
                                             d.in_features, d.out_features);
                       },
                       [&](const LeakyReluLayer &r) {
                           out.resize(in.size());
                           for (std::size_t i = 0; i < in.size(); ++i) {
                               out[i] = in[i] >= 0.0 ? in[i] : r.slope * in[i];
                           }
                       },
                   },
                   layer);
        trace.push_back(std::move(out));
    }
    return trace;
}

std::vector<double> Sequential::forward(std::span<const double> params, std::span<const double> input) const {
    return std::move(forward_trace(params, input).back());
}

std::vector<double> Sequential::backward(std::span<const double> params, const Trace &trace,
                                         std::span<const double> grad_output, std::span<double> grad_params,
                                         Trace *deltas) const {
    if (trace.size() != layers_.size() + 1) {
        throw Error("Sequential::backward: trace does not match the network");
    }
    check_span(grad_output.size(), trace.back().size(), "Sequential grad_output");
    const bool want_params = !grad_params.empty();
    if (want_params && grad_params.size() < param_end_) {
        throw Error("Sequential::backward: gradient buffer too short");
    }
    if (deltas != nullptr) {
        deltas->assign(trace.size(), {});
        deltas->back().assign(grad_output.begin(), grad_output.end());
    }
    std::vector<double> grad(grad_output.begin(), grad_output.end());
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const std::vector<double> &in = trace[li];
        std::vector<double> grad_in(in.size(), 0.0);
        std::visit(Overloaded{
                       [&](const Conv2dLayer &c) {
                           const ConvShape s{c.in_channels, c.in_h, c.in_w, c.out_channels, c.out_h(), c.out_w()};
                           conv_backward_one(in.data(), grad.data(), params.data() + c.offset,
                                             want_params ? grad_params.data() + c.offset : nullptr,
                                             want_params ? grad_params.data() + c.offset + c.weight_count()
                                                         : nullptr,
                                             grad_in.data(), s, c.geom);
                       },
                       [&](const DenseLayer &d) {
                           dense_backward_one(in.data(), grad.data(), params.data() + d.offset,
                                              want_params ? grad_params.data() + d.offset : nullptr,
                                              want_params ? grad_params.data() + d.offset + d.weight_count()
                                                          : nullptr,
                                              grad_in.data(), d.in_features, d.out_features);
                       },
                       [&](const LeakyReluLayer &r) {
                           for (std::size_t i = 0; i < in.size(); ++i) {
                               grad_in[i] = in[i] >= 0.0 ? grad[i] : r.slope * grad[i];
                           }
                       },
                   },
                   layers_[li]);
        grad = std::move(grad_in);
        if (deltas != nullptr) {
            (*deltas)[li] = grad;
        }
    }
    return grad;
}

void Sequential::input_gradient_backward(std::span<const double> params, const Trace &trace,
                                         const Trace &deltas, std::span<const double> grad_wrt_input_gradient,
                                         std::span<double> grad_params) const {
    if (deltas.size() != layers_.size() + 1 || trace.size() != layers_.size() + 1) {
        throw Error("input_gradient_backward: trace/deltas do not match the network");
    }
    check_span(grad_wrt_input_gradient.size(), deltas.front().size(), "input_gradient_backward seed");
    if (grad_params.size() < param_end_) {
        throw Error("input_gradient_backward: gradient buffer too short");
    }
    // deltas[i] = J_i^T deltas[i+1]; push r_i = dP/d deltas[i] forward as r_{i+1} = J_i r_i.
    std::vector<double> r(grad_wrt_input_gradient.begin(), grad_wrt_input_gradient.end());
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        std::vector<double> next;
        std::visit(Overloaded{
                       [&](const Conv2dLayer &) {
                           throw Error("input_gradient_backward: convolution layers are not supported");
                       },
                       [&](const DenseLayer &d) {
                           const std::vector<double> &delta_out = deltas[li + 1];
                           double *gw = grad_params.data() + d.offset;
                           for (std::size_t o = 0; o < d.out_features; ++o) {
                               const double g = delta_out[o];
                               if (g == 0.0) {
                                   continue;
                               }
                               double *grow = gw + o * d.in_features;
                               for (std::size_t j = 0; j < d.in_features; ++j) {
                                   grow[j] += g * r[j];
                               }
                           }
                           next.assign(d.out_features, 0.0);
                           dense_forward_one(r.data(), params.data() + d.offset, nullptr, next.data(),
                                             d.in_features, d.out_features);
                       },
                       [&](const LeakyReluLayer &lr) {
                           const std::vector<double> &in = trace[li];
                           next.resize(r.size());
                           for (std::size_t i = 0; i < r.size(); ++i) {
                               next[i] = in[i] >= 0.0 ? r[i] : lr.slope * r[i];
                           }
                       },
                   },
                   layers_[li]);
        r = std::move(next);
    }
}

void Sequential::init_kaiming(std::span<double> params, Rng &rng) const {
    if (params.size() < param_end_) {
        throw Error("init_kaiming: parameter buffer too short");
    }
    for (const Layer &layer : layers_) {
        std::visit(Overloaded{
                       [&](const Conv2dLayer &c) {
                           const std::size_t fan_in = c.in_channels * c.geom.kernel * c.geom.kernel;
                           const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
                           for (std::size_t i = 0; i < c.weight_count(); ++i) {
                               params[c.offset + i] = sd * rng.normal();
                           }
                           for (std::size_t i = 0; i < c.out_channels; ++i) {
                               params[c.offset + c.weight_count() + i] = 0.0;
                           }
                       },
                       [&](const DenseLayer &d) {
                           const double sd = std::sqrt(2.0 / static_cast<double>(d.in_features));
                           for (std::size_t i = 0; i < d.weight_count(); ++i) {
                               params[d.offset + i] = sd * rng.normal();
                           }
                           for (std::size_t i = 0; i < d.out_features; ++i) {
                               params[d.offset + d.weight_count() + i] = 0.0;
                           }
                       },
                       [](const LeakyReluLayer &) {},
                   },
                   layer);
    }
}

Tensor kaiming_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng &rng) {
    if (fan_in == 0) {
        throw Error("kaiming_init: fan_in must be positive");
    }
    Tensor out(std::move(shape));
    const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double &x : out.data) {
        x = sd * rng.normal();
    }
    return out;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState &state) {
    check_span(grads.size(), params.size(), "adam_step grads");
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw Error("adam_step: optimizer state does not match parameter count");
    }
    state.t += 1;
    const double t = static_cast<double>(state.t);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

} // namespace vqgan::nn
