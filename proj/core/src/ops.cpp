// Copyright 2026 The spinconv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "spinconv/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spinconv/parallel.h"

namespace spinconv {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

struct ConvGeometry {
  std::size_t n, c, h, w;
  std::size_t o, k, stride, pad;
  std::size_t oh, ow;

  std::size_t patch() const { return c * k * k; }
  std::size_t spatial_out() const { return oh * ow; }
};

template <typename T>
ConvGeometry conv_geometry(const Tensor<T>& input, const ConvParams<T>& params) {
  require_rank(input, 4, "convolution input");
  validate_conv_params(params);
  if (input.dim(1) != params.in_channels()) {
    throw DimensionError("convolution input axis 1 (channels) is " +
                         std::to_string(input.dim(1)) +
                         " but weights axis 1 (in_channels) is " +
                         std::to_string(params.in_channels()));
  }
  ConvGeometry g{};
  g.n = input.dim(0);
  g.c = input.dim(1);
  g.h = input.dim(2);
  g.w = input.dim(3);
  g.o = params.out_channels();
  g.k = params.kernel_size();
  g.stride = params.stride;
  g.pad = params.pad;
  g.oh = conv_output_size(g.h, g.k, g.stride, g.pad);
  g.ow = conv_output_size(g.w, g.k, g.stride, g.pad);
  return g;
}

// Unfolds one sample into a [C*k*k, OH*OW] patch matrix.
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* col) {
  const long pad = static_cast<long>(g.pad);
  for (std::size_t c = 0; c < g.c; ++c) {
    const T* plane = image + c * g.h * g.w;
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        T* row = col + ((c * g.k + ki) * g.k + kj) * g.spatial_out();
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ki) - pad;
          T* dst = row + oy * g.ow;
          if (iy < 0 || iy >= static_cast<long>(g.h)) {
            std::fill(dst, dst + g.ow, T{0});
            continue;
          }
          const T* src = plane + iy * g.w;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kj) - pad;
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.w)) ? T{0} : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, const ConvGeometry& g, T* image) {
  const long pad = static_cast<long>(g.pad);
  for (std::size_t c = 0; c < g.c; ++c) {
    T* plane = image + c * g.h * g.w;
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        const T* row = col + ((c * g.k + ki) * g.k + kj) * g.spatial_out();
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ki) - pad;
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          T* dst = plane + iy * g.w;
          const T* src = row + oy * g.ow;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kj) - pad;
            if (ix >= 0 && ix < static_cast<long>(g.w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Shape& expected, const char* what) {
  if (a.shape() != expected) {
    throw DimensionError(std::string(what) + " has shape " +
                         shape_to_string(a.shape()) + ", expected " +
                         shape_to_string(expected));
  }
}

}  // namespace

std::size_t conv_output_size(std::size_t size, std::size_t kernel,
                             std::size_t stride, std::size_t pad) {
  if (stride == 0) throw DimensionError("stride must be positive");
  const long span = static_cast<long>(size + 2 * pad) - static_cast<long>(kernel);
  if (span < 0) {
    throw DimensionError("kernel " + std::to_string(kernel) +
                         " larger than padded extent " +
                         std::to_string(size + 2 * pad));
  }
  return static_cast<std::size_t>(span) / stride + 1;
}

template <typename T>
void validate_conv_params(const ConvParams<T>& params) {
  require_rank(params.weights, 4, "convolution weights");
  const auto& s = params.weights.shape();
  if (s[2] != s[3]) {
    throw DimensionError("convolution kernel must be square, got " +
                         shape_to_string(s));
  }
  if (s[2] % 2 == 0) {
    throw DimensionError("convolution kernel size must be odd, got " +
                         std::to_string(s[2]));
  }
  if (params.bias.shape() != Shape{s[0]}) {
    throw DimensionError("convolution bias shape " +
                         shape_to_string(params.bias.shape()) +
                         " does not match out_channels " + std::to_string(s[0]));
  }
  if (params.stride == 0) throw DimensionError("convolution stride must be positive");
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvParams<T>& params) {
  const ConvGeometry g = conv_geometry(input, params);
  Tensor<T> out({g.n, g.o, g.oh, g.ow});
  ConstMatMap<T> weights(params.weights.raw(), g.o, g.patch());
  parallel_for(g.n, [&](std::size_t begin, std::size_t end, int) {
    std::vector<T> col(g.patch() * g.spatial_out());
    for (std::size_t n = begin; n < end; ++n) {
      im2col(input.raw() + n * g.c * g.h * g.w, g, col.data());
      MatMap<T> dst(out.raw() + n * g.o * g.spatial_out(), g.o, g.spatial_out());
      dst.noalias() = weights * ConstMatMap<T>(col.data(), g.patch(), g.spatial_out());
      for (std::size_t o = 0; o < g.o; ++o) dst.row(o).array() += params.bias[o];
    }
  });
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const ConvParams<T>& params) {
  const ConvGeometry g = conv_geometry(input, params);
  require_same_shape(grad_out, {g.n, g.o, g.oh, g.ow}, "convolution grad_out");

  ConvGrads<T> grads{Tensor<T>(input.shape()), Tensor<T>(params.weights.shape()),
                     Tensor<T>(params.bias.shape())};
  ConstMatMap<T> weights(params.weights.raw(), g.o, g.patch());

  const int chunks = parallel_chunks(g.n);
  std::vector<RowMatrix<T>> partial(chunks, RowMatrix<T>::Zero(g.o, g.patch()));
  parallel_for(g.n, [&](std::size_t begin, std::size_t end, int chunk) {
    std::vector<T> col(g.patch() * g.spatial_out());
    RowMatrix<T> grad_col(g.patch(), g.spatial_out());
    for (std::size_t n = begin; n < end; ++n) {
      ConstMatMap<T> go(grad_out.raw() + n * g.o * g.spatial_out(), g.o, g.spatial_out());
      im2col(input.raw() + n * g.c * g.h * g.w, g, col.data());
      partial[chunk].noalias() +=
          go * ConstMatMap<T>(col.data(), g.patch(), g.spatial_out()).transpose();
      grad_col.noalias() = weights.transpose() * go;
      col2im(grad_col.data(), g, grads.input.raw() + n * g.c * g.h * g.w);
    }
  });
  MatMap<T> gw(grads.weights.raw(), g.o, g.patch());
  for (const auto& p : partial) gw += p;

  for (std::size_t o = 0; o < g.o; ++o) {
    double acc = 0.0;
    for (std::size_t n = 0; n < g.n; ++n) {
      const T* plane = grad_out.raw() + (n * g.o + o) * g.spatial_out();
      for (std::size_t i = 0; i < g.spatial_out(); ++i) acc += plane[i];
    }
    grads.bias[o] = static_cast<T>(acc);
  }
  return grads;
}

template <typename T>
PoolResult<T> maxpool2d_forward(const Tensor<T>& input, std::size_t window,
                                std::size_t stride) {
  require_rank(input, 4, "max-pool input");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (window == 0 || stride == 0) {
    throw DimensionError("max-pool window and stride must be positive");
  }
  if (window > h || window > w) {
    throw DimensionError("max-pool window " + std::to_string(window) +
                         " larger than input spatial extent " +
                         std::to_string(h) + "x" + std::to_string(w));
  }
  const std::size_t oh = (h - window) / stride + 1;
  const std::size_t ow = (w - window) / stride + 1;
  PoolResult<T> result{Tensor<T>({n, c, oh, ow}), std::vector<std::size_t>(n * c * oh * ow)};
  std::size_t out_index = 0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox, ++out_index) {
        std::size_t best = base + oy * stride * w + ox * stride;
        T best_value = input[best];
        for (std::size_t dy = 0; dy < window; ++dy) {
          for (std::size_t dx = 0; dx < window; ++dx) {
            const std::size_t idx = base + (oy * stride + dy) * w + ox * stride + dx;
            if (input[idx] > best_value) {
              best_value = input[idx];
              best = idx;
            }
          }
        }
        result.output[out_index] = best_value;
        result.argmax[out_index] = best;
      }
    }
  }
  return result;
}

template <typename T>
Tensor<T> maxpool2d_backward(const Tensor<T>& grad_out,
                             std::span<const std::size_t> argmax,
                             const Shape& input_shape) {
  if (argmax.size() != grad_out.size()) {
    throw ConsistencyError("max-pool argmax cache holds " +
                           std::to_string(argmax.size()) + " indices for " +
                           std::to_string(grad_out.size()) + " gradients");
  }
  Tensor<T> grad_in(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    if (argmax[i] >= grad_in.size()) {
      throw ConsistencyError("max-pool argmax index " + std::to_string(argmax[i]) +
                             " out of range for input shape " +
                             shape_to_string(input_shape));
    }
    grad_in[argmax[i]] += grad_out[i];
  }
  return grad_in;
}

template <typename T>
Tensor<T> fc_forward(const Tensor<T>& input, const Tensor<T>& weights,
                     const Tensor<T>& bias) {
  require_rank(input, 2, "fully-connected input");
  require_rank(weights, 2, "fully-connected weights");
  const std::size_t n = input.dim(0), d = input.dim(1), out = weights.dim(0);
  if (weights.dim(1) != d) {
    throw DimensionError("fully-connected input axis 1 is " + std::to_string(d) +
                         " but weights axis 1 is " + std::to_string(weights.dim(1)));
  }
  require_same_shape(bias, {out}, "fully-connected bias");
  Tensor<T> result({n, out});
  MatMap<T> dst(result.raw(), n, out);
  dst.noalias() = ConstMatMap<T>(input.raw(), n, d) *
                  ConstMatMap<T>(weights.raw(), out, d).transpose();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < out; ++j) dst(i, j) += bias[j];
  }
  return result;
}

template <typename T>
FcGrads<T> fc_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                       const Tensor<T>& weights) {
  require_rank(input, 2, "fully-connected input");
  const std::size_t n = input.dim(0), d = input.dim(1), out = weights.dim(0);
  require_same_shape(weights, {out, d}, "fully-connected weights");
  require_same_shape(grad_out, {n, out}, "fully-connected grad_out");
  FcGrads<T> grads{Tensor<T>({n, d}), Tensor<T>({out, d}), Tensor<T>({out})};
  ConstMatMap<T> go(grad_out.raw(), n, out);
  MatMap<T>(grads.input.raw(), n, d).noalias() = go * ConstMatMap<T>(weights.raw(), out, d);
  MatMap<T>(grads.weights.raw(), out, d).noalias() =
      go.transpose() * ConstMatMap<T>(input.raw(), n, d);
  for (std::size_t j = 0; j < out; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += grad_out[i * out + j];
    grads.bias[j] = static_cast<T>(acc);
  }
  return grads;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (T& v : out.data()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& input) {
  require_same_shape(grad_out, input.shape(), "relu grad_out");
  Tensor<T> grad(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    grad[i] = input[i] > T{0} ? grad_out[i] : T{0};
  }
  return grad;
}

namespace {

// Channel count and contiguous run length per channel for prelu layouts.
template <typename T>
std::pair<std::size_t, std::size_t> channel_layout(const Tensor<T>& input,
                                                   const Tensor<T>& slope) {
  if (input.rank() < 2) {
    throw DimensionError("prelu input must have a channel axis, got shape " +
                         shape_to_string(input.shape()));
  }
  const std::size_t channels = input.dim(1);
  if (slope.shape() != Shape{channels}) {
    throw DimensionError("prelu slope shape " + shape_to_string(slope.shape()) +
                         " does not match channel count " + std::to_string(channels));
  }
  return {channels, input.size() / (input.dim(0) * channels)};
}

}  // namespace

template <typename T>
Tensor<T> prelu_forward(const Tensor<T>& input, const Tensor<T>& slope) {
  const auto [channels, inner] = channel_layout(input, slope);
  Tensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const std::size_t c = (i / inner) % channels;
    out[i] = input[i] > T{0} ? input[i] : slope[c] * input[i];
  }
  return out;
}

template <typename T>
PreluGrads<T> prelu_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const Tensor<T>& slope) {
  const auto [channels, inner] = channel_layout(input, slope);
  require_same_shape(grad_out, input.shape(), "prelu grad_out");
  PreluGrads<T> grads{Tensor<T>(input.shape()), Tensor<T>(slope.shape())};
  std::vector<double> slope_acc(channels, 0.0);
  for (std::size_t i = 0; i < input.size(); ++i) {
    const std::size_t c = (i / inner) % channels;
    if (input[i] > T{0}) {
      grads.input[i] = grad_out[i];
    } else {
      grads.input[i] = slope[c] * grad_out[i];
      slope_acc[c] += static_cast<double>(input[i]) * grad_out[i];
    }
  }
  for (std::size_t c = 0; c < channels; ++c) grads.slope[c] = static_cast<T>(slope_acc[c]);
  return grads;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  require_rank(logits, 2, "logits");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  Tensor<T> probs(logits.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = logits.raw() + i * k;
    const double max = *std::max_element(row, row + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(static_cast<double>(row[j]) - max);
    for (std::size_t j = 0; j < k; ++j) {
      probs[i * k + j] = static_cast<T>(std::exp(static_cast<double>(row[j]) - max) / sum);
    }
  }
  return probs;
}

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits,
                                    std::span<const int> labels) {
  require_rank(logits, 2, "logits");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (labels.size() != n) {
    throw DimensionError("got " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " logit rows");
  }
  LossResult<T> result{0.0, Tensor<T>(logits.shape())};
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw InputError("label " + std::to_string(labels[i]) + " outside [0, " +
                       std::to_string(k) + ")");
    }
    const T* row = logits.raw() + i * k;
    const double max = *std::max_element(row, row + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(static_cast<double>(row[j]) - max);
    const double log_sum = std::log(sum);
    total += log_sum - (static_cast<double>(row[labels[i]]) - max);
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(static_cast<double>(row[j]) - max - log_sum);
      const double target = static_cast<std::size_t>(labels[i]) == j ? 1.0 : 0.0;
      result.grad_logits[i * k + j] = static_cast<T>((p - target) / static_cast<double>(n));
    }
  }
  result.loss = total / static_cast<double>(n);
  return result;
}

#define SPINCONV_INSTANTIATE_OPS(T)                                                  \
  template void validate_conv_params(const ConvParams<T>&);                          \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const ConvParams<T>&);         \
  template ConvGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&,          \
                                        const ConvParams<T>&);                       \
  template PoolResult<T> maxpool2d_forward(const Tensor<T>&, std::size_t,            \
                                           std::size_t);                             \
  template Tensor<T> maxpool2d_backward(const Tensor<T>&,                            \
                                        std::span<const std::size_t>, const Shape&); \
  template Tensor<T> fc_forward(const Tensor<T>&, const Tensor<T>&,                  \
                                const Tensor<T>&);                                   \
  template FcGrads<T> fc_backward(const Tensor<T>&, const Tensor<T>&,                \
                                  const Tensor<T>&);                                 \
  template Tensor<T> relu_forward(const Tensor<T>&);                                 \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> prelu_forward(const Tensor<T>&, const Tensor<T>&);              \
  template PreluGrads<T> prelu_backward(const Tensor<T>&, const Tensor<T>&,          \
                                        const Tensor<T>&);                           \
  template Tensor<T> softmax(const Tensor<T>&);                                      \
  template LossResult<T> softmax_cross_entropy(const Tensor<T>&, std::span<const int>);

SPINCONV_INSTANTIATE_OPS(float)
SPINCONV_INSTANTIATE_OPS(double)

#undef SPINCONV_INSTANTIATE_OPS

}  // namespace spinconv
