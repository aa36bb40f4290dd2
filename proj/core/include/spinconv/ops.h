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

// Forward and backward kernels of the standard layers. Every function is pure:
// outputs are freshly allocated and inputs are never modified.
//
// Layouts: images are [N, C, H, W], convolution weights [O, C, k, k], fully
// connected weights [out, in]. Convolution is cross-correlation with zero
// padding.

#ifndef SPINCONV_OPS_H_
#define SPINCONV_OPS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spinconv/tensor.h"

namespace spinconv {

template <typename T>
struct ConvParams {
  Tensor<T> weights;  // [out_channels, in_channels, k, k], k odd
  Tensor<T> bias;     // [out_channels]
  std::size_t stride = 1;
  std::size_t pad = 0;

  std::size_t out_channels() const { return weights.dim(0); }
  std::size_t in_channels() const { return weights.dim(1); }
  std::size_t kernel_size() const { return weights.dim(2); }
};

// Throws DimensionError unless weights/bias are consistent and k is odd.
template <typename T>
void validate_conv_params(const ConvParams<T>& params);

// floor((size + 2 pad - k) / stride) + 1; DimensionError when that is < 1.
std::size_t conv_output_size(std::size_t size, std::size_t kernel,
                             std::size_t stride, std::size_t pad);

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvParams<T>& params);

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const ConvParams<T>& params);

template <typename T>
struct PoolResult {
  Tensor<T> output;
  // Flat index into the input tensor of every output element's winner.
  std::vector<std::size_t> argmax;
};

// Ties go to the first element in row-major window order.
template <typename T>
PoolResult<T> maxpool2d_forward(const Tensor<T>& input, std::size_t window,
                                std::size_t stride);

template <typename T>
Tensor<T> maxpool2d_backward(const Tensor<T>& grad_out,
                             std::span<const std::size_t> argmax,
                             const Shape& input_shape);

template <typename T>
struct FcGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

// input [N, d], weights [out, d], bias [out] -> [N, out].
template <typename T>
Tensor<T> fc_forward(const Tensor<T>& input, const Tensor<T>& weights,
                     const Tensor<T>& bias);

template <typename T>
FcGrads<T> fc_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                       const Tensor<T>& weights);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input);

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& input);

// Channel axis is 1 for both [N, C, H, W] and [N, d] inputs.
template <typename T>
Tensor<T> prelu_forward(const Tensor<T>& input, const Tensor<T>& slope);

template <typename T>
struct PreluGrads {
  Tensor<T> input;
  Tensor<T> slope;
};

template <typename T>
PreluGrads<T> prelu_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const Tensor<T>& slope);

template <typename T>
struct LossResult {
  double loss = 0.0;       // mean over the batch
  Tensor<T> grad_logits;   // (softmax - one_hot) / N
};

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits,
                                    std::span<const int> labels);

// Row-wise softmax of [N, K] logits with max subtraction.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

}  // namespace spinconv

#endif  // SPINCONV_OPS_H_
