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

// Dropout, split dropout and orientation-pooled convolution.

#ifndef SPINCONV_LAYERS_H_
#define SPINCONV_LAYERS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spinconv/kernel_transforms.h"
#include "spinconv/ops.h"
#include "spinconv/rng.h"
#include "spinconv/tensor.h"

namespace spinconv {

// ---------------------------------------------------------------------------
// Dropout / split dropout
// ---------------------------------------------------------------------------

// Binary keep vector over the non-batch units of an activation. One mask is
// shared by every sample in a batch.
struct Mask {
  std::vector<std::uint8_t> bits;
  double p = 0.5;  // keep probability the bits were drawn with

  std::size_t size() const { return bits.size(); }
  // 1_e - m.
  Mask complement() const;
  std::size_t kept() const;
};

Mask draw_mask(std::size_t units, double p, Rng& rng);

enum class DropoutMode { kStandard, kSplit };

std::string to_string(DropoutMode mode);
DropoutMode dropout_mode_from_string(const std::string& s);

// Throws ConfigError unless p is in (0, 1); split mode additionally needs
// p == 0.5 because the complement mask must be equally likely.
void validate_dropout(double p, DropoutMode mode);

struct DropoutLayer {
  double p = 0.5;
  DropoutMode mode = DropoutMode::kStandard;
  Rng rng;

  DropoutLayer(double keep, DropoutMode m, std::uint64_t seed);
  Mask sample(std::size_t units) { return draw_mask(units, p, rng); }
};

// y * m broadcast over the batch axis.
template <typename T>
Tensor<T> apply_mask(const Tensor<T>& y, const Mask& mask);

// Training: m * y. Inference: y unchanged (the following layer's weights
// carry the p scaling after to_inference).
template <typename T>
Tensor<T> dropout_forward_standard(const Tensor<T>& y, const Mask& mask,
                                   bool training);

template <typename T>
Tensor<T> dropout_backward_standard(const Tensor<T>& grad, const Mask& mask);

template <typename T>
struct SplitActivations {
  Tensor<T> kept;     // m * y
  Tensor<T> dropped;  // (1_e - m) * y
};

template <typename T>
SplitActivations<T> sdropout_forward(const Tensor<T>& y, const Mask& mask);

// m * grad_kept + (1_e - m) * grad_dropped.
template <typename T>
Tensor<T> sdropout_backward(const Tensor<T>& grad_kept, const Tensor<T>& grad_dropped,
                            const Mask& mask);

// ---------------------------------------------------------------------------
// Rotate-pooling / flip-rotate-pooling convolution
// ---------------------------------------------------------------------------

// Lowest index among the maxima; variant 0 (the untransformed kernel) wins
// every tie it takes part in.
template <typename T>
std::size_t tie_break(std::span<const T> responses);

// A convolution whose selected output filters are replaced by the
// element-wise max over an orientation bank of their own kernel. Rotated
// filters pool over 8 variants, flipped filters over {original, flipped}.
// Everything else convolves normally. Selections are fixed at construction.
template <typename T>
class OrientedConvLayer {
 public:
  OrientedConvLayer() = default;

  // Explicit selection, e.g. restored from a checkpoint. `flip_axes` is
  // parallel to `flip_set`.
  OrientedConvLayer(ConvParams<T> conv, std::vector<std::size_t> rotate_set,
                    std::vector<std::size_t> flip_set, std::vector<FlipAxis> flip_axes);

  // Draws round(rotate_fraction * O) rotated and round(flip_fraction * O)
  // flipped filters uniformly without replacement. Flip axes alternate
  // left-right, up-down in selection order.
  static OrientedConvLayer select(ConvParams<T> conv, double rotate_fraction,
                                  double flip_fraction, Rng& rng);

  ConvParams<T>& conv() { return conv_; }
  const ConvParams<T>& conv() const { return conv_; }
  const std::vector<std::size_t>& rotate_set() const { return rotate_set_; }
  const std::vector<std::size_t>& flip_set() const { return flip_set_; }
  const std::vector<FlipAxis>& flip_axes() const { return flip_axes_; }

  bool is_plain() const { return rotate_set_.empty() && flip_set_.empty(); }
  std::size_t parameter_count() const { return conv_.weights.size() + conv_.bias.size(); }
  // 8 for rotated filters, 2 for flipped ones, 1 otherwise.
  std::size_t variant_count(std::size_t filter) const;

  // Banks for every selected filter, rebuilt from the current weights.
  std::vector<OrientationBank<T>> banks() const;

 private:
  void validate() const;

  ConvParams<T> conv_;
  std::vector<std::size_t> rotate_set_;
  std::vector<std::size_t> flip_set_;
  std::vector<FlipAxis> flip_axes_;
};

template <typename T>
struct OrientedConvCache {
  Shape input_shape;
  Shape output_shape;
  // Winning variant per output element, laid out like the output.
  std::vector<std::uint8_t> winners;
};

template <typename T>
Tensor<T> oriented_conv_forward(const Tensor<T>& input, const OrientedConvLayer<T>& layer,
                                OrientedConvCache<T>* cache = nullptr);

template <typename T>
ConvGrads<T> oriented_conv_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                                    const OrientedConvLayer<T>& layer,
                                    const OrientedConvCache<T>& cache);

// Rotate-pooling convolution: an oriented layer with no flipped filters.
template <typename T>
OrientedConvLayer<T> make_rpc_layer(ConvParams<T> conv, double rotate_fraction, Rng& rng) {
  return OrientedConvLayer<T>::select(std::move(conv), rotate_fraction, 0.0, rng);
}

template <typename T>
OrientedConvLayer<T> make_frpc_layer(ConvParams<T> conv, double rotate_fraction,
                                     double flip_fraction, Rng& rng) {
  return OrientedConvLayer<T>::select(std::move(conv), rotate_fraction, flip_fraction, rng);
}

template <typename T>
Tensor<T> rpc_forward(const Tensor<T>& input, const OrientedConvLayer<T>& layer,
                      OrientedConvCache<T>* cache = nullptr) {
  return oriented_conv_forward(input, layer, cache);
}

template <typename T>
ConvGrads<T> rpc_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                          const OrientedConvLayer<T>& layer,
                          const OrientedConvCache<T>& cache) {
  return oriented_conv_backward(grad_out, input, layer, cache);
}

template <typename T>
Tensor<T> frpc_forward(const Tensor<T>& input, const OrientedConvLayer<T>& layer,
                       OrientedConvCache<T>* cache = nullptr) {
  return oriented_conv_forward(input, layer, cache);
}

template <typename T>
ConvGrads<T> frpc_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                           const OrientedConvLayer<T>& layer,
                           const OrientedConvCache<T>& cache) {
  return oriented_conv_backward(grad_out, input, layer, cache);
}

}  // namespace spinconv

#endif  // SPINCONV_LAYERS_H_
