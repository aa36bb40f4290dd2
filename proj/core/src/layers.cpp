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

#include "spinconv/layers.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace spinconv {

Mask Mask::complement() const {
  Mask out{bits, 1.0 - p};
  for (auto& b : out.bits) b = static_cast<std::uint8_t>(1 - b);
  return out;
}

std::size_t Mask::kept() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

Mask draw_mask(std::size_t units, double p, Rng& rng) {
  Mask m{std::vector<std::uint8_t>(units), p};
  for (auto& b : m.bits) b = uniform01(rng) < p ? 1 : 0;
  return m;
}

std::string to_string(DropoutMode mode) {
  return mode == DropoutMode::kSplit ? "split" : "standard";
}

DropoutMode dropout_mode_from_string(const std::string& s) {
  if (s == "standard") return DropoutMode::kStandard;
  if (s == "split") return DropoutMode::kSplit;
  throw ConfigError("dropout_mode must be \"standard\" or \"split\", got \"" + s + "\"");
}

void validate_dropout(double p, DropoutMode mode) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ConfigError("dropout keep probability must be in (0, 1), got " + std::to_string(p));
  }
  if (mode == DropoutMode::kSplit && p != 0.5) {
    throw ConfigError("split dropout requires keep probability 0.5, got " + std::to_string(p));
  }
}

DropoutLayer::DropoutLayer(double keep, DropoutMode m, std::uint64_t seed)
    : p(keep), mode(m), rng(seed) {
  validate_dropout(p, mode);
}

namespace {

template <typename T>
std::size_t units_per_sample(const Tensor<T>& y, const Mask& mask) {
  if (y.rank() < 2) {
    throw DimensionError("dropout input needs a batch axis, got shape " +
                         shape_to_string(y.shape()));
  }
  const std::size_t units = y.size() / y.dim(0);
  if (units != mask.size()) {
    throw DimensionError("mask length " + std::to_string(mask.size()) +
                         " does not match " + std::to_string(units) + " units per sample");
  }
  return units;
}

}  // namespace

template <typename T>
Tensor<T> apply_mask(const Tensor<T>& y, const Mask& mask) {
  const std::size_t units = units_per_sample(y, mask);
  Tensor<T> out(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    out[i] = mask.bits[i % units] ? y[i] : T{0};
  }
  return out;
}

template <typename T>
Tensor<T> dropout_forward_standard(const Tensor<T>& y, const Mask& mask, bool training) {
  return training ? apply_mask(y, mask) : y;
}

template <typename T>
Tensor<T> dropout_backward_standard(const Tensor<T>& grad, const Mask& mask) {
  return apply_mask(grad, mask);
}

template <typename T>
SplitActivations<T> sdropout_forward(const Tensor<T>& y, const Mask& mask) {
  const std::size_t units = units_per_sample(y, mask);
  SplitActivations<T> out{Tensor<T>(y.shape()), Tensor<T>(y.shape())};
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (mask.bits[i % units]) {
      out.kept[i] = y[i];
    } else {
      out.dropped[i] = y[i];
    }
  }
  return out;
}

template <typename T>
Tensor<T> sdropout_backward(const Tensor<T>& grad_kept, const Tensor<T>& grad_dropped,
                            const Mask& mask) {
  if (grad_kept.shape() != grad_dropped.shape()) {
    throw DimensionError("split dropout branch gradients disagree: " +
                         shape_to_string(grad_kept.shape()) + " vs " +
                         shape_to_string(grad_dropped.shape()));
  }
  const std::size_t units = units_per_sample(grad_kept, mask);
  Tensor<T> out(grad_kept.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = mask.bits[i % units] ? grad_kept[i] : grad_dropped[i];
  }
  return out;
}

template <typename T>
std::size_t tie_break(std::span<const T> responses) {
  if (responses.empty()) throw InputError("tie_break needs at least one response");
  std::size_t best = 0;
  for (std::size_t i = 1; i < responses.size(); ++i) {
    if (responses[i] > responses[best]) best = i;
  }
  return best;
}

// ---------------------------------------------------------------------------

template <typename T>
OrientedConvLayer<T>::OrientedConvLayer(ConvParams<T> conv,
                                        std::vector<std::size_t> rotate_set,
                                        std::vector<std::size_t> flip_set,
                                        std::vector<FlipAxis> flip_axes)
    : conv_(std::move(conv)),
      rotate_set_(std::move(rotate_set)),
      flip_set_(std::move(flip_set)),
      flip_axes_(std::move(flip_axes)) {
  validate();
}

template <typename T>
OrientedConvLayer<T> OrientedConvLayer<T>::select(ConvParams<T> conv,
                                                  double rotate_fraction,
                                                  double flip_fraction, Rng& rng) {
  if (!(rotate_fraction >= 0.0 && rotate_fraction <= 1.0)) {
    throw ConfigError("rotate_fraction must be in [0, 1], got " +
                      std::to_string(rotate_fraction));
  }
  if (!(flip_fraction >= 0.0 && flip_fraction <= 1.0)) {
    throw ConfigError("flip_fraction must be in [0, 1], got " + std::to_string(flip_fraction));
  }
  if (rotate_fraction + flip_fraction > 1.0 + 1e-12) {
    throw ConfigError("rotate_fraction + flip_fraction must not exceed 1");
  }
  validate_conv_params(conv);
  const std::size_t filters = conv.out_channels();
  const auto n_rotate = static_cast<std::size_t>(std::llround(rotate_fraction * filters));
  const std::size_t n_flip = std::min(
      static_cast<std::size_t>(std::llround(flip_fraction * filters)), filters - n_rotate);

  // Partial Fisher-Yates: the first n_rotate + n_flip entries are a uniform
  // draw without replacement.
  std::vector<std::size_t> order(filters);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < n_rotate + n_flip; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform01(rng) * (filters - i));
    std::swap(order[i], order[std::min(j, filters - 1)]);
  }
  std::vector<std::size_t> rotate(order.begin(), order.begin() + n_rotate);
  std::vector<std::size_t> flip(order.begin() + n_rotate, order.begin() + n_rotate + n_flip);
  std::sort(rotate.begin(), rotate.end());
  std::vector<FlipAxis> axes;
  for (std::size_t i = 0; i < flip.size(); ++i) {
    axes.push_back(i % 2 == 0 ? FlipAxis::kLeftRight : FlipAxis::kUpDown);
  }
  return OrientedConvLayer(std::move(conv), std::move(rotate), std::move(flip), std::move(axes));
}

template <typename T>
void OrientedConvLayer<T>::validate() const {
  validate_conv_params(conv_);
  if (flip_axes_.size() != flip_set_.size()) {
    throw ConsistencyError("flip axis list length does not match flip set");
  }
  std::set<std::size_t> seen;
  for (std::size_t idx : rotate_set_) {
    if (idx >= conv_.out_channels() || !seen.insert(idx).second) {
      throw ConsistencyError("invalid rotate-set filter index " + std::to_string(idx));
    }
  }
  for (std::size_t idx : flip_set_) {
    if (idx >= conv_.out_channels() || !seen.insert(idx).second) {
      throw ConsistencyError("invalid or overlapping flip-set filter index " +
                             std::to_string(idx));
    }
  }
}

template <typename T>
std::size_t OrientedConvLayer<T>::variant_count(std::size_t filter) const {
  if (std::find(rotate_set_.begin(), rotate_set_.end(), filter) != rotate_set_.end()) return 8;
  if (std::find(flip_set_.begin(), flip_set_.end(), filter) != flip_set_.end()) return 2;
  return 1;
}

namespace {

// Per-filter transform maps; filters without a bank get the identity only.
template <typename T>
std::vector<std::vector<SpatialMap>> filter_maps(const OrientedConvLayer<T>& layer) {
  const std::size_t k = layer.conv().kernel_size();
  std::vector<std::vector<SpatialMap>> maps(layer.conv().out_channels(), {identity_map(k)});
  for (std::size_t o : layer.rotate_set()) maps[o] = bank_maps(k, BankMode::kRotate8);
  for (std::size_t i = 0; i < layer.flip_set().size(); ++i) {
    maps[layer.flip_set()[i]] = bank_maps(
        k, layer.flip_axes()[i] == FlipAxis::kLeftRight ? BankMode::kFlipLeftRight
                                                        : BankMode::kFlipUpDown);
  }
  return maps;
}

// Expanded convolution whose rows are every variant of every filter, grouped
// by filter. group_start[o] is the first row of filter o.
template <typename T>
ConvParams<T> expand(const OrientedConvLayer<T>& layer,
                     const std::vector<std::vector<SpatialMap>>& maps,
                     std::vector<std::size_t>& group_start) {
  const auto& conv = layer.conv();
  const std::size_t c = conv.in_channels(), k = conv.kernel_size();
  const std::size_t filter_size = c * k * k;
  std::size_t rows = 0;
  group_start.clear();
  for (const auto& m : maps) {
    group_start.push_back(rows);
    rows += m.size();
  }
  ConvParams<T> out{Tensor<T>({rows, c, k, k}), Tensor<T>({rows}), conv.stride, conv.pad};
  for (std::size_t o = 0; o < maps.size(); ++o) {
    Tensor<T> source({c, k, k},
                     std::vector<T>(conv.weights.raw() + o * filter_size,
                                    conv.weights.raw() + (o + 1) * filter_size));
    for (std::size_t v = 0; v < maps[o].size(); ++v) {
      const Tensor<T> variant = apply_map(maps[o][v], source);
      std::copy(variant.raw(), variant.raw() + filter_size,
                out.weights.raw() + (group_start[o] + v) * filter_size);
    }
  }
  return out;
}

}  // namespace

template <typename T>
std::vector<OrientationBank<T>> OrientedConvLayer<T>::banks() const {
  const std::size_t c = conv_.in_channels(), k = conv_.kernel_size();
  const std::size_t filter_size = c * k * k;
  auto source = [&](std::size_t o) {
    return Tensor<T>({c, k, k}, std::vector<T>(conv_.weights.raw() + o * filter_size,
                                               conv_.weights.raw() + (o + 1) * filter_size));
  };
  std::vector<OrientationBank<T>> out;
  for (std::size_t o : rotate_set_) {
    out.push_back(build_orientation_bank(source(o), BankMode::kRotate8, o));
  }
  for (std::size_t i = 0; i < flip_set_.size(); ++i) {
    out.push_back(build_orientation_bank(source(flip_set_[i]),
                                         flip_axes_[i] == FlipAxis::kLeftRight
                                             ? BankMode::kFlipLeftRight
                                             : BankMode::kFlipUpDown,
                                         flip_set_[i]));
  }
  return out;
}

template <typename T>
Tensor<T> oriented_conv_forward(const Tensor<T>& input, const OrientedConvLayer<T>& layer,
                                OrientedConvCache<T>* cache) {
  if (layer.is_plain()) {
    Tensor<T> out = conv2d_forward(input, layer.conv());
    if (cache != nullptr) {
      *cache = {input.shape(), out.shape(), std::vector<std::uint8_t>(out.size(), 0)};
    }
    return out;
  }
  const auto maps = filter_maps(layer);
  std::vector<std::size_t> group_start;
  const ConvParams<T> expanded = expand(layer, maps, group_start);
  const Tensor<T> responses = conv2d_forward(input, expanded);

  const std::size_t n = input.dim(0), filters = layer.conv().out_channels();
  const std::size_t rows = expanded.out_channels();
  const std::size_t spatial = responses.dim(2) * responses.dim(3);
  Tensor<T> out({n, filters, responses.dim(2), responses.dim(3)});
  std::vector<std::uint8_t> winners(out.size());
  std::vector<T> bank(8);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t o = 0; o < filters; ++o) {
      const std::size_t variants = maps[o].size();
      const T* base = responses.raw() + (s * rows + group_start[o]) * spatial;
      const std::size_t out_base = (s * filters + o) * spatial;
      const T bias = layer.conv().bias[o];
      for (std::size_t pos = 0; pos < spatial; ++pos) {
        for (std::size_t v = 0; v < variants; ++v) bank[v] = base[v * spatial + pos];
        const std::size_t w = tie_break(std::span<const T>(bank.data(), variants));
        out[out_base + pos] = bank[w] + bias;
        winners[out_base + pos] = static_cast<std::uint8_t>(w);
      }
    }
  }
  if (cache != nullptr) *cache = {input.shape(), out.shape(), std::move(winners)};
  return out;
}

template <typename T>
ConvGrads<T> oriented_conv_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                                    const OrientedConvLayer<T>& layer,
                                    const OrientedConvCache<T>& cache) {
  if (cache.input_shape != input.shape() || cache.output_shape != grad_out.shape() ||
      cache.winners.size() != grad_out.size()) {
    throw ConsistencyError("oriented convolution cache is stale: cached input " +
                           shape_to_string(cache.input_shape) + " / output " +
                           shape_to_string(cache.output_shape) + ", got input " +
                           shape_to_string(input.shape()) + " / grad " +
                           shape_to_string(grad_out.shape()));
  }
  if (layer.is_plain()) return conv2d_backward(grad_out, input, layer.conv());

  const auto maps = filter_maps(layer);
  std::vector<std::size_t> group_start;
  const ConvParams<T> expanded = expand(layer, maps, group_start);
  const std::size_t n = input.dim(0), filters = layer.conv().out_channels();
  const std::size_t rows = expanded.out_channels();
  const std::size_t spatial = grad_out.dim(2) * grad_out.dim(3);

  Tensor<T> routed({n, rows, grad_out.dim(2), grad_out.dim(3)});
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t o = 0; o < filters; ++o) {
      const std::size_t out_base = (s * filters + o) * spatial;
      for (std::size_t pos = 0; pos < spatial; ++pos) {
        const std::size_t w = cache.winners[out_base + pos];
        if (w >= maps[o].size()) {
          throw ConsistencyError("cached winner " + std::to_string(w) + " exceeds bank size of filter " +
                                 std::to_string(o));
        }
        routed[((s * rows + group_start[o] + w) * spatial) + pos] = grad_out[out_base + pos];
      }
    }
  }
  ConvGrads<T> expanded_grads = conv2d_backward(routed, input, expanded);

  const std::size_t c = layer.conv().in_channels(), k = layer.conv().kernel_size();
  const std::size_t filter_size = c * k * k;
  ConvGrads<T> grads{std::move(expanded_grads.input), Tensor<T>(layer.conv().weights.shape()),
                     Tensor<T>(layer.conv().bias.shape())};
  for (std::size_t o = 0; o < filters; ++o) {
    std::vector<double> acc(filter_size, 0.0);
    for (std::size_t v = 0; v < maps[o].size(); ++v) {
      const T* g = expanded_grads.weights.raw() + (group_start[o] + v) * filter_size;
      const Tensor<T> pulled =
          apply_map_transpose(maps[o][v], Tensor<T>({c, k, k}, std::vector<T>(g, g + filter_size)));
      for (std::size_t i = 0; i < filter_size; ++i) acc[i] += pulled[i];
    }
    for (std::size_t i = 0; i < filter_size; ++i) {
      grads.weights[o * filter_size + i] = static_cast<T>(acc[i]);
    }
    double bias_acc = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const T* plane = grad_out.raw() + (s * filters + o) * spatial;
      for (std::size_t pos = 0; pos < spatial; ++pos) bias_acc += plane[pos];
    }
    grads.bias[o] = static_cast<T>(bias_acc);
  }
  return grads;
}

#define SPINCONV_INSTANTIATE_LAYERS(T)                                                   \
  template Tensor<T> apply_mask(const Tensor<T>&, const Mask&);                          \
  template Tensor<T> dropout_forward_standard(const Tensor<T>&, const Mask&, bool);      \
  template Tensor<T> dropout_backward_standard(const Tensor<T>&, const Mask&);           \
  template SplitActivations<T> sdropout_forward(const Tensor<T>&, const Mask&);          \
  template Tensor<T> sdropout_backward(const Tensor<T>&, const Tensor<T>&, const Mask&); \
  template std::size_t tie_break(std::span<const T>);                                    \
  template class OrientedConvLayer<T>;                                                   \
  template Tensor<T> oriented_conv_forward(const Tensor<T>&, const OrientedConvLayer<T>&, \
                                           OrientedConvCache<T>*);                       \
  template ConvGrads<T> oriented_conv_backward(const Tensor<T>&, const Tensor<T>&,       \
                                               const OrientedConvLayer<T>&,              \
                                               const OrientedConvCache<T>&);

SPINCONV_INSTANTIATE_LAYERS(float)
SPINCONV_INSTANTIATE_LAYERS(double)

#undef SPINCONV_INSTANTIATE_LAYERS

}  // namespace spinconv
