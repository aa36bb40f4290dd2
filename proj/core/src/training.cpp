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

#include "spinconv/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <type_traits>

#include "spinconv/errors.h"
#include "spinconv/evaluation.h"
#include "spinconv/rng.h"

namespace spinconv {
namespace {

template <typename T>
Tensor<T> flatten(const Tensor<T>& x) {
  if (x.rank() == 2) return x;
  return x.reshaped({x.dim(0), x.size() / x.dim(0)});
}

template <typename T>
void accumulate(Tensor<T>& acc, const Tensor<T>& g) {
  if (acc.empty()) {
    acc = g;
    return;
  }
  T* a = acc.raw();
  const T* b = g.raw();
  for (std::size_t i = 0; i < acc.size(); ++i) a[i] += b[i];
}

template <typename T>
Tensor<T> layer_forward(const LayerState<T>& layer, const Tensor<T>& x, LayerCache<T>& cache) {
  return std::visit(
      [&](const auto& s) -> Tensor<T> {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, ConvLayerState<T>>) {
          cache.input = x;
          return oriented_conv_forward(x, s.layer, &cache.conv);
        } else if constexpr (std::is_same_v<S, PoolLayerState>) {
          cache.input_shape = x.shape();
          auto res = maxpool2d_forward(x, s.window, s.stride);
          cache.argmax = std::move(res.argmax);
          return std::move(res.output);
        } else if constexpr (std::is_same_v<S, ReluLayerState>) {
          cache.input = x;
          return relu_forward(x);
        } else if constexpr (std::is_same_v<S, PreluLayerState<T>>) {
          cache.input = x;
          return prelu_forward(x, s.slope);
        } else if constexpr (std::is_same_v<S, FcLayerState<T>>) {
          cache.input_shape = x.shape();
          cache.input = flatten(x);
          return fc_forward(cache.input, s.weights, s.bias);
        } else {
          throw ConsistencyError("dropout layers are handled by the branch driver");
        }
      },
      layer);
}

// Index of the first parameter tensor owned by each layer.
template <typename T>
std::vector<std::size_t> parameter_offsets(const std::vector<LayerState<T>>& layers) {
  std::vector<std::size_t> offsets;
  std::size_t next = 0;
  for (const auto& layer : layers) {
    offsets.push_back(next);
    std::visit(
        [&](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, ConvLayerState<T>> || std::is_same_v<S, FcLayerState<T>>) {
            next += 2;
          } else if constexpr (std::is_same_v<S, PreluLayerState<T>>) {
            next += 1;
          }
        },
        layer);
  }
  offsets.push_back(next);
  return offsets;
}

}  // namespace

template <typename T>
TrainingForward<T> forward_training(Network<T>& net, const Tensor<T>& batch,
                                    std::span<const int> labels, const std::vector<Mask>* pinned) {
  if (net.is_inference()) {
    throw ConsistencyError("forward_training needs a network in training form");
  }
  Shape expected{batch.rank() > 0 ? batch.dim(0) : 0};
  expected.insert(expected.end(), net.spec().input.begin(), net.spec().input.end());
  if (batch.shape() != expected) {
    throw DimensionError("training batch has shape " + shape_to_string(batch.shape()) +
                         ", expected " + shape_to_string(expected));
  }
  if (labels.size() != batch.dim(0)) {
    throw DimensionError("batch has " + std::to_string(batch.dim(0)) + " samples but " +
                         std::to_string(labels.size()) + " labels");
  }
  auto& layers = net.layers();
  if (pinned != nullptr && pinned->size() != net.dropout_layer_count()) {
    throw ConsistencyError("expected " + std::to_string(net.dropout_layer_count()) +
                           " pinned masks, got " + std::to_string(pinned->size()));
  }

  TrainingForward<T> out;
  BranchSet<T>& bs = out.branches;
  bs.caches.resize(layers.size());
  std::vector<Tensor<T>> live{batch};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::vector<Tensor<T>> next;
    if (auto* d = std::get_if<DropoutLayerState>(&layers[l])) {
      const std::size_t units = live.front().size() / batch.dim(0);
      Mask mask = pinned != nullptr ? (*pinned)[bs.masks.size()] : d->dropout.sample(units);
      if (mask.size() != units) {
        throw DimensionError("dropout mask has " + std::to_string(mask.size()) +
                             " units, layer has " + std::to_string(units));
      }
      if (d->dropout.mode == DropoutMode::kSplit) {
        for (const auto& y : live) {
          auto split = sdropout_forward(y, mask);
          next.push_back(std::move(split.kept));
          next.push_back(std::move(split.dropped));
        }
        ++bs.split_layers;
      } else {
        for (const auto& y : live) next.push_back(apply_mask(y, mask));
      }
      bs.masks.push_back(std::move(mask));
      bs.dropout_layers.push_back(l);
    } else {
      bs.caches[l].resize(live.size());
      for (std::size_t b = 0; b < live.size(); ++b) {
        next.push_back(layer_forward(layers[l], live[b], bs.caches[l][b]));
      }
    }
    live = std::move(next);
  }

  const double scale = 1.0 / static_cast<double>(live.size());
  double total = 0.0;
  for (auto& logits : live) {
    auto res = softmax_cross_entropy(logits, labels);
    for (T& g : res.grad_logits.data()) g = static_cast<T>(g * scale);
    total += res.loss;
    bs.losses.push_back(res.loss);
    bs.grad_logits.push_back(std::move(res.grad_logits));
    bs.logits.push_back(std::move(logits));
  }
  out.loss = total * scale;
  return out;
}

template <typename T>
std::vector<Tensor<T>> backward_training(const Network<T>& net, const BranchSet<T>& bs) {
  const auto& layers = net.layers();
  if (bs.caches.size() != layers.size() || bs.grad_logits.empty()) {
    throw ConsistencyError("branch set does not belong to this network");
  }
  const auto offsets = parameter_offsets(layers);
  std::vector<Tensor<T>> grads(offsets.back());
  std::vector<Tensor<T>> g = bs.grad_logits;
  std::size_t dropout_k = bs.masks.size();

  for (std::size_t l = layers.size(); l-- > 0;) {
    if (const auto* d = std::get_if<DropoutLayerState>(&layers[l])) {
      const Mask& mask = bs.masks[--dropout_k];
      if (d->dropout.mode == DropoutMode::kSplit) {
        std::vector<Tensor<T>> parents;
        for (std::size_t b = 0; b + 1 < g.size(); b += 2) {
          parents.push_back(sdropout_backward(g[b], g[b + 1], mask));
        }
        g = std::move(parents);
      } else {
        for (auto& gb : g) gb = dropout_backward_standard(gb, mask);
      }
      continue;
    }
    if (bs.caches[l].size() != g.size()) {
      throw ConsistencyError("branch count mismatch at layer " + std::to_string(l));
    }
    const std::size_t p = offsets[l];
    for (std::size_t b = 0; b < g.size(); ++b) {
      const LayerCache<T>& cache = bs.caches[l][b];
      g[b] = std::visit(
          [&](const auto& s) -> Tensor<T> {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, ConvLayerState<T>>) {
              auto cg = oriented_conv_backward(g[b], cache.input, s.layer, cache.conv);
              accumulate(grads[p], cg.weights);
              accumulate(grads[p + 1], cg.bias);
              return std::move(cg.input);
            } else if constexpr (std::is_same_v<S, PoolLayerState>) {
              return maxpool2d_backward(g[b], cache.argmax, cache.input_shape);
            } else if constexpr (std::is_same_v<S, ReluLayerState>) {
              return relu_backward(g[b], cache.input);
            } else if constexpr (std::is_same_v<S, PreluLayerState<T>>) {
              auto pg = prelu_backward(g[b], cache.input, s.slope);
              accumulate(grads[p], pg.slope);
              return std::move(pg.input);
            } else if constexpr (std::is_same_v<S, FcLayerState<T>>) {
              auto fg = fc_backward(g[b], cache.input, s.weights);
              accumulate(grads[p], fg.weights);
              accumulate(grads[p + 1], fg.bias);
              return fg.input.reshaped(cache.input_shape);
            } else {
              return g[b];
            }
          },
          layers[l]);
    }
  }
  return grads;
}

template <typename T>
void sgd_momentum_step(std::span<const ParamRef<T>> params, std::span<const Tensor<T>> grads,
                       OptimizerState<T>& state) {
  if (params.size() != grads.size()) {
    throw DimensionError(std::to_string(params.size()) + " parameter tensors but " +
                         std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].tensor->shape()) {
      throw DimensionError("gradient for " + params[i].name + " has shape " +
                           shape_to_string(grads[i].shape()) + ", parameter has " +
                           shape_to_string(params[i].tensor->shape()));
    }
    if (!all_finite(grads[i])) {
      throw NumericalError("non-finite gradient in " + params[i].name);
    }
  }
  if (state.velocity.empty()) {
    for (const auto& p : params) state.velocity.emplace_back(p.tensor->shape());
  }
  if (state.velocity.size() != params.size()) {
    throw ConsistencyError("optimizer state tracks " + std::to_string(state.velocity.size()) +
                           " tensors, network has " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* theta = params[i].tensor->raw();
    T* v = state.velocity[i].raw();
    const T* g = grads[i].raw();
    for (std::size_t j = 0; j < grads[i].size(); ++j) {
      v[j] = static_cast<T>(state.momentum * v[j] - state.learning_rate * g[j]);
      theta[j] += v[j];
    }
  }
}

template <typename T>
Network<T> init_weights(const NetworkSpec& spec, std::uint64_t seed, const InitOptions& options) {
  validate_spec(spec);
  const auto shapes = infer_shapes(spec);
  std::vector<LayerState<T>> layers;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const LayerSpec& ls = spec.layers[l];
    const Shape& in = shapes[l];
    Rng rng = make_rng(seed, Stream::kInit, l);
    std::normal_distribution<double> normal(0.0, options.weight_std);
    auto gaussian = [&](Shape shape) {
      Tensor<T> t(std::move(shape));
      for (T& v : t.data()) v = static_cast<T>(normal(rng));
      return t;
    };
    switch (ls.kind) {
      case LayerKind::kConv: {
        ConvParams<T> params{gaussian({ls.out, in[0], ls.kernel, ls.kernel}),
                             Tensor<T>({ls.out}, static_cast<T>(options.bias)), ls.stride, ls.pad};
        if (ls.orientable && (spec.rotate_fraction > 0.0 || spec.flip_fraction > 0.0)) {
          Rng sel = make_rng(seed, Stream::kSelection, l);
          layers.emplace_back(ConvLayerState<T>{OrientedConvLayer<T>::select(
              std::move(params), spec.rotate_fraction, spec.flip_fraction, sel)});
        } else {
          layers.emplace_back(
              ConvLayerState<T>{OrientedConvLayer<T>(std::move(params), {}, {}, {})});
        }
        break;
      }
      case LayerKind::kFc:
        layers.emplace_back(FcLayerState<T>{gaussian({ls.out, shape_size(in)}),
                                            Tensor<T>({ls.out}, static_cast<T>(options.bias))});
        break;
      case LayerKind::kPrelu:
        layers.emplace_back(
            PreluLayerState<T>{Tensor<T>({in[0]}, static_cast<T>(options.prelu_slope))});
        break;
      case LayerKind::kRelu:
        layers.emplace_back(ReluLayerState{});
        break;
      case LayerKind::kMaxPool:
        layers.emplace_back(PoolLayerState{ls.window, ls.stride});
        break;
      case LayerKind::kDropout:
        layers.emplace_back(DropoutLayerState{
            DropoutLayer(ls.keep, spec.dropout_mode, derive_seed(seed, Stream::kMask, l))});
        break;
    }
  }
  return Network<T>(spec, std::move(layers), seed);
}

template <typename T>
Network<T> to_inference(const Network<T>& net) {
  if (net.is_inference()) throw ConsistencyError("network is already in inference form");
  NetworkSpec spec = net.spec();
  spec.layers.clear();
  std::vector<LayerState<T>> layers;
  double pending = 1.0;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const auto& state = net.layers()[l];
    if (const auto* d = std::get_if<DropoutLayerState>(&state)) {
      pending *= d->dropout.p;
      continue;
    }
    LayerState<T> copy = state;
    Tensor<T>* weights = nullptr;
    if (auto* c = std::get_if<ConvLayerState<T>>(&copy)) weights = &c->layer.conv().weights;
    if (auto* f = std::get_if<FcLayerState<T>>(&copy)) weights = &f->weights;
    if (weights != nullptr && pending != 1.0) {
      for (T& w : weights->data()) w = static_cast<T>(w * pending);
      pending = 1.0;
    }
    layers.push_back(std::move(copy));
    spec.layers.push_back(net.spec().layers[l]);
  }
  if (pending != 1.0) {
    throw ConsistencyError("dropout layer has no following parametric layer to scale");
  }
  Network<T> out(std::move(spec), std::move(layers), net.seed());
  out.mark_inference();
  return out;
}

double LrSchedule::step(double monitored_loss) {
  if (!enabled) return 1.0;
  if (!has_best || monitored_loss < best) {
    best = monitored_loss;
    has_best = true;
    stale = 0;
    return 1.0;
  }
  if (++stale >= patience) {
    stale = 0;
    return decay;
  }
  return 1.0;
}

EpochMetrics train_epoch(Network<float>& net, const Dataset& dataset,
                         OptimizerState<float>& state, const EpochOptions& options) {
  if (dataset.size() == 0) throw InputError("cannot train on an empty dataset");
  if (state.batch_size == 0) throw ConfigError("batch_size must be positive");
  const std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(net.seed(), Stream::kShuffle, options.epoch);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }

  EpochMetrics metrics;
  double loss_sum = 0.0;
  double top1_sum = 0.0;
  for (std::size_t start = 0; start < n; start += state.batch_size) {
    const std::size_t end = std::min(n, start + state.batch_size);
    const std::span<const std::size_t> idx(order.data() + start, end - start);
    const Dataset batch = subset(dataset, idx);
    const Tensor<float> images = center_crop_batch(batch.images, options.crop);

    auto fwd = forward_training(net, images, batch.labels);
    if (!std::isfinite(fwd.loss)) {
      throw NumericalError("non-finite training loss at epoch " + std::to_string(options.epoch) +
                           ", step " + std::to_string(metrics.steps));
    }
    const auto grads = backward_training(net, fwd.branches);
    const auto params = net.parameters();
    sgd_momentum_step<float>(params, grads, state);

    const double count = static_cast<double>(end - start);
    loss_sum += fwd.loss * count;
    double acc = 0.0;
    for (const auto& logits : fwd.branches.logits) acc += top_k_accuracy(logits, batch.labels, 1);
    top1_sum += acc / static_cast<double>(fwd.branches.size()) * count;
    ++metrics.steps;
  }
  metrics.loss = loss_sum / static_cast<double>(n);
  metrics.top1 = top1_sum / static_cast<double>(n);
  return metrics;
}

#define SPINCONV_INSTANTIATE_TRAINING(T)                                                        \
  template TrainingForward<T> forward_training(Network<T>&, const Tensor<T>&,                   \
                                               std::span<const int>, const std::vector<Mask>*); \
  template std::vector<Tensor<T>> backward_training(const Network<T>&, const BranchSet<T>&);    \
  template void sgd_momentum_step(std::span<const ParamRef<T>>, std::span<const Tensor<T>>,     \
                                  OptimizerState<T>&);                                          \
  template Network<T> init_weights(const NetworkSpec&, std::uint64_t, const InitOptions&);      \
  template Network<T> to_inference(const Network<T>&);

SPINCONV_INSTANTIATE_TRAINING(float)
SPINCONV_INSTANTIATE_TRAINING(double)

}  // namespace spinconv
