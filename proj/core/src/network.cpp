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

#include "spinconv/network.h"

#include <set>

namespace spinconv {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kPrelu: return "prelu";
    case LayerKind::kFc: return "fc";
    case LayerKind::kDropout: return "dropout";
  }
  return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
  for (LayerKind k : {LayerKind::kConv, LayerKind::kMaxPool, LayerKind::kRelu,
                      LayerKind::kPrelu, LayerKind::kFc, LayerKind::kDropout}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown layer kind \"" + s +
                    "\" (valid: conv, maxpool, relu, prelu, fc, dropout)");
}

LayerSpec LayerSpec::conv(std::size_t out, std::size_t kernel, std::size_t stride,
                          std::size_t pad, bool orientable) {
  LayerSpec s;
  s.kind = LayerKind::kConv;
  s.out = out;
  s.kernel = kernel;
  s.stride = stride;
  s.pad = pad;
  s.orientable = orientable;
  return s;
}

LayerSpec LayerSpec::maxpool(std::size_t window, std::size_t stride) {
  LayerSpec s;
  s.kind = LayerKind::kMaxPool;
  s.window = window;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::prelu() {
  LayerSpec s;
  s.kind = LayerKind::kPrelu;
  return s;
}

LayerSpec LayerSpec::fc(std::size_t out) {
  LayerSpec s;
  s.kind = LayerKind::kFc;
  s.out = out;
  return s;
}

LayerSpec LayerSpec::dropout(double keep) {
  LayerSpec s;
  s.kind = LayerKind::kDropout;
  s.keep = keep;
  return s;
}

std::vector<Shape> infer_shapes(const NetworkSpec& spec) {
  if (spec.input.empty() || spec.input.size() == 2 || spec.input.size() > 3) {
    throw DimensionError("network input must be [C, H, W] or [d], got " +
                         shape_to_string(spec.input));
  }
  for (std::size_t d : spec.input) {
    if (d == 0) throw DimensionError("network input dimensions must be positive");
  }
  std::vector<Shape> shapes{spec.input};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const Shape& in = shapes.back();
    const std::string where = "layer " + std::to_string(i) + " (" + to_string(l.kind) + ")";
    switch (l.kind) {
      case LayerKind::kConv: {
        if (in.size() != 3) {
          throw DimensionError(where + " needs a [C, H, W] input, got " + shape_to_string(in));
        }
        if (l.out == 0 || l.kernel == 0 || l.kernel % 2 == 0 || l.stride == 0) {
          throw DimensionError(where + " needs out > 0, odd kernel and stride > 0");
        }
        shapes.push_back({l.out, conv_output_size(in[1], l.kernel, l.stride, l.pad),
                          conv_output_size(in[2], l.kernel, l.stride, l.pad)});
        break;
      }
      case LayerKind::kMaxPool: {
        if (in.size() != 3) {
          throw DimensionError(where + " needs a [C, H, W] input, got " + shape_to_string(in));
        }
        if (l.window == 0 || l.stride == 0 || l.window > in[1] || l.window > in[2]) {
          throw DimensionError(where + " window " + std::to_string(l.window) +
                               " does not fit input " + shape_to_string(in));
        }
        shapes.push_back({in[0], (in[1] - l.window) / l.stride + 1,
                          (in[2] - l.window) / l.stride + 1});
        break;
      }
      case LayerKind::kFc:
        if (l.out == 0) throw DimensionError(where + " needs out > 0");
        shapes.push_back({l.out});
        break;
      case LayerKind::kRelu:
      case LayerKind::kPrelu:
      case LayerKind::kDropout:
        shapes.push_back(in);
        break;
    }
  }
  return shapes;
}

void validate_spec(const NetworkSpec& spec) {
  if (!(spec.rotate_fraction >= 0.0 && spec.rotate_fraction <= 1.0)) {
    throw ConfigError("rotate_fraction must be in [0, 1], got " +
                      std::to_string(spec.rotate_fraction));
  }
  if (!(spec.flip_fraction >= 0.0 && spec.flip_fraction <= 1.0)) {
    throw ConfigError("flip_fraction must be in [0, 1], got " +
                      std::to_string(spec.flip_fraction));
  }
  if (spec.rotate_fraction + spec.flip_fraction > 1.0 + 1e-12) {
    throw ConfigError("rotate_fraction + flip_fraction must not exceed 1");
  }
  for (const auto& l : spec.layers) {
    if (l.kind == LayerKind::kDropout) validate_dropout(l.keep, spec.dropout_mode);
  }
  const auto shapes = infer_shapes(spec);
  if (spec.layers.empty() || spec.layers.back().kind != LayerKind::kFc) {
    throw DimensionError("network must end in a fully-connected layer producing logits, got " +
                         shape_to_string(shapes.back()));
  }
}

std::size_t count_parameters(const NetworkSpec& spec) {
  const auto shapes = infer_shapes(spec);
  std::size_t total = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const Shape& in = shapes[i];
    switch (l.kind) {
      case LayerKind::kConv:
        total += l.out * in[0] * l.kernel * l.kernel + l.out;
        break;
      case LayerKind::kFc:
        total += l.out * shape_size(in) + l.out;
        break;
      case LayerKind::kPrelu:
        total += in[0];
        break;
      default:
        break;
    }
  }
  return total;
}

NetworkSpec default_desk_spec(std::size_t channels, std::size_t height, std::size_t width,
                              std::size_t classes, LayerKind activation) {
  const LayerSpec act = activation == LayerKind::kPrelu ? LayerSpec::prelu() : LayerSpec::relu();
  NetworkSpec spec;
  spec.input = {channels, height, width};
  spec.layers = {
      LayerSpec::conv(16, 5, 1, 2), act, LayerSpec::maxpool(2, 2),
      LayerSpec::conv(32, 3, 1, 1, true), act,
      LayerSpec::conv(32, 3, 1, 1, true), act, LayerSpec::maxpool(2, 2),
      LayerSpec::fc(256), act, LayerSpec::dropout(0.5),
      LayerSpec::fc(classes),
  };
  return spec;
}

NetworkSpec imagenet_8layer_spec(LayerKind activation) {
  const LayerSpec act = activation == LayerKind::kPrelu ? LayerSpec::prelu() : LayerSpec::relu();
  NetworkSpec spec;
  spec.input = {3, 224, 224};
  spec.layers = {
      LayerSpec::conv(64, 7, 2, 1), act, LayerSpec::maxpool(3, 2),
      LayerSpec::conv(256, 5, 2, 2), act, LayerSpec::maxpool(3, 2),
      LayerSpec::conv(384, 3, 1, 1, true), act,
      LayerSpec::conv(384, 3, 1, 1, true), act,
      LayerSpec::conv(256, 3, 1, 1, true), act, LayerSpec::maxpool(3, 2),
      LayerSpec::fc(4096), act, LayerSpec::dropout(0.5),
      LayerSpec::fc(4096), act, LayerSpec::dropout(0.5),
      LayerSpec::fc(1000),
  };
  return spec;
}

namespace {

void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
    }
  }
}

template <typename V>
V get_or(const nlohmann::json& j, const char* key, V fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<V>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("field \"" + std::string(key) + "\" in " + where + " has the wrong type");
  }
}

}  // namespace

nlohmann::json spec_to_json(const NetworkSpec& spec) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : spec.layers) {
    nlohmann::json j{{"kind", to_string(l.kind)}};
    switch (l.kind) {
      case LayerKind::kConv:
        j["out"] = l.out;
        j["kernel"] = l.kernel;
        j["stride"] = l.stride;
        j["pad"] = l.pad;
        j["orientable"] = l.orientable;
        break;
      case LayerKind::kMaxPool:
        j["window"] = l.window;
        j["stride"] = l.stride;
        break;
      case LayerKind::kFc:
        j["out"] = l.out;
        break;
      case LayerKind::kDropout:
        j["keep"] = l.keep;
        break;
      default:
        break;
    }
    layers.push_back(j);
  }
  return {{"input", spec.input},
          {"layers", layers},
          {"dropout_mode", to_string(spec.dropout_mode)},
          {"rotate_fraction", spec.rotate_fraction},
          {"flip_fraction", spec.flip_fraction}};
}

NetworkSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("network spec must be a JSON object");
  reject_unknown_keys(j, {"input", "layers", "dropout_mode", "rotate_fraction", "flip_fraction"},
                      "network");
  NetworkSpec spec;
  spec.input = get_or<Shape>(j, "input", {}, "network");
  spec.dropout_mode =
      dropout_mode_from_string(get_or<std::string>(j, "dropout_mode", "standard", "network"));
  spec.rotate_fraction = get_or<double>(j, "rotate_fraction", 0.0, "network");
  spec.flip_fraction = get_or<double>(j, "flip_fraction", 0.0, "network");
  if (!j.contains("layers") || !j.at("layers").is_array()) {
    throw ConfigError("network.layers must be an array");
  }
  std::size_t index = 0;
  for (const auto& lj : j.at("layers")) {
    const std::string where = "network.layers[" + std::to_string(index++) + "]";
    if (!lj.is_object() || !lj.contains("kind")) {
      throw ConfigError(where + " must be an object with a \"kind\"");
    }
    LayerSpec l;
    l.kind = layer_kind_from_string(get_or<std::string>(lj, "kind", "", where));
    switch (l.kind) {
      case LayerKind::kConv:
        reject_unknown_keys(lj, {"kind", "out", "kernel", "stride", "pad", "orientable"}, where);
        l.out = get_or<std::size_t>(lj, "out", 0, where);
        l.kernel = get_or<std::size_t>(lj, "kernel", 3, where);
        l.stride = get_or<std::size_t>(lj, "stride", 1, where);
        l.pad = get_or<std::size_t>(lj, "pad", 0, where);
        l.orientable = get_or<bool>(lj, "orientable", false, where);
        break;
      case LayerKind::kMaxPool:
        reject_unknown_keys(lj, {"kind", "window", "stride"}, where);
        l.window = get_or<std::size_t>(lj, "window", 2, where);
        l.stride = get_or<std::size_t>(lj, "stride", l.window, where);
        break;
      case LayerKind::kFc:
        reject_unknown_keys(lj, {"kind", "out"}, where);
        l.out = get_or<std::size_t>(lj, "out", 0, where);
        break;
      case LayerKind::kDropout:
        reject_unknown_keys(lj, {"kind", "keep"}, where);
        l.keep = get_or<double>(lj, "keep", 0.5, where);
        break;
      default:
        reject_unknown_keys(lj, {"kind"}, where);
        break;
    }
    spec.layers.push_back(l);
  }
  return spec;
}

// ---------------------------------------------------------------------------

template <typename T>
Network<T>::Network(NetworkSpec spec, std::vector<LayerState<T>> layers, std::uint64_t seed)
    : spec_(std::move(spec)), layers_(std::move(layers)), seed_(seed) {
  if (layers_.size() != spec_.layers.size()) {
    throw ConsistencyError("network has " + std::to_string(layers_.size()) +
                           " layer states for " + std::to_string(spec_.layers.size()) +
                           " layer specs");
  }
}

template <typename T>
std::vector<ParamRef<T>> Network<T>::parameters() {
  std::vector<ParamRef<T>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string prefix = "layer" + std::to_string(i) + ".";
    std::visit(
        [&](auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, ConvLayerState<T>>) {
            out.push_back({prefix + "weight", &s.layer.conv().weights});
            out.push_back({prefix + "bias", &s.layer.conv().bias});
          } else if constexpr (std::is_same_v<S, FcLayerState<T>>) {
            out.push_back({prefix + "weight", &s.weights});
            out.push_back({prefix + "bias", &s.bias});
          } else if constexpr (std::is_same_v<S, PreluLayerState<T>>) {
            out.push_back({prefix + "slope", &s.slope});
          }
        },
        layers_[i]);
  }
  return out;
}

template <typename T>
std::vector<const Tensor<T>*> Network<T>::parameters() const {
  std::vector<const Tensor<T>*> out;
  for (const auto& ref : const_cast<Network*>(this)->parameters()) out.push_back(ref.tensor);
  return out;
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t total = 0;
  for (const Tensor<T>* t : parameters()) total += t->size();
  return total;
}

template <typename T>
std::size_t Network<T>::dropout_layer_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += std::holds_alternative<DropoutLayerState>(l) ? 1 : 0;
  return n;
}

template <typename T>
std::vector<std::size_t> Network<T>::dropout_units() const {
  const auto shapes = infer_shapes(spec_);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (std::holds_alternative<DropoutLayerState>(layers_[i])) out.push_back(shape_size(shapes[i]));
  }
  return out;
}

template <typename T>
void Network<T>::set_dropout_mode(DropoutMode mode) {
  for (auto& l : layers_) {
    if (auto* d = std::get_if<DropoutLayerState>(&l)) {
      validate_dropout(d->dropout.p, mode);
      d->dropout.mode = mode;
    }
  }
  spec_.dropout_mode = mode;
}

namespace {

template <typename T>
Tensor<T> flatten(const Tensor<T>& x) {
  if (x.rank() == 2) return x;
  return x.reshaped({x.dim(0), x.size() / x.dim(0)});
}

}  // namespace

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& batch) const {
  Shape expected{batch.rank() > 0 ? batch.dim(0) : 0};
  expected.insert(expected.end(), spec_.input.begin(), spec_.input.end());
  if (batch.shape() != expected) {
    throw DimensionError("network input has shape " + shape_to_string(batch.shape()) +
                         ", expected " + shape_to_string(expected));
  }
  Tensor<T> x = batch;
  for (const auto& layer : layers_) {
    x = std::visit(
        [&](const auto& s) -> Tensor<T> {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, ConvLayerState<T>>) {
            return oriented_conv_forward(x, s.layer);
          } else if constexpr (std::is_same_v<S, PoolLayerState>) {
            return maxpool2d_forward(x, s.window, s.stride).output;
          } else if constexpr (std::is_same_v<S, ReluLayerState>) {
            return relu_forward(x);
          } else if constexpr (std::is_same_v<S, PreluLayerState<T>>) {
            return prelu_forward(x, s.slope);
          } else if constexpr (std::is_same_v<S, FcLayerState<T>>) {
            return fc_forward(flatten(x), s.weights, s.bias);
          } else {
            return x;
          }
        },
        layer);
  }
  return x;
}

template <typename T>
template <typename U>
Network<U> Network<T>::cast() const {
  std::vector<LayerState<U>> layers;
  for (const auto& layer : layers_) {
    layers.push_back(std::visit(
        [](const auto& s) -> LayerState<U> {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, ConvLayerState<T>>) {
            const auto& conv = s.layer.conv();
            ConvParams<U> params{conv.weights.template cast<U>(), conv.bias.template cast<U>(),
                                 conv.stride, conv.pad};
            return ConvLayerState<U>{OrientedConvLayer<U>(std::move(params), s.layer.rotate_set(),
                                                          s.layer.flip_set(),
                                                          s.layer.flip_axes())};
          } else if constexpr (std::is_same_v<S, PreluLayerState<T>>) {
            return PreluLayerState<U>{s.slope.template cast<U>()};
          } else if constexpr (std::is_same_v<S, FcLayerState<T>>) {
            return FcLayerState<U>{s.weights.template cast<U>(), s.bias.template cast<U>()};
          } else {
            return s;
          }
        },
        layer));
  }
  Network<U> out(spec_, std::move(layers), seed_);
  if (inference_) out.mark_inference();
  return out;
}

template class Network<float>;
template class Network<double>;
template Network<double> Network<float>::cast<double>() const;
template Network<float> Network<double>::cast<float>() const;
template Network<float> Network<float>::cast<float>() const;
template Network<double> Network<double>::cast<double>() const;

}  // namespace spinconv
