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

#ifndef SPINCONV_NETWORK_H_
#define SPINCONV_NETWORK_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinconv/layers.h"
#include "spinconv/tensor.h"

namespace spinconv {

enum class LayerKind { kConv, kMaxPool, kRelu, kPrelu, kFc, kDropout };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& s);

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::size_t out = 0;     // conv filters / fc units
  std::size_t kernel = 0;  // conv kernel size
  std::size_t stride = 1;  // conv and pool stride
  std::size_t pad = 0;     // conv zero padding
  std::size_t window = 0;  // pool window
  bool orientable = false; // conv receives the network-wide rotate/flip fractions
  double keep = 0.5;       // dropout keep probability

  static LayerSpec conv(std::size_t out, std::size_t kernel, std::size_t stride = 1,
                        std::size_t pad = 0, bool orientable = false);
  static LayerSpec maxpool(std::size_t window, std::size_t stride);
  static LayerSpec relu();
  static LayerSpec prelu();
  static LayerSpec fc(std::size_t out);
  static LayerSpec dropout(double keep = 0.5);
};

struct NetworkSpec {
  Shape input;  // [C, H, W] or [d]
  std::vector<LayerSpec> layers;
  DropoutMode dropout_mode = DropoutMode::kStandard;
  double rotate_fraction = 0.0;
  double flip_fraction = 0.0;
};

// Throws ConfigError for out-of-range fractions or dropout settings, and
// DimensionError when adjacent layer shapes do not compose.
void validate_spec(const NetworkSpec& spec);

// Per-sample activation shape after every layer; front() is the input.
std::vector<Shape> infer_shapes(const NetworkSpec& spec);

// Trainable values of the spec's plain counterpart. Orientation pooling
// never changes it.
std::size_t count_parameters(const NetworkSpec& spec);

// Conv 5x5x16 - pool 2 - conv 3x3x32 - conv 3x3x32 - pool 2 - fc 256 - fc K,
// dropout on fc1; the two 3x3 convolutions are orientable.
NetworkSpec default_desk_spec(std::size_t channels, std::size_t height, std::size_t width,
                              std::size_t classes, LayerKind activation = LayerKind::kRelu);

// Conv/pool/fc sizes of the 8-layer ImageNet model (224x224x3, 1000 classes),
// with conv3_1..conv3_3 orientable and dropout after fc1 and fc2.
NetworkSpec imagenet_8layer_spec(LayerKind activation = LayerKind::kRelu);

nlohmann::json spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const nlohmann::json& j);

template <typename T>
struct ConvLayerState {
  OrientedConvLayer<T> layer;
};

template <typename T>
struct FcLayerState {
  Tensor<T> weights;  // [out, in]
  Tensor<T> bias;     // [out]
};

template <typename T>
struct PreluLayerState {
  Tensor<T> slope;
};

struct PoolLayerState {
  std::size_t window = 2;
  std::size_t stride = 2;
};

struct ReluLayerState {};

struct DropoutLayerState {
  DropoutLayer dropout;
};

template <typename T>
using LayerState = std::variant<ConvLayerState<T>, PoolLayerState, ReluLayerState,
                                PreluLayerState<T>, FcLayerState<T>, DropoutLayerState>;

// Non-owning handle to one trainable tensor.
template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* tensor;
};

// Materialized parameters and per-layer state for a NetworkSpec.
template <typename T>
class Network {
 public:
  Network(NetworkSpec spec, std::vector<LayerState<T>> layers, std::uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }
  std::vector<LayerState<T>>& layers() { return layers_; }
  const std::vector<LayerState<T>>& layers() const { return layers_; }
  std::uint64_t seed() const { return seed_; }
  bool is_inference() const { return inference_; }
  void mark_inference() { inference_ = true; }

  // Parameter tensors in layer order (conv weights, conv bias, prelu slope,
  // fc weights, fc bias).
  std::vector<ParamRef<T>> parameters();
  std::vector<const Tensor<T>*> parameters() const;
  std::size_t parameter_count() const;

  std::size_t dropout_layer_count() const;
  // Units per sample entering each dropout layer, in layer order.
  std::vector<std::size_t> dropout_units() const;
  void set_dropout_mode(DropoutMode mode);

  // Deterministic forward pass. Dropout layers pass activations through
  // unchanged; call to_inference first for properly scaled predictions.
  Tensor<T> forward(const Tensor<T>& batch) const;

  template <typename U>
  Network<U> cast() const;

 private:
  NetworkSpec spec_;
  std::vector<LayerState<T>> layers_;
  std::uint64_t seed_ = 0;
  bool inference_ = false;
};

}  // namespace spinconv

#endif  // SPINCONV_NETWORK_H_
