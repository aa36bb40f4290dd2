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

#include "spinconv/checkpoint.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "spinconv/errors.h"
#include "spinconv/training.h"

namespace spinconv {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes[at + i]} << (8 * i);
  return v;
}

void put_floats(std::vector<std::uint8_t>& out, const Tensor<float>& t) {
  for (float f : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

nlohmann::json tensor_entry(const std::string& name, const Tensor<float>& t) {
  return {{"name", name}, {"shape", t.shape()}};
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Network<float>& net,
                                            const Tensor<float>& mean_image,
                                            const nlohmann::json& metadata) {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    if (const auto* c = std::get_if<ConvLayerState<float>>(&net.layers()[l])) {
      nlohmann::json axes = nlohmann::json::array();
      for (FlipAxis a : c->layer.flip_axes()) axes.push_back(to_string(a));
      layers.push_back({{"index", l},
                        {"rotate_set", c->layer.rotate_set()},
                        {"flip_set", c->layer.flip_set()},
                        {"flip_axes", axes}});
    }
  }
  nlohmann::json tensors = nlohmann::json::array();
  auto& mutable_net = const_cast<Network<float>&>(net);
  const auto params = mutable_net.parameters();
  for (const auto& p : params) tensors.push_back(tensor_entry(p.name, *p.tensor));
  if (!mean_image.empty()) tensors.push_back(tensor_entry("mean_image", mean_image));

  const nlohmann::json header{{"format_version", kCheckpointVersion},
                              {"seed", net.seed()},
                              {"inference", net.is_inference()},
                              {"spec", spec_to_json(net.spec())},
                              {"conv_layers", layers},
                              {"tensors", tensors},
                              {"metadata", metadata}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& p : params) put_floats(out, *p.tensor);
  if (!mean_image.empty()) put_floats(out, mean_image);
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || !std::equal(std::begin(kCheckpointMagic), std::end(kCheckpointMagic),
                                       bytes.begin())) {
    throw FormatError("not a spinconv checkpoint (bad magic)");
  }
  const std::uint32_t version = get_u32(bytes, 8);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::size_t header_len = get_u32(bytes, 12);
  if (bytes.size() < 16 + header_len) throw FormatError("checkpoint header truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  try {
    const NetworkSpec spec = spec_from_json(header.at("spec"));
    const auto seed = header.at("seed").get<std::uint64_t>();
    Network<float> net = init_weights<float>(spec, seed);
    for (const auto& entry : header.at("conv_layers")) {
      const auto l = entry.at("index").get<std::size_t>();
      auto* c = l < net.layers().size() ? std::get_if<ConvLayerState<float>>(&net.layers()[l])
                                        : nullptr;
      if (c == nullptr) throw FormatError("checkpoint names layer " + std::to_string(l) +
                                          " as convolution");
      std::vector<FlipAxis> axes;
      for (const auto& a : entry.at("flip_axes")) axes.push_back(flip_axis_from_string(a));
      c->layer = OrientedConvLayer<float>(c->layer.conv(),
                                          entry.at("rotate_set").get<std::vector<std::size_t>>(),
                                          entry.at("flip_set").get<std::vector<std::size_t>>(),
                                          std::move(axes));
    }

    auto params = net.parameters();
    const auto& tensors = header.at("tensors");
    const bool has_mean = tensors.size() == params.size() + 1;
    if (tensors.size() != params.size() && !has_mean) {
      throw FormatError("checkpoint lists " + std::to_string(tensors.size()) +
                        " tensors, network has " + std::to_string(params.size()));
    }
    std::size_t at = 16 + header_len;
    auto read_tensor = [&](const nlohmann::json& entry, Tensor<float>& dst) {
      const auto shape = entry.at("shape").get<Shape>();
      if (!dst.empty() && shape != dst.shape()) {
        throw FormatError("tensor " + entry.at("name").get<std::string>() + " has shape " +
                          shape_to_string(shape) + ", network expects " +
                          shape_to_string(dst.shape()));
      }
      if (dst.empty()) dst = Tensor<float>(shape);
      if (bytes.size() < at + 4 * dst.size()) throw FormatError("checkpoint data truncated");
      for (float& f : dst.data()) {
        f = std::bit_cast<float>(get_u32(bytes, at));
        at += 4;
      }
    };
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (tensors[i].at("name").get<std::string>() != params[i].name) {
        throw FormatError("checkpoint tensor " + std::to_string(i) + " is " +
                          tensors[i].at("name").get<std::string>() + ", expected " +
                          params[i].name);
      }
      read_tensor(tensors[i], *params[i].tensor);
    }
    Tensor<float> mean;
    if (has_mean) read_tensor(tensors.back(), mean);
    if (at != bytes.size()) throw FormatError("checkpoint has trailing bytes");
    if (header.at("inference").get<bool>()) net.mark_inference();
    return Checkpoint{std::move(net), std::move(mean), header.value("metadata", nlohmann::json{})};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint holds an invalid network: ") + e.what());
  }
}

void write_checkpoint(const std::filesystem::path& path, const Network<float>& net,
                      const Tensor<float>& mean_image, const nlohmann::json& metadata) {
  const auto bytes = encode_checkpoint(net, mean_image, metadata);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace spinconv
