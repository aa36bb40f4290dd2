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

#ifndef SPINCONV_CHECKPOINT_H_
#define SPINCONV_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinconv/network.h"
#include "spinconv/tensor.h"

namespace spinconv {

inline constexpr char kCheckpointMagic[8] = {'S', 'P', 'I', 'N', 'C', 'O', 'N', 'V'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Network<float> net;
  Tensor<float> mean_image;  // empty when the run had no preprocessing
  nlohmann::json metadata;   // config echo and anything else the writer attached
};

// Layout: 8-byte magic "SPINCONV", u32 LE version, u32 LE header length,
// compact JSON header (sorted keys), then every tensor listed in the
// header as raw little-endian float32 in header order.
std::vector<std::uint8_t> encode_checkpoint(const Network<float>& net,
                                            const Tensor<float>& mean_image,
                                            const nlohmann::json& metadata);

// Throws FormatError on a bad magic, unsupported version or malformed body.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void write_checkpoint(const std::filesystem::path& path, const Network<float>& net,
                      const Tensor<float>& mean_image, const nlohmann::json& metadata);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace spinconv

#endif  // SPINCONV_CHECKPOINT_H_
