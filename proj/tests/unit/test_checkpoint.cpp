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


#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "spinconv/checkpoint.h"
#include "spinconv/errors.h"
#include "spinconv/training.h"
#include "test_support.h"

namespace spinconv {
namespace {

namespace fs = std::filesystem;

Network<float> sample_network() {
  auto spec = default_desk_spec(1, 16, 16, 5, LayerKind::kPrelu);
  spec.dropout_mode = DropoutMode::kSplit;
  spec.rotate_fraction = 0.25;
  spec.flip_fraction = 0.25;
  return init_weights<float>(spec, 77, InitOptions{0.05, 0.1, 0.25});
}

std::uint32_t header_length(const std::vector<std::uint8_t>& bytes) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[12 + i];
  return v;
}

TEST(Checkpoint, LayoutAndHeader) {
  const auto net = sample_network();
  const auto bytes = encode_checkpoint(net, Tensor<float>({1, 16, 16}, 0.25f), {{"note", "x"}});
  ASSERT_GT(bytes.size(), 16u);
  EXPECT_EQ(std::memcmp(bytes.data(), "SPINCONV", 8), 0);
  EXPECT_EQ(bytes[8], 1);
  EXPECT_EQ(bytes[9] | bytes[10] | bytes[11], 0);
  const std::uint32_t len = header_length(bytes);
  const auto header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + len);
  EXPECT_EQ(header.at("format_version"), 1);
  EXPECT_EQ(header.at("seed"), 77u);
  EXPECT_EQ(header.at("metadata").at("note"), "x");
  std::size_t floats = 0;
  for (const auto& t : header.at("tensors")) {
    std::size_t n = 1;
    for (std::size_t d : t.at("shape")) n *= d;
    floats += n;
  }
  EXPECT_EQ(bytes.size(), 16 + len + 4 * floats);
  EXPECT_EQ(floats, net.parameter_count() + 16 * 16);
}

TEST(Checkpoint, RoundTripRestoresEverything) {
  const auto net = sample_network();
  const Tensor<float> mean({1, 16, 16}, 0.125f);
  const auto back = decode_checkpoint(encode_checkpoint(net, mean, {{"k", 1}}));
  EXPECT_EQ(back.mean_image, mean);
  EXPECT_EQ(back.metadata.at("k"), 1);
  EXPECT_EQ(back.net.seed(), net.seed());
  EXPECT_EQ(spec_to_json(back.net.spec()), spec_to_json(net.spec()));
  const auto a = net.parameters();
  const auto b = back.net.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i], *b[i]);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const auto* ca = std::get_if<ConvLayerState<float>>(&net.layers()[l]);
    if (ca == nullptr) continue;
    const auto& cb = std::get<ConvLayerState<float>>(back.net.layers()[l]);
    EXPECT_EQ(ca->layer.rotate_set(), cb.layer.rotate_set());
    EXPECT_EQ(ca->layer.flip_set(), cb.layer.flip_set());
    EXPECT_EQ(ca->layer.flip_axes(), cb.layer.flip_axes());
  }
  Rng rng(1);
  const auto x = testing::random_tensor<float>({2, 1, 16, 16}, rng);
  EXPECT_EQ(back.net.forward(x), net.forward(x));
  EXPECT_EQ(encode_checkpoint(back.net, back.mean_image, back.metadata),
            encode_checkpoint(net, mean, {{"k", 1}}));
}

TEST(Checkpoint, InferenceFormRoundTrips) {
  const auto inf = to_inference(sample_network());
  const auto back = decode_checkpoint(encode_checkpoint(inf, Tensor<float>(), {}));
  EXPECT_TRUE(back.net.is_inference());
  EXPECT_EQ(back.net.dropout_layer_count(), 0u);
  EXPECT_TRUE(back.mean_image.empty());
}

TEST(Checkpoint, RejectsCorruptInput) {
  const auto bytes = encode_checkpoint(sample_network(), Tensor<float>(), {});
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad_magic), FormatError);
  auto bad_version = bytes;
  bad_version[8] = 2;
  EXPECT_THROW(decode_checkpoint(bad_version), FormatError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 4);
  EXPECT_THROW(decode_checkpoint(truncated), FormatError);
  EXPECT_THROW(decode_checkpoint(std::vector<std::uint8_t>(5, 0)), FormatError);
  auto bad_header = bytes;
  bad_header[16] = '!';
  EXPECT_THROW(decode_checkpoint(bad_header), FormatError);
}

TEST(Checkpoint, FileRoundTripAndIoErrors) {
  const auto dir = fs::temp_directory_path() / "spinconv_ckpt_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto net = sample_network();
  write_checkpoint(dir / "c.bin", net, Tensor<float>(), {});
  EXPECT_EQ(read_checkpoint(dir / "c.bin").net.parameter_count(), net.parameter_count());
  EXPECT_THROW(read_checkpoint(dir / "missing.bin"), IoError);
  EXPECT_THROW(write_checkpoint(dir / "no" / "such" / "c.bin", net, Tensor<float>(), {}), IoError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace spinconv
