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

#ifndef SPINCONV_APP_CONFIG_H_
#define SPINCONV_APP_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "spinconv/data.h"
#include "spinconv/layers.h"
#include "spinconv/network.h"
#include "spinconv/training.h"

namespace spinconv::app {

struct DatasetConfig {
  std::string kind = "digits";  // digits | shapes | idx
  // Synthetic kinds.
  std::size_t train_per_class = 800;
  std::size_t test_per_class = 200;  // 0 disables the test split
  std::optional<std::uint64_t> seed;  // defaults to the run seed
  // IDX files; the test pair is optional.
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::optional<NetworkSpec> network;  // explicit layer list; default desk model otherwise
  LayerKind activation = LayerKind::kRelu;
  DropoutMode dropout_mode = DropoutMode::kStandard;
  double dropout_p = 0.5;
  double rotate_fraction = 0.0;
  double flip_fraction = 0.0;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 128;
  std::size_t epochs = 5;
  double init_std = 0.01;
  double init_bias = 1.0;
  std::size_t crop = 0;  // network input side; 0 uses the full image
  LrSchedule lr_schedule;
  DatasetConfig dataset;
  std::string output_dir;

  std::uint64_t dataset_seed() const { return dataset.seed.value_or(seed); }
  nlohmann::json to_json() const;
};

// Validates every field and rejects unknown keys; errors are ConfigError
// messages that start with the offending field name.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

struct Splits {
  Dataset train;
  std::optional<Dataset> test;
};

// Raw (not mean-subtracted) training and test splits.
Splits load_splits(const RunConfig& config);

// The configured network, with the top-level dropout and orientation
// settings applied and the final layer sized to `classes`.
NetworkSpec build_spec(const RunConfig& config, const Shape& image_shape, std::size_t classes);

}  // namespace spinconv::app

#endif  // SPINCONV_APP_CONFIG_H_
