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

#include "spinconv/app/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "spinconv/errors.h"
#include "spinconv/rng.h"

namespace spinconv::app {
namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed,
                    const std::string& prefix) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError(prefix + it.key() + ": unknown key");
  }
}

template <typename V>
V field(const nlohmann::json& j, const std::string& key, V fallback, const std::string& prefix) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if constexpr (std::is_same_v<V, bool>) {
    if (!v.is_boolean()) throw ConfigError(prefix + key + ": expected true or false");
  } else if constexpr (std::is_same_v<V, std::string>) {
    if (!v.is_string()) throw ConfigError(prefix + key + ": expected a string");
  } else if constexpr (std::is_floating_point_v<V>) {
    if (!v.is_number()) throw ConfigError(prefix + key + ": expected a number");
  } else {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(prefix + key + ": expected a non-negative integer");
    }
  }
  return v.get<V>();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

DatasetConfig parse_dataset(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("dataset: expected an object");
  DatasetConfig d;
  d.kind = field<std::string>(j, "kind", d.kind, "dataset.");
  if (d.kind == "digits" || d.kind == "shapes") {
    reject_unknown(j, {"kind", "train_per_class", "test_per_class", "seed"}, "dataset.");
    d.train_per_class = field<std::size_t>(j, "train_per_class", d.train_per_class, "dataset.");
    d.test_per_class = field<std::size_t>(j, "test_per_class", d.test_per_class, "dataset.");
    if (j.contains("seed")) d.seed = field<std::uint64_t>(j, "seed", 0, "dataset.");
    require(d.train_per_class > 0, "dataset.train_per_class: must be positive");
  } else if (d.kind == "idx") {
    reject_unknown(j, {"kind", "train_images", "train_labels", "test_images", "test_labels"},
                   "dataset.");
    d.train_images = field<std::string>(j, "train_images", "", "dataset.");
    d.train_labels = field<std::string>(j, "train_labels", "", "dataset.");
    d.test_images = field<std::string>(j, "test_images", "", "dataset.");
    d.test_labels = field<std::string>(j, "test_labels", "", "dataset.");
    require(!d.train_images.empty() && !d.train_labels.empty(),
            "dataset.train_images: idx datasets need train_images and train_labels");
    require(d.test_images.empty() == d.test_labels.empty(),
            "dataset.test_images: give both test_images and test_labels or neither");
  } else {
    throw ConfigError("dataset.kind: expected digits, shapes or idx, got \"" + d.kind + "\"");
  }
  return d;
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  nlohmann::json ds{{"kind", dataset.kind}};
  if (dataset.kind == "idx") {
    ds["train_images"] = dataset.train_images;
    ds["train_labels"] = dataset.train_labels;
    if (!dataset.test_images.empty()) {
      ds["test_images"] = dataset.test_images;
      ds["test_labels"] = dataset.test_labels;
    }
  } else {
    ds["train_per_class"] = dataset.train_per_class;
    ds["test_per_class"] = dataset.test_per_class;
    ds["seed"] = dataset_seed();
  }
  nlohmann::json j{{"seed", seed},
                   {"activation", to_string(activation)},
                   {"dropout_mode", to_string(dropout_mode)},
                   {"dropout_p", dropout_p},
                   {"rotate_fraction", rotate_fraction},
                   {"flip_fraction", flip_fraction},
                   {"learning_rate", learning_rate},
                   {"momentum", momentum},
                   {"batch_size", batch_size},
                   {"epochs", epochs},
                   {"init_std", init_std},
                   {"init_bias", init_bias},
                   {"crop", crop},
                   {"lr_schedule",
                    {{"enabled", lr_schedule.enabled},
                     {"decay", lr_schedule.decay},
                     {"patience", lr_schedule.patience}}},
                   {"dataset", ds},
                   {"output_dir", output_dir}};
  if (network) j["network"] = spec_to_json(*network);
  return j;
}

RunConfig parse_run_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  reject_unknown(j,
                 {"seed", "network", "activation", "dropout_mode", "dropout_p", "rotate_fraction",
                  "flip_fraction", "learning_rate", "momentum", "batch_size", "epochs", "init_std",
                  "init_bias", "crop", "lr_schedule", "dataset", "output_dir"},
                 "");
  RunConfig c;
  require(j.contains("seed"), "seed: required");
  c.seed = field<std::uint64_t>(j, "seed", 0, "");

  const auto act = field<std::string>(j, "activation", "relu", "");
  require(act == "relu" || act == "prelu", "activation: expected relu or prelu, got \"" + act + "\"");
  c.activation = act == "prelu" ? LayerKind::kPrelu : LayerKind::kRelu;

  const auto mode = field<std::string>(j, "dropout_mode", "standard", "");
  require(mode == "standard" || mode == "split",
          "dropout_mode: expected standard or split, got \"" + mode + "\"");
  c.dropout_mode = dropout_mode_from_string(mode);
  c.dropout_p = field<double>(j, "dropout_p", c.dropout_p, "");
  require(c.dropout_p > 0.0 && c.dropout_p < 1.0,
          "dropout_p: must be in (0, 1), got " + num(c.dropout_p));
  require(c.dropout_mode != DropoutMode::kSplit || c.dropout_p == 0.5,
          "dropout_p: split mode requires 0.5, got " + num(c.dropout_p));

  c.rotate_fraction = field<double>(j, "rotate_fraction", 0.0, "");
  require(c.rotate_fraction >= 0.0 && c.rotate_fraction <= 1.0,
          "rotate_fraction: must be in [0, 1], got " + num(c.rotate_fraction));
  c.flip_fraction = field<double>(j, "flip_fraction", 0.0, "");
  require(c.flip_fraction >= 0.0 && c.flip_fraction <= 1.0,
          "flip_fraction: must be in [0, 1], got " + num(c.flip_fraction));
  require(c.rotate_fraction + c.flip_fraction <= 1.0,
          "flip_fraction: rotate_fraction + flip_fraction must not exceed 1");

  c.learning_rate = field<double>(j, "learning_rate", c.learning_rate, "");
  require(c.learning_rate >= 0.0, "learning_rate: must be non-negative");
  c.momentum = field<double>(j, "momentum", c.momentum, "");
  require(c.momentum >= 0.0 && c.momentum < 1.0, "momentum: must be in [0, 1)");
  c.batch_size = field<std::size_t>(j, "batch_size", c.batch_size, "");
  require(c.batch_size > 0, "batch_size: must be positive");
  c.epochs = field<std::size_t>(j, "epochs", c.epochs, "");
  require(c.epochs > 0, "epochs: must be positive");
  c.init_std = field<double>(j, "init_std", c.init_std, "");
  require(c.init_std > 0.0, "init_std: must be positive");
  c.init_bias = field<double>(j, "init_bias", c.init_bias, "");
  c.crop = field<std::size_t>(j, "crop", 0, "");

  if (j.contains("lr_schedule")) {
    const auto& s = j.at("lr_schedule");
    require(s.is_object(), "lr_schedule: expected an object");
    reject_unknown(s, {"enabled", "decay", "patience"}, "lr_schedule.");
    c.lr_schedule.enabled = field<bool>(s, "enabled", true, "lr_schedule.");
    c.lr_schedule.decay = field<double>(s, "decay", 0.1, "lr_schedule.");
    require(c.lr_schedule.decay > 0.0 && c.lr_schedule.decay <= 1.0,
            "lr_schedule.decay: must be in (0, 1]");
    c.lr_schedule.patience = field<std::size_t>(s, "patience", 2, "lr_schedule.");
    require(c.lr_schedule.patience > 0, "lr_schedule.patience: must be positive");
  }

  if (j.contains("dataset")) c.dataset = parse_dataset(j.at("dataset"));
  c.output_dir = field<std::string>(j, "output_dir", "", "");
  if (j.contains("network")) {
    try {
      c.network = spec_from_json(j.at("network"));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("network: ") + e.what());
    }
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

Splits load_splits(const RunConfig& config) {
  const DatasetConfig& d = config.dataset;
  if (d.kind == "idx") {
    Splits s{load_idx(d.train_images, d.train_labels), std::nullopt};
    if (!d.test_images.empty()) {
      s.test = load_idx(d.test_images, d.test_labels);
      const std::size_t classes = std::max(s.train.num_classes, s.test->num_classes);
      s.train.num_classes = s.test->num_classes = classes;
    }
    return s;
  }
  auto make = d.kind == "shapes" ? make_rotated_shapes : make_synthetic_digits;
  const std::uint64_t seed = config.dataset_seed();
  Splits s{make(d.train_per_class, seed), std::nullopt};
  if (d.test_per_class > 0) s.test = make(d.test_per_class, derive_seed(seed, Stream::kData, 1));
  return s;
}

NetworkSpec build_spec(const RunConfig& config, const Shape& image_shape, std::size_t classes) {
  NetworkSpec spec;
  if (config.network) {
    spec = *config.network;
  } else {
    const std::size_t h = config.crop > 0 ? config.crop : image_shape[1];
    const std::size_t w = config.crop > 0 ? config.crop : image_shape[2];
    spec = default_desk_spec(image_shape[0], h, w, classes, config.activation);
    for (auto& l : spec.layers) {
      if (l.kind == LayerKind::kDropout) l.keep = config.dropout_p;
    }
  }
  spec.dropout_mode = config.dropout_mode;
  spec.rotate_fraction = config.rotate_fraction;
  spec.flip_fraction = config.flip_fraction;
  validate_spec(spec);
  const auto shapes = infer_shapes(spec);
  if (shapes.back().front() < classes) {
    throw ConfigError("network: final layer has " + std::to_string(shapes.back().front()) +
                      " outputs for " + std::to_string(classes) + " classes");
  }
  return spec;
}

}  // namespace spinconv::app
