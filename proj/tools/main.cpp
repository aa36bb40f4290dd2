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

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spinconv/app/commands.h"
#include "spinconv/app/config.h"
#include "spinconv/errors.h"
#include "spinconv/parallel.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

struct DatasetArgs {
  std::string images;
  std::string labels;
  std::string config;
  std::string split = "test";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--images", images, "IDX image file");
    cmd->add_option("--labels", labels, "IDX label file");
    cmd->add_option("--config", config, "Run config whose dataset block to regenerate");
    cmd->add_option("--split", split, "Split of the config dataset: train or test")
        ->check(CLI::IsMember({"train", "test"}));
  }

  spinconv::Dataset load() const {
    if (!images.empty() || !labels.empty()) {
      if (images.empty() || labels.empty()) {
        throw spinconv::ConfigError("--images and --labels must be given together");
      }
      return spinconv::load_idx(images, labels);
    }
    if (config.empty()) throw spinconv::ConfigError("give --images/--labels or --config");
    auto splits = spinconv::app::load_splits(spinconv::app::load_run_config(config));
    if (split == "train") return std::move(splits.train);
    if (!splits.test) throw spinconv::ConfigError("config dataset has no test split");
    return std::move(*splits.test);
  }
};

void print_fixed(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  out << buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Split dropout and rotate-pooling convolution toolkit"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (1 = bit-reproducible mode)")
      ->check(CLI::NonNegativeNumber);

  auto* train = app.add_subcommand("train", "Train a network from a JSON run config");
  std::string train_config;
  bool quiet = false;
  train->add_option("--config", train_config, "Run config JSON")->required();
  train->add_flag("--quiet", quiet, "Suppress per-epoch progress");

  auto* eval = app.add_subcommand("eval", "Top-1/top-5 accuracy of a checkpoint");
  std::string eval_ckpt;
  bool ten_view = false;
  DatasetArgs eval_data;
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval->add_flag("--ten-view", ten_view, "Average predictions over ten crops");
  eval_data.add_to(eval);

  auto* sweep = app.add_subcommand("sweep", "Accuracy against input rotation angle");
  std::string sweep_ckpt, sweep_out;
  std::size_t n_angles = 64;
  DatasetArgs sweep_data;
  sweep->add_option("--checkpoint", sweep_ckpt, "Checkpoint file")->required();
  sweep->add_option("--angles", n_angles, "Number of evenly spaced angles");
  sweep->add_option("--out", sweep_out, "CSV output path (default stdout)");
  sweep_data.add_to(sweep);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  std::string layer = "all";
  std::uint64_t gc_seed = 1;
  gradcheck->add_option("--layer", layer, "Layer kind or all");
  gradcheck->add_option("--seed", gc_seed, "Random seed");

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset as IDX files");
  std::string kind = "digits", prefix;
  std::size_t per_class = 100;
  std::uint64_t synth_seed = 1;
  synth->add_option("--kind", kind, "digits or shapes");
  synth->add_option("--per-class", per_class, "Images per class");
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--out-prefix", prefix, "Output path prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (threads > 0) spinconv::set_num_threads(static_cast<std::size_t>(threads));
    if (*train) {
      const auto config = spinconv::app::load_run_config(train_config);
      const auto outcome = spinconv::app::cmd_train(config, quiet ? nullptr : &std::cerr);
      std::cout << "wrote " << config.output_dir << " (" << outcome.net.parameter_count()
                << " parameters)\n";
    } else if (*eval) {
      const auto s = spinconv::app::cmd_eval(eval_ckpt, eval_data.load(), ten_view);
      std::cout << "top1,top5\n";
      print_fixed(std::cout, s.top1);
      std::cout << ",";
      print_fixed(std::cout, s.top5);
      std::cout << "\n";
    } else if (*sweep) {
      const auto report = spinconv::app::cmd_sweep(sweep_ckpt, sweep_data.load(), n_angles);
      if (sweep_out.empty()) {
        std::cout << report.to_csv();
      } else {
        std::ofstream out(sweep_out, std::ios::binary);
        if (!out) throw spinconv::IoError("cannot write " + sweep_out);
        out << report.to_csv();
      }
    } else if (*gradcheck) {
      return spinconv::app::cmd_gradcheck(layer, gc_seed, std::cout) ? 0 : kExitFailure;
    } else if (*synth) {
      spinconv::app::cmd_synth(kind, per_class, synth_seed, prefix);
    }
  } catch (const spinconv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const spinconv::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const spinconv::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIo;
  } catch (const spinconv::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
