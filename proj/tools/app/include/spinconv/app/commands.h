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

#ifndef SPINCONV_APP_COMMANDS_H_
#define SPINCONV_APP_COMMANDS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "spinconv/app/config.h"
#include "spinconv/data.h"
#include "spinconv/evaluation.h"
#include "spinconv/network.h"
#include "spinconv/oracle/oracle.h"

namespace spinconv::app {

struct EpochRecord {
  std::size_t epoch = 0;
  std::string split;  // "train" or "test"
  double loss = 0.0;
  double top1 = 0.0;
};

struct TrainOutcome {
  Network<float> net;       // training form
  Tensor<float> mean_image;
  std::vector<EpochRecord> records;
  std::optional<EvalResult> final_test;
};

// Trains per the config without touching the filesystem (beyond reading
// IDX inputs). Progress lines go to `log` when given.
TrainOutcome run_training(const RunConfig& config, std::ostream* log = nullptr);

// `epoch,split,loss,top1` with six decimals.
std::string metrics_csv(const std::vector<EpochRecord>& records);

// Writes checkpoint.bin, metrics.csv and run.json into config.output_dir.
TrainOutcome cmd_train(const RunConfig& config, std::ostream* log = nullptr);

struct EvalSummary {
  double top1 = 0.0;
  double top5 = 0.0;
  std::size_t samples = 0;
  std::size_t views = 1;
};

// Loads the checkpoint, converts it to inference form and evaluates the
// raw dataset after subtracting the checkpoint's mean image. Images larger
// than the network input are center-cropped (single view) or cut into ten
// views.
EvalSummary cmd_eval(const std::filesystem::path& checkpoint, const Dataset& dataset,
                     bool ten_view);

SweepReport cmd_sweep(const std::filesystem::path& checkpoint, const Dataset& dataset,
                      std::size_t n_angles);

// Prints one row per checked problem; returns true when all passed.
bool cmd_gradcheck(const std::string& kind, std::uint64_t seed, std::ostream& out);

// Writes <prefix>-images-idx3-ubyte and <prefix>-labels-idx1-ubyte.
void cmd_synth(const std::string& kind, std::size_t per_class, std::uint64_t seed,
               const std::filesystem::path& prefix);

}  // namespace spinconv::app

#endif  // SPINCONV_APP_COMMANDS_H_
