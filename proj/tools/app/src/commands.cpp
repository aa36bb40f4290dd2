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

#include "spinconv/app/commands.h"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "spinconv/checkpoint.h"
#include "spinconv/errors.h"
#include "spinconv/training.h"

namespace spinconv::app {
namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Crop size that maps dataset images onto the network input (0 = none).
std::size_t input_crop(const NetworkSpec& spec, const Shape& image_shape) {
  if (spec.input.size() != 3 || image_shape.size() != 3) return 0;
  if (spec.input == image_shape) return 0;
  if (spec.input[0] != image_shape[0] || spec.input[1] != spec.input[2] ||
      spec.input[1] > image_shape[1] || spec.input[2] > image_shape[2]) {
    throw DimensionError("network input " + shape_to_string(spec.input) +
                         " cannot be cropped from images of shape " +
                         shape_to_string(image_shape));
  }
  return spec.input[1];
}

struct Loaded {
  Network<float> net;
  Dataset data;
  std::size_t crop;
};

Loaded load_for_inference(const std::filesystem::path& checkpoint, const Dataset& dataset) {
  Checkpoint ck = read_checkpoint(checkpoint);
  Network<float> net = ck.net.is_inference() ? std::move(ck.net) : to_inference(ck.net);
  Dataset data = ck.mean_image.empty() ? dataset : preprocess(dataset, ck.mean_image);
  const std::size_t crop = input_crop(net.spec(), data.image_shape());
  return {std::move(net), std::move(data), crop};
}

}  // namespace

std::string metrics_csv(const std::vector<EpochRecord>& records) {
  std::string out = "epoch,split,loss,top1\n";
  for (const auto& r : records) {
    out += std::to_string(r.epoch) + "," + r.split + "," + fixed6(r.loss) + "," + fixed6(r.top1) +
           "\n";
  }
  return out;
}

TrainOutcome run_training(const RunConfig& config, std::ostream* log) {
  const Splits splits = load_splits(config);
  const Dataset train = preprocess(splits.train);
  std::optional<Dataset> test;
  if (splits.test) test = preprocess(*splits.test, train.mean_image);

  const NetworkSpec spec = build_spec(config, train.image_shape(), train.num_classes);
  const std::size_t crop = input_crop(spec, train.image_shape());
  TrainOutcome outcome{
      init_weights<float>(spec, config.seed, InitOptions{config.init_std, config.init_bias, 0.25}),
      train.mean_image, {}, std::nullopt};

  OptimizerState<float> state;
  state.learning_rate = config.learning_rate;
  state.momentum = config.momentum;
  state.batch_size = config.batch_size;
  LrSchedule schedule = config.lr_schedule;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const EpochMetrics m = train_epoch(outcome.net, train, state, EpochOptions{epoch, crop});
    outcome.records.push_back({epoch, "train", m.loss, m.top1});
    double monitored = m.loss;
    if (test) {
      const EvalResult r = evaluate(to_inference(outcome.net), test->images, test->labels, crop);
      outcome.records.push_back({epoch, "test", r.loss, r.top1});
      outcome.final_test = r;
      monitored = r.loss;
    }
    if (log != nullptr) {
      *log << "epoch " << epoch << " lr " << state.learning_rate << " train_loss " << fixed6(m.loss)
           << " train_top1 " << fixed6(m.top1);
      if (test) *log << " test_top1 " << fixed6(outcome.final_test->top1);
      *log << "\n";
    }
    state.learning_rate *= schedule.step(monitored);
  }
  return outcome;
}

TrainOutcome cmd_train(const RunConfig& config, std::ostream* log) {
  if (config.output_dir.empty()) throw ConfigError("output_dir: required for train");
  const std::filesystem::path dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  TrainOutcome outcome = run_training(config, log);
  const nlohmann::json config_json = config.to_json();
  write_checkpoint(dir / "checkpoint.bin", outcome.net, outcome.mean_image,
                   nlohmann::json{{"config", config_json}});
  write_text(dir / "metrics.csv", metrics_csv(outcome.records));

  const nlohmann::json run{
      {"format_version", kCheckpointVersion},
      {"seed", config.seed},
      {"dataset_seed", config.dataset_seed()},
      {"config", config_json},
      {"parameter_count", outcome.net.parameter_count()},
      {"files", {"checkpoint.bin", "metrics.csv"}},
  };
  write_text(dir / "run.json", run.dump(2) + "\n");
  return outcome;
}

EvalSummary cmd_eval(const std::filesystem::path& checkpoint, const Dataset& dataset,
                     bool ten_view) {
  const Loaded in = load_for_inference(checkpoint, dataset);
  EvalSummary s;
  s.samples = in.data.size();
  if (!ten_view) {
    const EvalResult r = evaluate(in.net, in.data.images, in.data.labels, in.crop);
    s.top1 = r.top1;
    s.top5 = r.top5;
    return s;
  }
  const Shape one = in.data.image_shape();
  const std::size_t stride = shape_size(one);
  Tensor<double> probs;
  for (std::size_t i = 0; i < in.data.size(); ++i) {
    const Tensor<float> image(one, std::vector<float>(in.data.images.raw() + i * stride,
                                                      in.data.images.raw() + (i + 1) * stride));
    const auto p = ten_view_predict(in.net, image);
    if (probs.empty()) probs = Tensor<double>({in.data.size(), p.size()});
    std::copy(p.begin(), p.end(), probs.raw() + i * p.size());
  }
  s.top1 = top_k_accuracy(probs, in.data.labels, 1);
  s.top5 = top_k_accuracy(probs, in.data.labels, std::min<std::size_t>(5, probs.dim(1)));
  s.views = 10;
  return s;
}

SweepReport cmd_sweep(const std::filesystem::path& checkpoint, const Dataset& dataset,
                      std::size_t n_angles) {
  const auto angles = uniform_angles(n_angles);
  const Loaded in = load_for_inference(checkpoint, dataset);
  SweepReport report = rotation_sweep(in.net, in.data.images, in.data.labels, angles, in.crop);
  report.model = checkpoint.filename().string();
  report.dataset = std::to_string(in.data.size()) + " images";
  return report;
}

bool cmd_gradcheck(const std::string& kind, std::uint64_t seed, std::ostream& out) {
  const auto results = oracle::run_gradcheck(kind, seed);
  bool ok = true;
  out << "layer,coordinates,skipped,max_rel_error,status\n";
  for (const auto& r : results) {
    char err[32];
    std::snprintf(err, sizeof err, "%.3e", r.max_relative_error);
    out << r.layer << "," << r.coordinates << "," << r.skipped << "," << err << ","
        << (r.passed ? "PASS" : "FAIL") << "\n";
    ok = ok && r.passed;
  }
  return ok;
}

void cmd_synth(const std::string& kind, std::size_t per_class, std::uint64_t seed,
               const std::filesystem::path& prefix) {
  Dataset d;
  if (kind == "digits") {
    d = make_synthetic_digits(per_class, seed);
  } else if (kind == "shapes") {
    d = make_rotated_shapes(per_class, seed);
  } else {
    throw ConfigError("kind: expected digits or shapes, got \"" + kind + "\"");
  }
  write_idx(d, prefix.string() + "-images-idx3-ubyte", prefix.string() + "-labels-idx1-ubyte");
}

}  // namespace spinconv::app
