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


// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "spinconv/app/commands.h"
#include "spinconv/app/config.h"
#include "spinconv/kernel_transforms.h"
#include "spinconv/layers.h"
#include "spinconv/oracle/oracle.h"
#include "spinconv/training.h"
#include "test_support.h"

namespace spinconv {
namespace {

namespace fs = std::filesystem;
using testing::max_relative_error;
using testing::random_tensor;

// Pinned tolerances and budgets.
constexpr std::size_t kSplitPairs = 1000;
constexpr double kLossEquivalenceTol = 1e-12;
constexpr double kGradTol = 1e-4;
constexpr std::size_t kGradCoordinates = 100;
constexpr std::size_t kEquivarianceInputs = 100;
constexpr double kEquivarianceTol = 1e-5;
constexpr std::size_t kConvConfigs = 50;
constexpr double kConvTol = 1e-6;
constexpr double kConvergenceLoss = 0.5;
constexpr double kNeverConverged = 6.0;
constexpr double kTop1Slack = -0.005;
constexpr double kRotationMeanGain = 0.02;
constexpr double kRotationBandGain = 0.05;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Outcome with_budget(Outcome o, double seconds, double budget) {
  o.detail += fmt(" (%.1fs, budget %.0fs)", seconds, budget);
  if (seconds > budget) {
    o.pass = false;
    o.detail += " over budget";
  }
  return o;
}

// 1. y1 + y2 == y bitwise.
Outcome split_identity() {
  Rng rng(101);
  std::size_t bad = 0;
  for (std::size_t t = 0; t < kSplitPairs; ++t) {
    const std::size_t d = 1 + rng() % 64;
    const auto y = random_tensor<float>({2, d}, rng, -1e4, 1e4);
    const auto s = sdropout_forward(y, draw_mask(d, 0.5, rng));
    for (std::size_t i = 0; i < y.size(); ++i) {
      const float sum = s.kept[i] + s.dropped[i];
      bad += std::memcmp(&sum, &y[i], sizeof sum) != 0;
    }
  }
  return {bad == 0, std::to_string(kSplitPairs) + " pairs, " + std::to_string(bad) + " mismatches"};
}

// 2. Exhaustive mask enumeration on tiny nets.
Outcome loss_equivalence() {
  double worst = 0.0;
  for (std::size_t d : {2u, 4u, 8u}) {
    NetworkSpec spec{{5}, {LayerSpec::fc(d), LayerSpec::relu(), LayerSpec::dropout(0.5),
                           LayerSpec::fc(3)}};
    const auto net = init_weights<double>(spec, d, InitOptions{0.7, 0.1, 0.25});
    Rng rng(200 + d);
    const auto x = random_tensor({4, 5}, rng);
    const std::vector<int> labels{0, 1, 2, 1};
    const auto r = oracle::enumerate_mask_losses(net, x, labels);
    worst = std::max(worst, std::abs(r.dropout - r.sdropout));
  }
  return {worst <= kLossEquivalenceTol, fmt("max |L_dropout - L_sdropout| = %.3e", worst)};
}

// 3. Finite-difference gradient suite.
Outcome gradient_suite() {
  const auto results = oracle::run_gradcheck("all", 1, oracle::kGradcheckCoordinates, kGradTol);
  bool ok = true;
  double worst = 0.0;
  std::size_t fewest = ~std::size_t{0};
  for (const auto& r : results) {
    ok = ok && r.passed && r.coordinates >= kGradCoordinates && r.max_relative_error <= kGradTol;
    worst = std::max(worst, r.max_relative_error);
    fewest = std::min(fewest, r.coordinates);
  }
  return {ok, std::to_string(results.size()) + " problems, min coordinates " +
                  std::to_string(fewest) + fmt(", max rel err %.3e", worst)};
}

// 4. Orientation-group laws, bitwise.
Outcome group_laws() {
  Rng rng(401);
  std::size_t bad = 0;
  for (int t = 0; t < 200; ++t) {
    const auto w3 = random_tensor({4, 3, 3, 3}, rng);
    const auto w5 = random_tensor({2, 3, 5, 5}, rng);
    auto r = w3;
    for (int i = 0; i < 8; ++i) r = rotate_kernel_45_ring(r, 1);
    bad += !(r == w3);
    for (const auto* w : {&w3, &w5}) {
      auto q = *w;
      for (int i = 0; i < 4; ++i) q = rotate_kernel_90(q, 1);
      bad += !(q == *w);
      for (FlipAxis a : {FlipAxis::kLeftRight, FlipAxis::kUpDown}) {
        bad += !(flip_kernel(flip_kernel(*w, a), a) == *w);
      }
    }
    bad += !(rotate_kernel_45_ring(rotate_kernel_45_ring(w3, 1), 1) == rotate_kernel_90(w3, 1));
  }
  return {bad == 0, std::to_string(bad) + " violations over 200 random kernels"};
}

// 5. RPC commutes with quarter turns.
Outcome equivariance() {
  Rng rng(501);
  double worst = 0.0;
  for (std::size_t t = 0; t < kEquivarianceInputs; ++t) {
    const std::size_t size = 5 + rng() % 8;
    const auto x = random_tensor({1, 3, size, size}, rng);
    ConvParams<double> conv{random_tensor({1, 3, 3, 3}, rng), random_tensor({1}, rng), 1, 1};
    const OrientedConvLayer<double> layer(conv, {0}, {}, {});
    worst = std::max(worst, max_relative_error(rpc_forward(testing::rot90_cw(x), layer),
                                               testing::rot90_cw(rpc_forward(x, layer))));
  }
  return {worst <= kEquivarianceTol,
          std::to_string(kEquivarianceInputs) + fmt(" inputs, max rel err %.3e", worst)};
}

// 6. Orientation pooling adds no trainable values.
Outcome parameter_counts() {
  Rng rng(601);
  bool ok = true;
  for (std::size_t k : {3u, 5u}) {
    ConvParams<float> conv{random_tensor<float>({16, 8, k, k}, rng), random_tensor<float>({16}, rng),
                           1, k / 2};
    const std::size_t plain = OrientedConvLayer<float>(conv, {}, {}, {}).parameter_count();
    for (double r : {0.25, 0.5, 1.0}) {
      ok = ok && make_rpc_layer(conv, r, rng).parameter_count() == plain;
      ok = ok && make_frpc_layer(conv, r / 2, r / 2, rng).parameter_count() == plain;
    }
  }
  auto spec = default_desk_spec(1, 28, 28, 10);
  const auto plain = init_weights<float>(spec, 1).parameter_count();
  spec.rotate_fraction = 0.5;
  const auto rpc = init_weights<float>(spec, 1).parameter_count();
  spec.rotate_fraction = 0.25;
  spec.flip_fraction = 0.25;
  const auto frpc = init_weights<float>(spec, 1).parameter_count();
  ok = ok && rpc == plain && frpc == plain && plain == count_parameters(spec);
  return {ok, "desk model " + std::to_string(plain) + " / rpc " + std::to_string(rpc) + " / frpc " +
                  std::to_string(frpc)};
}

// 7. Split dropout updates every fc column; standard dropout leaves the
// dropped columns' gradients exactly zero.
Outcome full_update() {
  NetworkSpec spec{{1, 6, 6},
                   {LayerSpec::conv(3, 3, 1, 1), LayerSpec::relu(), LayerSpec::fc(8),
                    LayerSpec::dropout(0.5), LayerSpec::fc(4)}};
  spec.dropout_mode = DropoutMode::kSplit;
  auto net = init_weights<double>(spec, 7, InitOptions{0.3, 0.2, 0.25});
  Rng rng(701);
  const auto x = random_tensor({4, 1, 6, 6}, rng, 0.2, 1.0);
  const std::vector<int> labels{0, 1, 2, 3};
  const Mask m{{1, 0, 0, 1, 1, 0, 1, 0}, 0.5};
  const std::vector<Mask> pinned{m};

  auto params = net.parameters();
  const Tensor<double> fc2_before = *params[4].tensor;
  const auto grads = backward_training(net, forward_training(net, x, labels, &pinned).branches);
  OptimizerState<double> state;
  sgd_momentum_step<double>(params, grads, state);
  std::size_t moved_tensors = 0;
  for (const auto& v : state.velocity) {
    bool any = false;
    for (double e : v.data()) any = any || e != 0.0;
    moved_tensors += any;
  }
  std::size_t moved_columns = 0;
  for (std::size_t j = 0; j < 8; ++j) {
    bool any = false;
    for (std::size_t o = 0; o < 4; ++o) any = any || params[4].tensor->at(o, j) != fc2_before.at(o, j);
    moved_columns += any;
  }

  auto standard = init_weights<double>(spec, 7, InitOptions{0.3, 0.2, 0.25});
  standard.set_dropout_mode(DropoutMode::kStandard);
  const auto sg =
      backward_training(standard, forward_training(standard, x, labels, &pinned).branches);
  std::size_t zero_dropped = 0, live_kept = 0;
  for (std::size_t j = 0; j < 8; ++j) {
    bool all_zero = true, any = false;
    for (std::size_t o = 0; o < 4; ++o) {
      all_zero = all_zero && sg[4].at(o, j) == 0.0;
      any = any || sg[4].at(o, j) != 0.0;
    }
    if (m.bits[j] == 0) zero_dropped += all_zero;
    if (m.bits[j] == 1) live_kept += any;
  }
  const bool ok = moved_tensors == state.velocity.size() && moved_columns == 8 &&
                  zero_dropped == 8 - m.kept() && live_kept == m.kept();
  return {ok, "split: " + std::to_string(moved_tensors) + "/" +
                  std::to_string(state.velocity.size()) + " tensors, " +
                  std::to_string(moved_columns) + "/8 fc columns updated; standard: " +
                  std::to_string(zero_dropped) + "/" + std::to_string(8 - m.kept()) +
                  " dropped columns zero"};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 8. Convergence on the MNIST-format digits.
Outcome convergence() {
  double epochs_sum[2] = {0.0, 0.0};
  double top1_sum[2] = {0.0, 0.0};
  std::string trace;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    for (int split = 0; split < 2; ++split) {
      app::RunConfig c = app::parse_run_config({{"seed", seed},
                                                {"dropout_mode", split ? "split" : "standard"},
                                                {"epochs", 5},
                                                {"learning_rate", 0.02},
                                                {"init_std", 0.1},
                                                {"init_bias", 0.0},
                                                {"dataset",
                                                 {{"kind", "digits"},
                                                  {"train_per_class", 800},
                                                  {"test_per_class", 200}}}});
      const auto out = app::run_training(c);
      double reached = kNeverConverged;
      for (const auto& r : out.records) {
        if (r.split == "train" && r.loss <= kConvergenceLoss) {
          reached = static_cast<double>(r.epoch);
          break;
        }
      }
      epochs_sum[split] += reached;
      top1_sum[split] += out.final_test->top1;
      trace += std::string(" seed ") + std::to_string(seed) + (split ? " split " : " standard ") +
               fmt("%.0f/%.4f", reached, out.final_test->top1);
    }
  }
  const double e_std = epochs_sum[0] / 3, e_split = epochs_sum[1] / 3;
  const double t_std = top1_sum[0] / 3, t_split = top1_sum[1] / 3;
  const bool ok = e_split <= e_std && t_split - t_std >= kTop1Slack;
  return {ok, fmt("epochs to loss 0.5: standard %.2f, split %.2f; test top-1 standard %.4f, ", e_std,
                  e_split, t_std) +
                  fmt("split %.4f;", t_split) + trace};
}

// 9. Rotation robustness on upright-trained shapes.
Outcome rotation_robustness() {
  const auto angles = uniform_angles(64);
  double mean_gain = 0.0, band_gain = 0.0;
  std::string trace;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    double mean[2] = {0, 0}, band[2] = {0, 0};
    for (int rpc = 0; rpc < 2; ++rpc) {
      app::RunConfig c = app::parse_run_config({{"seed", seed},
                                                {"rotate_fraction", rpc ? 0.5 : 0.0},
                                                {"epochs", 5},
                                                {"learning_rate", 0.02},
                                                {"init_std", 0.1},
                                                {"init_bias", 0.0},
                                                {"dataset",
                                                 {{"kind", "shapes"},
                                                  {"train_per_class", 500},
                                                  {"test_per_class", 100}}}});
      const auto out = app::run_training(c);
      const auto splits = app::load_splits(c);
      const auto test = *splits.test;
      const auto net = to_inference(out.net);
      std::size_t in_band = 0;
      for (double a : angles) {
        Dataset rotated = test;
        rotated.images = rotate_batch(test.images, a);
        const auto p = preprocess(rotated, out.mean_image);
        const double top1 = evaluate(net, p.images, p.labels).top1;
        mean[rpc] += top1 / angles.size();
        if (a >= 135.0 && a <= 225.0) {
          band[rpc] += top1;
          ++in_band;
        }
      }
      band[rpc] /= static_cast<double>(in_band);
    }
    mean_gain += (mean[1] - mean[0]) / 3;
    band_gain += (band[1] - band[0]) / 3;
    trace += fmt(" s%.0f base %.4f/%.4f rpc %.4f/", static_cast<double>(seed), mean[0], band[0],
                 mean[1]) +
             fmt("%.4f", band[1]);
  }
  const bool ok = mean_gain >= kRotationMeanGain && band_gain >= kRotationBandGain;
  return {ok, fmt("mean gain %+.4f (need %.2f), 135-225 band gain %+.4f (need %.2f);", mean_gain,
                  kRotationMeanGain, band_gain, kRotationBandGain) +
                  trace};
}

// 10. Optimized convolution against the brute-force oracle.
Outcome conv_oracle() {
  Rng rng(1001);
  double worst = 0.0;
  for (std::size_t t = 0; t < kConvConfigs; ++t) {
    const std::size_t k = 1 + 2 * (rng() % 3);
    const std::size_t stride = 1 + rng() % 3;
    const std::size_t pad = rng() % (k / 2 + 2);
    const std::size_t size = k + rng() % 10;
    const std::size_t n = 1 + rng() % 3, c = 1 + rng() % 4, o = 1 + rng() % 6;
    const auto x = random_tensor({n, c, size, size}, rng);
    ConvParams<double> p{random_tensor({o, c, k, k}, rng), random_tensor({o}, rng), stride, pad};
    worst = std::max(worst, max_relative_error(conv2d_forward(x, p), oracle::naive_conv(x, p)));
  }
  return {worst <= kConvTol, std::to_string(kConvConfigs) + fmt(" configs, max rel err %.3e", worst)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 11. Two single-thread CLI runs give byte-identical artifacts.
Outcome determinism() {
  const auto dir = fs::temp_directory_path() / "spinconv_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const nlohmann::json config{
      {"seed", 11},
      {"epochs", 2},
      {"learning_rate", 0.02},
      {"init_std", 0.1},
      {"init_bias", 0.0},
      {"dropout_mode", "split"},
      {"rotate_fraction", 0.25},
      {"flip_fraction", 0.25},
      {"dataset", {{"kind", "shapes"}, {"train_per_class", 100}, {"test_per_class", 25}}},
      {"output_dir", (dir / "out").string()}};
  std::ofstream(dir / "run.json") << config.dump(2);
  const std::string cmd = std::string(SPINCONV_CLI_PATH) + " --threads 1 train --quiet --config " +
                          (dir / "run.json").string() + " > /dev/null";
  std::vector<std::string> files;
  for (int run = 0; run < 2; ++run) {
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "train command failed"};
    for (const char* f : {"checkpoint.bin", "metrics.csv", "run.json"}) {
      files.push_back(slurp(dir / "out" / f));
    }
    fs::remove_all(dir / "out");
  }
  fs::remove_all(dir);
  const bool ok = files[0] == files[3] && files[1] == files[4] && files[2] == files[5] &&
                  !files[0].empty();
  return {ok, "checkpoint " + std::to_string(files[0].size()) + " bytes, metrics " +
                  std::to_string(files[1].size()) + " bytes, run record " +
                  std::to_string(files[2].size()) + " bytes"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace spinconv

int main() {
  using namespace spinconv;
  const std::vector<Criterion> criteria{
      {1, "split identity", 1, split_identity},
      {2, "loss equivalence", 10, loss_equivalence},
      {3, "gradient suite", 120, gradient_suite},
      {4, "orientation group laws", 1, group_laws},
      {5, "quarter-turn equivariance", 10, equivariance},
      {6, "parameter-count invariance", 60, parameter_counts},
      {7, "full-update property", 60, full_update},
      {8, "convergence (digits)", 1800, convergence},
      {9, "rotation robustness (shapes)", 1200, rotation_robustness},
      {10, "conv oracle equivalence", 30, conv_oracle},
      {11, "determinism", 600, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    o = with_budget(o, seconds_since(t0), c.budget_seconds);
    std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
