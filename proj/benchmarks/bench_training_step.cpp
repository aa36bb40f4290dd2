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


#include <benchmark/benchmark.h>

#include "spinconv/training.h"

namespace spinconv {
namespace {

// One forward, backward and update on the default 28x28 model.
// Args: split mode (0 or 1), rotate fraction in percent.
void BM_TrainingStep(benchmark::State& state) {
  auto spec = default_desk_spec(1, 28, 28, 10);
  spec.dropout_mode = state.range(0) ? DropoutMode::kSplit : DropoutMode::kStandard;
  spec.rotate_fraction = static_cast<double>(state.range(1)) / 100.0;
  auto net = init_weights<float>(spec, 1, InitOptions{0.1, 0.0, 0.25});
  Rng rng(5);
  Tensor<float> x({32, 1, 28, 28});
  std::uniform_real_distribution<float> dist(-0.5f, 0.5f);
  for (auto& v : x.data()) v = dist(rng);
  std::vector<int> labels(32);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 10);
  OptimizerState<float> opt;
  opt.learning_rate = 0.001;
  const auto params = net.parameters();
  for (auto _ : state) {
    const auto fwd = forward_training(net, x, labels);
    const auto grads = backward_training(net, fwd.branches);
    sgd_momentum_step<float>(params, grads, opt);
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainingStep)->Args({0, 0})->Args({1, 0})->Args({0, 50})->Args({1, 50})->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace spinconv

BENCHMARK_MAIN();
