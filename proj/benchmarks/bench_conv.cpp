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

#include "spinconv/ops.h"
#include "spinconv/rng.h"

namespace spinconv {
namespace {

Tensor<float> filled(const Shape& shape, Rng& rng) {
  Tensor<float> t(shape);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

// Args: batch, channels in, channels out, image size, kernel size.
void BM_ConvForward(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto c = static_cast<std::size_t>(state.range(1));
  const auto o = static_cast<std::size_t>(state.range(2));
  const auto s = static_cast<std::size_t>(state.range(3));
  const auto k = static_cast<std::size_t>(state.range(4));
  const auto x = filled({n, c, s, s}, rng);
  const ConvParams<float> p{filled({o, c, k, k}, rng), filled({o}, rng), 1, k / 2};
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward(x, p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ConvForward)->Args({16, 1, 32, 28, 5})->Args({16, 32, 64, 14, 3})->Args({16, 64, 64, 7, 3});

void BM_ConvBackward(benchmark::State& state) {
  Rng rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto c = static_cast<std::size_t>(state.range(1));
  const auto o = static_cast<std::size_t>(state.range(2));
  const auto s = static_cast<std::size_t>(state.range(3));
  const auto k = static_cast<std::size_t>(state.range(4));
  const auto x = filled({n, c, s, s}, rng);
  const ConvParams<float> p{filled({o, c, k, k}, rng), filled({o}, rng), 1, k / 2};
  const auto g = filled(conv2d_forward(x, p).shape(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_backward(g, x, p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ConvBackward)->Args({16, 1, 32, 28, 5})->Args({16, 32, 64, 14, 3});

}  // namespace
}  // namespace spinconv

BENCHMARK_MAIN();
