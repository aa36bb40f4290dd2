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

#include "spinconv/layers.h"
#include "spinconv/rng.h"

namespace spinconv {
namespace {

Tensor<float> filled(const Shape& shape, Rng& rng) {
  Tensor<float> t(shape);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

// Args: rotate fraction and flip fraction in percent, kernel size.
void BM_OrientedForward(benchmark::State& state) {
  Rng rng(3);
  const double r = static_cast<double>(state.range(0)) / 100.0;
  const double f = static_cast<double>(state.range(1)) / 100.0;
  const auto k = static_cast<std::size_t>(state.range(2));
  const auto x = filled({16, 32, 14, 14}, rng);
  const auto layer = make_frpc_layer(
      ConvParams<float>{filled({64, 32, k, k}, rng), filled({64}, rng), 1, k / 2}, r, f, rng);
  for (auto _ : state) benchmark::DoNotOptimize(oriented_conv_forward(x, layer));
}
BENCHMARK(BM_OrientedForward)
    ->Args({0, 0, 3})
    ->Args({50, 0, 3})
    ->Args({100, 0, 3})
    ->Args({25, 25, 3})
    ->Args({50, 0, 5});

void BM_OrientedBackward(benchmark::State& state) {
  Rng rng(4);
  const double r = static_cast<double>(state.range(0)) / 100.0;
  const double f = static_cast<double>(state.range(1)) / 100.0;
  const auto x = filled({16, 32, 14, 14}, rng);
  const auto layer = make_frpc_layer(
      ConvParams<float>{filled({64, 32, 3, 3}, rng), filled({64}, rng), 1, 1}, r, f, rng);
  OrientedConvCache<float> cache;
  const auto y = oriented_conv_forward(x, layer, &cache);
  const auto g = filled(y.shape(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(oriented_conv_backward(g, x, layer, cache));
}
BENCHMARK(BM_OrientedBackward)->Args({0, 0})->Args({50, 0})->Args({25, 25});

}  // namespace
}  // namespace spinconv

BENCHMARK_MAIN();
