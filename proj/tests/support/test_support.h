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


// Small helpers shared by the unit and acceptance tests.

#ifndef SPINCONV_TESTS_SUPPORT_TEST_SUPPORT_H_
#define SPINCONV_TESTS_SUPPORT_TEST_SUPPORT_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>

#include "spinconv/oracle/oracle.h"
#include "spinconv/rng.h"
#include "spinconv/tensor.h"

namespace spinconv::testing {

template <typename T = double>
Tensor<T> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(shape);
  for (auto& v : t.data()) v = static_cast<T>(lo + (hi - lo) * uniform01(rng));
  return t;
}

template <typename A, typename B>
double max_relative_error(const Tensor<A>& a, const Tensor<B>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, oracle::relative_error(static_cast<double>(a[i]),
                                                   static_cast<double>(b[i])));
  }
  return worst;
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return worst;
}

// Clockwise quarter turn of the last two (square) axes by explicit indexing.
template <typename T>
Tensor<T> rot90_cw(const Tensor<T>& t) {
  const std::size_t h = t.dim(t.rank() - 2);
  const std::size_t w = t.dim(t.rank() - 1);
  const std::size_t planes = t.size() / (h * w);
  Tensor<T> out(t.shape());
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        out[p * h * w + r * w + c] = t[p * h * w + (h - 1 - c) * w + r];
      }
    }
  }
  return out;
}

}  // namespace spinconv::testing

#endif  // SPINCONV_TESTS_SUPPORT_TEST_SUPPORT_H_
