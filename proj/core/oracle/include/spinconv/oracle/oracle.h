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

// Brute-force references for tests. Nothing here reuses the optimized
// kernels it is meant to check; the finite-difference and mask-enumeration
// helpers only call public forward entry points.

#ifndef SPINCONV_ORACLE_ORACLE_H_
#define SPINCONV_ORACLE_ORACLE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spinconv/kernel_transforms.h"
#include "spinconv/layers.h"
#include "spinconv/network.h"
#include "spinconv/ops.h"
#include "spinconv/tensor.h"

namespace spinconv::oracle {

// Direct sliding-window cross-correlation with zero padding.
Tensor<double> naive_conv(const Tensor<double>& input, const ConvParams<double>& params);

// Kernel variants built with explicit index formulas: 8 ring/bilinear
// rotations for rotated filters, {original, flipped} for flipped ones.
std::vector<Tensor<double>> naive_variants(const Tensor<double>& kernel, BankMode mode);

// Max over each selected filter's variants of separately computed naive
// convolutions, plus bias; plain filters convolve once.
Tensor<double> naive_oriented_conv(const Tensor<double>& input,
                                   const OrientedConvLayer<double>& layer);

// Exhaustive max over every window, first row-major maximum wins.
struct NaivePool {
  Tensor<double> output;
  std::vector<std::size_t> argmax;
};
NaivePool naive_maxpool(const Tensor<double>& input, std::size_t window, std::size_t stride);

// |a - b| / max(|a|, |b|, 1e-8).
double relative_error(double a, double b);

using ScalarFn = std::function<double(std::span<const double>)>;

// Central differences (f(x + eps e_i) - f(x - eps e_i)) / 2 eps at the given
// coordinates (all of them when `coords` is empty).
std::vector<double> finite_difference(const ScalarFn& fn, std::span<const double> params,
                                      double epsilon = 1e-3,
                                      std::span<const std::size_t> coords = {});

struct MaskLosses {
  double dropout = 0.0;   // 2^-d sum_m f(m)
  double sdropout = 0.0;  // 2^-d sum_m (f(m) + f(1_e - m)) / 2
  std::size_t masks = 0;  // 2^d
};

inline constexpr std::size_t kMaxEnumeratedUnits = 12;

// Enumerates every joint mask over all dropout layers of `net` (total
// units d <= 12, keep probability 0.5) and evaluates the training forward
// pass under each pinned mask in standard and split mode.
MaskLosses enumerate_mask_losses(const Network<double>& net, const Tensor<double>& batch,
                                 std::span<const int> labels);

struct GradcheckResult {
  std::string layer;
  std::size_t coordinates = 0;  // coordinates compared
  std::size_t skipped = 0;      // coordinates rejected as straddling a kink
  double max_relative_error = 0.0;
  bool passed = false;
};

inline constexpr double kGradcheckTolerance = 1e-4;
inline constexpr std::size_t kGradcheckCoordinates = 120;

// conv, fc, relu, prelu, maxpool, sdropout, rpc, frpc, xent, network.
std::vector<std::string> gradcheck_kinds();

// Runs the finite-difference suite for one kind, or every kind for "all".
// Throws InputError listing the valid kinds for anything else.
std::vector<GradcheckResult> run_gradcheck(const std::string& kind, std::uint64_t seed,
                                           std::size_t coordinates = kGradcheckCoordinates,
                                           double tolerance = kGradcheckTolerance);

}  // namespace spinconv::oracle

#endif  // SPINCONV_ORACLE_ORACLE_H_
