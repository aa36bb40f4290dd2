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

// Rotated and flipped variants of convolution kernels.
//
// Every transform is a linear map on the k x k spatial grid, applied to each
// input channel identically. Positive angles and quarter turns rotate
// clockwise as seen with row 0 at the top.
//
// For 3x3 kernels, a 45 degree step is the cyclic shift of the eight border
// cells around the fixed center:
//
//   (0,0) -> (0,1) -> (0,2) -> (1,2) -> (2,2) -> (2,1) -> (2,0) -> (1,0)
//
// Two steps equal one exact quarter turn, so the eight-variant bank is a
// cyclic group. Larger odd kernels use bilinear resampling.

#ifndef SPINCONV_KERNEL_TRANSFORMS_H_
#define SPINCONV_KERNEL_TRANSFORMS_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "spinconv/tensor.h"

namespace spinconv {

enum class FlipAxis { kLeftRight, kUpDown };

enum class BankMode { kRotate8, kFlipLeftRight, kFlipUpDown };

std::string to_string(BankMode mode);
std::string to_string(FlipAxis axis);
FlipAxis flip_axis_from_string(const std::string& s);

// out[dst] = sum over taps of weight * in[src], on flat k*k spatial indices.
struct SpatialMap {
  struct Tap {
    std::uint32_t dst;
    std::uint32_t src;
    double weight;
  };
  std::size_t k = 0;
  std::vector<Tap> taps;
};

SpatialMap identity_map(std::size_t k);
SpatialMap quarter_turn_map(std::size_t k, int quarter_turns);
SpatialMap ring_shift_map(int steps);
SpatialMap bilinear_rotation_map(std::size_t k, double degrees);
SpatialMap flip_map(std::size_t k, FlipAxis axis);

// The maps that generate a bank, variant 0 first (always the identity).
std::vector<SpatialMap> bank_maps(std::size_t k, BankMode mode);

// Applies `map` to every channel of a [C, k, k] or [O, C, k, k] kernel.
template <typename T>
Tensor<T> apply_map(const SpatialMap& map, const Tensor<T>& kernel);

// Transpose of apply_map: pulls a gradient w.r.t. the transformed kernel back
// onto the source kernel. For permutations this is the inverse permutation.
template <typename T>
Tensor<T> apply_map_transpose(const SpatialMap& map, const Tensor<T>& grad);

template <typename T>
Tensor<T> rotate_kernel_90(const Tensor<T>& kernel, int quarter_turns);

template <typename T>
Tensor<T> rotate_kernel_45_ring(const Tensor<T>& kernel, int steps);

template <typename T>
Tensor<T> rotate_kernel_bilinear(const Tensor<T>& kernel, double degrees);

template <typename T>
Tensor<T> flip_kernel(const Tensor<T>& kernel, FlipAxis axis);

// Transformed copies of one filter. Variants are derived from the source
// kernel on demand and hold no trainable state of their own; rebuild after
// every weight update.
template <typename T>
struct OrientationBank {
  std::vector<Tensor<T>> variants;
  BankMode mode = BankMode::kRotate8;
  std::size_t source_filter_index = 0;
};

template <typename T>
OrientationBank<T> build_orientation_bank(const Tensor<T>& kernel, BankMode mode,
                                          std::size_t source_filter_index = 0);

}  // namespace spinconv

#endif  // SPINCONV_KERNEL_TRANSFORMS_H_
