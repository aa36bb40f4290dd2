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

#include "spinconv/kernel_transforms.h"

#include <array>
#include <cmath>
#include <numbers>

namespace spinconv {
namespace {

constexpr std::array<std::uint32_t, 8> kRing = {0, 1, 2, 5, 8, 7, 6, 3};

std::uint32_t flat(std::size_t k, std::size_t r, std::size_t c) {
  return static_cast<std::uint32_t>(r * k + c);
}

// Composes b after a.
SpatialMap compose(const SpatialMap& a, const SpatialMap& b) {
  SpatialMap out{a.k, {}};
  for (const auto& tb : b.taps) {
    for (const auto& ta : a.taps) {
      if (ta.dst == tb.src) out.taps.push_back({tb.dst, ta.src, ta.weight * tb.weight});
    }
  }
  return out;
}

template <typename T>
std::size_t spatial_size(const Tensor<T>& kernel, const char* what) {
  if (kernel.rank() < 2) {
    throw DimensionError(std::string(what) + " needs spatial axes, got shape " +
                         shape_to_string(kernel.shape()));
  }
  const std::size_t h = kernel.dim(kernel.rank() - 2);
  const std::size_t w = kernel.dim(kernel.rank() - 1);
  if (h != w) {
    throw DimensionError(std::string(what) + " needs square spatial axes, got " +
                         shape_to_string(kernel.shape()));
  }
  return h;
}

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

}  // namespace

std::string to_string(BankMode mode) {
  switch (mode) {
    case BankMode::kRotate8: return "rotate8";
    case BankMode::kFlipLeftRight: return "flip_lr";
    case BankMode::kFlipUpDown: return "flip_ud";
  }
  return "?";
}

std::string to_string(FlipAxis axis) {
  return axis == FlipAxis::kLeftRight ? "left_right" : "up_down";
}

FlipAxis flip_axis_from_string(const std::string& s) {
  if (s == "left_right") return FlipAxis::kLeftRight;
  if (s == "up_down") return FlipAxis::kUpDown;
  throw FormatError("unknown flip axis '" + s + "'");
}

SpatialMap identity_map(std::size_t k) {
  SpatialMap m{k, {}};
  for (std::uint32_t i = 0; i < k * k; ++i) m.taps.push_back({i, i, 1.0});
  return m;
}

SpatialMap quarter_turn_map(std::size_t k, int quarter_turns) {
  if (quarter_turns < 0 || quarter_turns > 3) {
    throw InputError("quarter_turns must be in {0,1,2,3}, got " +
                     std::to_string(quarter_turns));
  }
  SpatialMap one{k, {}};
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      one.taps.push_back({flat(k, r, c), flat(k, k - 1 - c, r), 1.0});
    }
  }
  SpatialMap m = identity_map(k);
  for (int t = 0; t < quarter_turns; ++t) m = compose(m, one);
  return m;
}

SpatialMap ring_shift_map(int steps) {
  const int s = ((steps % 8) + 8) % 8;
  SpatialMap m{3, {{4, 4, 1.0}}};
  for (int i = 0; i < 8; ++i) m.taps.push_back({kRing[(i + s) % 8], kRing[i], 1.0});
  return m;
}

SpatialMap bilinear_rotation_map(std::size_t k, double degrees) {
  if (k % 2 == 0) {
    throw DimensionError("bilinear kernel rotation needs odd k, got " + std::to_string(k));
  }
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double center = (static_cast<double>(k) - 1.0) / 2.0;
  SpatialMap m{k, {}};
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      const double x = static_cast<double>(c) - center;
      const double y = static_cast<double>(r) - center;
      const double sx = snap(x * cs + y * sn + center);
      const double sy = snap(-x * sn + y * cs + center);
      const double x0 = std::floor(sx), y0 = std::floor(sy);
      const double fx = sx - x0, fy = sy - y0;
      const std::array<std::array<double, 3>, 4> corners = {{
          {y0, x0, (1 - fy) * (1 - fx)},
          {y0, x0 + 1, (1 - fy) * fx},
          {y0 + 1, x0, fy * (1 - fx)},
          {y0 + 1, x0 + 1, fy * fx},
      }};
      for (const auto& [yy, xx, wgt] : corners) {
        if (wgt == 0.0) continue;
        if (yy < 0 || xx < 0 || yy > static_cast<double>(k - 1) ||
            xx > static_cast<double>(k - 1)) {
          continue;
        }
        m.taps.push_back({flat(k, r, c),
                          flat(k, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx)),
                          wgt});
      }
    }
  }
  return m;
}

SpatialMap flip_map(std::size_t k, FlipAxis axis) {
  SpatialMap m{k, {}};
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      const std::uint32_t src = axis == FlipAxis::kLeftRight ? flat(k, r, k - 1 - c)
                                                             : flat(k, k - 1 - r, c);
      m.taps.push_back({flat(k, r, c), src, 1.0});
    }
  }
  return m;
}

std::vector<SpatialMap> bank_maps(std::size_t k, BankMode mode) {
  std::vector<SpatialMap> maps;
  switch (mode) {
    case BankMode::kRotate8:
      if (k % 2 == 0) {
        throw DimensionError("rotate8 banks need odd k, got " + std::to_string(k));
      }
      for (int s = 0; s < 8; ++s) {
        maps.push_back(k == 3 ? ring_shift_map(s) : bilinear_rotation_map(k, 45.0 * s));
      }
      break;
    case BankMode::kFlipLeftRight:
      maps = {identity_map(k), flip_map(k, FlipAxis::kLeftRight)};
      break;
    case BankMode::kFlipUpDown:
      maps = {identity_map(k), flip_map(k, FlipAxis::kUpDown)};
      break;
  }
  return maps;
}

template <typename T>
Tensor<T> apply_map(const SpatialMap& map, const Tensor<T>& kernel) {
  const std::size_t k = spatial_size(kernel, "kernel transform input");
  if (k != map.k) {
    throw DimensionError("kernel spatial size " + std::to_string(k) +
                         " does not match transform size " + std::to_string(map.k));
  }
  const std::size_t plane = k * k;
  const std::size_t planes = kernel.size() / plane;
  Tensor<T> out(kernel.shape());
  std::vector<double> acc(plane);
  for (std::size_t p = 0; p < planes; ++p) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const T* src = kernel.raw() + p * plane;
    for (const auto& tap : map.taps) acc[tap.dst] += tap.weight * static_cast<double>(src[tap.src]);
    for (std::size_t i = 0; i < plane; ++i) out[p * plane + i] = static_cast<T>(acc[i]);
  }
  return out;
}

template <typename T>
Tensor<T> apply_map_transpose(const SpatialMap& map, const Tensor<T>& grad) {
  const std::size_t k = spatial_size(grad, "kernel transform gradient");
  if (k != map.k) {
    throw DimensionError("gradient spatial size " + std::to_string(k) +
                         " does not match transform size " + std::to_string(map.k));
  }
  const std::size_t plane = k * k;
  const std::size_t planes = grad.size() / plane;
  Tensor<T> out(grad.shape());
  std::vector<double> acc(plane);
  for (std::size_t p = 0; p < planes; ++p) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const T* src = grad.raw() + p * plane;
    for (const auto& tap : map.taps) acc[tap.src] += tap.weight * static_cast<double>(src[tap.dst]);
    for (std::size_t i = 0; i < plane; ++i) out[p * plane + i] = static_cast<T>(acc[i]);
  }
  return out;
}

template <typename T>
Tensor<T> rotate_kernel_90(const Tensor<T>& kernel, int quarter_turns) {
  return apply_map(quarter_turn_map(spatial_size(kernel, "rotate_kernel_90 input"),
                                    quarter_turns),
                   kernel);
}

template <typename T>
Tensor<T> rotate_kernel_45_ring(const Tensor<T>& kernel, int steps) {
  if (spatial_size(kernel, "ring rotation input") != 3) {
    throw DimensionError("ring rotation needs 3x3 spatial axes, got " +
                         shape_to_string(kernel.shape()));
  }
  return apply_map(ring_shift_map(steps), kernel);
}

template <typename T>
Tensor<T> rotate_kernel_bilinear(const Tensor<T>& kernel, double degrees) {
  return apply_map(
      bilinear_rotation_map(spatial_size(kernel, "bilinear rotation input"), degrees),
      kernel);
}

template <typename T>
Tensor<T> flip_kernel(const Tensor<T>& kernel, FlipAxis axis) {
  return apply_map(flip_map(spatial_size(kernel, "flip input"), axis), kernel);
}

template <typename T>
OrientationBank<T> build_orientation_bank(const Tensor<T>& kernel, BankMode mode,
                                          std::size_t source_filter_index) {
  const std::size_t k = spatial_size(kernel, "orientation bank kernel");
  OrientationBank<T> bank;
  bank.mode = mode;
  bank.source_filter_index = source_filter_index;
  for (const auto& map : bank_maps(k, mode)) bank.variants.push_back(apply_map(map, kernel));
  return bank;
}

#define SPINCONV_INSTANTIATE_TRANSFORMS(T)                                          \
  template Tensor<T> apply_map(const SpatialMap&, const Tensor<T>&);                \
  template Tensor<T> apply_map_transpose(const SpatialMap&, const Tensor<T>&);      \
  template Tensor<T> rotate_kernel_90(const Tensor<T>&, int);                       \
  template Tensor<T> rotate_kernel_45_ring(const Tensor<T>&, int);                  \
  template Tensor<T> rotate_kernel_bilinear(const Tensor<T>&, double);              \
  template Tensor<T> flip_kernel(const Tensor<T>&, FlipAxis);                       \
  template OrientationBank<T> build_orientation_bank(const Tensor<T>&, BankMode,    \
                                                     std::size_t);

SPINCONV_INSTANTIATE_TRANSFORMS(float)
SPINCONV_INSTANTIATE_TRANSFORMS(double)

#undef SPINCONV_INSTANTIATE_TRANSFORMS

}  // namespace spinconv
