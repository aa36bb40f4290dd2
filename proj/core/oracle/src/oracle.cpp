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

#include "spinconv/oracle/oracle.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "spinconv/errors.h"
#include "spinconv/rng.h"
#include "spinconv/training.h"

namespace spinconv::oracle {

Tensor<double> naive_conv(const Tensor<double>& input, const ConvParams<double>& params) {
  require_rank(input, 4, "naive_conv input");
  require_rank(params.weights, 4, "naive_conv weights");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t o = params.weights.dim(0), k = params.weights.dim(2);
  if (params.weights.dim(1) != c) throw DimensionError("naive_conv: channel mismatch");
  if (params.weights.dim(3) != k) throw DimensionError("naive_conv: kernel not square");
  if (params.bias.size() != o) throw DimensionError("naive_conv: bias length mismatch");
  const auto pad = static_cast<long>(params.pad);
  const auto stride = static_cast<long>(params.stride);
  if (h + 2 * params.pad < k || w + 2 * params.pad < k) {
    throw DimensionError("naive_conv: kernel larger than padded input");
  }
  const std::size_t ho = (h + 2 * params.pad - k) / params.stride + 1;
  const std::size_t wo = (w + 2 * params.pad - k) / params.stride + 1;
  Tensor<double> out({n, o, ho, wo});
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t f = 0; f < o; ++f) {
      for (std::size_t y = 0; y < ho; ++y) {
        for (std::size_t x = 0; x < wo; ++x) {
          double acc = params.bias[f];
          for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t i = 0; i < k; ++i) {
              for (std::size_t j = 0; j < k; ++j) {
                const long iy = static_cast<long>(y) * stride + static_cast<long>(i) - pad;
                const long ix = static_cast<long>(x) * stride + static_cast<long>(j) - pad;
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w)) {
                  continue;
                }
                acc += params.weights.at(f, ch, i, j) *
                       input.at(s, ch, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
              }
            }
          }
          out.at(s, f, y, x) = acc;
        }
      }
    }
  }
  return out;
}

namespace {

// Clockwise ring positions of a 3x3 kernel, starting top-left.
constexpr std::size_t kRing[8][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 2},
                                     {2, 2}, {2, 1}, {2, 0}, {1, 0}};

Tensor<double> ring_rotate(const Tensor<double>& kernel, int steps) {
  Tensor<double> out = kernel;
  for (std::size_t c = 0; c < kernel.dim(0); ++c) {
    for (int i = 0; i < 8; ++i) {
      const auto& src = kRing[i];
      const auto& dst = kRing[(i + steps) % 8];
      out.at(c, dst[0], dst[1]) = kernel.at(c, src[0], src[1]);
    }
  }
  return out;
}

Tensor<double> bilinear_rotate(const Tensor<double>& kernel, double degrees) {
  const std::size_t k = kernel.dim(1);
  const double t = degrees * std::numbers::pi / 180.0;
  const double mid = (static_cast<double>(k) - 1.0) / 2.0;
  Tensor<double> out(kernel.shape());
  auto read = [&](std::size_t c, double yy, double xx) {
    if (yy < -1e-9 || xx < -1e-9 || yy > mid * 2 + 1e-9 || xx > mid * 2 + 1e-9) return 0.0;
    return kernel.at(c, static_cast<std::size_t>(std::lround(yy)),
                     static_cast<std::size_t>(std::lround(xx)));
  };
  for (std::size_t c = 0; c < kernel.dim(0); ++c) {
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t q = 0; q < k; ++q) {
        const double x = static_cast<double>(q) - mid, y = static_cast<double>(r) - mid;
        double sx = std::cos(t) * x + std::sin(t) * y + mid;
        double sy = -std::sin(t) * x + std::cos(t) * y + mid;
        if (std::abs(sx - std::round(sx)) < 1e-9) sx = std::round(sx);
        if (std::abs(sy - std::round(sy)) < 1e-9) sy = std::round(sy);
        const double x0 = std::floor(sx), y0 = std::floor(sy);
        const double ax = sx - x0, ay = sy - y0;
        double v = 0.0;
        if ((1 - ay) * (1 - ax) != 0.0) v += (1 - ay) * (1 - ax) * read(c, y0, x0);
        if ((1 - ay) * ax != 0.0) v += (1 - ay) * ax * read(c, y0, x0 + 1);
        if (ay * (1 - ax) != 0.0) v += ay * (1 - ax) * read(c, y0 + 1, x0);
        if (ay * ax != 0.0) v += ay * ax * read(c, y0 + 1, x0 + 1);
        out.at(c, r, q) = v;
      }
    }
  }
  return out;
}

Tensor<double> mirror(const Tensor<double>& kernel, bool left_right) {
  const std::size_t k = kernel.dim(1);
  Tensor<double> out(kernel.shape());
  for (std::size_t c = 0; c < kernel.dim(0); ++c) {
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t q = 0; q < k; ++q) {
        out.at(c, r, q) = left_right ? kernel.at(c, r, k - 1 - q) : kernel.at(c, k - 1 - r, q);
      }
    }
  }
  return out;
}

Tensor<double> filter_slice(const Tensor<double>& weights, std::size_t f) {
  const std::size_t per = weights.size() / weights.dim(0);
  return Tensor<double>({weights.dim(1), weights.dim(2), weights.dim(3)},
                        std::vector<double>(weights.raw() + f * per, weights.raw() + (f + 1) * per));
}

}  // namespace

std::vector<Tensor<double>> naive_variants(const Tensor<double>& kernel, BankMode mode) {
  require_rank(kernel, 3, "naive_variants kernel");
  switch (mode) {
    case BankMode::kRotate8: {
      std::vector<Tensor<double>> out;
      for (int s = 0; s < 8; ++s) {
        out.push_back(kernel.dim(1) == 3 ? ring_rotate(kernel, s) : bilinear_rotate(kernel, 45.0 * s));
      }
      return out;
    }
    case BankMode::kFlipLeftRight:
      return {kernel, mirror(kernel, true)};
    case BankMode::kFlipUpDown:
      return {kernel, mirror(kernel, false)};
  }
  return {kernel};
}

Tensor<double> naive_oriented_conv(const Tensor<double>& input,
                                   const OrientedConvLayer<double>& layer) {
  const ConvParams<double>& conv = layer.conv();
  const std::size_t o = conv.weights.dim(0);
  Tensor<double> out;
  for (std::size_t f = 0; f < o; ++f) {
    const Tensor<double> kernel = filter_slice(conv.weights, f);
    std::vector<Tensor<double>> variants{kernel};
    const auto& rs = layer.rotate_set();
    const auto& fs = layer.flip_set();
    if (std::find(rs.begin(), rs.end(), f) != rs.end()) {
      variants = naive_variants(kernel, BankMode::kRotate8);
    }
    if (auto it = std::find(fs.begin(), fs.end(), f); it != fs.end()) {
      const FlipAxis axis = layer.flip_axes()[static_cast<std::size_t>(it - fs.begin())];
      variants = naive_variants(
          kernel, axis == FlipAxis::kLeftRight ? BankMode::kFlipLeftRight : BankMode::kFlipUpDown);
    }
    Tensor<double> best;
    for (const auto& v : variants) {
      Shape ws{1};
      ws.insert(ws.end(), v.shape().begin(), v.shape().end());
      const ConvParams<double> single{v.reshaped(ws), Tensor<double>({1}), conv.stride, conv.pad};
      Tensor<double> r = naive_conv(input, single);
      if (best.empty()) {
        best = std::move(r);
      } else {
        for (std::size_t i = 0; i < r.size(); ++i) best[i] = std::max(best[i], r[i]);
      }
    }
    if (out.empty()) out = Tensor<double>({input.dim(0), o, best.dim(2), best.dim(3)});
    const std::size_t plane = best.dim(2) * best.dim(3);
    for (std::size_t s = 0; s < input.dim(0); ++s) {
      for (std::size_t i = 0; i < plane; ++i) {
        out[(s * o + f) * plane + i] = best[s * plane + i] + conv.bias[f];
      }
    }
  }
  return out;
}

NaivePool naive_maxpool(const Tensor<double>& input, std::size_t window, std::size_t stride) {
  require_rank(input, 4, "naive_maxpool input");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (window > h || window > w) throw DimensionError("naive_maxpool: window larger than input");
  const std::size_t ho = (h - window) / stride + 1, wo = (w - window) / stride + 1;
  NaivePool res{Tensor<double>({n, c, ho, wo}), {}};
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < ho; ++y) {
        for (std::size_t x = 0; x < wo; ++x) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t arg = 0;
          for (std::size_t i = 0; i < window; ++i) {
            for (std::size_t j = 0; j < window; ++j) {
              const std::size_t idx = ((s * c + ch) * h + y * stride + i) * w + x * stride + j;
              if (input[idx] > best) {
                best = input[idx];
                arg = idx;
              }
            }
          }
          res.output.at(s, ch, y, x) = best;
          res.argmax.push_back(arg);
        }
      }
    }
  }
  return res;
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

std::vector<double> finite_difference(const ScalarFn& fn, std::span<const double> params,
                                      double epsilon, std::span<const std::size_t> coords) {
  std::vector<double> theta(params.begin(), params.end());
  std::vector<std::size_t> all;
  if (coords.empty()) {
    all.resize(theta.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    coords = all;
  }
  std::vector<double> grad;
  grad.reserve(coords.size());
  for (std::size_t i : coords) {
    if (i >= theta.size()) throw InputError("finite_difference coordinate out of range");
    const double saved = theta[i];
    theta[i] = saved + epsilon;
    const double up = fn(theta);
    theta[i] = saved - epsilon;
    const double down = fn(theta);
    theta[i] = saved;
    grad.push_back((up - down) / (2.0 * epsilon));
  }
  return grad;
}

MaskLosses enumerate_mask_losses(const Network<double>& net, const Tensor<double>& batch,
                                 std::span<const int> labels) {
  const auto units = net.dropout_units();
  const std::size_t d = std::accumulate(units.begin(), units.end(), std::size_t{0});
  if (d == 0) throw InputError("network has no dropout units to enumerate");
  if (d > kMaxEnumeratedUnits) {
    throw InputError("refusing to enumerate 2^" + std::to_string(d) + " masks (limit 2^" +
                     std::to_string(kMaxEnumeratedUnits) + ")");
  }
  for (const auto& l : net.layers()) {
    if (const auto* dl = std::get_if<DropoutLayerState>(&l); dl && dl->dropout.p != 0.5) {
      throw ConfigError("mask enumeration assumes keep probability 0.5");
    }
  }
  Network<double> standard = net;
  standard.set_dropout_mode(DropoutMode::kStandard);
  Network<double> split = net;
  split.set_dropout_mode(DropoutMode::kSplit);

  MaskLosses out;
  out.masks = std::size_t{1} << d;
  for (std::size_t code = 0; code < out.masks; ++code) {
    std::vector<Mask> masks;
    std::size_t bit = 0;
    for (std::size_t u : units) {
      Mask m{std::vector<std::uint8_t>(u), 0.5};
      for (std::size_t i = 0; i < u; ++i, ++bit) m.bits[i] = (code >> bit) & 1u;
      masks.push_back(std::move(m));
    }
    out.dropout += forward_training(standard, batch, labels, &masks).loss;
    out.sdropout += forward_training(split, batch, labels, &masks).loss;
  }
  out.dropout /= static_cast<double>(out.masks);
  out.sdropout /= static_cast<double>(out.masks);
  return out;
}

}  // namespace spinconv::oracle
