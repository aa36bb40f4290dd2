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

#ifndef SPINCONV_EVALUATION_H_
#define SPINCONV_EVALUATION_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spinconv/network.h"
#include "spinconv/tensor.h"

namespace spinconv {

// Fraction of rows whose label ranks among the k largest logits; equal
// logits rank the lower class index first. Throws InputError unless
// 1 <= k <= K.
template <typename T>
double top_k_accuracy(const Tensor<T>& logits, std::span<const int> labels, std::size_t k);

struct EvalResult {
  double top1 = 0.0;
  double top5 = 0.0;  // top-min(5, K)
  double mean_p_true = 0.0;
  double loss = 0.0;
  std::size_t samples = 0;
};

// Inference over [N, C, H, W] images in chunks of `chunk`; each image is
// center-cropped to `crop` first (0 keeps it whole). The network must be in
// inference form.
EvalResult evaluate(const Network<float>& net, const Tensor<float>& images,
                    std::span<const int> labels, std::size_t crop = 0, std::size_t chunk = 256);

struct SweepRow {
  double angle = 0.0;
  double top1 = 0.0;
  double mean_p_true = 0.0;
};

struct SweepReport {
  std::string model;
  std::string dataset;
  std::vector<SweepRow> rows;

  std::size_t n_angles() const { return rows.size(); }
  // Header `angle,top1,mean_p_true`, six decimals, LF line endings.
  std::string to_csv() const;
};

// n angles spaced 360/n apart starting at 0. Throws InputError for n == 0.
std::vector<double> uniform_angles(std::size_t n);

// Rotates every image by each angle, then runs evaluate(). Angles must be
// strictly increasing within [0, 360).
SweepReport rotation_sweep(const Network<float>& net, const Tensor<float>& images,
                           std::span<const int> labels, std::span<const double> angles,
                           std::size_t crop = 0);

// Mean softmax over the ten crops (size = network input) of one [C, H, W]
// image; each view runs as its own single-image forward pass.
std::vector<double> ten_view_predict(const Network<float>& net, const Tensor<float>& image);

struct TraceRow {
  double angle = 0.0;
  double p_true = 0.0;
};

std::vector<TraceRow> per_image_trace(const Network<float>& net, const Tensor<float>& image,
                                      int true_label, std::span<const double> angles,
                                      std::size_t crop = 0);

// Softmax of one image's logits after an optional center crop.
std::vector<double> predict_one(const Network<float>& net, const Tensor<float>& image,
                                std::size_t crop = 0);

}  // namespace spinconv

#endif  // SPINCONV_EVALUATION_H_
