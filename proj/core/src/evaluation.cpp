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

#include "spinconv/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "spinconv/data.h"
#include "spinconv/errors.h"
#include "spinconv/ops.h"

namespace spinconv {
namespace {

void require_inference(const Network<float>& net) {
  if (!net.is_inference()) {
    throw ConsistencyError("evaluation needs an inference-form network; call to_inference first");
  }
}

Tensor<float> single(const Tensor<float>& image) {
  Shape shape{1};
  shape.insert(shape.end(), image.shape().begin(), image.shape().end());
  return image.reshaped(shape);
}

}  // namespace

template <typename T>
double top_k_accuracy(const Tensor<T>& logits, std::span<const int> labels, std::size_t k) {
  require_rank(logits, 2, "logits");
  const std::size_t n = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != n) throw DimensionError("logits and labels disagree on batch size");
  if (k == 0 || k > classes) {
    throw InputError("k must be in [1, " + std::to_string(classes) + "], got " + std::to_string(k));
  }
  if (n == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    if (labels[i] < 0 || y >= classes) throw InputError("label out of range");
    const T* row = logits.raw() + i * classes;
    std::size_t rank = 0;
    for (std::size_t j = 0; j < classes; ++j) {
      if (row[j] > row[y] || (row[j] == row[y] && j < y)) ++rank;
    }
    hits += rank < k ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

template double top_k_accuracy(const Tensor<float>&, std::span<const int>, std::size_t);
template double top_k_accuracy(const Tensor<double>&, std::span<const int>, std::size_t);

EvalResult evaluate(const Network<float>& net, const Tensor<float>& images,
                    std::span<const int> labels, std::size_t crop, std::size_t chunk) {
  require_inference(net);
  require_rank(images, 4, "evaluation images");
  const std::size_t n = images.dim(0);
  if (labels.size() != n) throw DimensionError("images and labels disagree on count");
  if (chunk == 0) throw InputError("evaluation chunk must be positive");
  const std::size_t stride = images.size() / n;
  EvalResult result;
  result.samples = n;
  double top1 = 0.0, top5 = 0.0, p_true = 0.0, loss = 0.0;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t end = std::min(n, start + chunk);
    Tensor<float> part({end - start, images.dim(1), images.dim(2), images.dim(3)},
                       std::vector<float>(images.raw() + start * stride,
                                          images.raw() + end * stride));
    const Tensor<float> logits = net.forward(center_crop_batch(part, crop));
    const std::span<const int> lab = labels.subspan(start, end - start);
    const double count = static_cast<double>(end - start);
    const std::size_t classes = logits.dim(1);
    top1 += top_k_accuracy(logits, lab, 1) * count;
    top5 += top_k_accuracy(logits, lab, std::min<std::size_t>(5, classes)) * count;
    loss += softmax_cross_entropy(logits, lab).loss * count;
    const Tensor<float> probs = softmax(logits);
    for (std::size_t i = 0; i < end - start; ++i) {
      p_true += probs[i * classes + static_cast<std::size_t>(lab[i])];
    }
  }
  result.top1 = top1 / static_cast<double>(n);
  result.top5 = top5 / static_cast<double>(n);
  result.mean_p_true = p_true / static_cast<double>(n);
  result.loss = loss / static_cast<double>(n);
  return result;
}

std::string SweepReport::to_csv() const {
  std::string out = "angle,top1,mean_p_true\n";
  char buf[96];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f\n", row.angle, row.top1, row.mean_p_true);
    out += buf;
  }
  return out;
}

std::vector<double> uniform_angles(std::size_t n) {
  if (n == 0) throw InputError("angle count must be positive");
  std::vector<double> angles(n);
  for (std::size_t i = 0; i < n; ++i) {
    angles[i] = 360.0 * static_cast<double>(i) / static_cast<double>(n);
  }
  return angles;
}

SweepReport rotation_sweep(const Network<float>& net, const Tensor<float>& images,
                           std::span<const int> labels, std::span<const double> angles,
                           std::size_t crop) {
  if (angles.empty()) throw InputError("rotation sweep needs at least one angle");
  for (std::size_t i = 0; i < angles.size(); ++i) {
    if (!(angles[i] >= 0.0 && angles[i] < 360.0) || (i > 0 && angles[i] <= angles[i - 1])) {
      throw InputError("sweep angles must be strictly increasing within [0, 360)");
    }
  }
  require_inference(net);
  SweepReport report;
  for (double angle : angles) {
    const EvalResult r = evaluate(net, rotate_batch(images, angle), labels, crop);
    report.rows.push_back({angle, r.top1, r.mean_p_true});
  }
  return report;
}

std::vector<double> predict_one(const Network<float>& net, const Tensor<float>& image,
                                std::size_t crop) {
  require_inference(net);
  const Tensor<float> probs = softmax(net.forward(center_crop_batch(single(image), crop)));
  return {probs.data().begin(), probs.data().end()};
}

std::vector<double> ten_view_predict(const Network<float>& net, const Tensor<float>& image) {
  require_inference(net);
  if (net.spec().input.size() != 3) throw DimensionError("ten-view testing needs image input");
  const std::size_t crop = net.spec().input[1];
  std::vector<double> mean;
  for (const auto& view : ten_view_crops(image, crop)) {
    const auto probs = predict_one(net, view);
    if (mean.empty()) mean.assign(probs.size(), 0.0);
    for (std::size_t j = 0; j < probs.size(); ++j) mean[j] += probs[j];
  }
  for (double& v : mean) v /= 10.0;
  return mean;
}

std::vector<TraceRow> per_image_trace(const Network<float>& net, const Tensor<float>& image,
                                      int true_label, std::span<const double> angles,
                                      std::size_t crop) {
  if (angles.empty()) throw InputError("trace needs at least one angle");
  std::vector<TraceRow> rows;
  for (double angle : angles) {
    const auto probs = predict_one(net, rotate_image(image, angle), crop);
    if (true_label < 0 || static_cast<std::size_t>(true_label) >= probs.size()) {
      throw InputError("true label out of range");
    }
    rows.push_back({angle, probs[static_cast<std::size_t>(true_label)]});
  }
  return rows;
}

}  // namespace spinconv
