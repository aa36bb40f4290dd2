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

#ifndef SPINCONV_DATA_H_
#define SPINCONV_DATA_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spinconv/tensor.h"

namespace spinconv {

struct Dataset {
  Tensor<float> images;     // [N, C, H, W], raw pixels in [0, 1]
  std::vector<int> labels;  // [N]
  std::size_t num_classes = 0;
  Tensor<float> mean_image; // [C, H, W]; empty until preprocess()

  std::size_t size() const { return labels.size(); }
  Shape image_shape() const { return {images.dim(1), images.dim(2), images.dim(3)}; }
};

// IDX (MNIST) files: big-endian, magic 0x00000803 for [N, H, W] unsigned
// byte images and 0x00000801 for [N] labels. Pixels are scaled by 1/255.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);
Dataset parse_idx(std::span<const std::uint8_t> image_bytes,
                  std::span<const std::uint8_t> label_bytes);

// Pixels are quantized with round(v * 255) after clamping to [0, 1].
std::vector<std::uint8_t> encode_idx_images(const Tensor<float>& images);
std::vector<std::uint8_t> encode_idx_labels(std::span<const int> labels);
void write_idx(const Dataset& dataset, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

enum class ShapeClass : int { kBar = 0, kCorner = 1, kTee = 2, kDisk = 3 };

struct ShapeParams {
  double cx = 13.5;        // bounding-box center, pixel coordinates
  double cy = 13.5;
  double length = 14.0;    // arm length (bar, corner, tee)
  double half_width = 1.5; // stroke half width
  double radius = 5.5;     // disk radius
};

// Anti-aliased [1, size, size] rendering in its upright orientation.
Tensor<float> render_shape(ShapeClass shape, const ShapeParams& params, std::size_t size = 28);

// Four upright classes (bar, L-corner, T-junction, disk) at 28x28 with
// random size and position jitter. Exactly n_per_class per label, labels
// interleaved, deterministic per seed.
Dataset make_rotated_shapes(std::size_t n_per_class, std::uint64_t seed);

// Ten seven-segment digit classes at 28x28 with random slant, stroke width,
// scale, position and pixel noise; written as IDX this is an MNIST-format
// stand-in.
Dataset make_synthetic_digits(std::size_t n_per_class, std::uint64_t seed);

Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices);

// Per-pixel mean over the dataset's images.
Tensor<float> compute_mean(const Dataset& dataset);

// Subtracts `mean` from every image and records it in mean_image.
Dataset preprocess(const Dataset& dataset, const Tensor<float>& mean);

// Mean computed from this (training) split.
Dataset preprocess(const Dataset& training);

// Bilinear inverse-mapping rotation of a [C, H, W] image about its center,
// clockwise for positive degrees; samples outside the image read 0.
template <typename T>
Tensor<T> rotate_image(const Tensor<T>& image, double degrees);

// rotate_image applied to every image of a [N, C, H, W] batch.
Tensor<float> rotate_batch(const Tensor<float>& images, double degrees);

struct CropOffset {
  std::size_t y = 0;
  std::size_t x = 0;
  bool operator==(const CropOffset&) const = default;
};

// Top-left corners of the center crop followed by the four corner crops:
// center, (0,0), (0,W-c), (H-c,0), (H-c,W-c).
std::array<CropOffset, 5> five_crop_offsets(std::size_t height, std::size_t width,
                                            std::size_t crop);

Tensor<float> crop_image(const Tensor<float>& image, CropOffset at, std::size_t crop);
Tensor<float> mirror_left_right(const Tensor<float>& image);

// Center crop of every image of a [N, C, H, W] batch; crop == H == W or
// crop == 0 returns the batch unchanged.
Tensor<float> center_crop_batch(const Tensor<float>& images, std::size_t crop);

// The five crops followed by their left-right mirrors.
std::vector<Tensor<float>> ten_view_crops(const Tensor<float>& image, std::size_t crop);

}  // namespace spinconv

#endif  // SPINCONV_DATA_H_
