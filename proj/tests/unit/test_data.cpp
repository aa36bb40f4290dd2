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


#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "spinconv/data.h"
#include "spinconv/errors.h"
#include "test_support.h"

namespace spinconv {
namespace {

namespace fs = std::filesystem;

std::vector<std::uint8_t> be32(std::uint32_t v) {
  return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
          static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

std::vector<std::uint8_t> idx_images(std::uint32_t n, std::uint32_t h, std::uint32_t w,
                                     std::vector<std::uint8_t> pixels) {
  std::vector<std::uint8_t> out = {0, 0, 8, 3};
  for (auto v : {n, h, w}) {
    auto b = be32(v);
    out.insert(out.end(), b.begin(), b.end());
  }
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

std::vector<std::uint8_t> idx_labels(std::vector<std::uint8_t> labels) {
  std::vector<std::uint8_t> out = {0, 0, 8, 1};
  auto b = be32(static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), b.begin(), b.end());
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("spinconv_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Idx, WorkedExample) {
  const auto d = parse_idx(idx_images(1, 2, 2, {0, 128, 255, 0}), idx_labels({5}));
  ASSERT_EQ(d.images.shape(), (Shape{1, 1, 2, 2}));
  EXPECT_EQ(d.images[0], 0.0f);
  EXPECT_EQ(d.images[1], 128.0f / 255.0f);
  EXPECT_EQ(d.images[2], 1.0f);
  EXPECT_EQ(d.images[3], 0.0f);
  EXPECT_EQ(d.labels, (std::vector<int>{5}));
  EXPECT_EQ(d.num_classes, 6u);
}

TEST(Idx, Errors) {
  const auto images = idx_images(2, 2, 2, std::vector<std::uint8_t>(8, 1));
  EXPECT_THROW(parse_idx(images, idx_labels({1, 2, 3})), ConsistencyError);
  auto bad = images;
  bad[3] = 4;
  EXPECT_THROW(parse_idx(bad, idx_labels({1, 2})), FormatError);
  auto bad_labels = idx_labels({1, 2});
  bad_labels[3] = 3;
  EXPECT_THROW(parse_idx(images, bad_labels), FormatError);
  auto truncated = images;
  truncated.resize(images.size() - 3);
  EXPECT_THROW(parse_idx(truncated, idx_labels({1, 2})), IoError);
  EXPECT_THROW(parse_idx(std::vector<std::uint8_t>{0, 0, 8}, idx_labels({1})), IoError);
  EXPECT_THROW(load_idx("/nonexistent/images", "/nonexistent/labels"), IoError);
}

TEST(Idx, FileRoundTrip) {
  const auto dir = temp_dir("roundtrip");
  const auto d = make_synthetic_digits(3, 7);
  write_idx(d, dir / "img", dir / "lbl");
  const auto back = load_idx(dir / "img", dir / "lbl");
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.num_classes, 10u);
  // Synthetic pixels are not 8-bit exact; re-encoding must be.
  EXPECT_LE(testing::max_abs_diff(back.images, d.images), 0.5 / 255.0 + 1e-7);
  EXPECT_EQ(encode_idx_images(back.images), encode_idx_images(d.images));
  write_idx(back, dir / "img2", dir / "lbl2");
  EXPECT_EQ(load_idx(dir / "img2", dir / "lbl2").images, back.images);
  fs::remove_all(dir);
}

TEST(Idx, OfficialMnistHeader) {
  const char* dir = std::getenv("SPINCONV_MNIST_DIR");
  if (dir == nullptr) GTEST_SKIP() << "SPINCONV_MNIST_DIR not set";
  const auto d = load_idx(fs::path(dir) / "train-images-idx3-ubyte",
                          fs::path(dir) / "train-labels-idx1-ubyte");
  EXPECT_EQ(d.size(), 60000u);
  EXPECT_EQ(d.image_shape(), (Shape{1, 28, 28}));
}

TEST(Shapes, CountsLabelsAndDeterminism) {
  const auto a = make_rotated_shapes(5, 3);
  const auto b = make_rotated_shapes(5, 3);
  EXPECT_EQ(a.images, b.images);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.size(), 20u);
  EXPECT_EQ(a.num_classes, 4u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.labels[i], static_cast<int>(i % 4));
  for (float v : a.images.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
  EXPECT_NE(make_rotated_shapes(5, 4).images, a.images);
}

TEST(Shapes, DiskIsRotationInvariant) {
  const auto disk = render_shape(ShapeClass::kDisk, ShapeParams{});
  for (double angle : {17.0, 45.0, 90.0, 133.0, 200.0}) {
    const auto r = rotate_image(disk, angle);
    // Raster membership at half intensity; edge pixels may flip.
    std::size_t changed = 0;
    for (std::size_t i = 0; i < disk.size(); ++i) changed += (r[i] >= 0.5f) != (disk[i] >= 0.5f);
    EXPECT_LE(changed, disk.size() / 50) << angle;
  }
}

TEST(Shapes, UprightClassesAreNotRotationInvariant) {
  const auto corner = render_shape(ShapeClass::kCorner, ShapeParams{});
  EXPECT_GT(testing::max_abs_diff(rotate_image(corner, 90.0), corner), 0.5);
}

TEST(Digits, CountsAndDeterminism) {
  const auto a = make_synthetic_digits(4, 9);
  EXPECT_EQ(a.size(), 40u);
  EXPECT_EQ(a.num_classes, 10u);
  EXPECT_EQ(a.image_shape(), (Shape{1, 28, 28}));
  EXPECT_EQ(make_synthetic_digits(4, 9).images, a.images);
}

TEST(Subset, PicksRows) {
  const auto d = make_rotated_shapes(2, 1);
  const std::vector<std::size_t> idx{3, 0};
  const auto s = subset(d, idx);
  EXPECT_EQ(s.labels, (std::vector<int>{3, 0}));
  EXPECT_EQ(s.images[0], d.images[3 * 28 * 28]);
  EXPECT_THROW(subset(d, std::vector<std::size_t>{8}), InputError);
}

TEST(Preprocess, ConstantDatasetBecomesZero) {
  Dataset d;
  d.images = Tensor<float>({3, 1, 4, 4}, 0.3f);
  d.labels = {0, 1, 0};
  d.num_classes = 2;
  const auto p = preprocess(d);
  for (float v : p.images.data()) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(p.mean_image.shape(), (Shape{1, 4, 4}));
}

TEST(Preprocess, TrainingMeanIsZeroAndHeldOutIsNot) {
  const auto train = preprocess(make_rotated_shapes(20, 1));
  const auto mean = compute_mean(train);
  for (float v : mean.data()) EXPECT_LE(std::abs(v), 1e-6f);
  const auto test = preprocess(make_rotated_shapes(5, 2), train.mean_image);
  double worst = 0.0;
  for (float v : compute_mean(test).data()) worst = std::max(worst, std::abs(double(v)));
  EXPECT_GT(worst, 1e-3);
  EXPECT_EQ(test.mean_image, train.mean_image);
}

TEST(Preprocess, StoredMeanAppliedTwiceShiftsAgain) {
  const auto raw = make_rotated_shapes(3, 5);
  const auto once = preprocess(raw);
  const auto twice = preprocess(once, once.mean_image);
  const std::size_t plane = once.mean_image.size();
  for (std::size_t i = 0; i < raw.images.size(); ++i) {
    EXPECT_NEAR(twice.images[i], raw.images[i] - 2.0f * once.mean_image[i % plane], 1e-6);
  }
  EXPECT_THROW(preprocess(raw, Tensor<float>({1, 27, 28})), DimensionError);
}

TEST(Rotate, IdentityAngles) {
  Rng rng(3);
  const auto img = testing::random_tensor<float>({2, 9, 9}, rng, 0.0, 1.0);
  EXPECT_EQ(rotate_image(img, 0.0), img);
  EXPECT_LE(testing::max_abs_diff(rotate_image(img, 360.0), img), 1e-6);
}

TEST(Rotate, QuarterTurnMatchesPermutation) {
  Rng rng(4);
  for (std::size_t size : {9u, 28u}) {
    const auto img = testing::random_tensor<double>({1, size, size}, rng, 0.0, 1.0);
    EXPECT_LE(testing::max_abs_diff(rotate_image(img, 90.0), testing::rot90_cw(img)), 1e-6);
    EXPECT_LE(testing::max_abs_diff(rotate_image(img, 180.0),
                                    testing::rot90_cw(testing::rot90_cw(img))),
              1e-6);
  }
}

// Sum of wide Gaussian blobs: content without raster-sharp edges.
Tensor<float> smooth_image(Rng& rng) {
  Tensor<float> img({1, 28, 28});
  for (int b = 0; b < 4; ++b) {
    const double cy = 6.0 + 16.0 * uniform01(rng), cx = 6.0 + 16.0 * uniform01(rng);
    const double s = 2.5 + 2.0 * uniform01(rng), amp = 0.3 + 0.5 * uniform01(rng);
    for (std::size_t r = 0; r < 28; ++r) {
      for (std::size_t c = 0; c < 28; ++c) {
        const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
        img.at(0, r, c) += static_cast<float>(amp * std::exp(-d2 / (2 * s * s)));
      }
    }
  }
  return img;
}

double interior_round_trip_error(const Tensor<float>& img, double angle) {
  const auto back = rotate_image(rotate_image(img, angle), -angle);
  double err = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < 28; ++r) {
    for (std::size_t c = 0; c < 28; ++c) {
      const double dy = r - 13.5, dx = c - 13.5;
      if (dx * dx + dy * dy > 12.0 * 12.0) continue;
      err += std::abs(back.at(0, r, c) - img.at(0, r, c));
      ++n;
    }
  }
  return err / n;
}

TEST(Rotate, ForwardThenBackIsCloseInInterior) {
  Rng rng(6);
  for (int i = 0; i < 20; ++i) {
    const auto img = smooth_image(rng);
    for (double angle : {30.0, 77.0, 135.0}) {
      EXPECT_LE(interior_round_trip_error(img, angle), 0.02) << angle;
    }
  }
}

TEST(Rotate, RoundTripOfRasterShapesIsBoundedByEdgeBlur) {
  // Hard 28x28 edges lose more to double resampling than smooth content;
  // the error stays a small fraction of full intensity.
  const auto d = make_rotated_shapes(3, 8);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Tensor<float> img({1, 28, 28}, std::vector<float>(d.images.raw() + i * 784,
                                                            d.images.raw() + (i + 1) * 784));
    EXPECT_LE(interior_round_trip_error(img, 30.0), 0.05);
  }
}

TEST(Rotate, BatchRotatesEveryImage) {
  const auto d = make_rotated_shapes(1, 2);
  const auto r = rotate_batch(d.images, 90.0);
  const Tensor<float> second({1, 28, 28}, std::vector<float>(d.images.raw() + 784,
                                                             d.images.raw() + 2 * 784));
  const auto expect = rotate_image(second, 90.0);
  for (std::size_t i = 0; i < 784; ++i) EXPECT_EQ(r[784 + i], expect[i]);
}

TEST(Crops, FiveCropOffsets) {
  const auto o = five_crop_offsets(256, 256, 224);
  EXPECT_EQ(o[0], (CropOffset{16, 16}));
  EXPECT_EQ(o[1], (CropOffset{0, 0}));
  EXPECT_EQ(o[2], (CropOffset{0, 32}));
  EXPECT_EQ(o[3], (CropOffset{32, 0}));
  EXPECT_EQ(o[4], (CropOffset{32, 32}));
  EXPECT_THROW(five_crop_offsets(20, 20, 24), DimensionError);
}

TEST(Crops, TenViews) {
  Rng rng(5);
  const auto img = testing::random_tensor<float>({1, 6, 6}, rng);
  const auto same = ten_view_crops(img, 6);
  ASSERT_EQ(same.size(), 10u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(same[i], img);
    EXPECT_EQ(same[5 + i], mirror_left_right(img));
  }
  EXPECT_EQ(mirror_left_right(mirror_left_right(img)), img);
  const auto views = ten_view_crops(img, 4);
  EXPECT_EQ(views[1], crop_image(img, {0, 0}, 4));
  EXPECT_EQ(views[6], mirror_left_right(crop_image(img, {0, 0}, 4)));
  EXPECT_EQ(views[0].at(0, 0, 0), img.at(0, 1, 1));
  EXPECT_THROW(ten_view_crops(img, 7), DimensionError);
}

TEST(Crops, CenterCropBatch) {
  const auto d = make_rotated_shapes(1, 3);
  EXPECT_EQ(center_crop_batch(d.images, 0), d.images);
  EXPECT_EQ(center_crop_batch(d.images, 28), d.images);
  const auto c = center_crop_batch(d.images, 24);
  EXPECT_EQ(c.shape(), (Shape{4, 1, 24, 24}));
  EXPECT_EQ(c.at(2, 0, 0, 0), d.images.at(2, 0, 2, 2));
}

}  // namespace
}  // namespace spinconv
