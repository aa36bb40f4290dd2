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

#include "spinconv/data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

#include "spinconv/rng.h"

namespace spinconv {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset,
                        const char* what) {
  if (bytes.size() < offset + 4) {
    throw IoError(std::string(what) + " truncated: header needs " +
                  std::to_string(offset + 4) + " bytes, file has " +
                  std::to_string(bytes.size()));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax, vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (ax + t * vx), dy = py - (ay + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

struct Segment {
  double ax, ay, bx, by;
};

// 4x4 supersampled coverage of the union of thick segments.
Tensor<float> render_strokes(const std::vector<Segment>& segments, double half_width,
                             std::size_t size, float intensity = 1.0f) {
  Tensor<float> img({1, size, size});
  constexpr int kSub = 4;
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      int hits = 0;
      for (int sy = 0; sy < kSub; ++sy) {
        for (int sx = 0; sx < kSub; ++sx) {
          const double px = c + (sx + 0.5) / kSub - 0.5;
          const double py = r + (sy + 0.5) / kSub - 0.5;
          for (const auto& s : segments) {
            if (segment_distance(px, py, s.ax, s.ay, s.bx, s.by) <= half_width) {
              ++hits;
              break;
            }
          }
        }
      }
      img[r * size + c] = intensity * static_cast<float>(hits) / (kSub * kSub);
    }
  }
  return img;
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

Dataset assemble(std::vector<Tensor<float>> images, std::vector<int> labels,
                 std::size_t classes) {
  const Shape one = images.front().shape();
  Shape shape{images.size()};
  shape.insert(shape.end(), one.begin(), one.end());
  Tensor<float> batch(shape);
  const std::size_t stride = shape_size(one);
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::copy(images[i].raw(), images[i].raw() + stride, batch.raw() + i * stride);
  }
  return Dataset{std::move(batch), std::move(labels), classes, Tensor<float>()};
}

}  // namespace

Dataset parse_idx(std::span<const std::uint8_t> image_bytes,
                  std::span<const std::uint8_t> label_bytes) {
  const std::uint32_t image_magic = read_be32(image_bytes, 0, "IDX image file");
  if (image_magic != kImageMagic) {
    throw FormatError("bad IDX image magic 0x" + [&] {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%08x", image_magic);
      return std::string(buf);
    }());
  }
  const std::uint32_t label_magic = read_be32(label_bytes, 0, "IDX label file");
  if (label_magic != kLabelMagic) throw FormatError("bad IDX label magic");
  const std::size_t n = read_be32(image_bytes, 4, "IDX image file");
  const std::size_t h = read_be32(image_bytes, 8, "IDX image file");
  const std::size_t w = read_be32(image_bytes, 12, "IDX image file");
  const std::size_t n_labels = read_be32(label_bytes, 4, "IDX label file");
  if (n != n_labels) {
    throw ConsistencyError("IDX image count " + std::to_string(n) +
                           " does not match label count " + std::to_string(n_labels));
  }
  if (n == 0 || h == 0 || w == 0) throw FormatError("IDX file declares an empty dimension");
  if (image_bytes.size() < 16 + n * h * w) {
    throw IoError("IDX image file truncated: expected " + std::to_string(16 + n * h * w) +
                  " bytes, got " + std::to_string(image_bytes.size()));
  }
  if (label_bytes.size() < 8 + n) {
    throw IoError("IDX label file truncated: expected " + std::to_string(8 + n) +
                  " bytes, got " + std::to_string(label_bytes.size()));
  }
  Tensor<float> images({n, 1, h, w});
  for (std::size_t i = 0; i < n * h * w; ++i) {
    images[i] = static_cast<float>(image_bytes[16 + i]) / 255.0f;
  }
  std::vector<int> labels(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = label_bytes[8 + i];
    max_label = std::max(max_label, labels[i]);
  }
  return Dataset{std::move(images), std::move(labels), static_cast<std::size_t>(max_label) + 1,
                 Tensor<float>()};
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
  const auto image_bytes = read_file(images_path);
  const auto label_bytes = read_file(labels_path);
  return parse_idx(image_bytes, label_bytes);
}

std::vector<std::uint8_t> encode_idx_images(const Tensor<float>& images) {
  require_rank(images, 4, "IDX images");
  if (images.dim(1) != 1) throw DimensionError("IDX images must have one channel");
  std::vector<std::uint8_t> out;
  write_be32(out, kImageMagic);
  write_be32(out, static_cast<std::uint32_t>(images.dim(0)));
  write_be32(out, static_cast<std::uint32_t>(images.dim(2)));
  write_be32(out, static_cast<std::uint32_t>(images.dim(3)));
  for (float v : images.data()) {
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
  }
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const int> labels) {
  std::vector<std::uint8_t> out;
  write_be32(out, kLabelMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) {
    if (l < 0 || l > 255) throw InputError("IDX labels must fit in one byte");
    out.push_back(static_cast<std::uint8_t>(l));
  }
  return out;
}

void write_idx(const Dataset& dataset, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
  write_file(images_path, encode_idx_images(dataset.images));
  write_file(labels_path, encode_idx_labels(dataset.labels));
}

Tensor<float> render_shape(ShapeClass shape, const ShapeParams& p, std::size_t size) {
  const double half = p.length / 2.0;
  switch (shape) {
    case ShapeClass::kBar:
      return render_strokes({{p.cx, p.cy - half, p.cx, p.cy + half}}, p.half_width, size);
    case ShapeClass::kCorner: {
      // Vertical arm with a shorter foot pointing right, box-centered.
      const double foot = 0.7 * p.length;
      const double left = p.cx - foot / 2.0;
      return render_strokes({{left, p.cy - half, left, p.cy + half},
                             {left, p.cy + half, left + foot, p.cy + half}},
                            p.half_width, size);
    }
    case ShapeClass::kTee:
      return render_strokes({{p.cx - half, p.cy - half, p.cx + half, p.cy - half},
                             {p.cx, p.cy - half, p.cx, p.cy + half}},
                            p.half_width, size);
    case ShapeClass::kDisk: {
      Tensor<float> img({1, size, size});
      constexpr int kSub = 4;
      for (std::size_t r = 0; r < size; ++r) {
        for (std::size_t c = 0; c < size; ++c) {
          int hits = 0;
          for (int sy = 0; sy < kSub; ++sy) {
            for (int sx = 0; sx < kSub; ++sx) {
              const double dx = c + (sx + 0.5) / kSub - 0.5 - p.cx;
              const double dy = r + (sy + 0.5) / kSub - 0.5 - p.cy;
              hits += dx * dx + dy * dy <= p.radius * p.radius ? 1 : 0;
            }
          }
          img[r * size + c] = static_cast<float>(hits) / (kSub * kSub);
        }
      }
      return img;
    }
  }
  throw InputError("unknown shape class");
}

Dataset make_rotated_shapes(std::size_t n_per_class, std::uint64_t seed) {
  if (n_per_class == 0) throw InputError("n_per_class must be positive");
  Rng rng = make_rng(seed, Stream::kData);
  std::vector<Tensor<float>> images;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (int cls = 0; cls < 4; ++cls) {
      ShapeParams p;
      p.cx = 13.5 + uniform(rng, -2.5, 2.5);
      p.cy = 13.5 + uniform(rng, -2.5, 2.5);
      p.length = uniform(rng, 12.0, 16.0);
      p.half_width = uniform(rng, 1.1, 1.7);
      p.radius = uniform(rng, 4.5, 6.5);
      images.push_back(render_shape(static_cast<ShapeClass>(cls), p));
      labels.push_back(cls);
    }
  }
  return assemble(std::move(images), std::move(labels), 4);
}

Dataset make_synthetic_digits(std::size_t n_per_class, std::uint64_t seed) {
  if (n_per_class == 0) throw InputError("n_per_class must be positive");
  // Segments a..g as bits 0..6.
  constexpr std::array<unsigned, 10> kSegments = {
      0b0111111, 0b0000110, 0b1011011, 0b1001111, 0b1100110,
      0b1101101, 0b1111101, 0b0000111, 0b1111111, 0b1101111,
  };
  Rng rng = make_rng(seed, Stream::kData, 1);
  std::vector<Tensor<float>> images;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (int digit = 0; digit < 10; ++digit) {
      const double w = uniform(rng, 7.0, 11.0), h = uniform(rng, 13.0, 18.0);
      const double cx = 13.5 + uniform(rng, -3.0, 3.0), cy = 13.5 + uniform(rng, -2.5, 2.5);
      const double slant = uniform(rng, -0.25, 0.25);
      auto pt = [&](double x, double y) {
        return std::array<double, 2>{cx + x - slant * y, cy + y};
      };
      const auto tl = pt(-w / 2, -h / 2), tr = pt(w / 2, -h / 2);
      const auto ml = pt(-w / 2, 0), mr = pt(w / 2, 0);
      const auto bl = pt(-w / 2, h / 2), br = pt(w / 2, h / 2);
      const std::array<Segment, 7> all = {{
          {tl[0], tl[1], tr[0], tr[1]},  // a
          {tr[0], tr[1], mr[0], mr[1]},  // b
          {mr[0], mr[1], br[0], br[1]},  // c
          {bl[0], bl[1], br[0], br[1]},  // d
          {ml[0], ml[1], bl[0], bl[1]},  // e
          {tl[0], tl[1], ml[0], ml[1]},  // f
          {ml[0], ml[1], mr[0], mr[1]},  // g
      }};
      std::vector<Segment> segs;
      for (int s = 0; s < 7; ++s) {
        if (kSegments[digit] & (1u << s)) segs.push_back(all[s]);
      }
      Tensor<float> img = render_strokes(segs, uniform(rng, 0.9, 1.7), 28,
                                         static_cast<float>(uniform(rng, 0.7, 1.0)));
      std::normal_distribution<double> noise(0.0, 0.08);
      for (float& v : img.data()) {
        v = std::clamp(v + static_cast<float>(noise(rng)), 0.0f, 1.0f);
      }
      images.push_back(std::move(img));
      labels.push_back(digit);
    }
  }
  return assemble(std::move(images), std::move(labels), 10);
}

Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices) {
  if (indices.empty()) throw InputError("subset needs at least one index");
  const Shape one = dataset.image_shape();
  const std::size_t stride = shape_size(one);
  Shape shape{indices.size()};
  shape.insert(shape.end(), one.begin(), one.end());
  Dataset out{Tensor<float>(shape), {}, dataset.num_classes, dataset.mean_image};
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= dataset.size()) throw InputError("subset index out of range");
    std::copy(dataset.images.raw() + indices[i] * stride,
              dataset.images.raw() + (indices[i] + 1) * stride, out.images.raw() + i * stride);
    out.labels.push_back(dataset.labels[indices[i]]);
  }
  return out;
}

Tensor<float> compute_mean(const Dataset& dataset) {
  const Shape one = dataset.image_shape();
  const std::size_t stride = shape_size(one);
  std::vector<double> acc(stride, 0.0);
  for (std::size_t i = 0; i < dataset.images.dim(0); ++i) {
    const float* img = dataset.images.raw() + i * stride;
    for (std::size_t j = 0; j < stride; ++j) acc[j] += img[j];
  }
  Tensor<float> mean(one);
  for (std::size_t j = 0; j < stride; ++j) {
    mean[j] = static_cast<float>(acc[j] / static_cast<double>(dataset.images.dim(0)));
  }
  return mean;
}

Dataset preprocess(const Dataset& dataset, const Tensor<float>& mean) {
  if (mean.shape() != dataset.image_shape()) {
    throw DimensionError("mean image shape " + shape_to_string(mean.shape()) +
                         " does not match image shape " +
                         shape_to_string(dataset.image_shape()));
  }
  Dataset out = dataset;
  const std::size_t stride = mean.size();
  for (std::size_t i = 0; i < out.images.size(); ++i) out.images[i] -= mean[i % stride];
  out.mean_image = mean;
  return out;
}

Dataset preprocess(const Dataset& training) { return preprocess(training, compute_mean(training)); }

template <typename T>
Tensor<T> rotate_image(const Tensor<T>& image, double degrees) {
  require_rank(image, 3, "rotate_image input");
  if (std::fmod(degrees, 360.0) == 0.0) return image;
  const std::size_t ch = image.dim(0), h = image.dim(1), w = image.dim(2);
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  auto snap = [](double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
  };
  Tensor<T> out(image.shape());
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double x = static_cast<double>(c) - cx;
      const double y = static_cast<double>(r) - cy;
      const double sx = snap(x * cs + y * sn + cx);
      const double sy = snap(-x * sn + y * cs + cy);
      const double x0 = std::floor(sx), y0 = std::floor(sy);
      const double fx = sx - x0, fy = sy - y0;
      const double corners[4][3] = {{y0, x0, (1 - fy) * (1 - fx)},
                                    {y0, x0 + 1, (1 - fy) * fx},
                                    {y0 + 1, x0, fy * (1 - fx)},
                                    {y0 + 1, x0 + 1, fy * fx}};
      for (std::size_t k = 0; k < ch; ++k) {
        double acc = 0.0;
        for (const auto& [yy, xx, wgt] : corners) {
          if (wgt == 0.0 || yy < 0 || xx < 0 || yy > static_cast<double>(h - 1) ||
              xx > static_cast<double>(w - 1)) {
            continue;
          }
          acc += wgt * static_cast<double>(image.at(k, static_cast<std::size_t>(yy),
                                                    static_cast<std::size_t>(xx)));
        }
        out.at(k, r, c) = static_cast<T>(acc);
      }
    }
  }
  return out;
}

template Tensor<float> rotate_image(const Tensor<float>&, double);
template Tensor<double> rotate_image(const Tensor<double>&, double);

Tensor<float> rotate_batch(const Tensor<float>& images, double degrees) {
  require_rank(images, 4, "rotate_batch input");
  if (std::fmod(degrees, 360.0) == 0.0) return images;
  const Shape one{images.dim(1), images.dim(2), images.dim(3)};
  const std::size_t stride = shape_size(one);
  Tensor<float> out(images.shape());
  for (std::size_t i = 0; i < images.dim(0); ++i) {
    Tensor<float> img(one, std::vector<float>(images.raw() + i * stride,
                                              images.raw() + (i + 1) * stride));
    const Tensor<float> rotated = rotate_image(img, degrees);
    std::copy(rotated.raw(), rotated.raw() + stride, out.raw() + i * stride);
  }
  return out;
}

std::array<CropOffset, 5> five_crop_offsets(std::size_t height, std::size_t width,
                                            std::size_t crop) {
  if (crop == 0 || crop > height || crop > width) {
    throw DimensionError("crop " + std::to_string(crop) + " does not fit a " +
                         std::to_string(height) + "x" + std::to_string(width) + " image");
  }
  const std::size_t dy = height - crop, dx = width - crop;
  return {{{dy / 2, dx / 2}, {0, 0}, {0, dx}, {dy, 0}, {dy, dx}}};
}

Tensor<float> crop_image(const Tensor<float>& image, CropOffset at, std::size_t crop) {
  require_rank(image, 3, "crop input");
  if (at.y + crop > image.dim(1) || at.x + crop > image.dim(2)) {
    throw DimensionError("crop window exceeds image " + shape_to_string(image.shape()));
  }
  Tensor<float> out({image.dim(0), crop, crop});
  for (std::size_t c = 0; c < image.dim(0); ++c) {
    for (std::size_t r = 0; r < crop; ++r) {
      for (std::size_t x = 0; x < crop; ++x) out.at(c, r, x) = image.at(c, at.y + r, at.x + x);
    }
  }
  return out;
}

Tensor<float> mirror_left_right(const Tensor<float>& image) {
  require_rank(image, 3, "mirror input");
  Tensor<float> out(image.shape());
  const std::size_t w = image.dim(2);
  for (std::size_t c = 0; c < image.dim(0); ++c) {
    for (std::size_t r = 0; r < image.dim(1); ++r) {
      for (std::size_t x = 0; x < w; ++x) out.at(c, r, x) = image.at(c, r, w - 1 - x);
    }
  }
  return out;
}

Tensor<float> center_crop_batch(const Tensor<float>& images, std::size_t crop) {
  require_rank(images, 4, "center crop input");
  const std::size_t n = images.dim(0), ch = images.dim(1), h = images.dim(2), w = images.dim(3);
  if (crop == 0 || (crop == h && crop == w)) return images;
  const CropOffset at = five_crop_offsets(h, w, crop)[0];
  Tensor<float> out({n, ch, crop, crop});
  float* dst = out.raw();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < ch; ++c) {
      for (std::size_t r = 0; r < crop; ++r) {
        const float* src = images.raw() + ((i * ch + c) * h + at.y + r) * w + at.x;
        dst = std::copy(src, src + crop, dst);
      }
    }
  }
  return out;
}

std::vector<Tensor<float>> ten_view_crops(const Tensor<float>& image, std::size_t crop) {
  require_rank(image, 3, "ten-view input");
  std::vector<Tensor<float>> views;
  for (const auto& at : five_crop_offsets(image.dim(1), image.dim(2), crop)) {
    views.push_back(crop_image(image, at, crop));
  }
  for (std::size_t i = 0; i < 5; ++i) views.push_back(mirror_left_right(views[i]));
  return views;
}

}  // namespace spinconv
