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

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "spinconv/errors.h"
#include "spinconv/oracle/oracle.h"
#include "spinconv/rng.h"
#include "spinconv/training.h"

namespace spinconv::oracle {
namespace {

constexpr double kEps = 1e-3;

// A scalar loss over a flat parameter vector plus its analytic gradient.
struct Problem {
  std::string name;
  std::vector<double> theta;
  std::function<double(std::span<const double>)> loss;
  std::function<std::vector<double>(std::span<const double>)> grad;
};

// Views a flat vector as a list of tensors with fixed shapes.
struct Packing {
  std::vector<Shape> shapes;

  std::vector<Tensor<double>> unpack(std::span<const double> flat) const {
    std::vector<Tensor<double>> out;
    std::size_t at = 0;
    for (const auto& s : shapes) {
      const std::size_t n = shape_size(s);
      out.emplace_back(s, std::vector<double>(flat.begin() + at, flat.begin() + at + n));
      at += n;
    }
    return out;
  }

  static std::vector<double> pack(const std::vector<const Tensor<double>*>& ts) {
    std::vector<double> flat;
    for (const auto* t : ts) flat.insert(flat.end(), t->data().begin(), t->data().end());
    return flat;
  }
};

Tensor<double> gaussian(Shape shape, Rng& rng, double stddev = 1.0) {
  std::normal_distribution<double> nd(0.0, stddev);
  Tensor<double> t(std::move(shape));
  for (double& v : t.data()) v = nd(rng);
  return t;
}

// Gaussian values pushed at least `margin` away from zero.
Tensor<double> away_from_zero(Shape shape, Rng& rng, double margin = 0.05) {
  Tensor<double> t = gaussian(std::move(shape), rng);
  for (double& v : t.data()) v = v >= 0 ? v + margin : v - margin;
  return t;
}

// A permutation of well separated values, so no window holds a near tie.
Tensor<double> distinct(Shape shape, Rng& rng) {
  Tensor<double> t(std::move(shape));
  std::vector<std::size_t> order(t.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i))]);
  }
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.02 * static_cast<double>(order[i]) - 1.0;
  return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> concat(std::initializer_list<const Tensor<double>*> ts) {
  std::vector<double> out;
  for (const auto* t : ts) out.insert(out.end(), t->data().begin(), t->data().end());
  return out;
}

GradcheckResult evaluate(const Problem& p, Rng& rng, std::size_t want, double tolerance) {
  GradcheckResult r;
  r.layer = p.name;
  const std::vector<double> analytic = p.grad(p.theta);
  std::vector<std::size_t> order(p.theta.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i))]);
  }
  for (std::size_t i : order) {
    if (r.coordinates >= want) break;
    const std::size_t c[1] = {i};
    const double full = finite_difference(p.loss, p.theta, kEps, c)[0];
    const double half = finite_difference(p.loss, p.theta, kEps / 2, c)[0];
    // A smooth loss gives nearly the same central difference at eps and
    // eps/2; a kink inside the probe interval does not.
    if (std::abs(full - half) > 1e-5 * std::max({std::abs(full), std::abs(half), 1e-2})) {
      ++r.skipped;
      continue;
    }
    r.max_relative_error = std::max(r.max_relative_error, relative_error(full, analytic[i]));
    ++r.coordinates;
  }
  r.passed = r.coordinates >= std::min(want, p.theta.size()) &&
             r.skipped <= r.coordinates / 4 && r.max_relative_error <= tolerance;
  return r;
}

Problem conv_problem(Rng& rng) {
  const ConvParams<double> base{gaussian({4, 3, 3, 3}, rng), gaussian({4}, rng), 2, 1};
  const Tensor<double> x = gaussian({2, 3, 7, 7}, rng);
  const Tensor<double> g = gaussian({2, 4, 4, 4}, rng);
  const Packing pk{{x.shape(), base.weights.shape(), base.bias.shape()}};
  Problem p{"conv", concat({&x, &base.weights, &base.bias}), {}, {}};
  p.loss = [=](std::span<const double> th) {
    auto t = pk.unpack(th);
    return dot(g, conv2d_forward(t[0], ConvParams<double>{t[1], t[2], 2, 1}));
  };
  p.grad = [=](std::span<const double> th) {
    auto t = pk.unpack(th);
    auto cg = conv2d_backward(g, t[0], ConvParams<double>{t[1], t[2], 2, 1});
    return concat({&cg.input, &cg.weights, &cg.bias});
  };
  return p;
}

Problem fc_problem(Rng& rng) {
  const Tensor<double> x = gaussian({4, 12}, rng), w = gaussian({8, 12}, rng), b = gaussian({8}, rng);
  const Tensor<double> g = gaussian({4, 8}, rng);
  const Packing pk{{x.shape(), w.shape(), b.shape()}};
  Problem p{"fc", concat({&x, &w, &b}), {}, {}};
  p.loss = [=](std::span<const double> th) {
    auto t = pk.unpack(th);
    return dot(g, fc_forward(t[0], t[1], t[2]));
  };
  p.grad = [=](std::span<const double> th) {
    auto t = pk.unpack(th);
    auto fg = fc_backward(g, t[0], t[1]);
    return concat({&fg.input, &fg.weights, &fg.bias});
  };
  return p;
}

Problem relu_problem(Rng& rng) {
  const Tensor<double> x = away_from_zero({2, 3, 5, 5}, rng);
  const Tensor<double> g = gaussian(x.shape(), rng);
  const Packing pk{{x.shape()}};
  Problem p{"relu", concat({&x}), {}, {}};
  p.loss = [=](std::span<const double> th) { return dot(g, relu_forward(pk.unpack(th)[0])); };
  p.grad = [=](std::span<const double> th) {
    const auto gi = relu_backward(g, pk.unpack(th)[0]);
    return concat({&gi});
  };
  return p;
}

Problem prelu_problem(Rng& rng) {
  const Tensor<double> x = away_from_zero({2, 4, 4, 4}, rng);
  Tensor<double> a = gaussian({4}, rng, 0.1);
  for (double& v : a.data()) v += 0.25;
  const Tensor<double> g = gaussian(x.shape(), rng);
  const Packing pk{{x.shape(), a.shape()}};
  Problem p{"prelu", concat({&x, &a}), {}, {}};
  p.loss = [=](std::span<const double> th) {
    auto t = pk.unpack(th);
    return dot(g, prelu_forward(t[0], t[1]));
  };
  p.grad = [=](std::span<const double> th) {
    auto t = pk.unpack(th);
    auto pg = prelu_backward(g, t[0], t[1]);
    return concat({&pg.input, &pg.slope});
  };
  return p;
}

Problem maxpool_problem(Rng& rng) {
  const Tensor<double> x = distinct({2, 2, 7, 7}, rng);
  const Tensor<double> g = gaussian({2, 2, 3, 3}, rng);
  const Packing pk{{x.shape()}};
  Problem p{"maxpool", concat({&x}), {}, {}};
  p.loss = [=](std::span<const double> th) {
    return dot(g, maxpool2d_forward(pk.unpack(th)[0], 3, 2).output);
  };
  p.grad = [=](std::span<const double> th) {
    const auto x0 = pk.unpack(th)[0];
    const auto res = maxpool2d_forward(x0, 3, 2);
    const auto gi = maxpool2d_backward(g, res.argmax, x0.shape());
    return concat({&gi});
  };
  return p;
}

// Two-branch toy loss: sum(r * y_kept) + 0.5 * sum(y_dropped^2).
Problem sdropout_problem(Rng& rng) {
  const Tensor<double> y = gaussian({3, 48}, rng);
  const Tensor<double> r = gaussian(y.shape(), rng);
  const Mask mask = draw_mask(48, 0.5, rng);
  const Packing pk{{y.shape()}};
  Problem p{"sdropout", concat({&y}), {}, {}};
  p.loss = [=](std::span<const double> th) {
    const auto split = sdropout_forward(pk.unpack(th)[0], mask);
    return dot(r, split.kept) + 0.5 * dot(split.dropped, split.dropped);
  };
  p.grad = [=](std::span<const double> th) {
    const auto split = sdropout_forward(pk.unpack(th)[0], mask);
    const auto gi = sdropout_backward(r, split.dropped, mask);
    return concat({&gi});
  };
  return p;
}

Problem oriented_problem(Rng& rng, const std::string& name, std::size_t filters, std::size_t k,
                         double rotate_fraction, double flip_fraction) {
  const Tensor<double> w0 = gaussian({filters, 2, k, k}, rng);
  const Tensor<double> b0 = gaussian({filters}, rng);
  const std::size_t pad = (k - 1) / 2;
  Rng sel = rng;
  const auto proto = OrientedConvLayer<double>::select(ConvParams<double>{w0, b0, 1, pad},
                                                       rotate_fraction, flip_fraction, sel);
  const Tensor<double> x = gaussian({2, 2, 6, 6}, rng);
  const Tensor<double> g = gaussian({2, filters, 6, 6}, rng);
  const Packing pk{{x.shape(), w0.shape(), b0.shape()}};
  auto rebuild = [=](const std::vector<Tensor<double>>& t) {
    return OrientedConvLayer<double>(ConvParams<double>{t[1], t[2], 1, pad}, proto.rotate_set(),
                                     proto.flip_set(), proto.flip_axes());
  };
  Problem p{name, concat({&x, &w0, &b0}), {}, {}};
  p.loss = [=](std::span<const double> th) {
    auto t = pk.unpack(th);
    return dot(g, oriented_conv_forward(t[0], rebuild(t)));
  };
  p.grad = [=](std::span<const double> th) {
    auto t = pk.unpack(th);
    const auto layer = rebuild(t);
    OrientedConvCache<double> cache;
    oriented_conv_forward(t[0], layer, &cache);
    auto cg = oriented_conv_backward(g, t[0], layer, cache);
    return concat({&cg.input, &cg.weights, &cg.bias});
  };
  return p;
}

Problem xent_problem(Rng& rng) {
  const Tensor<double> z = gaussian({12, 10}, rng);
  std::vector<int> labels(12);
  for (int& l : labels) l = static_cast<int>(uniform01(rng) * 10.0);
  const Packing pk{{z.shape()}};
  Problem p{"xent", concat({&z}), {}, {}};
  p.loss = [=](std::span<const double> th) {
    return softmax_cross_entropy(pk.unpack(th)[0], labels).loss;
  };
  p.grad = [=](std::span<const double> th) {
    const auto res = softmax_cross_entropy(pk.unpack(th)[0], labels);
    return concat({&res.grad_logits});
  };
  return p;
}

// Full training pipeline with a pinned split mask: oriented conv, PReLU,
// pooling, fc, ReLU, split dropout, fc and cross-entropy.
Problem network_problem(Rng& rng) {
  NetworkSpec spec;
  spec.input = {1, 8, 8};
  spec.layers = {LayerSpec::conv(4, 3, 1, 1, true), LayerSpec::prelu(), LayerSpec::maxpool(2, 2),
                 LayerSpec::fc(12), LayerSpec::relu(), LayerSpec::dropout(0.5), LayerSpec::fc(3)};
  spec.dropout_mode = DropoutMode::kSplit;
  spec.rotate_fraction = 0.5;
  spec.flip_fraction = 0.25;
  const std::uint64_t seed = rng();
  const Network<double> proto = init_weights<double>(spec, seed, InitOptions{0.3, 0.05, 0.25});
  const Tensor<double> x = gaussian({3, 1, 8, 8}, rng);
  const std::vector<int> labels{0, 2, 1};
  const std::vector<Mask> masks{draw_mask(12, 0.5, rng)};

  std::vector<Shape> shapes;
  for (const Tensor<double>* t : proto.parameters()) shapes.push_back(t->shape());
  const Packing pk{shapes};
  auto load = [=](std::span<const double> th) {
    Network<double> net = proto;
    auto params = net.parameters();
    auto t = pk.unpack(th);
    for (std::size_t i = 0; i < params.size(); ++i) *params[i].tensor = std::move(t[i]);
    return net;
  };
  Problem p{"network", Packing::pack(proto.parameters()), {}, {}};
  p.loss = [=](std::span<const double> th) {
    Network<double> net = load(th);
    return forward_training(net, x, labels, &masks).loss;
  };
  p.grad = [=](std::span<const double> th) {
    Network<double> net = load(th);
    const auto fwd = forward_training(net, x, labels, &masks);
    const auto grads = backward_training(net, fwd.branches);
    std::vector<double> flat;
    for (const auto& gr : grads) flat.insert(flat.end(), gr.data().begin(), gr.data().end());
    return flat;
  };
  return p;
}

std::vector<Problem> problems_for(const std::string& kind, Rng& rng) {
  if (kind == "conv") return {conv_problem(rng)};
  if (kind == "fc") return {fc_problem(rng)};
  if (kind == "relu") return {relu_problem(rng)};
  if (kind == "prelu") return {prelu_problem(rng)};
  if (kind == "maxpool") return {maxpool_problem(rng)};
  if (kind == "sdropout") return {sdropout_problem(rng)};
  if (kind == "rpc") {
    return {oriented_problem(rng, "rpc", 4, 3, 0.5, 0.0),
            oriented_problem(rng, "rpc-5x5", 2, 5, 1.0, 0.0)};
  }
  if (kind == "frpc") return {oriented_problem(rng, "frpc", 8, 3, 0.25, 0.5)};
  if (kind == "xent") return {xent_problem(rng)};
  if (kind == "network") return {network_problem(rng)};
  std::string valid;
  for (const auto& k : gradcheck_kinds()) valid += (valid.empty() ? "" : ", ") + k;
  throw InputError("unknown layer kind '" + kind + "'; valid kinds: " + valid + ", all");
}

}  // namespace

std::vector<std::string> gradcheck_kinds() {
  return {"conv", "fc", "relu", "prelu", "maxpool", "sdropout", "rpc", "frpc", "xent", "network"};
}

std::vector<GradcheckResult> run_gradcheck(const std::string& kind, std::uint64_t seed,
                                           std::size_t coordinates, double tolerance) {
  std::vector<std::string> kinds{kind};
  if (kind == "all") kinds = gradcheck_kinds();
  std::vector<GradcheckResult> results;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const std::size_t stream = static_cast<std::size_t>(
        std::find(gradcheck_kinds().begin(), gradcheck_kinds().end(), kinds[i]) -
        gradcheck_kinds().begin());
    Rng rng = make_rng(seed, Stream::kData, 1000 + stream);
    for (const auto& p : problems_for(kinds[i], rng)) {
      results.push_back(evaluate(p, rng, coordinates, tolerance));
    }
  }
  return results;
}

}  // namespace spinconv::oracle
