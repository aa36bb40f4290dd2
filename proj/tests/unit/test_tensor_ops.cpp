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
#include <vector>

#include <gtest/gtest.h>

#include "spinconv/errors.h"
#include "spinconv/ops.h"
#include "spinconv/oracle/oracle.h"
#include "test_support.h"

namespace spinconv {
namespace {

using testing::max_relative_error;
using testing::random_tensor;

ConvParams<double> make_conv(std::size_t out, std::size_t in, std::size_t k, std::size_t stride,
                             std::size_t pad, Rng& rng) {
  return {random_tensor({out, in, k, k}, rng), random_tensor({out}, rng), stride, pad};
}

TEST(Tensor, ConstructorChecksLength) {
  EXPECT_THROW(Tensor<float>({2, 3}, std::vector<float>(5)), DimensionError);
  EXPECT_THROW(Tensor<float>({2, 0}), DimensionError);
  Tensor<float> t({2, 3});
  EXPECT_THROW(t.reshape({4, 2}), DimensionError);
  t.at(1, 2) = 7.0f;
  EXPECT_EQ(t[5], 7.0f);
  EXPECT_EQ(t.reshaped({3, 2}).at(2, 1), 7.0f);
}

TEST(Tensor, AllFinite) {
  Tensor<double> t({3}, 1.0);
  EXPECT_TRUE(all_finite(t));
  t[1] = std::nan("");
  EXPECT_FALSE(all_finite(t));
}

TEST(Conv, AllOnesGivesNine) {
  ConvParams<double> p{Tensor<double>({1, 1, 3, 3}, 1.0), Tensor<double>({1}), 1, 0};
  const auto out = conv2d_forward(Tensor<double>({1, 1, 3, 3}, 1.0), p);
  ASSERT_EQ(out.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(out[0], 9.0);
}

TEST(Conv, DeltaKernelCropsCenter) {
  Rng rng(3);
  const auto x = random_tensor({1, 1, 5, 5}, rng);
  ConvParams<double> p{Tensor<double>({1, 1, 3, 3}), Tensor<double>({1}), 1, 0};
  p.weights.at(0, 0, 1, 1) = 1.0;
  const auto out = conv2d_forward(x, p);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out.at(0, 0, r, c), x.at(0, 0, r + 1, c + 1));
  }
}

TEST(Conv, MatchesNaiveOracle) {
  Rng rng(11);
  const auto x = random_tensor({1, 2, 5, 5}, rng);
  const auto p = make_conv(3, 2, 3, 2, 1, rng);
  const auto out = conv2d_forward(x, p);
  ASSERT_EQ(out.shape(), (Shape{1, 3, 3, 3}));
  EXPECT_LE(max_relative_error(out, oracle::naive_conv(x, p)), 1e-6);
}

TEST(Conv, FloatMatchesNaiveOracle) {
  Rng rng(12);
  const auto x = random_tensor({2, 3, 9, 9}, rng);
  const auto p = make_conv(4, 3, 5, 1, 2, rng);
  ConvParams<float> pf{p.weights.cast<float>(), p.bias.cast<float>(), 1, 2};
  const auto out = conv2d_forward(x.cast<float>(), pf);
  const auto ref = oracle::naive_conv(x, p);
  double worst = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    worst = std::max(worst, std::abs(out[i] - ref[i]));
  }
  EXPECT_LE(worst, 1e-5);
}

TEST(Conv, OutputSize) {
  EXPECT_EQ(conv_output_size(28, 5, 1, 2), 28u);
  EXPECT_EQ(conv_output_size(7, 3, 2, 1), 4u);
  EXPECT_THROW(conv_output_size(2, 5, 1, 0), DimensionError);
  EXPECT_THROW(conv_output_size(5, 3, 0, 0), DimensionError);
}

TEST(Conv, RejectsBadShapes) {
  Rng rng(1);
  auto p = make_conv(2, 3, 3, 1, 1, rng);
  EXPECT_THROW(conv2d_forward(random_tensor({1, 2, 5, 5}, rng), p), DimensionError);
  EXPECT_THROW(conv2d_forward(random_tensor({2, 5, 5}, rng), p), DimensionError);
  p.weights = Tensor<double>({2, 3, 2, 2});
  EXPECT_THROW(validate_conv_params(p), DimensionError);
  p.weights = Tensor<double>({2, 3, 3, 3});
  p.bias = Tensor<double>({3});
  EXPECT_THROW(validate_conv_params(p), DimensionError);
}

TEST(ConvBackward, ZeroGradOutGivesZeros) {
  Rng rng(2);
  const auto x = random_tensor({2, 2, 6, 6}, rng);
  const auto p = make_conv(3, 2, 3, 1, 1, rng);
  const auto g = conv2d_backward(Tensor<double>({2, 3, 6, 6}), x, p);
  for (double v : g.input.data()) EXPECT_EQ(v, 0.0);
  for (double v : g.weights.data()) EXPECT_EQ(v, 0.0);
  for (double v : g.bias.data()) EXPECT_EQ(v, 0.0);
}

TEST(ConvBackward, ScalarChainRule) {
  ConvParams<double> p{Tensor<double>({1, 1, 1, 1}, 1.5), Tensor<double>({1}), 1, 0};
  const Tensor<double> x({1, 1, 1, 1}, -2.0);
  const auto g = conv2d_backward(Tensor<double>({1, 1, 1, 1}, 3.0), x, p);
  EXPECT_EQ(g.input[0], 4.5);
  EXPECT_EQ(g.weights[0], -6.0);
  EXPECT_EQ(g.bias[0], 3.0);
}

TEST(ConvBackward, AdjointOfForward) {
  // <conv(x), g> is linear in x, so <g, conv(x)> - <g, conv(0)> == <grad_input, x>.
  Rng rng(5);
  const auto x = random_tensor({2, 3, 7, 7}, rng);
  auto p = make_conv(4, 3, 3, 2, 1, rng);
  p.bias.fill(0.0);
  const auto y = conv2d_forward(x, p);
  const auto g = random_tensor(y.shape(), rng);
  const auto grads = conv2d_backward(g, x, p);
  double lhs = 0.0, rhs = 0.0, wlhs = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += g[i] * y[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += grads.input[i] * x[i];
  for (std::size_t i = 0; i < p.weights.size(); ++i) wlhs += grads.weights[i] * p.weights[i];
  EXPECT_NEAR(lhs, rhs, 1e-10);
  EXPECT_NEAR(lhs, wlhs, 1e-10);
}

TEST(MaxPool, SingleWindow) {
  const Tensor<double> x({1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  const auto r = maxpool2d_forward(x, 2, 2);
  EXPECT_EQ(r.output[0], 4.0);
  ASSERT_EQ(r.argmax.size(), 1u);
  EXPECT_EQ(r.argmax[0], 3u);
  const auto g = maxpool2d_backward(Tensor<double>({1, 1, 1, 1}, 2.5), r.argmax, x.shape());
  EXPECT_EQ(g.data()[3], 2.5);
  EXPECT_EQ(g[0] + g[1] + g[2], 0.0);
}

TEST(MaxPool, ConstantInputPicksFirstOfWindow) {
  const Tensor<double> x({1, 1, 4, 4}, 0.5);
  const auto r = maxpool2d_forward(x, 2, 2);
  EXPECT_EQ(r.argmax, (std::vector<std::size_t>{0, 2, 8, 10}));
  for (double v : r.output.data()) EXPECT_EQ(v, 0.5);
}

TEST(MaxPool, MatchesExhaustiveScan) {
  Rng rng(7);
  const auto x = random_tensor({2, 3, 6, 6}, rng);
  const auto r = maxpool2d_forward(x, 3, 2);
  const auto ref = oracle::naive_maxpool(x, 3, 2);
  EXPECT_EQ(r.output, ref.output);
  EXPECT_EQ(r.argmax, ref.argmax);
}

TEST(MaxPool, Errors) {
  const Tensor<double> x({1, 1, 2, 2});
  EXPECT_THROW(maxpool2d_forward(x, 3, 1), DimensionError);
  const std::vector<std::size_t> stale{9};
  EXPECT_THROW(maxpool2d_backward(Tensor<double>({1, 1, 1, 1}), stale, x.shape()),
               ConsistencyError);
  const auto zero = maxpool2d_backward(Tensor<double>({1, 1, 1, 1}), std::vector<std::size_t>{2},
                                       x.shape());
  for (double v : zero.data()) EXPECT_EQ(v, 0.0);
}

TEST(Fc, IdentityAndBias) {
  Rng rng(4);
  const auto x = random_tensor({3, 4}, rng);
  Tensor<double> eye({4, 4});
  for (std::size_t i = 0; i < 4; ++i) eye.at(i, i) = 1.0;
  EXPECT_EQ(fc_forward(x, eye, Tensor<double>({4})), x);
  const auto b = random_tensor({2}, rng);
  const auto y = fc_forward(Tensor<double>({3, 4}), random_tensor({2, 4}, rng), b);
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_EQ(y.at(n, 0), b[0]);
    EXPECT_EQ(y.at(n, 1), b[1]);
  }
  EXPECT_THROW(fc_forward(x, random_tensor({2, 5}, rng), b), DimensionError);
}

TEST(Activations, Relu) {
  const Tensor<double> x({1, 3}, std::vector<double>{-1, 0, 2});
  EXPECT_EQ(relu_forward(x), Tensor<double>({1, 3}, std::vector<double>{0, 0, 2}));
  const auto g = relu_backward(Tensor<double>({1, 3}, 1.0), x);
  EXPECT_EQ(g, Tensor<double>({1, 3}, std::vector<double>{0, 0, 1}));
}

TEST(Activations, PreluSlope) {
  const Tensor<double> x({1, 2, 1, 2}, std::vector<double>{-4, 2, -1, 3});
  const Tensor<double> slope({2}, std::vector<double>{0.25, 0.5});
  EXPECT_EQ(prelu_forward(x, slope),
            Tensor<double>({1, 2, 1, 2}, std::vector<double>{-1, 2, -0.5, 3}));
  const auto g = prelu_backward(Tensor<double>(x.shape(), 1.0), x, slope);
  EXPECT_EQ(g.input, Tensor<double>({1, 2, 1, 2}, std::vector<double>{0.25, 1, 0.5, 1}));
  EXPECT_EQ(g.slope, Tensor<double>({2}, std::vector<double>{-4, -1}));
  EXPECT_THROW(prelu_forward(x, Tensor<double>({3})), DimensionError);
}

TEST(Loss, UniformLogitsGiveLogK) {
  const Tensor<double> logits({3, 4}, 0.7);
  const std::vector<int> labels{0, 2, 3};
  const auto r = softmax_cross_entropy(logits, labels);
  EXPECT_NEAR(r.loss, std::log(4.0), 1e-12);
  EXPECT_NEAR(r.grad_logits.at(0, 0), (0.25 - 1.0) / 3.0, 1e-12);
  EXPECT_NEAR(r.grad_logits.at(0, 1), 0.25 / 3.0, 1e-12);
}

TEST(Loss, LargeMarginGivesNearZero) {
  Tensor<double> logits({1, 5});
  logits[2] = 50.0;
  const std::vector<int> labels{2};
  EXPECT_LT(softmax_cross_entropy(logits, labels).loss, 1e-20);
}

TEST(Loss, SoftmaxRowsSumToOne) {
  Rng rng(8);
  const auto s = softmax(random_tensor({4, 6}, rng, -30.0, 30.0));
  for (std::size_t n = 0; n < 4; ++n) {
    double sum = 0.0;
    for (std::size_t k = 0; k < 6; ++k) sum += s.at(n, k);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Loss, Errors) {
  const Tensor<double> logits({2, 3});
  EXPECT_THROW(softmax_cross_entropy(logits, std::vector<int>{0, 3}), InputError);
  EXPECT_THROW(softmax_cross_entropy(logits, std::vector<int>{0, -1}), InputError);
  EXPECT_THROW(softmax_cross_entropy(logits, std::vector<int>{0}), DimensionError);
}

}  // namespace
}  // namespace spinconv
