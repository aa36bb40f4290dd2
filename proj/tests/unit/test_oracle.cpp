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
#include "spinconv/kernel_transforms.h"
#include "spinconv/oracle/oracle.h"
#include "spinconv/training.h"
#include "test_support.h"

namespace spinconv {
namespace {

using testing::random_tensor;

TEST(NaiveConv, ZeroKernelGivesBias) {
  Rng rng(1);
  const auto x = random_tensor({1, 2, 4, 4}, rng);
  ConvParams<double> p{Tensor<double>({3, 2, 3, 3}),
                       Tensor<double>({3}, std::vector<double>{1, -2, 0.5}), 1, 1};
  const auto y = oracle::naive_conv(x, p);
  for (std::size_t o = 0; o < 3; ++o) {
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(y[o * 16 + i], p.bias[o]);
  }
}

TEST(NaiveConv, OneByOneMixesChannels) {
  Rng rng(2);
  const auto x = random_tensor({1, 2, 3, 3}, rng);
  ConvParams<double> p{Tensor<double>({1, 2, 1, 1}, std::vector<double>{2, -1}), Tensor<double>({1}),
                       1, 0};
  const auto y = oracle::naive_conv(x, p);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(y[i], 2 * x[i] - x[9 + i]);
}

TEST(NaiveVariants, AgreeWithBanks) {
  Rng rng(3);
  for (std::size_t k : {3u, 5u}) {
    const auto w = random_tensor({2, k, k}, rng);
    for (BankMode mode : {BankMode::kRotate8, BankMode::kFlipLeftRight, BankMode::kFlipUpDown}) {
      const auto naive = oracle::naive_variants(w, mode);
      const auto bank = build_orientation_bank(w, mode);
      ASSERT_EQ(naive.size(), bank.variants.size());
      for (std::size_t v = 0; v < naive.size(); ++v) {
        EXPECT_LE(testing::max_abs_diff(naive[v], bank.variants[v]), 1e-12);
      }
    }
  }
}

TEST(RelativeError, Definition) {
  EXPECT_EQ(oracle::relative_error(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(oracle::relative_error(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(oracle::relative_error(0.0, 1e-9), 1e-9 / 1e-8);
}

TEST(FiniteDifference, SumOfSquares) {
  const oracle::ScalarFn f = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
  };
  const std::vector<double> theta{1.0, 2.0};
  const auto g = oracle::finite_difference(f, theta);
  EXPECT_NEAR(g[0], 2.0, 1e-6);
  EXPECT_NEAR(g[1], 4.0, 1e-6);
  const std::vector<std::size_t> coords{1};
  const auto one = oracle::finite_difference(f, theta, 1e-3, coords);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_NEAR(one[0], 4.0, 1e-6);
}

TEST(FiniteDifference, ConstantFunction) {
  const oracle::ScalarFn f = [](std::span<const double>) { return 3.0; };
  const std::vector<double> theta{0.5, -1.0, 2.0};
  for (double g : oracle::finite_difference(f, theta)) EXPECT_EQ(g, 0.0);
}

TEST(Gradcheck, EveryKindPasses) {
  const auto results = oracle::run_gradcheck("all", 1);
  EXPECT_EQ(results.size() >= oracle::gradcheck_kinds().size(), true);
  for (const auto& r : results) {
    EXPECT_TRUE(r.passed) << r.layer << " err " << r.max_relative_error;
    EXPECT_GE(r.coordinates, 100u) << r.layer;
    EXPECT_LE(r.max_relative_error, oracle::kGradcheckTolerance) << r.layer;
  }
}

TEST(Gradcheck, DeterministicPerSeed) {
  const auto a = oracle::run_gradcheck("rpc", 5);
  const auto b = oracle::run_gradcheck("rpc", 5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].max_relative_error, b[i].max_relative_error);
    EXPECT_EQ(a[i].coordinates, b[i].coordinates);
  }
}

TEST(Gradcheck, UnknownKindListsValidOnes) {
  try {
    oracle::run_gradcheck("softmaxx", 1);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("frpc"), std::string::npos);
  }
}

NetworkSpec one_layer_dropout(std::size_t d, double keep) {
  NetworkSpec spec{{3}, {LayerSpec::fc(d), LayerSpec::dropout(keep), LayerSpec::fc(2)}};
  return spec;
}

TEST(MaskEnumeration, SingleUnitByHand) {
  const auto net = init_weights<double>(one_layer_dropout(1, 0.5), 4, InitOptions{0.5, 0.2, 0.25});
  Rng rng(4);
  const auto x = random_tensor({2, 3}, rng);
  const std::vector<int> labels{0, 1};
  const auto r = oracle::enumerate_mask_losses(net, x, labels);
  EXPECT_EQ(r.masks, 2u);

  const auto p = net.parameters();
  const auto h = fc_forward(x, *p[0], *p[1]);
  const double on = softmax_cross_entropy(fc_forward(h, *p[2], *p[3]), labels).loss;
  const double off =
      softmax_cross_entropy(fc_forward(Tensor<double>(h.shape()), *p[2], *p[3]), labels).loss;
  EXPECT_NEAR(r.dropout, (on + off) / 2.0, 1e-14);
  EXPECT_NEAR(r.sdropout, (on + off) / 2.0, 1e-14);
}

TEST(MaskEnumeration, Guards) {
  Rng rng(5);
  const auto x = random_tensor({1, 3}, rng);
  const std::vector<int> labels{0};
  const auto big = init_weights<double>(one_layer_dropout(13, 0.5), 5);
  EXPECT_THROW(oracle::enumerate_mask_losses(big, x, labels), InputError);
  const auto skewed = init_weights<double>(one_layer_dropout(4, 0.7), 5);
  EXPECT_THROW(oracle::enumerate_mask_losses(skewed, x, labels), ConfigError);
}

}  // namespace
}  // namespace spinconv
