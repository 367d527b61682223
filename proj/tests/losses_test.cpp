// Copyright 2026 The semiweak Authors. All Rights Reserved.
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

#include "semiweak/losses.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace semiweak {
namespace {

using testing::numeric_gradient;
using testing::relative_error;

TEST(PoissonLoss, Examples) {
  EXPECT_DOUBLE_EQ(poisson_loss(CountVector({1}), ExpectedCounts({1.0})), 1.0);
  EXPECT_DOUBLE_EQ(poisson_loss(CountVector({0}), ExpectedCounts({2.0})), 2.0);
  // Independent scalar evaluation: (2 - 2 log 2) + (1 - 1 log 1).
  const double want = (2.0 - 2.0 * std::log(2.0)) + 1.0;
  EXPECT_NEAR(poisson_loss(CountVector({2, 1}), ExpectedCounts({2.0, 1.0})), want, 1e-12);
  EXPECT_NEAR(want, 1.6137, 1e-4);
}

TEST(PoissonGrad, ZeroAtTargetAndAsymmetricAround) {
  EXPECT_DOUBLE_EQ(poisson_grad(CountVector({2}), ExpectedCounts({2.0}))[0], 0.0);
  EXPECT_DOUBLE_EQ(poisson_grad(CountVector({2}), ExpectedCounts({1.0}))[0], -1.0);
  EXPECT_DOUBLE_EQ(poisson_grad(CountVector({2}), ExpectedCounts({3.0}))[0], 1.0 / 3.0);
}

TEST(PoissonLoss, ZeroLambdaIsClamped) {
  EXPECT_TRUE(std::isfinite(poisson_loss(CountVector({3}), ExpectedCounts({0.0}))));
  EXPECT_TRUE(std::isfinite(poisson_grad(CountVector({3}), ExpectedCounts({0.0}))[0]));
}

TEST(KlProportionLoss, Examples) {
  const std::vector<double> half{0.5, 0.5};
  EXPECT_NEAR(kl_proportion_loss(CountVector({2, 2}), half), 0.0, 1e-15);
  EXPECT_NEAR(kl_proportion_loss(CountVector({4, 0}), half), std::log(2.0), 1e-12);
  const std::vector<double> skew{0.75, 0.25};
  EXPECT_NEAR(kl_proportion_loss(CountVector({3, 1}), skew), 0.0, 1e-15);
}

TEST(KlProportionLoss, RejectsUnnormalized) {
  const std::vector<double> bad{0.5, 0.6};
  EXPECT_THROW(kl_proportion_loss(CountVector({1, 1}), bad), ValidationError);
  const std::vector<double> negative{1.5, -0.5};
  EXPECT_THROW(kl_proportion_loss(CountVector({1, 1}), negative), ValidationError);
}

TEST(KlProportionLoss, NonNegative) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const CountVector y = testing::random_counts(rng, 4, 6);
    auto p = testing::random_lambdas(rng, 4, 1.0);
    double s = 0.0;
    for (double v : p) s += v + 1e-3;
    for (double& v : p) v = (v + 1e-3) / s;
    EXPECT_GE(kl_proportion_loss(y, p), -1e-12);
  }
}

TEST(PresenceBce, Examples) {
  EXPECT_LE(presence_bce_loss(CountVector({2, 0}), PresenceVector({1 - 1e-7, 1e-7})), 1e-6);
  EXPECT_NEAR(presence_bce_loss(CountVector({2, 0}), PresenceVector({0.5, 0.5})), std::log(2.0), 1e-12);
  const double want = -(std::log(0.9) + std::log(0.8)) / 2.0;
  EXPECT_NEAR(presence_bce_loss(CountVector({1, 1}), PresenceVector({0.9, 0.8})), want, 1e-12);
  EXPECT_NEAR(want, 0.1643, 1e-4);
}

TEST(PresenceBce, FiniteAtExtremes) {
  EXPECT_TRUE(std::isfinite(presence_bce_loss(CountVector({1, 0}), PresenceVector({0.0, 1.0}))));
}

TEST(L1Regularizer, Examples) {
  EXPECT_DOUBLE_EQ(l1_sparsity(std::vector<double>{1, 0, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(l1_sparsity(std::vector<double>{0.25, 0.25, 0.25, 0.25}), 2.0);
  EXPECT_NEAR(l1_sparsity(std::vector<double>{0.5, 0.5, 0, 0}), 2.0 * std::sqrt(0.5), 1e-12);
  const ProbMatrix one_hot = ProbMatrix::from_rows({{1, 0, 0, 0}, {1, 0, 0, 0}});
  EXPECT_DOUBLE_EQ(l1_regularizer(one_hot), 1.0);
}

TEST(L1Regularizer, BoundedBySqrtK) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const ProbMatrix p = testing::random_probs(rng, 5, 6);
    const double v = l1_regularizer(p);
    EXPECT_GE(v, 1.0 - 1e-12);
    EXPECT_LE(v, std::sqrt(6.0) + 1e-12);
  }
}

TEST(CombinedLoss, UniformProbsBothBranches) {
  const CountVector y({2, 1, 1, 0});
  const ProbMatrix uniform(Eigen::MatrixXd::Constant(4, 4, 0.25));
  const PresenceVector presence({0.5, 0.5, 0.5, 0.5});
  const LossBreakdown poisson = combined_loss(y, uniform, presence, 0.0, RegKind::kPoisson);
  EXPECT_NEAR(poisson.reg, 4.0, 1e-12);
  const LossBreakdown l1 = combined_loss(y, uniform, presence, 0.0, RegKind::kL1Distance);
  EXPECT_NEAR(l1.reg, 2.0, 1e-12);
}

TEST(CombinedLoss, BetaZeroDropsRegularizer) {
  const CountVector y({2, 1, 1, 0});
  const ProbMatrix uniform(Eigen::MatrixXd::Constant(4, 4, 0.25));
  const PresenceVector presence({0.9, 0.6, 0.6, 0.1});
  const LossBreakdown b = combined_loss(y, uniform, presence, 0.0, RegKind::kPoisson);
  EXPECT_DOUBLE_EQ(b.total, b.reg + b.cls);
  const LossBreakdown b2 = combined_loss(y, uniform, presence, 0.5, RegKind::kPoisson);
  EXPECT_DOUBLE_EQ(b2.total, b2.reg + b2.cls + 0.5 * b2.l1);
}

TEST(CombinedLoss, KlZeroWhenMeansMatchProportions) {
  const CountVector y({2, 1, 1});
  const ProbMatrix probs = ProbMatrix::from_rows({{0.5, 0.25, 0.25}, {0.5, 0.25, 0.25}, {0.5, 0.25, 0.25},
                                                  {0.5, 0.25, 0.25}});
  const PresenceVector presence({0.5, 0.5, 0.5});
  EXPECT_NEAR(combined_loss(y, probs, presence, 0.0, RegKind::kKl).reg, 0.0, 1e-15);
}

TEST(CombinedLoss, RowCountMustMatchBag) {
  const ProbMatrix uniform(Eigen::MatrixXd::Constant(3, 2, 0.5));
  EXPECT_THROW(combined_loss(CountVector({2, 2}), uniform, PresenceVector({0.5, 0.5}), 0.0, RegKind::kPoisson),
               ShapeError);
}

TEST(RegKind, ParseRoundTrip) {
  for (RegKind k : {RegKind::kPoisson, RegKind::kKl, RegKind::kL1Distance}) {
    EXPECT_EQ(parse_reg_kind(to_string(k)), k);
  }
  EXPECT_EQ(parse_reg_kind("l1"), RegKind::kL1Distance);
  EXPECT_THROW(parse_reg_kind("huber"), ValidationError);
}

// Each loss against central differences over its own real-valued input.
class LossGradients : public ::testing::Test {
 protected:
  std::mt19937_64 rng{11};
  static constexpr int kDraws = 100;
  static constexpr double kTol = 1e-4;
};

TEST_F(LossGradients, Poisson) {
  for (int t = 0; t < kDraws; ++t) {
    const CountVector y = testing::random_counts(rng, 4, 8);
    const auto lam = testing::random_lambdas(rng, 4);
    auto f = [&](const std::vector<double>& x) { return poisson_loss(y, ExpectedCounts(x)); };
    auto shifted = lam;
    for (double& v : shifted) v += 0.1;
    EXPECT_LE(relative_error(poisson_grad(y, ExpectedCounts(shifted)), numeric_gradient(f, shifted)), kTol);
  }
}

TEST_F(LossGradients, KlOverProportions) {
  for (int t = 0; t < kDraws; ++t) {
    const CountVector y = testing::random_counts(rng, 4, 8);
    auto p = testing::random_lambdas(rng, 4, 1.0);
    for (double& v : p) v += 0.05;
    auto f = [&](const std::vector<double>& x) { return detail::kl_divergence(detail::count_proportions(y), x); };
    EXPECT_LE(relative_error(kl_proportion_grad(y, p), numeric_gradient(f, p)), kTol);
  }
}

TEST_F(LossGradients, PresenceBce) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int t = 0; t < kDraws; ++t) {
    const CountVector y = testing::random_counts(rng, 5, 4);
    std::vector<double> s(5);
    for (double& v : s) v = u(rng);
    auto f = [&](const std::vector<double>& x) { return presence_bce_loss(y, PresenceVector(x)); };
    EXPECT_LE(relative_error(presence_bce_grad(y, PresenceVector(s)), numeric_gradient(f, s)), kTol);
  }
}

TEST_F(LossGradients, L1Sparsity) {
  for (int t = 0; t < kDraws; ++t) {
    auto p = testing::random_lambdas(rng, 4, 1.0);
    for (double& v : p) v += 0.05;
    auto f = [](const std::vector<double>& x) { return l1_sparsity(x); };
    EXPECT_LE(relative_error(l1_sparsity_grad(p), numeric_gradient(f, p)), kTol);
  }
}

TEST_F(LossGradients, L1Distance) {
  for (int t = 0; t < kDraws; ++t) {
    const CountVector y = testing::random_counts(rng, 4, 8);
    auto lam = testing::random_lambdas(rng, 4);
    for (double& v : lam) {
      if (std::abs(v - std::round(v)) < 1e-3) v += 0.01;  // stay off the kinks
    }
    auto f = [&](const std::vector<double>& x) { return l1_distance_loss(y, ExpectedCounts(x)); };
    EXPECT_LE(relative_error(l1_distance_grad(y, ExpectedCounts(lam)), numeric_gradient(f, lam)), kTol);
  }
}

// loss_from_expected differentiates the whole bag loss with respect to the
// pooled counts; every term toggle is probed.
TEST_F(LossGradients, LossFromExpectedAllBranches) {
  std::vector<LossConfig> configs;
  for (RegKind kind : {RegKind::kPoisson, RegKind::kKl, RegKind::kL1Distance}) {
    configs.push_back({kind, true, true, 0.1});
  }
  configs.push_back({RegKind::kPoisson, false, true, 0.0});
  configs.push_back({RegKind::kPoisson, false, false, 1.0});
  for (const LossConfig& cfg : configs) {
    for (int t = 0; t < kDraws; ++t) {
      const CountVector y = testing::random_counts(rng, 3, 4);
      auto lam = testing::random_lambdas(rng, 3, 2.5);
      double total = 0.0;
      for (double& v : lam) total += (v += 0.1);
      for (double& v : lam) v *= 4.0 / total;  // pooled counts sum to the bag size
      for (double& v : lam) {
        if (std::abs(v - std::round(v)) < 1e-3) v += 0.01;
      }
      auto f = [&](const std::vector<double>& x) { return loss_from_expected(y, ExpectedCounts(x), cfg).breakdown.total; };
      const auto analytic = loss_from_expected(y, ExpectedCounts(lam), cfg).d_expected;
      EXPECT_LE(relative_error(analytic, numeric_gradient(f, lam)), kTol)
          << "reg_kind=" << to_string(cfg.reg_kind) << " use_reg=" << cfg.use_reg << " use_cls=" << cfg.use_cls;
    }
  }
}

TEST(LossFromExpected, MatchesCombinedLoss) {
  std::mt19937_64 rng(21);
  for (RegKind kind : {RegKind::kPoisson, RegKind::kKl, RegKind::kL1Distance}) {
    const ProbMatrix probs = testing::random_probs(rng, 5, 3);
    const CountVector y = testing::random_counts(rng, 3, 5);
    const ExpectedCounts lam = probs.column_sums();
    const LossBreakdown a = combined_loss(y, probs, presence_from_expected(lam), 0.2, kind);
    const LossBreakdown b = loss_from_expected(y, lam, {kind, true, true, 0.2}).breakdown;
    EXPECT_NEAR(a.total, b.total, 1e-12) << to_string(kind);
  }
}

}  // namespace
}  // namespace semiweak
