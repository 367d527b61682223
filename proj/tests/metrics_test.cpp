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

#include "semiweak/eval.hpp"
#include "semiweak/metrics.hpp"
#include "semiweak/pipeline.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

namespace semiweak {
namespace {

std::vector<ClassId> ids(std::vector<int> v) { return to_class_ids(v); }

TEST(InstancePrecision, HandCountedConfusion) {
  const auto pred = ids({0, 0, 1}), truth = ids({0, 1, 1});
  const PrecisionSummary s = instance_precision(pred, truth, 2);
  EXPECT_DOUBLE_EQ(s.per_class[0], 0.5);
  EXPECT_DOUBLE_EQ(s.per_class[1], 1.0);
  EXPECT_DOUBLE_EQ(s.macro, 0.75);
  EXPECT_DOUBLE_EQ(s.micro, 2.0 / 3.0);
}

TEST(InstancePrecision, AllCorrect) {
  const auto v = ids({0, 1, 2, 2});
  EXPECT_DOUBLE_EQ(instance_precision(v, v, 3).macro, 1.0);
}

TEST(InstancePrecision, ZeroDenominatorPolicy) {
  // Class 2 is never predicted nor true: counts as 1. Class 1 is true but
  // never predicted: excluded from the mean.
  const auto pred = ids({0, 0}), truth = ids({0, 1});
  const PrecisionSummary s = instance_precision(pred, truth, 3);
  EXPECT_DOUBLE_EQ(s.per_class[2], 1.0);
  EXPECT_TRUE(std::isnan(s.per_class[1]));
  EXPECT_DOUBLE_EQ(s.macro, (0.5 + 1.0) / 2.0);
}

TEST(InstancePrecision, ChanceLevelOnRandomPredictions) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pick(0, 9);
  std::vector<ClassId> pred, truth;
  for (int i = 0; i < 100000; ++i) {
    pred.emplace_back(pick(rng));
    truth.emplace_back(i % 10);
  }
  EXPECT_NEAR(instance_precision(pred, truth, 10).macro, 0.1, 0.01);
}

TEST(BagPrecision, Examples) {
  std::vector<std::vector<ClassId>> pred{ids({0, 0, 1, 2})};
  std::vector<CountVector> truth{CountVector({2, 1, 1, 0})};
  EXPECT_DOUBLE_EQ(bag_precision(pred, truth, 4).macro, 1.0);
}

TEST(BagPrecision, AllPresentAgainstHalfSparseTruth) {
  std::vector<std::vector<ClassId>> pred;
  std::vector<CountVector> truth;
  for (int b = 0; b < 100; ++b) {
    pred.push_back(ids({0, 1, 2, 3}));
    truth.push_back(b % 2 ? CountVector({2, 2, 0, 0}) : CountVector({0, 0, 2, 2}));
  }
  const PrecisionSummary s = bag_precision(pred, truth, 4);
  for (double p : s.per_class) EXPECT_DOUBLE_EQ(p, 0.5);
}

TEST(Metrics, PermutationInvariantOverBags) {
  std::mt19937_64 rng(2);
  std::vector<Bag> bags;
  std::vector<std::vector<ClassId>> pred;
  std::uniform_int_distribution<int> pick(0, 3);
  for (int b = 0; b < 30; ++b) {
    Bag bag = testing::random_bag(rng, 5, 2, 4);
    std::vector<ClassId> truth;
    for (int k = 0; k < 4; ++k) truth.insert(truth.end(), bag.label[k], ClassId(k));
    bag.true_instance_labels = truth;
    std::vector<ClassId> p;
    for (int j = 0; j < 5; ++j) p.emplace_back(pick(rng));
    bags.push_back(bag);
    pred.push_back(p);
  }
  const Metrics a = evaluate_predictions(pred, bags, 4);
  std::vector<std::size_t> perm(bags.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Bag> bags2;
  std::vector<std::vector<ClassId>> pred2;
  for (std::size_t i : perm) bags2.push_back(bags[i]), pred2.push_back(pred[i]);
  const Metrics b = evaluate_predictions(pred2, bags2, 4);
  EXPECT_NEAR(a.instance_precision_macro, b.instance_precision_macro, 1e-15);
  EXPECT_NEAR(a.bag_precision_macro, b.bag_precision_macro, 1e-15);
}

TEST(Pipeline, DecodedHistogramsLieOnSimplex) {
  std::mt19937_64 rng(3);
  const ModelParams p = init_params(4, std::vector<int>{6}, 5, RngSeed{3});
  for (int t = 0; t < 50; ++t) {
    const Bag bag = testing::random_bag(rng, 7, 4, 5);
    const ForwardOutput out = forward(p, bag);
    const auto labels = predict_bag_labels(out, PipelineFlags{});
    EXPECT_EQ(CountVector::histogram(labels, 5), greedy_decode(out.expected, 7).counts);
  }
}

TEST(Pipeline, ShapeMismatchOnEvaluate) {
  const ModelParams p = init_params(4, std::vector<int>{6}, 5, RngSeed{3});
  BagDataset d;
  d.num_classes = 5;
  d.feature_dim = 3;
  EXPECT_THROW(evaluate_model(p, d, PipelineFlags{}), ShapeError);
}

TEST(Aggregate, SampleStd) {
  const MetricAggregate a = aggregate({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(a.mean, 2.0);
  EXPECT_DOUBLE_EQ(a.std, 1.0);
  EXPECT_DOUBLE_EQ(aggregate({4.0}).std, 0.0);
}

Scenario small_scenario() {
  Scenario s;
  s.id = "small";
  s.dataset.n_train_bags = 60;
  s.dataset.n_test_bags = 20;
  s.dataset.num_classes = 4;
  s.dataset.feature_dim = 4;
  s.train.epochs = 3;
  s.train.hidden_layers = {8};
  return s;
}

TEST(RunScenario, SeedsAndAggregates) {
  const ScenarioResult r = run_scenario(small_scenario(), 3, RngSeed{10});
  EXPECT_EQ(r.seeds, (std::vector<std::uint64_t>{10, 11, 12}));
  EXPECT_EQ(r.n_failed, 0);
  std::vector<double> inst;
  for (const auto& s : r.per_seed) inst.push_back(s.metrics->instance_precision_macro);
  EXPECT_DOUBLE_EQ(r.instance_precision.mean, aggregate(inst).mean);
}

TEST(RunScenario, ThreadCountDoesNotChangeResults) {
  std::vector<Scenario> scenarios{small_scenario(), small_scenario()};
  scenarios[1].id = "other";
  scenarios[1].pipeline.decoder = false;
  const auto serial = run_scenarios(scenarios, 2, RngSeed{1}, 1);
  const auto parallel = run_scenarios(scenarios, 2, RngSeed{1}, 4);
  for (std::size_t s = 0; s < serial.size(); ++s) {
    for (std::size_t i = 0; i < serial[s].per_seed.size(); ++i) {
      EXPECT_EQ(serial[s].per_seed[i].metrics->instance_precision_macro,
                parallel[s].per_seed[i].metrics->instance_precision_macro);
    }
  }
}

TEST(RunScenario, FailuresAreRecordedPerSeed) {
  Scenario s = small_scenario();
  s.dataset.pool_per_class = 1;
  s.dataset.reuse_cap = 1;
  const ScenarioResult r = run_scenario(s, 2, RngSeed{1});
  EXPECT_TRUE(r.failed());
  EXPECT_EQ(r.n_failed, 2);
  EXPECT_FALSE(r.per_seed[0].error.empty());
}

}  // namespace
}  // namespace semiweak
