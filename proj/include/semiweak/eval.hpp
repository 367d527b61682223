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

// Benchmark harness: generate -> train -> decode -> score, repeated over
// seeds and aggregated per scenario.

#pragma once

#include "semiweak/datagen.hpp"
#include "semiweak/train.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace semiweak {

struct Scenario {
  std::string id;
  DatasetConfig dataset;
  TrainConfig train;
  PipelineFlags pipeline;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::optional<Metrics> metrics;
  DatasetStats dataset_stats;
  int best_epoch = -1;
  std::string error;  // empty on success
};

struct MetricAggregate {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single seed
};

struct ScenarioResult {
  std::string scenario_id;
  Scenario scenario;
  std::vector<std::uint64_t> seeds;
  std::vector<SeedOutcome> per_seed;
  MetricAggregate bag_precision;
  MetricAggregate instance_precision;
  MetricAggregate bag_precision_micro;
  MetricAggregate instance_precision_micro;
  int n_failed = 0;

  bool failed() const { return n_failed == static_cast<int>(per_seed.size()); }
};

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Each index writes its
// own slot, so results do not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline MetricAggregate aggregate(const std::vector<double>& values) {
  MetricAggregate a;
  if (values.empty()) return a;
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return a;
}

// One seed of a scenario. The test split doubles as the validation set for
// best-epoch selection.
inline SeedOutcome run_seed(const Scenario& scenario, std::uint64_t seed) {
  SeedOutcome out;
  out.seed = seed;
  try {
    DatasetConfig dcfg = scenario.dataset;
    dcfg.seed = RngSeed{seed};
    TrainConfig tcfg = scenario.train;
    tcfg.seed = RngSeed{seed};
    tcfg.pipeline = scenario.pipeline;
    const GeneratedDataset data = generate_dataset(dcfg);
    out.dataset_stats = data.stats;
    const TrainResult trained = train(data.train, &data.test, tcfg);
    out.best_epoch = trained.best_epoch;
    out.metrics = evaluate_model(trained.params, data.test, scenario.pipeline);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

inline std::vector<std::uint64_t> scenario_seeds(RngSeed master, int n_seeds) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n_seeds; ++i) seeds.push_back(master.value + static_cast<std::uint64_t>(i));
  return seeds;
}

inline void finalize(ScenarioResult& r) {
  std::vector<double> bag, inst, bag_micro, inst_micro;
  r.n_failed = 0;
  for (const SeedOutcome& s : r.per_seed) {
    if (!s.metrics) {
      ++r.n_failed;
      continue;
    }
    bag.push_back(s.metrics->bag_precision_macro);
    inst.push_back(s.metrics->instance_precision_macro);
    bag_micro.push_back(s.metrics->bag_precision_micro);
    inst_micro.push_back(s.metrics->instance_precision_micro);
  }
  r.bag_precision = aggregate(bag);
  r.instance_precision = aggregate(inst);
  r.bag_precision_micro = aggregate(bag_micro);
  r.instance_precision_micro = aggregate(inst_micro);
}

// Every (scenario, seed) pair is an independent job.
inline std::vector<ScenarioResult> run_scenarios(const std::vector<Scenario>& scenarios, int n_seeds,
                                                 RngSeed master, int jobs = 1) {
  if (n_seeds < 1) throw ValidationError("run_scenario: n_seeds must be >= 1");
  const auto seeds = scenario_seeds(master, n_seeds);
  std::vector<ScenarioResult> results(scenarios.size());
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    results[s].scenario_id = scenarios[s].id;
    results[s].scenario = scenarios[s];
    results[s].seeds = seeds;
    results[s].per_seed.resize(seeds.size());
  }
  const std::size_t per = seeds.size();
  parallel_for(scenarios.size() * per, jobs, [&](std::size_t job) {
    const std::size_t s = job / per, i = job % per;
    results[s].per_seed[i] = run_seed(scenarios[s], seeds[i]);
  });
  for (auto& r : results) finalize(r);
  return results;
}

inline ScenarioResult run_scenario(const Scenario& scenario, int n_seeds, RngSeed master, int jobs = 1) {
  return run_scenarios({scenario}, n_seeds, master, jobs).front();
}

}  // namespace semiweak
