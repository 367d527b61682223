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

// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include "semiweak/semiweak.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>

namespace sw = semiweak;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failed = 0;

void report(int id, const char* name, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("[%s] %2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
  std::fflush(stdout);
  if (!o.pass) ++g_failed;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

Outcome decoder_exactness() {
  std::mt19937_64 rng(1);
  long mismatches = 0, total = 0;
  for (int k = 1; k <= 4; ++k) {
    for (int n = 1; n <= 6; ++n) {
      for (int t = 0; t < 10000; ++t) {
        const sw::ExpectedCounts lam(sw::testing::random_lambdas(rng, k));
        mismatches += sw::greedy_decode(lam, n).counts != sw::brute_force_decode(lam, n).counts;
        ++total;
      }
    }
  }
  return {mismatches == 0, fmt("%.0f mismatches over %.0f decodes", mismatches, total)};
}

Outcome assignment_exactness() {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> pick_n(1, 8), pick_k(1, 4);
  long violations = 0;
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const int n = pick_n(rng), k = pick_k(rng);
    const sw::ProbMatrix probs = sw::testing::random_probs(rng, n, k);
    const sw::CountVector counts = sw::testing::random_counts(rng, k, n);
    const auto fast = sw::assign_labels(probs, counts);
    const auto slow = sw::brute_force_assign(probs, counts);
    const double gap = std::abs(fast.objective - slow.objective);
    worst = std::max(worst, gap);
    violations += gap > 1e-9 || sw::CountVector::histogram(fast.labels, k) != counts;
  }
  return {violations == 0, fmt("%.0f violations over 10000 instances, max objective gap %.2e", violations, worst)};
}

Outcome gradient_fidelity() {
  std::vector<std::pair<std::string, sw::LossConfig>> configs{
      {"poisson", {sw::RegKind::kPoisson, true, true, 0.01}},
      {"kl", {sw::RegKind::kKl, true, true, 0.01}},
      {"l1_distance", {sw::RegKind::kL1Distance, true, true, 0.01}},
      {"cls", {sw::RegKind::kPoisson, false, true, 0.0}},
      {"l1", {sw::RegKind::kPoisson, false, false, 1.0}}};
  std::mt19937_64 rng(3);
  const std::vector<int> hidden{6};
  long failures = 0;
  double worst = 0.0;
  for (const auto& [name, cfg] : configs) {
    for (int m = 0; m < 100; ++m) {
      const auto params = sw::init_params(8, hidden, 3, sw::RngSeed{static_cast<std::uint64_t>(1000 + m)});
      const sw::Bag bag = sw::testing::random_bag(rng, 4, 8, 3);
      const double err = sw::testing::model_gradient_error(params, bag, cfg);
      worst = std::max(worst, err);
      failures += !(err <= 1e-4);
    }
  }
  return {failures == 0, fmt("%.0f failures over 500 models, worst relative error %.2e", failures, worst)};
}

Outcome generator_statistics() {
  auto stats = [](int bag_size, double lambda) {
    sw::DatasetConfig cfg;
    cfg.bag_size = bag_size;
    cfg.lambda = lambda;
    cfg.seed = sw::RngSeed{4};
    sw::Rng rng = sw::make_stream(cfg.seed, sw::StreamPurpose::kBagLabels);
    std::vector<sw::Bag> bags(10000);
    for (auto& b : bags) {
      b.label = sw::sample_bag_label(cfg, rng);
      b.features.resize(bag_size, 1);
    }
    return sw::compute_stats(bags);
  };
  const auto p2 = stats(8, 1.2), p4 = stats(32, 3.2);
  const bool pass = std::abs(p2.avg_sparsity - 0.5002) <= 0.05 && std::abs(p2.avg_count - 1.63) <= 0.15 &&
                    std::abs(p4.avg_sparsity - 0.0872) <= 0.05;
  return {pass, fmt("p2 sparsity %.2f%% avg count %.3f; p4 sparsity %.2f%%", 100 * p2.avg_sparsity, p2.avg_count,
                    100 * p4.avg_sparsity)};
}

sw::Scenario dense_scenario(const std::string& id) {
  sw::Scenario s;
  s.id = id;
  s.dataset.num_classes = 10;
  s.dataset.bag_size = 8;
  s.dataset.lambda = 1.2;
  s.dataset.n_train_bags = 4000;
  s.dataset.n_test_bags = 500;
  s.dataset.cluster_separation = 6.0;
  return s;
}

sw::Scenario sparse_scenario(const std::string& id) {
  sw::Scenario s = dense_scenario(id);
  s.dataset.bag_size = 16;
  s.dataset.lambda = 8.0;
  s.dataset.cluster_separation = 4.0;
  return s;
}

double inst_points(const sw::ScenarioResult& r) { return 100.0 * r.instance_precision.mean; }

std::vector<sw::ScenarioResult> run(std::vector<sw::Scenario> scenarios, int n_seeds) {
  return sw::run_scenarios(scenarios, n_seeds, sw::RngSeed{1}, jobs());
}

}  // namespace

int main() {
  std::printf("running acceptance criteria on %d worker(s)\n", jobs());
  report(1, "decoder exactness", decoder_exactness);
  report(2, "assignment exactness", assignment_exactness);
  report(3, "gradient fidelity", gradient_fidelity);
  report(4, "generator statistics", generator_statistics);

  // Criteria 5-6 and 7-8 share their training runs; the first of each pair
  // carries the runtime.
  std::vector<sw::ScenarioResult> dense;
  report(5, "semi-weak beats weak", [&]() -> Outcome {
    sw::Scenario base = dense_scenario("full"), noreg = dense_scenario("noreg"), kl = dense_scenario("kl");
    noreg.train.loss.use_reg = false;
    kl.train.loss.reg_kind = sw::RegKind::kKl;
    dense = run({base, noreg, kl}, 5);
    if (dense.empty() || dense[0].n_failed || dense[1].n_failed) return {false, "scenario did not run"};
    const double full = inst_points(dense[0]), weak = inst_points(dense[1]);
    return {full - weak >= 3.0, fmt("full %.2f vs no-reg %.2f (gap %.2f pts, need >= 3)", full, weak, full - weak)};
  });
  report(6, "poisson vs kl on poisson bags", [&]() -> Outcome {
    if (dense.empty() || dense[0].n_failed || dense[2].n_failed) return {false, "scenario did not run"};
    const double poisson = inst_points(dense[0]), kl = inst_points(dense[2]);
    return {poisson >= kl - 0.5 && poisson > kl, fmt("poisson %.2f vs kl %.2f", poisson, kl)};
  });

  std::vector<sw::ScenarioResult> sparse;
  report(7, "decoder ablation", [&]() -> Outcome {
    sw::Scenario decoder = sparse_scenario("decoder"), argmax = sparse_scenario("argmax");
    sw::Scenario beta0 = sparse_scenario("beta_0"), beta01 = sparse_scenario("beta_0.1");
    argmax.pipeline.decoder = false;
    beta0.train.loss.beta = 0.0;
    beta01.train.loss.beta = 0.1;
    sparse = run({decoder, argmax, beta0, beta01}, 5);
    if (sparse.empty() || sparse[0].n_failed || sparse[1].n_failed) return {false, "scenario did not run"};
    const double on = inst_points(sparse[0]), off = inst_points(sparse[1]);
    return {on - off >= 0.5, fmt("decoder %.2f vs argmax %.2f (gain %.2f pts, need >= 0.5)", on, off, on - off)};
  });
  report(8, "regularizer non-degradation", [&]() -> Outcome {
    if (sparse.empty() || sparse[2].n_failed || sparse[3].n_failed) return {false, "scenario did not run"};
    const double b0 = inst_points(sparse[2]), b01 = inst_points(sparse[3]);
    return {b01 >= b0 - 0.3, fmt("beta=0.1 %.2f vs beta=0 %.2f", b01, b0)};
  });

  report(9, "chance level without signal", []() -> Outcome {
    sw::Scenario s = dense_scenario("sep0");
    s.dataset.cluster_separation = 0.0;
    const auto r = run({s}, 3).front();
    if (r.n_failed) return {false, "scenario did not run"};
    const double got = inst_points(r);
    return {std::abs(got - 10.0) <= 3.0, fmt("instance precision %.2f, chance 10.00", got)};
  });

  report(10, "bench determinism", []() -> Outcome {
    const auto cfg = sw::load_run_config(std::string(SEMIWEAK_CONFIG_DIR) + "/paper_grid.toml");
    const std::string a = sw::results_to_json(sw::run_scenarios(cfg.scenarios, cfg.n_seeds, cfg.bench_seed, jobs())).dump(2);
    const std::string b = sw::results_to_json(sw::run_scenarios(cfg.scenarios, cfg.n_seeds, cfg.bench_seed, jobs())).dump(2);
    return {a == b, fmt("%.0f scenarios, results JSON %.0f bytes, identical=%.0f", cfg.scenarios.size(), a.size(), a == b)};
  });

  std::printf("%d criteria failed\n", g_failed);
  return g_failed == 0 ? 0 : 1;
}
