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

// Expected counts -> exact counts.
//
// Finds the count vector t on the integer simplex {t >= 0, sum t = N_B} that
// maximizes sum_k log Poisson(t_k; lambda_k). The objective is separable and
// each term has strictly decreasing marginal gains
//   log pmf(t+1) - log pmf(t) = log lambda - log(t+1),
// so repeatedly taking the best increment from a max-heap is exact and runs
// in O(N_B log K).

#pragma once

#include "semiweak/core.hpp"
#include "semiweak/losses.hpp"

#include <cmath>
#include <queue>
#include <vector>

namespace semiweak {

struct DecodeResult {
  CountVector counts;
  double log_posterior = 0.0;
  int iterations = 0;
};

enum class GainRule {
  kLogPmf,      // marginal gain of the log-likelihood objective
  kPmfLiteral,  // raw pmf(t+1) - pmf(t), kept for fidelity experiments
};

inline double poisson_log_pmf(int t, double lambda) {
  const double lam = std::max(lambda, kLambdaFloor);
  return t * std::log(lam) - lam - std::lgamma(t + 1.0);
}

inline double poisson_log_posterior(std::span<const int> counts, const ExpectedCounts& lambda_hat) {
  double total = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) total += poisson_log_pmf(counts[k], lambda_hat[k]);
  return total;
}

namespace detail {

struct HeapEntry {
  double gain;
  int cls;
};

// Max-heap on gain, lowest class index first among equal gains.
struct HeapOrder {
  bool operator()(const HeapEntry& a, const HeapEntry& b) const {
    if (a.gain != b.gain) return a.gain < b.gain;
    return a.cls > b.cls;
  }
};

inline double increment_gain(GainRule rule, int t, double lambda) {
  const double lam = std::max(lambda, kLambdaFloor);
  if (rule == GainRule::kLogPmf) return std::log(lam) - std::log(t + 1.0);
  return std::exp(poisson_log_pmf(t + 1, lam)) - std::exp(poisson_log_pmf(t, lam));
}

}  // namespace detail

inline DecodeResult greedy_decode(const ExpectedCounts& lambda_hat, int bag_size,
                                  GainRule rule = GainRule::kLogPmf) {
  if (bag_size <= 0) throw ValidationError("greedy_decode: bag size must be positive");
  const int k_classes = lambda_hat.num_classes();
  if (k_classes < 1) throw ValidationError("greedy_decode: empty lambda vector");

  std::vector<int> counts(static_cast<std::size_t>(k_classes), 0);
  std::vector<detail::HeapEntry> storage;
  storage.reserve(static_cast<std::size_t>(k_classes));
  for (int k = 0; k < k_classes; ++k) {
    storage.push_back({detail::increment_gain(rule, 0, lambda_hat[k]), k});
  }
  std::priority_queue<detail::HeapEntry, std::vector<detail::HeapEntry>, detail::HeapOrder> heap(
      detail::HeapOrder{}, std::move(storage));

  for (int step = 0; step < bag_size; ++step) {
    const detail::HeapEntry top = heap.top();
    heap.pop();
    const int t = ++counts[top.cls];
    heap.push({detail::increment_gain(rule, t, lambda_hat[top.cls]), top.cls});
  }

  DecodeResult result;
  result.log_posterior = poisson_log_posterior(counts, lambda_hat);
  result.counts = CountVector(std::move(counts), bag_size);
  result.iterations = bag_size;
  return result;
}

// Number of compositions of n into k non-negative parts, C(n+k-1, k-1).
inline double composition_count(int n, int k) {
  return std::round(std::exp(std::lgamma(n + k) - std::lgamma(k) - std::lgamma(n + 1.0)));
}

inline constexpr double kBruteForceDecodeLimit = 1e6;

// Exhaustive maximization over the simplex. Among exactly tied optima the
// vector that puts more mass on lower class indices wins, mirroring the
// greedy decoder's tie rule.
inline DecodeResult brute_force_decode(const ExpectedCounts& lambda_hat, int bag_size) {
  const int k_classes = lambda_hat.num_classes();
  if (k_classes < 1) throw ValidationError("brute_force_decode: empty lambda vector");
  if (bag_size < 0) throw ValidationError("brute_force_decode: negative bag size");
  if (composition_count(bag_size, k_classes) > kBruteForceDecodeLimit) {
    throw ValidationError("brute_force_decode: search space exceeds 1e6 compositions");
  }

  std::vector<double> log_lambda(static_cast<std::size_t>(k_classes));
  std::vector<int> current(static_cast<std::size_t>(k_classes), 0);
  std::vector<int> best;
  double best_score = -std::numeric_limits<double>::infinity();
  long long visited = 0;

  // Visits compositions in lexicographically decreasing order, so the first
  // maximizer found is kept on ties.
  auto recurse = [&](auto&& self, int k, int remaining) -> void {
    if (k == k_classes - 1) {
      current[k] = remaining;
      ++visited;
      const double score = poisson_log_posterior(current, lambda_hat);
      if (best.empty() || score > best_score) {
        best_score = score;
        best = current;
      }
      return;
    }
    for (int t = remaining; t >= 0; --t) {
      current[k] = t;
      self(self, k + 1, remaining - t);
    }
  };
  recurse(recurse, 0, bag_size);

  DecodeResult result;
  result.counts = CountVector(std::move(best), bag_size);
  result.log_posterior = best_score;
  result.iterations = static_cast<int>(visited);
  return result;
}

}  // namespace semiweak
