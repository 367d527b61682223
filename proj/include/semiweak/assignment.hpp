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

// Exact counts + instance probabilities -> instance labels.
//
// Each class k is expanded into counts[k] identical slots, turning the
// count-constrained labelling into a square N_B x N_B assignment with cost
// -log p. The solver is the shortest augmenting path variant of the
// Hungarian method with row/column potentials, O(N_B^3).

#pragma once

#include "semiweak/core.hpp"
#include "semiweak/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace semiweak {

struct InstanceLabeling {
  std::vector<ClassId> labels;
  double objective = 0.0;  // sum_j log p_j(label_j), probabilities floored at 1e-12
};

inline double log_prob_floor(double p) { return std::log(std::max(p, kLambdaFloor)); }

inline double labeling_objective(const ProbMatrix& probs, std::span<const ClassId> labels) {
  double total = 0.0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    total += log_prob_floor(probs(static_cast<int>(j), static_cast<int>(labels[j].value)));
  }
  return total;
}

// Minimum-cost perfect matching of a square cost matrix. Returns the column
// matched to each row.
inline std::vector<int> solve_square_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based with a virtual column 0 holding the row being inserted.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> row_of_col(n + 1, 0), way(n + 1, 0);
  std::vector<double> min_slack(n + 1);
  std::vector<char> used(n + 1);

  for (int row = 1; row <= n; ++row) {
    row_of_col[0] = row;
    int col0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const int i0 = row_of_col[col0];
      double delta = kInf;
      int col1 = 0;
      for (int col = 1; col <= n; ++col) {
        if (used[col]) continue;
        const double slack = cost(i0 - 1, col - 1) - u[i0] - v[col];
        if (slack < min_slack[col]) {
          min_slack[col] = slack;
          way[col] = col0;
        }
        if (min_slack[col] < delta) {
          delta = min_slack[col];
          col1 = col;
        }
      }
      for (int col = 0; col <= n; ++col) {
        if (used[col]) {
          u[row_of_col[col]] += delta;
          v[col] -= delta;
        } else {
          min_slack[col] -= delta;
        }
      }
      col0 = col1;
    } while (row_of_col[col0] != 0);
    do {
      const int col1 = way[col0];
      row_of_col[col0] = row_of_col[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  std::vector<int> col_of_row(static_cast<std::size_t>(n), -1);
  for (int col = 1; col <= n; ++col) col_of_row[row_of_col[col] - 1] = col - 1;
  return col_of_row;
}

namespace detail {

inline void check_assignment_inputs(const ProbMatrix& probs, const CountVector& counts) {
  if (probs.cols() != counts.num_classes()) {
    throw ShapeError("assignment: probability matrix has K=" + std::to_string(probs.cols()) +
                     ", counts have K=" + std::to_string(counts.num_classes()));
  }
  if (probs.rows() != counts.bag_size()) {
    throw ShapeError("assignment: count/row mismatch, counts sum to " +
                     std::to_string(counts.bag_size()) + " for " + std::to_string(probs.rows()) +
                     " instances");
  }
}

}  // namespace detail

inline InstanceLabeling assign_labels(const ProbMatrix& probs, const CountVector& counts) {
  detail::check_assignment_inputs(probs, counts);
  const int n = probs.rows();

  std::vector<int> slot_class;
  slot_class.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < counts.num_classes(); ++k) slot_class.insert(slot_class.end(), counts[k], k);

  Eigen::MatrixXd cost(n, n);
  for (int j = 0; j < n; ++j) {
    for (int s = 0; s < n; ++s) cost(j, s) = -log_prob_floor(probs(j, slot_class[s]));
  }

  const std::vector<int> slot_of_row = solve_square_assignment(cost);
  InstanceLabeling out;
  out.labels.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    out.labels.emplace_back(static_cast<std::uint32_t>(slot_class[slot_of_row[j]]));
  }
  out.objective = labeling_objective(probs, out.labels);
  return out;
}

inline constexpr int kBruteForceAssignMaxBag = 8;

// Enumerates every label sequence with the requested histogram; the
// lexicographically smallest maximizer wins ties.
inline InstanceLabeling brute_force_assign(const ProbMatrix& probs, const CountVector& counts) {
  detail::check_assignment_inputs(probs, counts);
  if (probs.rows() > kBruteForceAssignMaxBag) {
    throw ValidationError("brute_force_assign: bag size exceeds 8");
  }
  std::vector<int> seq;
  for (int k = 0; k < counts.num_classes(); ++k) seq.insert(seq.end(), counts[k], k);

  std::vector<int> best = seq;
  double best_score = -std::numeric_limits<double>::infinity();
  do {
    double score = 0.0;
    for (std::size_t j = 0; j < seq.size(); ++j) {
      score += log_prob_floor(probs(static_cast<int>(j), seq[j]));
    }
    if (score > best_score) {
      best_score = score;
      best = seq;
    }
  } while (std::next_permutation(seq.begin(), seq.end()));

  InstanceLabeling out;
  for (int k : best) out.labels.emplace_back(static_cast<std::uint32_t>(k));
  out.objective = labeling_objective(probs, out.labels);
  return out;
}

// Row-wise argmax ignoring any count constraint; lowest index on ties.
inline std::vector<ClassId> greedy_argmax_labels(const ProbMatrix& probs) {
  std::vector<ClassId> labels;
  labels.reserve(static_cast<std::size_t>(probs.rows()));
  for (int j = 0; j < probs.rows(); ++j) {
    int best = 0;
    for (int k = 1; k < probs.cols(); ++k) {
      if (probs(j, k) > probs(j, best)) best = k;
    }
    labels.emplace_back(static_cast<std::uint32_t>(best));
  }
  return labels;
}

}  // namespace semiweak
