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

// Macro-averaged precision at bag level (presence) and instance level.
//
// Zero-denominator policy: a class that is never predicted and never true
// scores 1; a class never predicted but sometimes true is left out of the
// macro mean (its per-class entry is NaN).

#pragma once

#include "semiweak/core.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace semiweak {

struct Metrics {
  double bag_precision_macro = 0.0;
  double instance_precision_macro = 0.0;
  double bag_precision_micro = 0.0;
  double instance_precision_micro = 0.0;
  std::vector<double> per_class_bag_precision;
  std::vector<double> per_class_instance_precision;
  std::size_t n_bags = 0;
  std::size_t n_instances = 0;
};

struct PrecisionSummary {
  double macro = 0.0;
  double micro = 0.0;
  std::vector<double> per_class;
};

namespace detail {

inline PrecisionSummary summarize_precision(const std::vector<long long>& true_pos,
                                            const std::vector<long long>& pred_pos,
                                            const std::vector<long long>& actual_pos) {
  PrecisionSummary out;
  const std::size_t k_classes = true_pos.size();
  out.per_class.assign(k_classes, std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  int defined = 0;
  long long tp_total = 0, pred_total = 0;
  for (std::size_t k = 0; k < k_classes; ++k) {
    tp_total += true_pos[k];
    pred_total += pred_pos[k];
    if (pred_pos[k] > 0) {
      out.per_class[k] = static_cast<double>(true_pos[k]) / static_cast<double>(pred_pos[k]);
    } else if (actual_pos[k] == 0) {
      out.per_class[k] = 1.0;
    } else {
      continue;
    }
    sum += out.per_class[k];
    ++defined;
  }
  out.macro = defined > 0 ? sum / defined : 0.0;
  out.micro = pred_total > 0 ? static_cast<double>(tp_total) / static_cast<double>(pred_total) : 1.0;
  return out;
}

}  // namespace detail

// A bag is predicted positive for class k when at least one of its instances
// is labelled k, and truly positive when its count for k is non-zero.
inline PrecisionSummary bag_precision(const std::vector<std::vector<ClassId>>& predicted,
                                      const std::vector<CountVector>& truth, int num_classes) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("bag_precision: " + std::to_string(predicted.size()) + " predictions for " +
                     std::to_string(truth.size()) + " bags");
  }
  const auto k_classes = static_cast<std::size_t>(num_classes);
  std::vector<long long> tp(k_classes, 0), pred(k_classes, 0), actual(k_classes, 0);
  for (std::size_t b = 0; b < predicted.size(); ++b) {
    if (truth[b].num_classes() != num_classes) throw ShapeError("bag_precision: K mismatch");
    const CountVector pred_counts = CountVector::histogram(predicted[b], num_classes);
    for (std::size_t k = 0; k < k_classes; ++k) {
      const bool p = pred_counts[k] > 0;
      const bool t = truth[b][k] > 0;
      pred[k] += p;
      actual[k] += t;
      tp[k] += p && t;
    }
  }
  return detail::summarize_precision(tp, pred, actual);
}

inline PrecisionSummary instance_precision(std::span<const ClassId> predicted,
                                           std::span<const ClassId> truth, int num_classes) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("instance_precision: length mismatch (" + std::to_string(predicted.size()) +
                     " vs " + std::to_string(truth.size()) + ")");
  }
  const auto k_classes = static_cast<std::size_t>(num_classes);
  std::vector<long long> tp(k_classes, 0), pred(k_classes, 0), actual(k_classes, 0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto p = predicted[i].value;
    const auto t = truth[i].value;
    if (p >= k_classes || t >= k_classes) throw ValidationError("instance_precision: label out of range");
    ++pred[p];
    ++actual[t];
    tp[p] += p == t;
  }
  return detail::summarize_precision(tp, pred, actual);
}

// Both precisions for a set of bags with held-out instance labels.
inline Metrics evaluate_predictions(const std::vector<std::vector<ClassId>>& predicted,
                                    const std::vector<Bag>& bags, int num_classes) {
  if (predicted.size() != bags.size()) throw ShapeError("evaluate_predictions: bag count mismatch");
  std::vector<CountVector> truth_counts;
  std::vector<ClassId> flat_pred, flat_truth;
  truth_counts.reserve(bags.size());
  for (std::size_t b = 0; b < bags.size(); ++b) {
    const Bag& bag = bags[b];
    if (!bag.true_instance_labels) {
      throw ValidationError("bag " + std::to_string(bag.bag_id) + " has no instance labels");
    }
    if (predicted[b].size() != bag.true_instance_labels->size()) {
      throw ShapeError("bag " + std::to_string(bag.bag_id) + ": prediction length mismatch");
    }
    truth_counts.push_back(bag.label);
    flat_pred.insert(flat_pred.end(), predicted[b].begin(), predicted[b].end());
    flat_truth.insert(flat_truth.end(), bag.true_instance_labels->begin(),
                      bag.true_instance_labels->end());
  }
  const PrecisionSummary bag_p = bag_precision(predicted, truth_counts, num_classes);
  const PrecisionSummary inst_p = instance_precision(flat_pred, flat_truth, num_classes);

  Metrics m;
  m.bag_precision_macro = bag_p.macro;
  m.bag_precision_micro = bag_p.micro;
  m.per_class_bag_precision = bag_p.per_class;
  m.instance_precision_macro = inst_p.macro;
  m.instance_precision_micro = inst_p.micro;
  m.per_class_instance_precision = inst_p.per_class;
  m.n_bags = bags.size();
  m.n_instances = flat_pred.size();
  return m;
}

}  // namespace semiweak
