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

// Synthetic bag datasets.
//
// Count labels: classes are visited in a random order (no class repeats
// until every class has been visited), each visit draws a count from the
// configured distribution truncated to the remaining capacity, until the
// bag holds N_B instances. The uniform distribution instead labels N_B
// instances i.i.d. uniformly.
//
// Features: each instance of class k is centers[k] + N(0, I); the K centers
// are pairwise at least `cluster_separation` apart.

#pragma once

#include "semiweak/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace semiweak {

enum class CountDistribution { kPoisson, kExponential, kUniform };

inline std::string_view to_string(CountDistribution d) {
  switch (d) {
    case CountDistribution::kPoisson: return "poisson";
    case CountDistribution::kExponential: return "exponential";
    case CountDistribution::kUniform: return "uniform";
  }
  return "poisson";
}

inline CountDistribution parse_distribution(std::string_view name) {
  if (name == "poisson") return CountDistribution::kPoisson;
  if (name == "exponential") return CountDistribution::kExponential;
  if (name == "uniform") return CountDistribution::kUniform;
  throw ValidationError("unknown distribution '" + std::string(name) +
                        "' (poisson, exponential, uniform)");
}

struct DatasetConfig {
  std::string dataset_id = "custom";
  CountDistribution distribution = CountDistribution::kPoisson;
  int bag_size = 8;
  double lambda = 1.2;  // Poisson mean, or exponential rate; unused for uniform
  int n_train_bags = 1000;
  int n_test_bags = 200;
  int num_classes = 10;
  int feature_dim = 16;
  double cluster_separation = 6.0;
  int reuse_cap = 2;
  int pool_per_class = 0;  // > 0 switches to finite-pool mode
  RngSeed seed{0};

  void validate() const {
    if (bag_size < 1) throw ValidationError("dataset: bag_size must be >= 1");
    if (n_train_bags < 1 || n_test_bags < 1) throw ValidationError("dataset: bag counts must be >= 1");
    if (num_classes < 1) throw ValidationError("dataset: num_classes must be >= 1");
    if (feature_dim < 1) throw ValidationError("dataset: feature_dim must be >= 1");
    if (reuse_cap < 1) throw ValidationError("dataset: reuse_cap must be >= 1");
    if (pool_per_class < 0) throw ValidationError("dataset: pool_per_class must be >= 0");
    if (cluster_separation < 0.0) throw ValidationError("dataset: cluster_separation must be >= 0");
    if (distribution != CountDistribution::kUniform && !(lambda > 0.0)) {
      throw ValidationError("dataset: lambda must be positive");
    }
  }
};

struct DatasetStats {
  double avg_count = 0.0;     // mean over bags of the mean non-zero class count
  double avg_sparsity = 0.0;  // mean fraction of absent classes
  double std_sparsity = 0.0;  // population standard deviation
  long long forced_fills = 0; // bags that hit the iteration cap
};

struct GeneratedDataset {
  BagDataset train;
  BagDataset test;
  DatasetStats stats;  // over the training bags
};

inline DatasetStats compute_stats(const std::vector<Bag>& bags) {
  DatasetStats s;
  if (bags.empty()) return s;
  double count_sum = 0.0, sp_sum = 0.0, sp_sq = 0.0;
  for (const Bag& b : bags) {
    const int present = b.label.num_classes() - b.label.num_absent();
    count_sum += present > 0 ? static_cast<double>(b.label.bag_size()) / present : 0.0;
    const double sp = b.label.sparsity();
    sp_sum += sp;
    sp_sq += sp * sp;
  }
  const double n = static_cast<double>(bags.size());
  s.avg_count = count_sum / n;
  s.avg_sparsity = sp_sum / n;
  s.std_sparsity = std::sqrt(std::max(0.0, sp_sq / n - s.avg_sparsity * s.avg_sparsity));
  return s;
}

// Draws one count label. `forced_fill` is set when the iteration cap of
// 64 * N_B draws is reached and the remainder is spread uniformly.
inline CountVector sample_bag_label(const DatasetConfig& config, Rng& rng, bool* forced_fill = nullptr) {
  const int k_classes = config.num_classes;
  const int n_b = config.bag_size;
  std::vector<int> counts(static_cast<std::size_t>(k_classes), 0);
  std::uniform_int_distribution<int> pick_class(0, k_classes - 1);
  if (forced_fill) *forced_fill = false;

  if (config.distribution == CountDistribution::kUniform) {
    for (int i = 0; i < n_b; ++i) ++counts[pick_class(rng)];
    return CountVector(std::move(counts), n_b);
  }

  std::poisson_distribution<int> poisson(config.lambda);
  std::exponential_distribution<double> exponential(config.lambda);
  auto draw = [&]() -> int {
    if (config.distribution == CountDistribution::kPoisson) return std::min(poisson(rng), n_b);
    return static_cast<int>(std::min(std::floor(exponential(rng)), static_cast<double>(n_b)));
  };

  std::vector<int> order(static_cast<std::size_t>(k_classes));
  std::size_t next = order.size();
  int total = 0;
  const int cap = 64 * n_b;
  for (int iter = 0; total < n_b && iter < cap; ++iter) {
    if (next == order.size()) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      next = 0;
    }
    const int cls = order[next++];
    const int n = std::min(draw(), n_b - total);
    counts[cls] += n;
    total += n;
  }
  if (total < n_b) {
    if (forced_fill) *forced_fill = true;
    for (; total < n_b; ++total) ++counts[pick_class(rng)];
  }
  return CountVector(std::move(counts), n_b);
}

// K centers pairwise exactly `separation` apart when d >= K (scaled random
// orthonormal frame), otherwise random directions rescaled so the closest
// pair is `separation` apart.
inline std::vector<Eigen::VectorXd> make_cluster_centers(int num_classes, int feature_dim,
                                                         double separation, RngSeed seed) {
  Rng rng = make_stream(seed, StreamPurpose::kClusterCenters);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd dirs(feature_dim, num_classes);
  for (Eigen::Index i = 0; i < dirs.size(); ++i) dirs.data()[i] = normal(rng);

  std::vector<Eigen::VectorXd> centers;
  if (feature_dim >= num_classes) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(dirs);
    const Eigen::MatrixXd q =
        qr.householderQ() * Eigen::MatrixXd::Identity(feature_dim, num_classes);
    for (int k = 0; k < num_classes; ++k) centers.emplace_back(q.col(k) * (separation / std::sqrt(2.0)));
    return centers;
  }
  double min_dist = std::numeric_limits<double>::infinity();
  for (int k = 0; k < num_classes; ++k) dirs.col(k).normalize();
  for (int a = 0; a < num_classes; ++a) {
    for (int b = a + 1; b < num_classes; ++b) min_dist = std::min(min_dist, (dirs.col(a) - dirs.col(b)).norm());
  }
  const double scale = num_classes > 1 ? separation / min_dist : 0.0;
  for (int k = 0; k < num_classes; ++k) centers.emplace_back(dirs.col(k) * scale);
  return centers;
}

namespace detail {

// Instance labels of a bag in random order.
inline std::vector<ClassId> shuffled_instance_labels(const CountVector& label, Rng& rng) {
  std::vector<ClassId> labels;
  labels.reserve(static_cast<std::size_t>(label.bag_size()));
  for (int k = 0; k < label.num_classes(); ++k) {
    labels.insert(labels.end(), static_cast<std::size_t>(label[k]), ClassId(static_cast<std::uint32_t>(k)));
  }
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

inline Eigen::VectorXd draw_instance(const Eigen::VectorXd& center, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x(center.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = center[i] + normal(rng);
  return x;
}

// Fixed instances per class, each usable at most reuse_cap times.
class InstancePool {
 public:
  InstancePool(const std::vector<Eigen::VectorXd>& centers, int per_class, int reuse_cap, Rng rng)
      : reuse_cap_(reuse_cap), rng_(std::move(rng)) {
    for (const auto& c : centers) {
      std::vector<Eigen::VectorXd> items;
      for (int i = 0; i < per_class; ++i) items.push_back(draw_instance(c, rng_));
      items_.push_back(std::move(items));
      uses_.emplace_back(static_cast<std::size_t>(per_class), 0);
    }
  }

  const Eigen::VectorXd& take(std::uint32_t cls) {
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < uses_[cls].size(); ++i) {
      if (uses_[cls][i] < reuse_cap_) open.push_back(i);
    }
    if (open.empty()) {
      throw ValidationError("instance pool exhausted for class " + std::to_string(cls) +
                            " under reuse cap " + std::to_string(reuse_cap_));
    }
    std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
    const std::size_t i = open[pick(rng_)];
    ++uses_[cls][i];
    return items_[cls][i];
  }

 private:
  int reuse_cap_;
  Rng rng_;
  std::vector<std::vector<Eigen::VectorXd>> items_;
  std::vector<std::vector<int>> uses_;
};

}  // namespace detail

inline Bag synthesize_features(std::int64_t bag_id, const CountVector& label,
                               const std::vector<Eigen::VectorXd>& centers, int feature_dim, Rng& rng) {
  Bag bag;
  bag.bag_id = bag_id;
  bag.label = label;
  bag.true_instance_labels = detail::shuffled_instance_labels(label, rng);
  bag.features.resize(label.bag_size(), feature_dim);
  for (int j = 0; j < label.bag_size(); ++j) {
    bag.features.row(j) = detail::draw_instance(centers[(*bag.true_instance_labels)[j].value], rng).transpose();
  }
  return bag;
}

// Training bags get ids [0, n_train), test bags [n_train, n_train + n_test).
// Every bag draws from its own streams keyed by bag id.
inline GeneratedDataset generate_dataset(const DatasetConfig& config) {
  config.validate();
  const auto centers = make_cluster_centers(config.num_classes, config.feature_dim,
                                            config.cluster_separation, config.seed);
  GeneratedDataset out;
  for (BagDataset* d : {&out.train, &out.test}) {
    d->num_classes = config.num_classes;
    d->feature_dim = config.feature_dim;
  }
  out.train.bags.reserve(static_cast<std::size_t>(config.n_train_bags));
  out.test.bags.reserve(static_cast<std::size_t>(config.n_test_bags));

  long long forced = 0;
  auto make_split = [&](BagDataset& split, std::int64_t first_id, int n, std::uint64_t pool_index) {
    std::optional<detail::InstancePool> pool;
    if (config.pool_per_class > 0) {
      pool.emplace(centers, config.pool_per_class, config.reuse_cap,
                   make_stream(config.seed, StreamPurpose::kInstancePool, pool_index));
    }
    for (int i = 0; i < n; ++i) {
      const std::int64_t id = first_id + i;
      Rng label_rng = make_stream(config.seed, StreamPurpose::kBagLabels, static_cast<std::uint64_t>(id));
      bool forced_fill = false;
      const CountVector label = sample_bag_label(config, label_rng, &forced_fill);
      forced += forced_fill;
      Rng feat_rng = make_stream(config.seed, StreamPurpose::kFeatures, static_cast<std::uint64_t>(id));
      if (!pool) {
        split.bags.push_back(synthesize_features(id, label, centers, config.feature_dim, feat_rng));
        continue;
      }
      Bag bag;
      bag.bag_id = id;
      bag.label = label;
      bag.true_instance_labels = detail::shuffled_instance_labels(label, feat_rng);
      bag.features.resize(label.bag_size(), config.feature_dim);
      for (int j = 0; j < label.bag_size(); ++j) {
        bag.features.row(j) = pool->take((*bag.true_instance_labels)[j].value).transpose();
      }
      split.bags.push_back(std::move(bag));
    }
  };
  make_split(out.train, 0, config.n_train_bags, 0);
  make_split(out.test, config.n_train_bags, config.n_test_bags, 1);

  out.stats = compute_stats(out.train.bags);
  out.stats.forced_fills = forced;
  return out;
}

}  // namespace semiweak
