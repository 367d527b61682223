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

// Domain types shared by every stage of the learning-from-counts pipeline:
// count labels, expected counts, instance probability matrices, bags, and
// the seeded random stream contract.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace semiweak {

// Invalid input to a domain constructor or operation.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operand shapes (K, N_B, feature dim) do not agree.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Training produced a non-finite loss or gradient.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ClassId {
  std::uint32_t value = 0;

  constexpr ClassId() = default;
  constexpr explicit ClassId(std::uint32_t v) : value(v) {}

  friend constexpr auto operator<=>(ClassId, ClassId) = default;
};

inline std::vector<ClassId> to_class_ids(std::span<const int> raw) {
  std::vector<ClassId> out;
  out.reserve(raw.size());
  for (int v : raw) {
    if (v < 0) throw ValidationError("negative class id");
    out.emplace_back(static_cast<std::uint32_t>(v));
  }
  return out;
}

// Per-class instance counts of one bag; a point of the integer simplex.
class CountVector {
 public:
  CountVector() = default;

  explicit CountVector(std::vector<int> counts) : counts_(std::move(counts)) {
    if (counts_.empty()) throw ValidationError("count vector must have K >= 1");
    for (int c : counts_) {
      if (c < 0) throw ValidationError("count vector has a negative entry");
    }
    bag_size_ = std::accumulate(counts_.begin(), counts_.end(), 0);
  }

  CountVector(std::vector<int> counts, int bag_size) : CountVector(std::move(counts)) {
    if (bag_size_ != bag_size) {
      throw ValidationError("label sum mismatch: counts sum to " + std::to_string(bag_size_) +
                            ", bag size is " + std::to_string(bag_size));
    }
  }

  static CountVector histogram(std::span<const ClassId> labels, int num_classes) {
    std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
    for (ClassId c : labels) {
      if (c.value >= static_cast<std::uint32_t>(num_classes)) {
        throw ValidationError("class id " + std::to_string(c.value) + " out of range for K=" +
                              std::to_string(num_classes));
      }
      ++counts[c.value];
    }
    return CountVector(std::move(counts));
  }

  int num_classes() const { return static_cast<int>(counts_.size()); }
  int bag_size() const { return bag_size_; }
  int operator[](std::size_t k) const { return counts_[k]; }
  const std::vector<int>& values() const { return counts_; }

  int num_absent() const {
    return static_cast<int>(std::count(counts_.begin(), counts_.end(), 0));
  }
  double sparsity() const { return static_cast<double>(num_absent()) / num_classes(); }

  friend bool operator==(const CountVector&, const CountVector&) = default;

 private:
  std::vector<int> counts_;
  int bag_size_ = 0;
};

// Real-valued expected instances per class (sum-pooled softmax outputs).
class ExpectedCounts {
 public:
  ExpectedCounts() = default;

  explicit ExpectedCounts(std::vector<double> lambdas) : lambdas_(std::move(lambdas)) {
    for (double v : lambdas_) {
      if (!std::isfinite(v)) throw ValidationError("expected count is not finite");
      if (v < 0.0) throw ValidationError("expected count is negative");
    }
  }

  int num_classes() const { return static_cast<int>(lambdas_.size()); }
  double operator[](std::size_t k) const { return lambdas_[k]; }
  const std::vector<double>& values() const { return lambdas_; }
  double total() const { return std::accumulate(lambdas_.begin(), lambdas_.end(), 0.0); }

 private:
  std::vector<double> lambdas_;
};

// Probability that each class is present in a bag.
class PresenceVector {
 public:
  PresenceVector() = default;

  explicit PresenceVector(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("presence value outside [0,1]");
    }
  }

  int num_classes() const { return static_cast<int>(values_.size()); }
  double operator[](std::size_t k) const { return values_[k]; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
};

// N_B x K row-stochastic matrix of instance class probabilities.
class ProbMatrix {
 public:
  static constexpr double kRowSumTolerance = 1e-9;

  ProbMatrix() = default;

  explicit ProbMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
    if (values_.cols() < 1) throw ValidationError("probability matrix needs K >= 1 columns");
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
      double sum = 0.0;
      for (Eigen::Index k = 0; k < values_.cols(); ++k) {
        const double p = values_(i, k);
        if (!(p >= 0.0 && p <= 1.0)) {
          throw ValidationError("probability entry outside [0,1] at row " + std::to_string(i));
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        throw ValidationError("probability row " + std::to_string(i) + " does not sum to 1");
      }
    }
  }

  static ProbMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw ValidationError("probability matrix has no rows");
    const auto cols = static_cast<Eigen::Index>(rows.front().size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != cols) {
        throw ShapeError("ragged probability matrix");
      }
      for (Eigen::Index k = 0; k < cols; ++k) m(static_cast<Eigen::Index>(i), k) = rows[i][k];
    }
    return ProbMatrix(std::move(m));
  }

  int rows() const { return static_cast<int>(values_.rows()); }
  int cols() const { return static_cast<int>(values_.cols()); }
  double operator()(int i, int k) const { return values_(i, k); }
  const Eigen::MatrixXd& values() const { return values_; }

  ExpectedCounts column_sums() const {
    std::vector<double> out(static_cast<std::size_t>(cols()));
    for (int k = 0; k < cols(); ++k) out[k] = values_.col(k).sum();
    return ExpectedCounts(std::move(out));
  }

  std::vector<double> column_means() const {
    std::vector<double> out = column_sums().values();
    for (double& v : out) v /= rows();
    return out;
  }

 private:
  Eigen::MatrixXd values_;
};

// N_B x K binary matrix with unit row sums.
class AssignmentMatrix {
 public:
  AssignmentMatrix(std::span<const ClassId> labels, int num_classes)
      : values_(Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(labels.size()), num_classes)) {
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j].value >= static_cast<std::uint32_t>(num_classes)) {
        throw ValidationError("label out of range");
      }
      values_(static_cast<Eigen::Index>(j), labels[j].value) = 1;
    }
  }

  AssignmentMatrix(std::span<const ClassId> labels, const CountVector& counts)
      : AssignmentMatrix(labels, counts.num_classes()) {
    if (column_sums() != counts) throw ValidationError("assignment column sums differ from counts");
  }

  int rows() const { return static_cast<int>(values_.rows()); }
  int cols() const { return static_cast<int>(values_.cols()); }
  int operator()(int j, int k) const { return values_(j, k); }

  CountVector column_sums() const {
    std::vector<int> out(static_cast<std::size_t>(cols()));
    for (int k = 0; k < cols(); ++k) out[k] = values_.col(k).sum();
    return CountVector(std::move(out));
  }

 private:
  Eigen::MatrixXi values_;
};

struct Bag {
  std::int64_t bag_id = 0;
  Eigen::MatrixXd features;  // N_B x d, one instance per row
  CountVector label;
  std::optional<std::vector<ClassId>> true_instance_labels;

  int size() const { return static_cast<int>(features.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
};

struct BagDataset {
  int num_classes = 0;
  int feature_dim = 0;
  std::vector<Bag> bags;

  bool empty() const { return bags.empty(); }
  std::size_t size() const { return bags.size(); }
};

// Returns the bag unchanged if its label, features and held-out instance
// labels agree with each other and with K.
inline const Bag& validate_bag(const Bag& bag, int num_classes) {
  const std::string where = "bag " + std::to_string(bag.bag_id) + ": ";
  if (bag.label.num_classes() != num_classes) {
    throw ShapeError(where + "dimension mismatch: label has K=" +
                     std::to_string(bag.label.num_classes()) + ", expected " +
                     std::to_string(num_classes));
  }
  if (bag.label.bag_size() != bag.size()) {
    throw ValidationError(where + "label sum mismatch: counts sum to " +
                          std::to_string(bag.label.bag_size()) + " for " +
                          std::to_string(bag.size()) + " instances");
  }
  if (!bag.features.allFinite()) throw ValidationError(where + "non-finite feature value");
  if (bag.true_instance_labels) {
    const auto& labels = *bag.true_instance_labels;
    if (static_cast<int>(labels.size()) != bag.size()) {
      throw ShapeError(where + "dimension mismatch: " + std::to_string(labels.size()) +
                       " instance labels for " + std::to_string(bag.size()) + " instances");
    }
    if (CountVector::histogram(labels, num_classes) != bag.label) {
      throw ValidationError(where + "histogram mismatch between instance labels and count label");
    }
  }
  return bag;
}

inline void validate_dataset(const BagDataset& data) {
  for (const Bag& bag : data.bags) {
    validate_bag(bag, data.num_classes);
    if (bag.feature_dim() != data.feature_dim) {
      throw ShapeError("bag " + std::to_string(bag.bag_id) + ": dimension mismatch: feature dim " +
                       std::to_string(bag.feature_dim()) + ", expected " +
                       std::to_string(data.feature_dim));
    }
  }
}

// ---------------------------------------------------------------------------
// Random streams. Every consumer derives an independent engine from the
// master seed, a purpose tag and an index, so changing how much one stage
// draws never shifts the numbers seen by another.

struct RngSeed {
  std::uint64_t value = 0;
  friend bool operator==(RngSeed, RngSeed) = default;
};

enum class StreamPurpose : std::uint64_t {
  kBagLabels = 1,
  kFeatures = 2,
  kClusterCenters = 3,
  kParameterInit = 4,
  kShuffle = 5,
  kInstancePool = 6,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(RngSeed master, StreamPurpose purpose, std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(master.value);
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  return splitmix64(h ^ index);
}

using Rng = std::mt19937_64;

inline Rng make_stream(RngSeed master, StreamPurpose purpose, std::uint64_t index = 0) {
  return Rng(derive_seed(master, purpose, index));
}

}  // namespace semiweak
