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

// Mini-batch SGD over bags with a step-decay learning-rate schedule and
// weight decay. Keeps the parameters of the epoch with the best validation
// instance precision.

#pragma once

#include "semiweak/model.hpp"
#include "semiweak/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace semiweak {

struct TrainConfig {
  double lr0 = 0.01;
  int epochs = 100;
  std::vector<int> lr_milestones{30, 50};
  double lr_decay = 0.1;
  double weight_decay = 5e-4;
  int batch_bags = 64;
  double momentum = 0.0;
  std::vector<int> hidden_layers{64};
  LossConfig loss;
  RngSeed seed{0};
  PipelineFlags pipeline;  // used for the per-epoch validation metrics

  void validate() const {
    if (!(lr0 > 0.0)) throw ValidationError("train: lr0 must be positive");
    if (epochs < 1) throw ValidationError("train: epochs must be >= 1");
    if (batch_bags < 1) throw ValidationError("train: batch_bags must be >= 1");
    if (!(lr_decay > 0.0)) throw ValidationError("train: lr_decay must be positive");
    if (weight_decay < 0.0) throw ValidationError("train: weight_decay must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ValidationError("train: momentum must be in [0,1)");
    if (loss.beta < 0.0) throw ValidationError("train: beta must be >= 0");
    for (std::size_t i = 1; i < lr_milestones.size(); ++i) {
      if (lr_milestones[i] <= lr_milestones[i - 1]) {
        throw ValidationError("train: lr milestones must be strictly increasing");
      }
    }
    for (int w : hidden_layers) {
      if (w < 1) throw ValidationError("train: hidden layer widths must be positive");
    }
  }
};

// Learning rate of a 0-based epoch: lr0 * decay^(milestones passed).
inline double learning_rate_at(const TrainConfig& config, int epoch) {
  double lr = config.lr0;
  for (int m : config.lr_milestones) {
    if (epoch >= m) lr *= config.lr_decay;
  }
  return lr;
}

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean combined loss over the epoch's bags
  double train_reg = 0.0;
  double train_cls = 0.0;
  double train_l1 = 0.0;
  std::optional<Metrics> validation;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> log;
  int best_epoch = -1;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

inline TrainResult train(const BagDataset& train_set, const BagDataset* validation,
                         const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  config.validate();
  if (train_set.empty()) throw ValidationError("train: empty dataset");
  validate_dataset(train_set);
  if (validation) {
    validate_dataset(*validation);
    if (validation->num_classes != train_set.num_classes ||
        validation->feature_dim != train_set.feature_dim) {
      throw ShapeError("train: validation set shape differs from training set");
    }
  }

  ModelParams params = init_params(train_set.feature_dim, config.hidden_layers,
                                   train_set.num_classes, config.seed);
  ModelParams velocity = zeros_like(params);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  double best_score = -1.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng = make_stream(config.seed, StreamPurpose::kShuffle, static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = learning_rate_at(config, epoch);
    const auto batch = static_cast<std::size_t>(config.batch_bags);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      ModelParams step = weight_decay_grad(params, config.weight_decay);
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const BagGradient bg = backward(params, train_set.bags[order[i]], config.loss);
        add_scaled(step, bg.grad, inv);
        rec.train_loss += bg.breakdown.total;
        rec.train_reg += bg.breakdown.reg;
        rec.train_cls += bg.breakdown.cls;
        rec.train_l1 += bg.breakdown.l1;
      }
      if (config.momentum > 0.0) {
        // v <- momentum * v + g; theta <- theta - lr * v
        for (auto block : parameter_blocks(velocity)) {
          for (double& x : block) x *= config.momentum;
        }
        add_scaled(velocity, step, 1.0);
        add_scaled(params, velocity, -rec.lr);
      } else {
        add_scaled(params, step, -rec.lr);
      }
      for (const auto block : parameter_blocks(std::as_const(params))) {
        for (double v : block) {
          if (!std::isfinite(v)) {
            throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                                  " (non-finite parameter after update)");
          }
        }
      }
    }
    const double n = static_cast<double>(train_set.size());
    rec.train_loss /= n;
    rec.train_reg /= n;
    rec.train_cls /= n;
    rec.train_l1 /= n;
    if (!std::isfinite(rec.train_loss)) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + " (loss is not finite)");
    }

    if (validation) {
      rec.validation = evaluate_model(params, *validation, config.pipeline);
      if (rec.validation->instance_precision_macro > best_score) {
        best_score = rec.validation->instance_precision_macro;
        result.params = params;
        result.best_epoch = epoch;
      }
    }
    if (on_epoch) on_epoch(rec);
    result.log.push_back(std::move(rec));
  }
  if (!validation) {
    result.params = params;
    result.best_epoch = config.epochs - 1;
  }
  return result;
}

}  // namespace semiweak
