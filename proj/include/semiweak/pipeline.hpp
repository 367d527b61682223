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

// Inference: network outputs -> exact counts -> instance labels.

#pragma once

#include "semiweak/assignment.hpp"
#include "semiweak/count_decoder.hpp"
#include "semiweak/metrics.hpp"
#include "semiweak/model.hpp"

#include <vector>

namespace semiweak {

struct PipelineFlags {
  bool decoder = true;        // off: per-instance argmax
  bool alg1_literal = false;  // raw pmf-difference gains in the count decoder
};

inline std::vector<ClassId> predict_bag_labels(const ForwardOutput& out, const PipelineFlags& flags) {
  if (!flags.decoder) return greedy_argmax_labels(out.probs);
  const GainRule rule = flags.alg1_literal ? GainRule::kPmfLiteral : GainRule::kLogPmf;
  const DecodeResult counts = greedy_decode(out.expected, out.probs.rows(), rule);
  return assign_labels(out.probs, counts.counts).labels;
}

inline std::vector<std::vector<ClassId>> predict_dataset(const ModelParams& params,
                                                         const BagDataset& data,
                                                         const PipelineFlags& flags) {
  std::vector<std::vector<ClassId>> out;
  out.reserve(data.size());
  for (const Bag& bag : data.bags) out.push_back(predict_bag_labels(forward(params, bag), flags));
  return out;
}

inline Metrics evaluate_model(const ModelParams& params, const BagDataset& data,
                              const PipelineFlags& flags) {
  if (params.num_classes() != data.num_classes || params.input_dim() != data.feature_dim) {
    throw ShapeError("model shape (d=" + std::to_string(params.input_dim()) +
                     ", K=" + std::to_string(params.num_classes()) + ") does not match dataset (d=" +
                     std::to_string(data.feature_dim) + ", K=" + std::to_string(data.num_classes) + ")");
  }
  return evaluate_predictions(predict_dataset(params, data, flags), data.bags, data.num_classes);
}

}  // namespace semiweak
