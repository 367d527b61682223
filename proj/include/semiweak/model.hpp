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

// Stage-1 network: a per-instance feature extractor (stack of dense layers),
// a linear head to K logits, row softmax, and sum pooling to expected
// counts. Reverse-mode gradients are written out by hand.

#pragma once

#include "semiweak/core.hpp"
#include "semiweak/losses.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace semiweak {

enum class Activation { kRelu, kIdentity };

inline std::string_view to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "identity";
}

inline Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::kIdentity;

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }
};

struct ModelParams {
  std::vector<DenseLayer> extractor;
  DenseLayer head;

  int input_dim() const { return extractor.empty() ? head.in_dim() : extractor.front().in_dim(); }
  int num_classes() const { return head.out_dim(); }

  void validate() const {
    int dim = input_dim();
    auto check = [&dim](const DenseLayer& layer, const std::string& name) {
      if (layer.in_dim() != dim) throw ShapeError(name + ": input dim does not chain");
      if (layer.bias.size() != layer.weight.rows()) throw ShapeError(name + ": bias size mismatch");
      if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
        throw ValidationError(name + ": non-finite parameter");
      }
      dim = layer.out_dim();
    };
    for (std::size_t l = 0; l < extractor.size(); ++l) check(extractor[l], "layer " + std::to_string(l));
    check(head, "head");
    if (num_classes() < 1) throw ShapeError("head has no outputs");
  }
};

// Flat views over every tensor, in a fixed order (layer weights then bias,
// head last). Two params of equal shape yield aligned block lists.
inline std::vector<std::span<double>> parameter_blocks(ModelParams& p) {
  std::vector<std::span<double>> out;
  auto add = [&out](DenseLayer& l) {
    out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  };
  for (DenseLayer& l : p.extractor) add(l);
  add(p.head);
  return out;
}

inline std::vector<std::span<const double>> parameter_blocks(const ModelParams& p) {
  std::vector<std::span<const double>> out;
  auto add = [&out](const DenseLayer& l) {
    out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  };
  for (const DenseLayer& l : p.extractor) add(l);
  add(p.head);
  return out;
}

inline std::size_t parameter_count(const ModelParams& p) {
  std::size_t n = 0;
  for (const auto& b : parameter_blocks(p)) n += b.size();
  return n;
}

inline ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  for (auto block : parameter_blocks(z)) std::fill(block.begin(), block.end(), 0.0);
  return z;
}

// dst += scale * src
inline void add_scaled(ModelParams& dst, const ModelParams& src, double scale) {
  auto d = parameter_blocks(dst);
  const auto s = parameter_blocks(src);
  if (d.size() != s.size()) throw ShapeError("add_scaled: parameter layouts differ");
  for (std::size_t b = 0; b < d.size(); ++b) {
    if (d[b].size() != s[b].size()) throw ShapeError("add_scaled: parameter layouts differ");
    for (std::size_t i = 0; i < d[b].size(); ++i) d[b][i] += scale * s[b][i];
  }
}

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
inline ModelParams init_params(int input_dim, std::span<const int> hidden, int num_classes,
                               RngSeed seed) {
  if (input_dim < 1 || num_classes < 1) throw ValidationError("init_params: bad dimensions");
  Rng rng = make_stream(seed, StreamPurpose::kParameterInit);
  auto make_layer = [&rng](int in, int out, Activation act) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out), act};
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = dist(rng);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = dist(rng);
    return layer;
  };
  ModelParams p;
  int dim = input_dim;
  for (int width : hidden) {
    if (width < 1) throw ValidationError("init_params: hidden width must be positive");
    p.extractor.push_back(make_layer(dim, width, Activation::kRelu));
    dim = width;
  }
  p.head = make_layer(dim, num_classes, Activation::kIdentity);
  return p;
}

struct ForwardOutput {
  ProbMatrix probs;
  ExpectedCounts expected;
  PresenceVector presence;
};

// Layer inputs kept for the reverse pass. activations[l] feeds layer l;
// the last entry feeds the head.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;
  Eigen::MatrixXd probs;
};

namespace detail {

inline Eigen::MatrixXd dense_forward(const DenseLayer& layer, const Eigen::MatrixXd& input) {
  Eigen::MatrixXd z = input * layer.weight.transpose();
  z.rowwise() += layer.bias.transpose();
  if (layer.activation == Activation::kRelu) z = z.cwiseMax(0.0);
  return z;
}

inline Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double m = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

inline void check_bag_shape(const ModelParams& params, const Bag& bag) {
  if (bag.feature_dim() != params.input_dim()) {
    throw ShapeError("bag " + std::to_string(bag.bag_id) + ": feature dim " +
                     std::to_string(bag.feature_dim()) + " does not match model input " +
                     std::to_string(params.input_dim()));
  }
  if (bag.size() < 1) throw ValidationError("bag " + std::to_string(bag.bag_id) + " is empty");
}

}  // namespace detail

inline ForwardCache forward_cached(const ModelParams& params, const Bag& bag) {
  detail::check_bag_shape(params, bag);
  ForwardCache cache;
  cache.activations.reserve(params.extractor.size() + 1);
  cache.activations.push_back(bag.features);
  for (const DenseLayer& layer : params.extractor) {
    cache.activations.push_back(detail::dense_forward(layer, cache.activations.back()));
  }
  cache.probs = detail::row_softmax(detail::dense_forward(params.head, cache.activations.back()));
  if (!cache.probs.allFinite()) {
    throw DivergenceError("bag " + std::to_string(bag.bag_id) + ": non-finite activation");
  }
  return cache;
}

inline ForwardOutput make_forward_output(const Eigen::MatrixXd& probs) {
  ForwardOutput out{ProbMatrix(probs), {}, {}};
  out.expected = out.probs.column_sums();
  out.presence = presence_from_expected(out.expected);
  return out;
}

inline ForwardOutput forward(const ModelParams& params, const Bag& bag) {
  return make_forward_output(forward_cached(params, bag).probs);
}

struct BagGradient {
  LossBreakdown breakdown;
  ModelParams grad;
};

// Combined loss of one bag and its exact gradient with respect to every
// parameter. The weight-decay term is not included; see weight_decay_grad.
inline BagGradient backward(const ModelParams& params, const Bag& bag, const LossConfig& config) {
  const ForwardCache cache = forward_cached(params, bag);
  const Eigen::MatrixXd& probs = cache.probs;
  const auto k_classes = probs.cols();
  if (bag.label.num_classes() != k_classes) {
    throw ShapeError("bag " + std::to_string(bag.bag_id) + ": label K does not match model");
  }

  std::vector<double> expected(static_cast<std::size_t>(k_classes));
  for (Eigen::Index k = 0; k < k_classes; ++k) expected[k] = probs.col(k).sum();
  const LossAndGradient lg = loss_from_expected(bag.label, ExpectedCounts(expected), config);

  // lambda_k = sum_j p_jk, so dL/dp_jk = g_k for every row j; then through
  // the softmax: dz_jk = p_jk (g_k - sum_m p_jm g_m).
  const Eigen::Map<const Eigen::RowVectorXd> g(lg.d_expected.data(), k_classes);
  const Eigen::VectorXd row_dot = probs * g.transpose();
  Eigen::MatrixXd d_logits = probs.array() * ((-row_dot).replicate(1, k_classes).rowwise() + g).array();

  BagGradient out{lg.breakdown, zeros_like(params)};
  out.grad.head.weight = d_logits.transpose() * cache.activations.back();
  out.grad.head.bias = d_logits.colwise().sum().transpose();
  Eigen::MatrixXd d_act = d_logits * params.head.weight;

  for (std::size_t l = params.extractor.size(); l-- > 0;) {
    const DenseLayer& layer = params.extractor[l];
    const Eigen::MatrixXd& output = cache.activations[l + 1];
    if (layer.activation == Activation::kRelu) d_act = d_act.array() * (output.array() > 0.0).cast<double>();
    out.grad.extractor[l].weight = d_act.transpose() * cache.activations[l];
    out.grad.extractor[l].bias = d_act.colwise().sum().transpose();
    if (l > 0) d_act = d_act * layer.weight;
  }

  if (!std::isfinite(out.breakdown.total)) {
    throw DivergenceError("bag " + std::to_string(bag.bag_id) + ": non-finite loss");
  }
  for (const auto block : parameter_blocks(out.grad)) {
    for (double v : block) {
      if (!std::isfinite(v)) {
        throw DivergenceError("bag " + std::to_string(bag.bag_id) + ": non-finite gradient");
      }
    }
  }
  return out;
}

// Gradient of (weight_decay / 2) * ||theta||^2.
inline ModelParams weight_decay_grad(const ModelParams& params, double weight_decay) {
  ModelParams g = zeros_like(params);
  add_scaled(g, params, weight_decay);
  return g;
}

// Loss of one bag without gradients.
inline LossBreakdown bag_loss(const ModelParams& params, const Bag& bag, const LossConfig& config) {
  const ForwardOutput out = forward(params, bag);
  return loss_from_expected(bag.label, out.expected, config).breakdown;
}

}  // namespace semiweak
