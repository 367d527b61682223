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

// Bag-level losses and their analytic gradients.
//
// Every term of the combined loss depends on the instance probabilities only
// through the expected counts lambda_k = sum_j p_jk, so the model backpropagates
// a single length-K gradient with respect to lambda.

#pragma once

#include "semiweak/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace semiweak {

inline constexpr double kLambdaFloor = 1e-12;
inline constexpr double kProportionFloor = 1e-12;
inline constexpr double kPresenceFloor = 1e-7;

enum class RegKind { kPoisson, kKl, kL1Distance };

inline std::string_view to_string(RegKind kind) {
  switch (kind) {
    case RegKind::kPoisson: return "poisson";
    case RegKind::kKl: return "kl";
    case RegKind::kL1Distance: return "l1";
  }
  return "poisson";
}

inline RegKind parse_reg_kind(std::string_view name) {
  if (name == "poisson") return RegKind::kPoisson;
  if (name == "kl") return RegKind::kKl;
  if (name == "l1" || name == "l1_distance") return RegKind::kL1Distance;
  throw ValidationError("unknown reg kind '" + std::string(name) + "' (poisson, kl, l1)");
}

struct LossBreakdown {
  double reg = 0.0;
  double cls = 0.0;
  double l1 = 0.0;
  double total = 0.0;
  double beta = 0.0;
};

// Which terms enter the combined loss. The weak-label baseline disables
// use_reg; the proportion baseline is kKl with use_cls off and beta 0.
struct LossConfig {
  RegKind reg_kind = RegKind::kPoisson;
  bool use_reg = true;
  bool use_cls = true;
  double beta = 0.01;
};

namespace detail {

inline void check_k(int expected, int got, const char* what) {
  if (expected != got) {
    throw ShapeError(std::string("dimension mismatch in ") + what + ": K=" +
                     std::to_string(expected) + " vs " + std::to_string(got));
  }
}

inline double clamp_presence(double s) {
  return std::clamp(s, kPresenceFloor, 1.0 - kPresenceFloor);
}

inline std::vector<double> count_proportions(const CountVector& y) {
  std::vector<double> p(static_cast<std::size_t>(y.num_classes()), 0.0);
  if (y.bag_size() == 0) return p;
  for (int k = 0; k < y.num_classes(); ++k) p[k] = static_cast<double>(y[k]) / y.bag_size();
  return p;
}

// No normalization check: finite-difference probes step off the simplex.
inline double kl_divergence(std::span<const double> p, std::span<const double> p_bar) {
  double loss = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    loss += p[k] * (std::log(std::max(p[k], kProportionFloor)) -
                    std::log(std::max(p_bar[k], kProportionFloor)));
  }
  return loss;
}

}  // namespace detail

// sum_k lambda_k - y_k log lambda_k (the log y! constant is dropped).
inline double poisson_loss(const CountVector& y, const ExpectedCounts& lambda_hat) {
  detail::check_k(y.num_classes(), lambda_hat.num_classes(), "poisson_loss");
  double loss = 0.0;
  for (int k = 0; k < y.num_classes(); ++k) {
    const double lam = std::max(lambda_hat[k], kLambdaFloor);
    loss += lam - y[k] * std::log(lam);
  }
  return loss;
}

inline std::vector<double> poisson_grad(const CountVector& y, const ExpectedCounts& lambda_hat) {
  detail::check_k(y.num_classes(), lambda_hat.num_classes(), "poisson_grad");
  std::vector<double> g(static_cast<std::size_t>(y.num_classes()));
  for (int k = 0; k < y.num_classes(); ++k) {
    const double lam = std::max(lambda_hat[k], kLambdaFloor);
    g[k] = 1.0 - y[k] / lam;
  }
  return g;
}

// KL(p || p_bar) where p = y / N_B; 0 log 0 is 0.
inline double kl_proportion_loss(const CountVector& y, std::span<const double> p_bar) {
  detail::check_k(y.num_classes(), static_cast<int>(p_bar.size()), "kl_proportion_loss");
  double mass = 0.0;
  for (double v : p_bar) {
    if (!(v >= 0.0)) throw ValidationError("kl_proportion_loss: negative proportion");
    mass += v;
  }
  if (std::abs(mass - 1.0) > 1e-6) throw ValidationError("kl_proportion_loss: p_bar not normalized");
  return detail::kl_divergence(detail::count_proportions(y), p_bar);
}

inline std::vector<double> kl_proportion_grad(const CountVector& y, std::span<const double> p_bar) {
  detail::check_k(y.num_classes(), static_cast<int>(p_bar.size()), "kl_proportion_grad");
  const auto p = detail::count_proportions(y);
  std::vector<double> g(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) g[k] = -p[k] / std::max(p_bar[k], kProportionFloor);
  return g;
}

// Mean over classes of binary cross-entropy against 1{y_k > 0}.
inline double presence_bce_loss(const CountVector& y, const PresenceVector& presence) {
  detail::check_k(y.num_classes(), presence.num_classes(), "presence_bce_loss");
  double loss = 0.0;
  for (int k = 0; k < y.num_classes(); ++k) {
    const double s = detail::clamp_presence(presence[k]);
    loss -= y[k] > 0 ? std::log(s) : std::log1p(-s);
  }
  return loss / y.num_classes();
}

inline std::vector<double> presence_bce_grad(const CountVector& y, const PresenceVector& presence) {
  detail::check_k(y.num_classes(), presence.num_classes(), "presence_bce_grad");
  const double inv_k = 1.0 / y.num_classes();
  std::vector<double> g(static_cast<std::size_t>(y.num_classes()));
  for (int k = 0; k < y.num_classes(); ++k) {
    const double s = detail::clamp_presence(presence[k]);
    g[k] = (y[k] > 0 ? -1.0 / s : 1.0 / (1.0 - s)) * inv_k;
  }
  return g;
}

// Sparsity surrogate sum_k sqrt(p_bar_k) on the pooled class proportions.
// Ranges from 1 (one class) to sqrt(K) (uniform).
inline double l1_sparsity(std::span<const double> p_bar) {
  double v = 0.0;
  for (double p : p_bar) v += std::sqrt(std::max(p, 0.0));
  return v;
}

inline std::vector<double> l1_sparsity_grad(std::span<const double> p_bar) {
  std::vector<double> g(p_bar.size());
  for (std::size_t k = 0; k < p_bar.size(); ++k) {
    g[k] = 0.5 / std::sqrt(std::max(p_bar[k], kProportionFloor));
  }
  return g;
}

inline double l1_regularizer(const ProbMatrix& probs) {
  if (probs.rows() < 1) throw ValidationError("l1_regularizer: empty probability matrix");
  return l1_sparsity(probs.column_means());
}

inline double l1_distance_loss(const CountVector& y, const ExpectedCounts& lambda_hat) {
  detail::check_k(y.num_classes(), lambda_hat.num_classes(), "l1_distance_loss");
  double loss = 0.0;
  for (int k = 0; k < y.num_classes(); ++k) loss += std::abs(lambda_hat[k] - y[k]);
  return loss;
}

inline std::vector<double> l1_distance_grad(const CountVector& y, const ExpectedCounts& lambda_hat) {
  detail::check_k(y.num_classes(), lambda_hat.num_classes(), "l1_distance_grad");
  std::vector<double> g(static_cast<std::size_t>(y.num_classes()));
  for (int k = 0; k < y.num_classes(); ++k) {
    const double d = lambda_hat[k] - y[k];
    g[k] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
  }
  return g;
}

// Presence probability of each class under a Poisson count with mean lambda:
// P(count >= 1) = 1 - exp(-lambda).
inline PresenceVector presence_from_expected(const ExpectedCounts& lambda_hat) {
  std::vector<double> s(lambda_hat.values().size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = -std::expm1(-lambda_hat[k]);
  return PresenceVector(std::move(s));
}

namespace detail {

inline double regression_term(RegKind kind, const CountVector& y, const ExpectedCounts& lambda_hat,
                              int bag_size) {
  switch (kind) {
    case RegKind::kPoisson: return poisson_loss(y, lambda_hat);
    case RegKind::kKl: {
      std::vector<double> p_bar = lambda_hat.values();
      for (double& v : p_bar) v /= bag_size;
      return kl_divergence(count_proportions(y), p_bar);
    }
    case RegKind::kL1Distance: return l1_distance_loss(y, lambda_hat);
  }
  return 0.0;
}

inline LossBreakdown finish(double reg, double cls, double l1, double beta) {
  return LossBreakdown{reg, cls, l1, reg + cls + beta * l1, beta};
}

}  // namespace detail

// Combined bag loss reg + cls + beta * l1 for an explicit presence vector.
inline LossBreakdown combined_loss(const CountVector& y, const ProbMatrix& probs,
                                   const PresenceVector& presence, double beta, RegKind reg_kind) {
  if (probs.rows() != y.bag_size()) {
    throw ShapeError("combined_loss: " + std::to_string(probs.rows()) + " rows for bag size " +
                     std::to_string(y.bag_size()));
  }
  const ExpectedCounts lambda_hat = probs.column_sums();
  const double reg = detail::regression_term(reg_kind, y, lambda_hat, probs.rows());
  const double cls = presence_bce_loss(y, presence);
  const double l1 = l1_regularizer(probs);
  return detail::finish(reg, cls, l1, beta);
}

struct LossAndGradient {
  LossBreakdown breakdown;
  std::vector<double> d_expected;  // dL/dlambda_k
};

// Loss terms selected by `config`, evaluated as functions of the expected
// counts alone (presence = 1 - exp(-lambda), proportions = lambda / N_B).
inline LossAndGradient loss_from_expected(const CountVector& y, const ExpectedCounts& lambda_hat,
                                          const LossConfig& config) {
  const int k_classes = y.num_classes();
  detail::check_k(k_classes, lambda_hat.num_classes(), "loss_from_expected");
  const int bag_size = y.bag_size();
  if (bag_size < 1) throw ValidationError("loss_from_expected: empty bag");

  LossAndGradient out;
  out.d_expected.assign(static_cast<std::size_t>(k_classes), 0.0);
  std::vector<double> p_bar = lambda_hat.values();
  for (double& v : p_bar) v /= bag_size;

  double reg = 0.0;
  if (config.use_reg) {
    reg = detail::regression_term(config.reg_kind, y, lambda_hat, bag_size);
    std::vector<double> g;
    switch (config.reg_kind) {
      case RegKind::kPoisson: g = poisson_grad(y, lambda_hat); break;
      case RegKind::kKl:
        g = kl_proportion_grad(y, p_bar);
        for (double& v : g) v /= bag_size;
        break;
      case RegKind::kL1Distance: g = l1_distance_grad(y, lambda_hat); break;
    }
    for (int k = 0; k < k_classes; ++k) out.d_expected[k] += g[k];
  }

  double cls = 0.0;
  if (config.use_cls) {
    const PresenceVector presence = presence_from_expected(lambda_hat);
    cls = presence_bce_loss(y, presence);
    const auto g = presence_bce_grad(y, presence);
    for (int k = 0; k < k_classes; ++k) {
      // d(1 - exp(-lambda))/dlambda = exp(-lambda); zero inside the clamp.
      const double s = presence[k];
      const bool clamped = s < kPresenceFloor || s > 1.0 - kPresenceFloor;
      if (!clamped) out.d_expected[k] += g[k] * std::exp(-lambda_hat[k]);
    }
  }

  const double l1 = l1_sparsity(p_bar);
  if (config.beta != 0.0) {
    const auto g = l1_sparsity_grad(p_bar);
    for (int k = 0; k < k_classes; ++k) out.d_expected[k] += config.beta * g[k] / bag_size;
  }

  out.breakdown = detail::finish(reg, cls, l1, config.beta);
  return out;
}

}  // namespace semiweak
