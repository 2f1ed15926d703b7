// Copyright (c) 2026 lamot contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>

#include <lamot/model/network.hpp>

namespace lamot::train {

struct LossWeights {
  double w_score = 0.02;
  double w_state = 0.06;
};

// Supervision for one candidate pair. Null-detection positives carry no
// score/state target, so those terms are masked.
struct Target {
  bool is_association = false;
  bool has_score_state = false;
  double score = 0.0;
  Eigen::Vector4d state = Eigen::Vector4d::Zero();  // position as offset from
                                                    // the detection centroid,
                                                    // velocity absolute
};

// Ablation switches; the full model trains with everything on.
struct LossMask {
  bool use_prob = true;
  bool use_score = true;
  bool use_state = true;
};

inline double binary_cross_entropy(const Eigen::Vector2d& logits, bool is_assoc) {
  // -log softmax(target logit), computed stably
  const double m = std::max(logits(0), logits(1));
  const double lse = m + std::log(std::exp(logits(0) - m) + std::exp(logits(1) - m));
  return lse - (is_assoc ? logits(0) : logits(1));
}

inline double score_loss(const model::ModelOutput<double>& out, const Target& t) {
  if (!t.is_association || !t.has_score_state) return 0.0;
  const double d = out.score - t.score;
  return d * d;
}

inline double assoc_loss(const model::ModelOutput<double>& out, const Target& t,
                         const LossWeights& w, const LossMask& mask = {}) {
  double loss = 0.0;
  if (mask.use_prob) {
    loss += binary_cross_entropy(out.assoc_logits, t.is_association);
  }
  if (mask.use_score) {
    loss += w.w_score * score_loss(out, t);
  }
  return loss;
}

// Heteroscedastic regression loss: sum_i (s_i - s*_i)^2 / (2 sigma_i^2)
// + log sigma_i. Minimized at sigma_i = |residual_i| with value
// 1/2 + log|residual_i| per element.
inline double state_loss(const model::ModelOutput<double>& out,
                         const Eigen::Vector4d& target_state) {
  double loss = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double d = out.state(i) - target_state(i);
    const double inv_var = std::exp(-2.0 * out.log_sigma(i));
    loss += 0.5 * d * d * inv_var + out.log_sigma(i);
  }
  return loss;
}

inline double total_loss(const model::ModelOutput<double>& out, const Target& t,
                         const LossWeights& w, const LossMask& mask = {}) {
  double loss = assoc_loss(out, t, w, mask);
  if (mask.use_state && t.is_association && t.has_score_state) {
    loss += w.w_state * state_loss(out, t.state);
  }
  return loss;
}

// d(total_loss)/d(raw 11-vector network output).
inline Eigen::Matrix<double, model::kOutputDim, 1> total_loss_grad(
    const model::ModelOutput<double>& out, const Target& t, const LossWeights& w,
    const LossMask& mask = {}) {
  Eigen::Matrix<double, model::kOutputDim, 1> g;
  g.setZero();
  if (mask.use_prob) {
    const double m = std::max(out.assoc_logits(0), out.assoc_logits(1));
    const double e0 = std::exp(out.assoc_logits(0) - m);
    const double e1 = std::exp(out.assoc_logits(1) - m);
    const double p0 = e0 / (e0 + e1);
    g(model::kIdxLogitAssoc) = p0 - (t.is_association ? 1.0 : 0.0);
    g(model::kIdxLogitMis) = (1.0 - p0) - (t.is_association ? 0.0 : 1.0);
  }
  const bool supervised = t.is_association && t.has_score_state;
  if (mask.use_score && supervised) {
    g(model::kIdxScore) = w.w_score * 2.0 * (out.score - t.score);
  }
  if (mask.use_state && supervised) {
    for (int i = 0; i < 4; ++i) {
      const double d = out.state(i) - t.state(i);
      const double inv_var = std::exp(-2.0 * out.log_sigma(i));
      g(model::kIdxState + i) = w.w_state * d * inv_var;
      g(model::kIdxLogSigma + i) = w.w_state * (1.0 - d * d * inv_var);
    }
  }
  return g;
}

}  // namespace lamot::train
