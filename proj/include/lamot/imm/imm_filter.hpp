// Copyright (c) 2026 lamot contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include <lamot/core/types.hpp>

namespace lamot::imm {

using Eigen::Matrix4d;
using Eigen::MatrixXd;
using Eigen::Vector4d;
using Eigen::VectorXd;

// Canonical component order shared by all models: [x, y, vx, vy, ax, ay].
// A model's state is the leading `dim()` entries.
enum class MotionModelKind { kStatic, kConstVelocity, kAccelerating };

struct MotionModel {
  MotionModelKind kind = MotionModelKind::kConstVelocity;
  // Continuous-time noise intensity: position random walk (static),
  // white-noise acceleration (cv), white-noise jerk (ca).
  double noise_intensity = 0.5;

  int dim() const {
    switch (kind) {
      case MotionModelKind::kStatic: return 2;
      case MotionModelKind::kConstVelocity: return 4;
      case MotionModelKind::kAccelerating: return 6;
    }
    return 4;
  }

  MatrixXd transition(double dt) const {
    const int n = dim();
    MatrixXd f = MatrixXd::Identity(n, n);
    if (kind != MotionModelKind::kStatic) {
      f(0, 2) = dt;
      f(1, 3) = dt;
    }
    if (kind == MotionModelKind::kAccelerating) {
      const double hdt2 = 0.5 * dt * dt;
      f(0, 4) = hdt2;
      f(1, 5) = hdt2;
      f(2, 4) = dt;
      f(3, 5) = dt;
    }
    return f;
  }

  MatrixXd process_noise(double dt) const {
    const int n = dim();
    MatrixXd q = MatrixXd::Zero(n, n);
    const double s = noise_intensity;
    const double dt2 = dt * dt, dt3 = dt2 * dt, dt4 = dt3 * dt, dt5 = dt4 * dt;
    switch (kind) {
      case MotionModelKind::kStatic:
        q(0, 0) = q(1, 1) = s * dt;
        break;
      case MotionModelKind::kConstVelocity:
        for (int a = 0; a < 2; ++a) {
          q(a, a) = s * dt3 / 3.0;
          q(a, a + 2) = q(a + 2, a) = s * dt2 / 2.0;
          q(a + 2, a + 2) = s * dt;
        }
        break;
      case MotionModelKind::kAccelerating:
        for (int a = 0; a < 2; ++a) {
          q(a, a) = s * dt5 / 20.0;
          q(a, a + 2) = q(a + 2, a) = s * dt4 / 8.0;
          q(a, a + 4) = q(a + 4, a) = s * dt3 / 6.0;
          q(a + 2, a + 2) = s * dt3 / 3.0;
          q(a + 2, a + 4) = q(a + 4, a + 2) = s * dt2 / 2.0;
          q(a + 4, a + 4) = s * dt;
        }
        break;
    }
    return q;
  }
};

// Position-only (dim 2) or position+velocity (dim 4) measurement with a
// diagonal covariance.
struct Observation {
  VectorXd z;       // [x, y] or [x, y, vx, vy]
  VectorXd r_diag;  // variances, all > 0

  static Observation position(double x, double y, double sigma) {
    Observation o;
    o.z = Eigen::Vector2d(x, y);
    o.r_diag = Eigen::Vector2d::Constant(sigma * sigma);
    return o;
  }
  static Observation full_state(const Vector4d& z, const Vector4d& sigma) {
    Observation o;
    o.z = z;
    o.r_diag = sigma.array().square();
    return o;
  }
};

struct ImmConfig {
  std::vector<MotionModel> models = {
      {MotionModelKind::kStatic, 0.01},
      {MotionModelKind::kConstVelocity, 0.5},
      {MotionModelKind::kAccelerating, 1.0}};
  // Row-stochastic Markov switching matrix; empty -> built from defaults.
  MatrixXd transition_prob;
  double self_transition = 0.94;
  // Variance assigned to velocity / acceleration components when a
  // lower-dimensional state is embedded into a larger model space or fused.
  double embed_vel_var = 0.01;
  double embed_acc_var = 0.25;

  MatrixXd markov_matrix() const {
    const int n = static_cast<int>(models.size());
    if (transition_prob.rows() == n && transition_prob.cols() == n) {
      return transition_prob;
    }
    if (n == 1) return MatrixXd::Ones(1, 1);
    const double off = (1.0 - self_transition) / (n - 1);
    MatrixXd pi = MatrixXd::Constant(n, n, off);
    pi.diagonal().setConstant(self_transition);
    return pi;
  }
};

struct ImmState {
  std::vector<VectorXd> x;  // per-model means (model-local dimension)
  std::vector<MatrixXd> P;
  VectorXd mu;              // model probabilities, sum 1

  Vector4d fused_mean = Vector4d::Zero();
  Matrix4d fused_cov = Matrix4d::Identity();
  StateEstimate fused;
};

namespace detail {

inline void symmetrize(MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

inline void check_psd(const MatrixXd& p, const char* what) {
  Eigen::LLT<MatrixXd> llt(p);
  if (llt.info() != Eigen::Success) throw NumericalError(what);
}

}  // namespace detail

// Whitened residual norm sqrt(nu^T S^-1 nu).
inline double mahalanobis_quadform(const VectorXd& nu, const MatrixXd& s) {
  Eigen::LLT<MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("singular innovation covariance");
  }
  return std::sqrt(nu.dot(llt.solve(nu)));
}

class ImmFilter {
 public:
  explicit ImmFilter(ImmConfig cfg = {})
      : cfg_(std::move(cfg)), pi_(cfg_.markov_matrix()) {}

  const ImmConfig& config() const { return cfg_; }
  int model_count() const { return static_cast<int>(cfg_.models.size()); }

  ImmState init_track(double x, double y, double pos_var, double vel_var) const {
    ImmState s;
    const int n = model_count();
    s.mu = VectorXd::Constant(n, 1.0 / n);
    for (const MotionModel& m : cfg_.models) {
      const int d = m.dim();
      VectorXd mean = VectorXd::Zero(d);
      mean(0) = x;
      mean(1) = y;
      VectorXd dvar(6);
      dvar << pos_var, pos_var, vel_var, vel_var, cfg_.embed_acc_var,
          cfg_.embed_acc_var;
      s.x.push_back(mean);
      s.P.push_back(dvar.head(d).asDiagonal());
    }
    refresh_fusion(s);
    return s;
  }

  // Standard IMM cycle half: interaction (mixing) followed by model-matched
  // propagation. Model probabilities become the Markov-predicted ones.
  ImmState predict(const ImmState& in, double dt) const {
    const int n = model_count();
    ImmState out = in;
    const VectorXd c = pi_.transpose() * in.mu;
    for (int j = 0; j < n; ++j) {
      const int dj = cfg_.models[j].dim();
      VectorXd x0 = VectorXd::Zero(dj);
      if (c(j) > 1e-300) {
        for (int i = 0; i < n; ++i) {
          const double w = pi_(i, j) * in.mu(i) / c(j);
          x0 += w * convert(in.x[i], dj);
        }
      } else {
        x0 = convert(in.x[j], dj);
      }
      MatrixXd p0 = MatrixXd::Zero(dj, dj);
      if (c(j) > 1e-300) {
        for (int i = 0; i < n; ++i) {
          const double w = pi_(i, j) * in.mu(i) / c(j);
          const VectorXd dx = convert(in.x[i], dj) - x0;
          p0 += w * (convert_cov(in.P[i], dj) + dx * dx.transpose());
        }
      } else {
        p0 = convert_cov(in.P[j], dj);
      }
      const MatrixXd f = cfg_.models[j].transition(dt);
      out.x[j] = f * x0;
      out.P[j] = f * p0 * f.transpose() + cfg_.models[j].process_noise(dt);
      detail::symmetrize(out.P[j]);
      detail::check_psd(out.P[j], "non-PSD covariance after propagation");
    }
    out.mu = c;
    refresh_fusion(out);
    return out;
  }

  // Prediction with no measurement; identical propagation, kept as a named
  // operation for unobserved tracks.
  ImmState ballistic_rollout(const ImmState& in, double dt) const {
    return predict(in, dt);
  }

  ImmState update(const ImmState& in, const Observation& obs) const {
    const int m = static_cast<int>(obs.z.size());
    if (m != 2 && m != 4) {
      throw std::invalid_argument("observation must be 2D or 4D");
    }
    if ((obs.r_diag.array() <= 0.0).any()) {
      throw std::invalid_argument("observation covariance must be positive");
    }
    const int n = model_count();
    ImmState out = in;
    VectorXd loglik(n);
    for (int j = 0; j < n; ++j) {
      const int dj = cfg_.models[j].dim();
      const MatrixXd h = measurement_matrix(m, dj);
      const VectorXd nu = obs.z - h * in.x[j];
      MatrixXd s = h * in.P[j] * h.transpose();
      s.diagonal() += obs.r_diag;
      Eigen::LLT<MatrixXd> llt(s);
      if (llt.info() != Eigen::Success) {
        throw NumericalError("singular innovation covariance");
      }
      const MatrixXd k = llt.solve(h * in.P[j]).transpose();
      out.x[j] = in.x[j] + k * nu;
      const MatrixXd ikh = MatrixXd::Identity(dj, dj) - k * h;
      out.P[j] = ikh * in.P[j] * ikh.transpose() +
                 k * MatrixXd(obs.r_diag.asDiagonal()) * k.transpose();
      detail::symmetrize(out.P[j]);
      double logdet = 0.0;
      for (int i = 0; i < m; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
      loglik(j) = -0.5 * (m * std::log(2.0 * M_PI) + logdet + nu.dot(llt.solve(nu)));
    }
    // mu update via likelihoods, computed in log space.
    const double shift = loglik.maxCoeff();
    VectorXd w = in.mu.array() * (loglik.array() - shift).exp();
    const double total = w.sum();
    out.mu = total > 0.0 ? VectorXd(w / total) : in.mu;
    refresh_fusion(out);
    return out;
  }

  // Whitened innovation norm against the fused state.
  double mahalanobis(const ImmState& state, const Observation& obs) const {
    const int m = static_cast<int>(obs.z.size());
    if (m != 2 && m != 4) {
      throw std::invalid_argument("observation must be 2D or 4D");
    }
    const MatrixXd h = measurement_matrix(m, 4);
    const VectorXd nu = obs.z - h * state.fused_mean;
    MatrixXd s = h * state.fused_cov * h.transpose();
    s.diagonal() += obs.r_diag;
    return mahalanobis_quadform(nu, s);
  }

 private:
  // Converts a canonical-prefix state vector between model dimensions.
  static VectorXd convert(const VectorXd& x, int to_dim) {
    VectorXd out = VectorXd::Zero(to_dim);
    const int k = std::min<int>(static_cast<int>(x.size()), to_dim);
    out.head(k) = x.head(k);
    return out;
  }

  MatrixXd convert_cov(const MatrixXd& p, int to_dim) const {
    const int from = static_cast<int>(p.rows());
    if (from >= to_dim) return p.topLeftCorner(to_dim, to_dim);
    MatrixXd out = MatrixXd::Zero(to_dim, to_dim);
    out.topLeftCorner(from, from) = p;
    for (int i = from; i < to_dim; ++i) {
      out(i, i) = i < 4 ? cfg_.embed_vel_var : cfg_.embed_acc_var;
    }
    return out;
  }

  static MatrixXd measurement_matrix(int obs_dim, int state_dim) {
    MatrixXd h = MatrixXd::Zero(obs_dim, state_dim);
    for (int i = 0; i < obs_dim; ++i) {
      if (i < state_dim) h(i, i) = 1.0;
    }
    return h;
  }

  void refresh_fusion(ImmState& s) const {
    const int n = model_count();
    Vector4d mean = Vector4d::Zero();
    for (int j = 0; j < n; ++j) mean += s.mu(j) * Vector4d(convert(s.x[j], 4));
    Matrix4d cov = Matrix4d::Zero();
    for (int j = 0; j < n; ++j) {
      const Vector4d dx = Vector4d(convert(s.x[j], 4)) - mean;
      cov += s.mu(j) * (Matrix4d(convert_cov(s.P[j], 4)) + dx * dx.transpose());
    }
    detail::symmetrize(cov);
    s.fused_mean = mean;
    s.fused_cov = cov;
    s.fused.x = mean(0);
    s.fused.y = mean(1);
    s.fused.vx = mean(2);
    s.fused.vy = mean(3);
    s.fused.sigma_x = std::sqrt(std::max(cov(0, 0), 0.0));
    s.fused.sigma_y = std::sqrt(std::max(cov(1, 1), 0.0));
    s.fused.sigma_vx = std::sqrt(std::max(cov(2, 2), 0.0));
    s.fused.sigma_vy = std::sqrt(std::max(cov(3, 3), 0.0));
  }

  ImmConfig cfg_;
  MatrixXd pi_;
};

}  // namespace lamot::imm
