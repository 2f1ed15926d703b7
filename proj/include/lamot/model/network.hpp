// Copyright (c) 2026 lamot contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <lamot/core/random.hpp>
#include <lamot/features/feature_vector.hpp>

namespace lamot::model {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

inline constexpr int kInputDim = features::kFeatureDim;
inline constexpr int kHiddenDim = 64;
inline constexpr int kMlpHiddenLayers = 6;
inline constexpr int kOutputDim = 11;

// Output vector layout.
inline constexpr int kIdxLogitAssoc = 0;
inline constexpr int kIdxLogitMis = 1;
inline constexpr int kIdxScore = 2;
inline constexpr int kIdxState = 3;     // 4 entries
inline constexpr int kIdxLogSigma = 7;  // 4 entries

enum class Topology : uint32_t { kMlp = 1, kLstm = 2 };

template <typename S>
struct ModelOutput {
  Eigen::Matrix<S, 2, 1> assoc_logits;  // [association, mis-association]
  S score;
  Eigen::Matrix<S, 4, 1> state;      // x,y as offsets from the detection
                                     // centroid; vx,vy absolute
  Eigen::Matrix<S, 4, 1> log_sigma;  // per-element std deviations, log space

  static ModelOutput from_vector(const VecX<S>& y) {
    ModelOutput o;
    o.assoc_logits << y(kIdxLogitAssoc), y(kIdxLogitMis);
    o.score = y(kIdxScore);
    o.state = y.template segment<4>(kIdxState);
    o.log_sigma = y.template segment<4>(kIdxLogSigma);
    return o;
  }

  S p_assoc() const {
    const S m = std::max(assoc_logits(0), assoc_logits(1));
    const S ea = std::exp(assoc_logits(0) - m);
    const S em = std::exp(assoc_logits(1) - m);
    return ea / (ea + em);
  }
  bool prefers_association() const { return assoc_logits(0) > assoc_logits(1); }
  Eigen::Matrix<S, 4, 1> sigmas() const { return log_sigma.array().exp(); }
};

template <typename S>
struct Dense {
  MatX<S> w;
  VecX<S> b;

  void init(int out, int in, Rng& rng) {
    w.resize(out, in);
    b = VecX<S>::Zero(out);
    const double limit = std::sqrt(6.0 / in);
    for (int j = 0; j < in; ++j) {
      for (int i = 0; i < out; ++i) {
        w(i, j) = static_cast<S>(rng.uniform(-limit, limit));
      }
    }
  }
  void set_zero() {
    w.setZero();
    b.setZero();
  }
};

namespace detail {

template <typename S>
void check_finite(const MatX<S>& x) {
  if (!x.allFinite()) throw std::invalid_argument("non-finite network input");
}

template <typename S>
MatX<S> feature_matrix(const features::FeatureVector& f) {
  MatX<S> x(kInputDim, 1);
  for (int i = 0; i < kInputDim; ++i) x(i, 0) = static_cast<S>(f[i]);
  return x;
}

}  // namespace detail

// Feed-forward variant: six 64-unit hidden layers with ReLU, linear
// 11-unit head.
template <typename S>
class Mlp {
 public:
  struct Tape {
    MatX<S> input;
    std::vector<MatX<S>> hidden;  // post-ReLU activations per hidden layer
  };

  static Mlp random_init(uint64_t seed) {
    Rng rng(seed);
    Mlp net;
    net.layers_.resize(kMlpHiddenLayers + 1);
    int in = kInputDim;
    for (int l = 0; l < kMlpHiddenLayers; ++l) {
      net.layers_[l].init(kHiddenDim, in, rng);
      in = kHiddenDim;
    }
    net.layers_[kMlpHiddenLayers].init(kOutputDim, in, rng);
    return net;
  }

  static Mlp zero_like() {
    Mlp net = random_init(0);
    for (auto& l : net.layers_) l.set_zero();
    return net;
  }

  bool empty() const { return layers_.empty(); }

  // x: kInputDim x N -> kOutputDim x N
  MatX<S> forward_batch(const MatX<S>& x, Tape* tape = nullptr) const {
    detail::check_finite(x);
    if (tape) {
      tape->input = x;
      tape->hidden.clear();
    }
    MatX<S> a = x;
    for (int l = 0; l < kMlpHiddenLayers; ++l) {
      a = ((layers_[l].w * a).colwise() + layers_[l].b).cwiseMax(S(0));
      if (tape) tape->hidden.push_back(a);
    }
    const auto& head = layers_.back();
    return (head.w * a).colwise() + head.b;
  }

  ModelOutput<S> forward(const features::FeatureVector& f) const {
    const MatX<S> y = forward_batch(detail::feature_matrix<S>(f));
    return ModelOutput<S>::from_vector(y.col(0));
  }

  // Accumulates parameter gradients for d(loss)/d(output) into `grad`.
  void backward(const Tape& tape, const MatX<S>& dy, Mlp& grad) const {
    MatX<S> delta = dy;
    for (int l = kMlpHiddenLayers; l >= 0; --l) {
      const MatX<S>& below = l == 0 ? tape.input : tape.hidden[l - 1];
      grad.layers_[l].w.noalias() += delta * below.transpose();
      grad.layers_[l].b.noalias() += delta.rowwise().sum();
      if (l > 0) {
        delta = (layers_[l].w.transpose() * delta)
                    .cwiseProduct((tape.hidden[l - 1].array() > S(0))
                                      .template cast<S>()
                                      .matrix());
      }
    }
  }

  template <typename F>
  void visit(F&& f) {
    for (auto& l : layers_) {
      f(l.w);
      f(l.b);
    }
  }
  template <typename F>
  void visit(F&& f) const {
    for (const auto& l : layers_) {
      f(l.w);
      f(l.b);
    }
  }

 private:
  std::vector<Dense<S>> layers_;
};

// Per-track recurrent memory; zero at track birth.
template <typename S>
struct TrackMemory {
  VecX<S> h = VecX<S>::Zero(kHiddenDim);
  VecX<S> c = VecX<S>::Zero(kHiddenDim);
};

// Recurrent variant: one-layer ReLU encoder, a single LSTM cell with 64
// hidden units, linear decoder head. Gate row order in the stacked
// matrices is [input; forget; cell; output].
template <typename S>
class Lstm {
 public:
  struct StepTape {
    MatX<S> x, e;           // input, post-ReLU encoding
    MatX<S> i, f, g, o;     // gate activations
    MatX<S> c_prev, h_prev;
    MatX<S> c, tanh_c, h;
  };

  static Lstm random_init(uint64_t seed) {
    Rng rng(seed);
    Lstm net;
    net.enc_.init(kHiddenDim, kInputDim, rng);
    net.wx_.init(4 * kHiddenDim, kHiddenDim, rng);
    Dense<S> uh;
    uh.init(4 * kHiddenDim, kHiddenDim, rng);
    net.uh_w_ = uh.w;
    // forget-gate bias starts open
    net.wx_.b.segment(kHiddenDim, kHiddenDim).setConstant(S(1));
    net.dec_.init(kOutputDim, kHiddenDim, rng);
    return net;
  }

  static Lstm zero_like() {
    Lstm net = random_init(0);
    net.enc_.set_zero();
    net.wx_.set_zero();
    net.uh_w_.setZero();
    net.dec_.set_zero();
    return net;
  }

  bool empty() const { return enc_.w.size() == 0; }

  // Batched step. x: kInputDim x N; h,c: kHiddenDim x N (one column per
  // track memory). Outputs have matching shapes.
  MatX<S> forward_batch(const MatX<S>& x, const MatX<S>& h_prev,
                        const MatX<S>& c_prev, MatX<S>& h_out, MatX<S>& c_out,
                        StepTape* tape = nullptr) const {
    detail::check_finite(x);
    const int n = static_cast<int>(x.cols());
    const int hd = kHiddenDim;
    MatX<S> e = ((enc_.w * x).colwise() + enc_.b).cwiseMax(S(0));
    MatX<S> a = (wx_.w * e + uh_w_ * h_prev).colwise() + wx_.b;
    auto sigmoid = [](const MatX<S>& m) -> MatX<S> {
      return ((-m.array()).exp() + S(1)).inverse().matrix();
    };
    const MatX<S> gi = sigmoid(a.topRows(hd));
    const MatX<S> gf = sigmoid(a.middleRows(hd, hd));
    const MatX<S> gg = a.middleRows(2 * hd, hd).array().tanh().matrix();
    const MatX<S> go = sigmoid(a.bottomRows(hd));
    c_out = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
    const MatX<S> tc = c_out.array().tanh().matrix();
    h_out = go.cwiseProduct(tc);
    if (tape) {
      tape->x = x;
      tape->e = e;
      tape->i = gi;
      tape->f = gf;
      tape->g = gg;
      tape->o = go;
      tape->c_prev = c_prev;
      tape->h_prev = h_prev;
      tape->c = c_out;
      tape->tanh_c = tc;
      tape->h = h_out;
    }
    (void)n;
    return (dec_.w * h_out).colwise() + dec_.b;
  }

  std::pair<ModelOutput<S>, TrackMemory<S>> forward(
      const features::FeatureVector& f, const TrackMemory<S>& mem) const {
    MatX<S> h_out, c_out;
    const MatX<S> y = forward_batch(detail::feature_matrix<S>(f), mem.h, mem.c,
                                    h_out, c_out);
    TrackMemory<S> next;
    next.h = h_out.col(0);
    next.c = c_out.col(0);
    return {ModelOutput<S>::from_vector(y.col(0)), next};
  }

  // One BPTT step. On entry dh/dc hold the gradients flowing in from the
  // future (zero matrices for the last step); on exit they hold the
  // gradients w.r.t. h_prev/c_prev. Parameter gradients accumulate into
  // `grad`.
  void backward_step(const StepTape& t, const MatX<S>& dy, MatX<S>& dh,
                     MatX<S>& dc, Lstm& grad) const {
    const int hd = kHiddenDim;
    grad.dec_.w.noalias() += dy * t.h.transpose();
    grad.dec_.b.noalias() += dy.rowwise().sum();
    MatX<S> dh_total = dec_.w.transpose() * dy + dh;

    const MatX<S> d_o = dh_total.cwiseProduct(t.tanh_c);
    MatX<S> dc_total =
        dh_total.cwiseProduct(t.o).cwiseProduct(
            (S(1) - t.tanh_c.array().square()).matrix()) +
        dc;
    const MatX<S> d_f = dc_total.cwiseProduct(t.c_prev);
    const MatX<S> d_i = dc_total.cwiseProduct(t.g);
    const MatX<S> d_g = dc_total.cwiseProduct(t.i);

    MatX<S> da(4 * hd, dy.cols());
    da.topRows(hd) =
        d_i.cwiseProduct(t.i).cwiseProduct((S(1) - t.i.array()).matrix());
    da.middleRows(hd, hd) =
        d_f.cwiseProduct(t.f).cwiseProduct((S(1) - t.f.array()).matrix());
    da.middleRows(2 * hd, hd) =
        d_g.cwiseProduct((S(1) - t.g.array().square()).matrix());
    da.bottomRows(hd) =
        d_o.cwiseProduct(t.o).cwiseProduct((S(1) - t.o.array()).matrix());

    grad.wx_.w.noalias() += da * t.e.transpose();
    grad.wx_.b.noalias() += da.rowwise().sum();
    grad.uh_w_.noalias() += da * t.h_prev.transpose();

    MatX<S> de = (wx_.w.transpose() * da)
                     .cwiseProduct(
                         (t.e.array() > S(0)).template cast<S>().matrix());
    grad.enc_.w.noalias() += de * t.x.transpose();
    grad.enc_.b.noalias() += de.rowwise().sum();

    dh = uh_w_.transpose() * da;
    dc = dc_total.cwiseProduct(t.f);
  }

  template <typename F>
  void visit(F&& f) {
    f(enc_.w);
    f(enc_.b);
    f(wx_.w);
    f(wx_.b);
    f(uh_w_);
    f(dec_.w);
    f(dec_.b);
  }
  template <typename F>
  void visit(F&& f) const {
    f(enc_.w);
    f(enc_.b);
    f(wx_.w);
    f(wx_.b);
    f(uh_w_);
    f(dec_.w);
    f(dec_.b);
  }

 private:
  Dense<S> enc_;
  Dense<S> wx_;   // stacked gate weights applied to the encoded input
  MatX<S> uh_w_;  // stacked gate weights applied to h_prev
  Dense<S> dec_;
};

template <typename Net>
int parameter_count(const Net& net) {
  int n = 0;
  net.visit([&](const auto& m) { n += static_cast<int>(m.size()); });
  return n;
}

// Flat data views over every parameter block, in serialization order.
template <typename Net, typename S>
std::vector<std::pair<S*, int>> parameter_blocks(Net& net) {
  std::vector<std::pair<S*, int>> blocks;
  net.visit([&](auto& m) {
    blocks.push_back({m.data(), static_cast<int>(m.size())});
  });
  return blocks;
}

// SGD-with-momentum step shared by both architectures.
template <typename Net, typename S>
void apply_sgd_update(Net& net, Net& grad, Net& momentum, S lr, S beta) {
  auto ws = parameter_blocks<Net, S>(net);
  auto gs = parameter_blocks<Net, S>(grad);
  auto vs = parameter_blocks<Net, S>(momentum);
  for (size_t k = 0; k < ws.size(); ++k) {
    for (int i = 0; i < ws[k].second; ++i) {
      vs[k].first[i] = beta * vs[k].first[i] - lr * gs[k].first[i];
      ws[k].first[i] += vs[k].first[i];
    }
  }
}

template <typename Net>
void zero_grads(Net& net) {
  net.visit([](auto& m) { m.setZero(); });
}

}  // namespace lamot::model
