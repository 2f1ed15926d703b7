// Copyright (c) 2026 lamot contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <lamot/model/network.hpp>
#include <lamot/train/label_gen.hpp>
#include <lamot/train/loss.hpp>

namespace lamot::train {

struct TrainError : std::runtime_error {
  explicit TrainError(const std::string& what) : std::runtime_error(what) {}
};

struct TrainConfig {
  int epochs = 40;
  int batch_size = 128;
  double lr = 1e-3;
  double momentum = 0.9;
  double lr_decay = 0.5;
  int plateau_patience = 3;
  int bptt_window = 20;  // frames per truncated sequence
  double val_fraction = 0.2;
  LossWeights weights;
  LossMask mask;
  uint64_t seed = 7;
  bool verbose = false;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double lr = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_val_loss = 0.0;
};

namespace detail {

// Validation split is by sequence so recurrent state stays meaningful.
inline std::set<uint64_t> validation_sequences(const Dataset& ds, double fraction) {
  std::set<uint64_t> seqs;
  for (const auto& e : ds.examples) seqs.insert(e.sequence_id);
  const size_t n_val = std::max<size_t>(
      1, static_cast<size_t>(std::lround(seqs.size() * fraction)));
  std::set<uint64_t> val;
  for (auto it = seqs.rbegin(); it != seqs.rend() && val.size() < n_val; ++it) {
    val.insert(*it);
  }
  if (val.size() == seqs.size() && !val.empty()) val.erase(*val.begin());
  return val;
}

inline void check_finite_loss(double loss) {
  if (!std::isfinite(loss)) {
    throw TrainError("training diverged: non-finite loss");
  }
}

template <typename S>
model::MatX<S> batch_features(const Dataset& ds, const std::vector<size_t>& idx) {
  model::MatX<S> x(model::kInputDim, static_cast<int>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) {
    for (int j = 0; j < model::kInputDim; ++j) {
      x(j, static_cast<int>(k)) = static_cast<S>(ds.examples[idx[k]].feat[j]);
    }
  }
  return x;
}

}  // namespace detail

// Mini-batch SGD with momentum on shuffled examples.
inline TrainHistory train_mlp(model::Mlp<double>& net, const Dataset& ds,
                              const TrainConfig& cfg) {
  using model::MatX;
  const std::set<uint64_t> val_seqs = detail::validation_sequences(ds, cfg.val_fraction);
  std::vector<size_t> train_idx, val_idx;
  for (size_t i = 0; i < ds.examples.size(); ++i) {
    (val_seqs.count(ds.examples[i].sequence_id) ? val_idx : train_idx).push_back(i);
  }
  if (train_idx.empty()) throw TrainError("empty training set");

  Rng rng(cfg.seed);
  model::Mlp<double> grads = model::Mlp<double>::zero_like();
  model::Mlp<double> velocity = model::Mlp<double>::zero_like();
  model::Mlp<double> best = net;

  TrainHistory hist;
  double lr = cfg.lr;
  int since_best = 0;

  auto evaluate_split = [&](const std::vector<size_t>& idx, double& loss_out,
                            double& acc_out) {
    if (idx.empty()) {
      loss_out = 0.0;
      acc_out = 0.0;
      return;
    }
    double loss = 0.0;
    int correct = 0;
    const size_t chunk = 512;
    for (size_t start = 0; start < idx.size(); start += chunk) {
      const std::vector<size_t> part(
          idx.begin() + start,
          idx.begin() + std::min(idx.size(), start + chunk));
      const MatX<double> y = net.forward_batch(detail::batch_features<double>(ds, part));
      for (size_t k = 0; k < part.size(); ++k) {
        const auto out = model::ModelOutput<double>::from_vector(y.col(k));
        const Target& t = ds.examples[part[k]].target;
        loss += total_loss(out, t, cfg.weights, cfg.mask);
        if (out.prefers_association() == t.is_association) correct += 1;
      }
    }
    loss_out = loss / idx.size();
    acc_out = static_cast<double>(correct) / idx.size();
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(train_idx);
    double epoch_loss = 0.0;
    for (size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
      const std::vector<size_t> batch(
          train_idx.begin() + start,
          train_idx.begin() + std::min(train_idx.size(), start + cfg.batch_size));
      typename model::Mlp<double>::Tape tape;
      const MatX<double> y =
          net.forward_batch(detail::batch_features<double>(ds, batch), &tape);
      MatX<double> dy(model::kOutputDim, static_cast<int>(batch.size()));
      for (size_t k = 0; k < batch.size(); ++k) {
        const auto out = model::ModelOutput<double>::from_vector(y.col(k));
        const Target& t = ds.examples[batch[k]].target;
        epoch_loss += total_loss(out, t, cfg.weights, cfg.mask);
        dy.col(k) = total_loss_grad(out, t, cfg.weights, cfg.mask) /
                    static_cast<double>(batch.size());
      }
      model::zero_grads(grads);
      net.backward(tape, dy, grads);
      model::apply_sgd_update(net, grads, velocity, lr, cfg.momentum);
    }
    epoch_loss /= train_idx.size();
    detail::check_finite_loss(epoch_loss);

    EpochStats s;
    s.train_loss = epoch_loss;
    s.lr = lr;
    const std::vector<size_t>& probe = val_idx.empty() ? train_idx : val_idx;
    evaluate_split(probe, s.val_loss, s.val_accuracy);
    hist.epochs.push_back(s);

    if (hist.best_epoch < 0 || s.val_loss < hist.best_val_loss) {
      hist.best_epoch = epoch;
      hist.best_val_loss = s.val_loss;
      best = net;
      since_best = 0;
    } else if (++since_best >= cfg.plateau_patience) {
      lr *= cfg.lr_decay;
      since_best = 0;
    }
  }
  net = best;
  return hist;
}

namespace detail {

struct SequenceLayout {
  // frame-major order of example indices for one sequence
  std::vector<std::pair<uint32_t, std::vector<size_t>>> frames;
};

inline std::map<uint64_t, SequenceLayout> layout_sequences(
    const Dataset& ds, const std::set<uint64_t>& subset, bool invert) {
  std::map<uint64_t, std::map<uint32_t, std::vector<size_t>>> grouped;
  for (size_t i = 0; i < ds.examples.size(); ++i) {
    const bool in_subset = subset.count(ds.examples[i].sequence_id) > 0;
    if (in_subset == invert) continue;
    grouped[ds.examples[i].sequence_id][ds.examples[i].frame_index].push_back(i);
  }
  std::map<uint64_t, SequenceLayout> out;
  for (auto& [seq, frames] : grouped) {
    SequenceLayout layout;
    for (auto& [frame, idx] : frames) layout.frames.push_back({frame, idx});
    out[seq] = std::move(layout);
  }
  return out;
}

}  // namespace detail

// Truncated BPTT over per-track memory chains. Within a frame every
// candidate example reads the track's pre-frame memory; the chain example
// (the best true association) writes the next one. Gradients flow backwards
// through the chain and into every branch inside the window.
inline TrainHistory train_lstm(model::Lstm<double>& net, const Dataset& ds,
                               const TrainConfig& cfg) {
  using model::MatX;
  using Memory = model::TrackMemory<double>;
  const std::set<uint64_t> val_seqs = detail::validation_sequences(ds, cfg.val_fraction);
  auto train_layout = detail::layout_sequences(ds, val_seqs, true);
  auto val_layout = detail::layout_sequences(ds, val_seqs, false);
  if (train_layout.empty()) throw TrainError("empty training set");

  model::Lstm<double> grads = model::Lstm<double>::zero_like();
  model::Lstm<double> velocity = model::Lstm<double>::zero_like();
  model::Lstm<double> best = net;

  TrainHistory hist;
  double lr = cfg.lr;
  int since_best = 0;

  struct StepRecord {
    size_t example;
    typename model::Lstm<double>::StepTape tape;
    MatX<double> y;
  };

  auto run_validation = [&](double& loss_out, double& acc_out) {
    double loss = 0.0;
    int correct = 0, count = 0;
    auto& layout = val_layout.empty() ? train_layout : val_layout;
    for (auto& [seq, sl] : layout) {
      std::unordered_map<uint64_t, Memory> memory;
      for (auto& [frame, idx] : sl.frames) {
        for (size_t i : idx) {
          const TrainingExample& e = ds.examples[i];
          Memory& mem = memory[e.track_id];
          MatX<double> x(model::kInputDim, 1), h_out, c_out;
          for (int j = 0; j < model::kInputDim; ++j) x(j, 0) = e.feat[j];
          const MatX<double> y = net.forward_batch(x, mem.h, mem.c, h_out, c_out);
          const auto out = model::ModelOutput<double>::from_vector(y.col(0));
          loss += total_loss(out, e.target, cfg.weights, cfg.mask);
          if (out.prefers_association() == e.target.is_association) correct += 1;
          count += 1;
          if (e.chain) {
            mem.h = h_out;
            mem.c = c_out;
          }
        }
      }
    }
    loss_out = count > 0 ? loss / count : 0.0;
    acc_out = count > 0 ? static_cast<double>(correct) / count : 0.0;
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    size_t epoch_count = 0;
    for (auto& [seq, sl] : train_layout) {
      std::unordered_map<uint64_t, Memory> memory;
      size_t frame_pos = 0;
      while (frame_pos < sl.frames.size()) {
        const size_t window_end =
            std::min(sl.frames.size(), frame_pos + cfg.bptt_window);
        std::vector<std::vector<StepRecord>> window;  // per frame in window

        // forward through the window
        for (size_t f = frame_pos; f < window_end; ++f) {
          std::vector<StepRecord> frame_records;
          for (size_t i : sl.frames[f].second) {
            const TrainingExample& e = ds.examples[i];
            Memory& mem = memory[e.track_id];
            StepRecord rec;
            rec.example = i;
            MatX<double> x(model::kInputDim, 1), h_out, c_out;
            for (int j = 0; j < model::kInputDim; ++j) x(j, 0) = e.feat[j];
            rec.y = net.forward_batch(x, mem.h, mem.c, h_out, c_out, &rec.tape);
            if (e.chain) {
              mem.h = h_out;
              mem.c = c_out;
            }
            frame_records.push_back(std::move(rec));
          }
          window.push_back(std::move(frame_records));
        }

        // backward, window-local truncation
        size_t n_examples = 0;
        for (const auto& fr : window) n_examples += fr.size();
        if (n_examples == 0) {
          frame_pos = window_end;
          continue;
        }
        model::zero_grads(grads);
        std::unordered_map<uint64_t, std::pair<MatX<double>, MatX<double>>> dmem;
        const double inv_n = 1.0 / static_cast<double>(n_examples);
        for (size_t f = window.size(); f-- > 0;) {
          std::unordered_map<uint64_t, std::pair<MatX<double>, MatX<double>>> dprev;
          for (size_t r = window[f].size(); r-- > 0;) {
            StepRecord& rec = window[f][r];
            const TrainingExample& e = ds.examples[rec.example];
            const auto out = model::ModelOutput<double>::from_vector(rec.y.col(0));
            epoch_loss += total_loss(out, e.target, cfg.weights, cfg.mask);
            MatX<double> dy =
                (total_loss_grad(out, e.target, cfg.weights, cfg.mask) * inv_n)
                    .eval();
            MatX<double> dh = MatX<double>::Zero(model::kHiddenDim, 1);
            MatX<double> dc = MatX<double>::Zero(model::kHiddenDim, 1);
            if (e.chain) {
              auto it = dmem.find(e.track_id);
              if (it != dmem.end()) {
                dh = it->second.first;
                dc = it->second.second;
              }
            }
            net.backward_step(rec.tape, dy, dh, dc, grads);
            auto [pit, inserted] = dprev.try_emplace(
                e.track_id, MatX<double>::Zero(model::kHiddenDim, 1),
                MatX<double>::Zero(model::kHiddenDim, 1));
            pit->second.first += dh;
            pit->second.second += dc;
          }
          for (auto& [track, g] : dprev) dmem[track] = std::move(g);
        }
        epoch_count += n_examples;
        model::apply_sgd_update(net, grads, velocity, lr, cfg.momentum);
        frame_pos = window_end;
      }
    }
    epoch_loss /= std::max<size_t>(epoch_count, 1);
    detail::check_finite_loss(epoch_loss);

    EpochStats s;
    s.train_loss = epoch_loss;
    s.lr = lr;
    run_validation(s.val_loss, s.val_accuracy);
    hist.epochs.push_back(s);

    if (hist.best_epoch < 0 || s.val_loss < hist.best_val_loss) {
      hist.best_epoch = epoch;
      hist.best_val_loss = s.val_loss;
      best = net;
      since_best = 0;
    } else if (++since_best >= cfg.plateau_patience) {
      lr *= cfg.lr_decay;
      since_best = 0;
    }
  }
  net = best;
  return hist;
}

inline void write_history_csv(const std::string& path, const TrainHistory& hist) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "epoch,train_loss,val_loss,val_accuracy,lr\n";
  char buf[160];
  for (size_t i = 0; i < hist.epochs.size(); ++i) {
    const EpochStats& s = hist.epochs[i];
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g\n", i, s.train_loss,
                  s.val_loss, s.val_accuracy, s.lr);
    out << buf;
  }
}

}  // namespace lamot::train
