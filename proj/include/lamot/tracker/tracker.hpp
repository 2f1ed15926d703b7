// Copyright (c) 2026 lamot contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <lamot/assoc/assignment.hpp>
#include <lamot/assoc/candidates.hpp>
#include <lamot/core/types.hpp>
#include <lamot/features/feature_vector.hpp>
#include <lamot/imm/imm_filter.hpp>
#include <lamot/model/network.hpp>

namespace lamot {

enum class AssocMode { kIou, kL2, kMahalanobis, kLearnedMlp, kLearnedLstm };

inline const char* to_string(AssocMode m) {
  switch (m) {
    case AssocMode::kIou: return "iou";
    case AssocMode::kL2: return "l2";
    case AssocMode::kMahalanobis: return "mahalanobis";
    case AssocMode::kLearnedMlp: return "learned-mlp";
    case AssocMode::kLearnedLstm: return "learned-lstm";
  }
  return "?";
}

inline std::optional<AssocMode> parse_assoc_mode(const std::string& s) {
  if (s == "iou") return AssocMode::kIou;
  if (s == "l2") return AssocMode::kL2;
  if (s == "mahalanobis") return AssocMode::kMahalanobis;
  if (s == "learned-mlp") return AssocMode::kLearnedMlp;
  if (s == "learned-lstm") return AssocMode::kLearnedLstm;
  return std::nullopt;
}

inline bool is_learned(AssocMode m) {
  return m == AssocMode::kLearnedMlp || m == AssocMode::kLearnedLstm;
}

struct SensorNoiseTable {
  double lidar_sigma = 0.1;
  double camera_sigma = 0.5;
  double sigma(SensorChannel s) const {
    return s == SensorChannel::kLidar ? lidar_sigma : camera_sigma;
  }
};

struct TrackerConfig {
  double gating_radius = 4.0;
  int max_unseen = 5;  // frames a track may coast before removal
  AssocMode mode = AssocMode::kMahalanobis;
  SensorNoiseTable sensor_noise;
  imm::ImmConfig imm;

  // Tentative tracks need `confirm_min_hits` hits within their first
  // `confirm_window` frames to enter the output; off -> emit everything.
  bool confirmation_enabled = true;
  int confirm_min_hits = 2;
  int confirm_window = 3;

  double birth_vel_sigma_ped = 2.0;
  double birth_vel_sigma_bike = 4.0;

  // Learned-mode behavior. The reduced configurations exist for the
  // probability/score ablations.
  bool probability_filter = true;  // keep pairs with p_assoc > p_misassoc
  bool rank_by_score = true;       // greedy key; otherwise 1 - p_assoc
  double score_threshold = 0.1;    // candidate cut when the filter is off
  bool use_learned_state = true;   // 4D refined observation vs raw centroid
  double min_learned_sigma = 1e-3;
};

struct Track {
  uint64_t id = 0;
  ObjectClass cls = ObjectClass::kPedestrian;
  imm::ImmState state;
  model::TrackMemory<float> memory;
  StateEstimate previous;  // fused state at the end of the previous frame
  BevBox last_box;
  Timestamp last_update_time = 0.0;
  int frames_since_seen = 0;
  int hit_count = 0;
  int age_frames = 0;
  bool confirmed = false;
};

struct FrameLog {
  Timestamp time = 0.0;
  std::vector<TrackRecord> tracks;
  // per-frame association diagnostics
  size_t candidates_gated = 0;
  size_t candidates_kept = 0;
  size_t matches = 0;
};

struct TrackerError : std::runtime_error {
  explicit TrackerError(const std::string& what) : std::runtime_error(what) {}
};

class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg = {})
      : cfg_(std::move(cfg)), filter_(cfg_.imm) {}

  void set_mlp(model::Mlp<float> net) { mlp_ = std::move(net); }
  void set_lstm(model::Lstm<float> net) { lstm_ = std::move(net); }

  const TrackerConfig& config() const { return cfg_; }
  const imm::ImmFilter& filter() const { return filter_; }
  const std::vector<Track>& tracks() const { return tracks_; }
  Timestamp current_time() const { return current_time_; }
  bool started() const { return started_; }

  FrameLog step(const DetectionFrame& frame) {
    if (started_ && frame.time <= current_time_) {
      throw TrackerError("out-of-order frame: t=" + std::to_string(frame.time) +
                         " after t=" + std::to_string(current_time_));
    }
    const double dt = started_ ? frame.time - current_time_ : 0.0;

    // 1. propagate every track to the frame time
    for (Track& tr : tracks_) {
      tr.previous = tr.state.fused;
      tr.state = filter_.predict(tr.state, dt);
      tr.age_frames += 1;
    }

    // 2. gated candidate generation
    std::vector<assoc::TrackView> views = make_views();
    std::vector<assoc::CandidatePair> candidates =
        assoc::gate(views, frame.detections, cfg_.gating_radius);

    FrameLog log;
    log.time = frame.time;
    log.candidates_gated = candidates.size();

    // 3. scoring and (learned mode) candidate filtering
    struct PairOutput {
      model::ModelOutput<float> out;
      Eigen::VectorXf h, c;
    };
    std::vector<PairOutput> outputs;
    std::vector<assoc::ScoredPair> scored;
    if (is_learned(cfg_.mode)) {
      score_learned(views, frame, candidates, scored, outputs);
    } else {
      score_classical(views, frame, candidates, scored);
    }
    log.candidates_kept = scored.size();

    // 4. one-to-one assignment, 5-6. observation refinement + filter update
    const assoc::Assignment assignment = assoc::greedy_assign(scored);
    log.matches = assignment.matched.size();

    std::unordered_map<uint64_t, size_t> track_by_id, det_by_id;
    for (size_t i = 0; i < tracks_.size(); ++i) track_by_id[tracks_[i].id] = i;
    for (size_t i = 0; i < frame.detections.size(); ++i) {
      det_by_id[frame.detections[i].id] = i;
    }
    std::unordered_map<uint64_t, size_t> output_by_key;
    for (size_t i = 0; i < scored.size(); ++i) {
      output_by_key[pair_key(scored[i].track_id, scored[i].detection_id)] = i;
    }

    std::vector<bool> det_used(frame.detections.size(), false);
    std::vector<bool> track_matched(tracks_.size(), false);
    for (const assoc::ScoredPair& m : assignment.matched) {
      Track& tr = tracks_[track_by_id.at(m.track_id)];
      const size_t di = det_by_id.at(m.detection_id);
      const Detection& det = frame.detections[di];
      det_used[di] = true;
      track_matched[track_by_id.at(m.track_id)] = true;

      imm::Observation obs;
      if (is_learned(cfg_.mode) && cfg_.use_learned_state) {
        const size_t oi = output_by_key.at(pair_key(m.track_id, m.detection_id));
        const model::ModelOutput<float>& out = outputs[oi].out;
        Eigen::Vector4d z(det.box.cx + out.state(0), det.box.cy + out.state(1),
                          out.state(2), out.state(3));
        Eigen::Vector4d sigma = out.sigmas().cast<double>().cwiseMax(
            cfg_.min_learned_sigma);
        obs = imm::Observation::full_state(z, sigma);
      } else {
        const Vec2 c = centroid(det.box);
        obs = imm::Observation::position(c.x(), c.y(),
                                         cfg_.sensor_noise.sigma(det.sensor));
      }
      tr.state = filter_.update(tr.state, obs);
      if (cfg_.mode == AssocMode::kLearnedLstm) {
        const size_t oi = output_by_key.at(pair_key(m.track_id, m.detection_id));
        tr.memory.h = outputs[oi].h;
        tr.memory.c = outputs[oi].c;
      }
      tr.last_box = det.box;
      tr.last_update_time = frame.time;
      tr.frames_since_seen = 0;
      tr.hit_count += 1;
      if (!tr.confirmed && cfg_.confirmation_enabled &&
          tr.hit_count >= cfg_.confirm_min_hits &&
          tr.age_frames <= cfg_.confirm_window) {
        tr.confirmed = true;
      }
      if (!cfg_.confirmation_enabled) tr.confirmed = true;
    }

    // 7. lifecycle for unmatched tracks (already rolled out by the predict)
    std::vector<Track> survivors;
    survivors.reserve(tracks_.size());
    for (size_t i = 0; i < tracks_.size(); ++i) {
      Track& tr = tracks_[i];
      if (!track_matched[i]) {
        tr.frames_since_seen += 1;
        if (tr.frames_since_seen > cfg_.max_unseen) continue;
        if (cfg_.confirmation_enabled && !tr.confirmed &&
            tr.age_frames >= cfg_.confirm_window) {
          continue;  // tentative track that never confirmed
        }
      }
      survivors.push_back(std::move(tr));
    }
    tracks_ = std::move(survivors);

    // 8. births from unconsumed detections
    for (size_t di = 0; di < frame.detections.size(); ++di) {
      if (!det_used[di]) birth_track(frame.detections[di], frame.time);
    }

    // 9. snapshot of the live, reportable set
    for (const Track& tr : tracks_) {
      if (cfg_.confirmation_enabled && !tr.confirmed) continue;
      TrackRecord rec;
      rec.time = frame.time;
      rec.track_id = tr.id;
      rec.cls = tr.cls;
      rec.state = tr.state.fused;
      rec.box = tr.last_box;
      rec.box.cx = tr.state.fused.x;
      rec.box.cy = tr.state.fused.y;
      log.tracks.push_back(rec);
    }
    std::sort(log.tracks.begin(), log.tracks.end(),
              [](const TrackRecord& a, const TrackRecord& b) {
                return a.track_id < b.track_id;
              });

    current_time_ = frame.time;
    started_ = true;
    return log;
  }

  std::vector<FrameLog> run_sequence(const std::vector<DetectionFrame>& frames) {
    std::vector<FrameLog> logs;
    logs.reserve(frames.size());
    for (const DetectionFrame& f : frames) logs.push_back(step(f));
    return logs;
  }

  // Views over the predicted track set; exposed for feature extraction in
  // the training-label pipeline.
  std::vector<assoc::TrackView> make_views() const {
    std::vector<assoc::TrackView> views;
    views.reserve(tracks_.size());
    for (const Track& tr : tracks_) {
      assoc::TrackView v;
      v.id = tr.id;
      v.predicted = tr.state.fused;
      v.previous = tr.previous;
      v.state = &tr.state;
      v.last_box = tr.last_box;
      v.last_update_time = tr.last_update_time;
      v.cls = tr.cls;
      views.push_back(v);
    }
    return views;
  }

 private:
  static uint64_t pair_key(uint64_t track_id, uint64_t det_id) {
    return track_id * 0x100000000ULL ^ det_id;
  }

  void score_classical(const std::vector<assoc::TrackView>& views,
                       const DetectionFrame& frame,
                       const std::vector<assoc::CandidatePair>& candidates,
                       std::vector<assoc::ScoredPair>& scored) const {
    for (const assoc::CandidatePair& c : candidates) {
      const assoc::TrackView& tv = views[c.track_index];
      const Detection& det = frame.detections[c.detection_index];
      double score = 0.0;
      switch (cfg_.mode) {
        case AssocMode::kIou:
          score = assoc::score_iou(tv, det);
          if (score >= 1.0) continue;  // zero overlap: not a candidate
          break;
        case AssocMode::kL2:
          score = assoc::score_l2(tv, det);
          break;
        default:
          score = assoc::score_mahalanobis(filter_, tv, det,
                                           cfg_.sensor_noise.sigma(det.sensor));
          break;
      }
      scored.push_back({c.track_id, c.detection_id, score});
    }
  }

  template <typename PairOutput>
  void score_learned(const std::vector<assoc::TrackView>& views,
                     const DetectionFrame& frame,
                     const std::vector<assoc::CandidatePair>& candidates,
                     std::vector<assoc::ScoredPair>& scored,
                     std::vector<PairOutput>& outputs) const {
    const int n = static_cast<int>(candidates.size());
    if (n == 0) return;
    const bool lstm = cfg_.mode == AssocMode::kLearnedLstm;
    if ((lstm && lstm_.empty()) || (!lstm && mlp_.empty())) {
      throw TrackerError("learned association requested but no weights loaded");
    }
    model::MatX<float> x(model::kInputDim, n);
    for (int i = 0; i < n; ++i) {
      const auto f = features::extract_features(
          views[candidates[i].track_index],
          frame.detections[candidates[i].detection_index], frame.time);
      for (int j = 0; j < model::kInputDim; ++j) {
        x(j, i) = static_cast<float>(f[j]);
      }
    }
    model::MatX<float> y, h_out, c_out;
    if (lstm) {
      model::MatX<float> h(model::kHiddenDim, n), c(model::kHiddenDim, n);
      for (int i = 0; i < n; ++i) {
        const Track& tr = tracks_[candidates[i].track_index];
        h.col(i) = tr.memory.h;
        c.col(i) = tr.memory.c;
      }
      y = lstm_.forward_batch(x, h, c, h_out, c_out);
    } else {
      y = mlp_.forward_batch(x);
    }
    for (int i = 0; i < n; ++i) {
      const auto out = model::ModelOutput<float>::from_vector(y.col(i));
      if (cfg_.probability_filter) {
        if (!out.prefers_association()) continue;
      } else if (cfg_.rank_by_score && out.score >= cfg_.score_threshold) {
        continue;  // score-only configuration
      }
      const double rank = cfg_.rank_by_score
                              ? static_cast<double>(out.score)
                              : 1.0 - static_cast<double>(out.p_assoc());
      PairOutput po;
      po.out = out;
      if (lstm) {
        po.h = h_out.col(i);
        po.c = c_out.col(i);
      }
      outputs.push_back(std::move(po));
      scored.push_back({candidates[i].track_id, candidates[i].detection_id, rank});
    }
  }

  void birth_track(const Detection& det, Timestamp now) {
    Track tr;
    tr.id = next_id_++;
    tr.cls = det.cls;
    const double pos_sigma = cfg_.sensor_noise.sigma(det.sensor);
    const double vel_sigma = det.cls == ObjectClass::kPedestrian
                                 ? cfg_.birth_vel_sigma_ped
                                 : cfg_.birth_vel_sigma_bike;
    tr.state = filter_.init_track(det.box.cx, det.box.cy, pos_sigma * pos_sigma,
                                  vel_sigma * vel_sigma);
    tr.previous = tr.state.fused;
    tr.last_box = det.box;
    tr.last_update_time = now;
    tr.hit_count = 1;
    tr.age_frames = 1;
    tr.confirmed = !cfg_.confirmation_enabled ||
                   cfg_.confirm_min_hits <= 1;
    tracks_.push_back(std::move(tr));
  }

  TrackerConfig cfg_;
  imm::ImmFilter filter_;
  model::Mlp<float> mlp_;
  model::Lstm<float> lstm_;
  std::vector<Track> tracks_;
  uint64_t next_id_ = 1;
  Timestamp current_time_ = 0.0;
  bool started_ = false;
};

}  // namespace lamot
