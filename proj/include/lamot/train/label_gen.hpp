// Copyright (c) 2026 lamot contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <lamot/core/geometry.hpp>
#include <lamot/core/random.hpp>
#include <lamot/core/types.hpp>
#include <lamot/features/feature_vector.hpp>
#include <lamot/tracker/tracker.hpp>
#include <lamot/train/loss.hpp>

namespace lamot::train {

struct TrainingExample {
  uint64_t sequence_id = 0;
  uint32_t frame_index = 0;
  uint64_t track_id = 0;
  bool chain = false;  // advances the track's recurrent memory
  features::FeatureVector feat{};
  Target target;
};

struct LabelGenConfig {
  double positive_iou = 0.1;
  int negatives_per_positive = 3;
  double radius = 4.0;
};

struct LabelGenStats {
  int skipped_tracks = 0;  // objects with no overlapping label at t-1
  int positives = 0;
  int null_positives = 0;
  int negatives = 0;
};

// Ground-truth association for one frame: maps each tracked object to the
// label it overlaps most at t-1, then supervises every detection against
// that label at t. Detections overlapping the label (IoU >= 0.1) become
// positives scored by the summed centroid distances at t-1 and t; nearby
// non-overlapping detections are mined as negatives; a null detection
// stands in when nothing matched.
inline std::vector<TrainingExample> generate_labels(
    const std::vector<assoc::TrackView>& tracks,
    const std::vector<Detection>& detections,
    const std::vector<Label>& labels_prev, const std::vector<Label>& labels_now,
    Timestamp now, Rng& rng, const LabelGenConfig& cfg, LabelGenStats* stats = nullptr) {
  std::vector<TrainingExample> out;
  for (const assoc::TrackView& tv : tracks) {
    // object footprint where the tracker last believed it to be
    BevBox prev_box = tv.last_box;
    prev_box.cx = tv.previous.x;
    prev_box.cy = tv.previous.y;

    const Label* best_prev = nullptr;
    double best_iou = 0.0;
    for (const Label& l : labels_prev) {
      const double iou = polygon_iou(prev_box, l.box);
      if (iou > best_iou) {
        best_iou = iou;
        best_prev = &l;
      }
    }
    if (best_prev == nullptr) {
      if (stats) stats->skipped_tracks += 1;
      continue;
    }
    const Label* label_now = nullptr;
    for (const Label& l : labels_now) {
      if (l.track_id == best_prev->track_id) {
        label_now = &l;
        break;
      }
    }

    const double obj_prev_dist =
        std::hypot(best_prev->box.cx - tv.previous.x, best_prev->box.cy - tv.previous.y);

    std::vector<TrainingExample> positives;
    std::vector<size_t> negative_idx;
    for (size_t di = 0; di < detections.size(); ++di) {
      const Detection& det = detections[di];
      const bool overlaps =
          label_now != nullptr &&
          polygon_iou(det.box, label_now->box) >= cfg.positive_iou;
      if (overlaps) {
        TrainingExample ex;
        ex.track_id = tv.id;
        ex.feat = features::extract_features(tv, det, now);
        ex.target.is_association = true;
        ex.target.has_score_state = true;
        ex.target.score =
            obj_prev_dist + std::hypot(label_now->box.cx - det.box.cx,
                                       label_now->box.cy - det.box.cy);
        ex.target.state =
            Eigen::Vector4d(label_now->box.cx - det.box.cx,
                            label_now->box.cy - det.box.cy, label_now->vx,
                            label_now->vy);
        positives.push_back(std::move(ex));
      } else {
        // mis-association mining uses distance from the object at t-1
        const double d = std::hypot(det.box.cx - tv.previous.x,
                                    det.box.cy - tv.previous.y);
        if (d < cfg.radius) negative_idx.push_back(di);
      }
    }

    if (positives.empty()) {
      const Detection null_det =
          Detection::null_at(now, tv.predicted.x, tv.predicted.y);
      TrainingExample ex;
      ex.track_id = tv.id;
      ex.feat = features::extract_features(tv, null_det, now);
      ex.target.is_association = true;
      ex.target.has_score_state = false;
      ex.chain = true;
      positives.push_back(std::move(ex));
      if (stats) stats->null_positives += 1;
    } else {
      // the best true candidate carries the memory forward
      size_t best = 0;
      for (size_t i = 1; i < positives.size(); ++i) {
        if (positives[i].target.score < positives[best].target.score) best = i;
      }
      positives[best].chain = true;
      if (stats) stats->positives += static_cast<int>(positives.size());
    }

    const size_t real_positives =
        positives.size() - (positives.front().target.has_score_state ? 0 : 1);
    const size_t max_neg =
        cfg.negatives_per_positive * std::max<size_t>(real_positives, 1);
    if (negative_idx.size() > max_neg) {
      rng.shuffle(negative_idx);
      negative_idx.resize(max_neg);
      std::sort(negative_idx.begin(), negative_idx.end());
    }

    for (auto& ex : positives) out.push_back(std::move(ex));
    for (size_t di : negative_idx) {
      TrainingExample ex;
      ex.track_id = tv.id;
      ex.feat = features::extract_features(tv, detections[di], now);
      ex.target.is_association = false;
      out.push_back(std::move(ex));
      if (stats) stats->negatives += 1;
    }
  }
  return out;
}

struct Dataset {
  std::vector<TrainingExample> examples;
  LabelGenStats stats;
  uint64_t sequence_count = 0;
};

// Runs the tracker with classical association over a sequence and harvests
// supervision from each pre-update frame, so the feature distribution
// matches what the model sees at inference time.
inline void harvest_sequence(Dataset& ds, uint64_t sequence_id,
                             const std::vector<DetectionFrame>& frames,
                             const std::vector<LabelFrame>& truth_per_frame,
                             TrackerConfig tracker_cfg, const LabelGenConfig& cfg,
                             uint64_t seed) {
  tracker_cfg.mode = AssocMode::kMahalanobis;
  Tracker tracker(tracker_cfg);
  Rng rng(mix_seed(seed, sequence_id));
  const imm::ImmFilter& filter = tracker.filter();

  for (size_t fi = 0; fi < frames.size(); ++fi) {
    const DetectionFrame& df = frames[fi];
    if (fi > 0 && !tracker.tracks().empty()) {
      const double dt = df.time - tracker.current_time();
      std::vector<assoc::TrackView> views;
      std::vector<imm::ImmState> predicted;
      predicted.reserve(tracker.tracks().size());
      for (const Track& tr : tracker.tracks()) {
        predicted.push_back(filter.predict(tr.state, dt));
        assoc::TrackView v;
        v.id = tr.id;
        v.predicted = predicted.back().fused;
        v.previous = tr.state.fused;
        v.state = &predicted.back();
        v.last_box = tr.last_box;
        v.last_update_time = tr.last_update_time;
        v.cls = tr.cls;
        views.push_back(v);
      }
      std::vector<TrainingExample> examples = generate_labels(
          views, df.detections, truth_per_frame[fi - 1].labels,
          truth_per_frame[fi].labels, df.time, rng, cfg, &ds.stats);
      for (TrainingExample& ex : examples) {
        ex.sequence_id = sequence_id;
        ex.frame_index = static_cast<uint32_t>(fi);
        ds.examples.push_back(std::move(ex));
      }
    }
    tracker.step(df);
  }
}

// --- dataset serialization: one example per line -------------------------
// X seq frame track chain assoc has_ss score sx sy svx svy f0 .. f24

inline std::string serialize_example(const TrainingExample& e) {
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(static_cast<float>(v)));
    return std::string(buf);
  };
  std::string s = "X " + std::to_string(e.sequence_id) + ' ' +
                  std::to_string(e.frame_index) + ' ' + std::to_string(e.track_id) +
                  ' ' + (e.chain ? "1" : "0") + ' ' +
                  (e.target.is_association ? "1" : "0") + ' ' +
                  (e.target.has_score_state ? "1" : "0") + ' ' +
                  fmt(e.target.score);
  for (int i = 0; i < 4; ++i) s += ' ' + fmt(e.target.state(i));
  for (int i = 0; i < features::kFeatureDim; ++i) s += ' ' + fmt(e.feat[i]);
  return s;
}

inline void write_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& e : ds.examples) out << serialize_example(e) << '\n';
}

inline Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  Dataset ds;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag != "X") {
      throw std::runtime_error("dataset line " + std::to_string(line_no) +
                               ": bad tag");
    }
    TrainingExample e;
    int chain = 0, assoc = 0, has = 0;
    ss >> e.sequence_id >> e.frame_index >> e.track_id >> chain >> assoc >> has >>
        e.target.score;
    for (int i = 0; i < 4; ++i) ss >> e.target.state(i);
    for (int i = 0; i < features::kFeatureDim; ++i) ss >> e.feat[i];
    if (!ss) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) +
                               ": too few fields");
    }
    e.chain = chain != 0;
    e.target.is_association = assoc != 0;
    e.target.has_score_state = has != 0;
    ds.examples.push_back(std::move(e));
    ds.sequence_count = std::max(ds.sequence_count, e.sequence_id + 1);
  }
  return ds;
}

}  // namespace lamot::train
