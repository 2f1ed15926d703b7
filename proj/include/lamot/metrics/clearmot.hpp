// Copyright (c) 2026 lamot contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <lamot/assoc/assignment.hpp>
#include <lamot/core/geometry.hpp>
#include <lamot/core/types.hpp>

namespace lamot::metrics {

struct MatchConfig {
  double match_radius = 2.0;  // centroid distance, meters
  double nu_ped = 1.0;        // velocity-outlier thresholds, m/s
  double nu_bike = 1.5;
  double time_tolerance = 1e-6;
};

// One true-positive (label, track) pairing at a frame.
struct Correspondence {
  Timestamp time = 0.0;
  uint64_t label_id = 0;
  uint64_t track_id = 0;
  ObjectClass cls = ObjectClass::kPedestrian;
  double distance = 0.0;        // centroid distance, meters
  double velocity_error = 0.0;  // ||v_label - v_track||, m/s
};

struct MatchResult {
  std::vector<Correspondence> correspondences;
  int fp = 0;
  int fn = 0;
  int idsw = 0;
  int frag = 0;
  int gt = 0;  // total label instances over all frames
  int label_trajectories = 0;
  int mostly_tracked = 0;
  int mostly_lost = 0;
};

// Frame-by-frame correspondence following the CLEAR protocol: an existing
// correspondence is kept while it stays within the radius; the remainder is
// a maximum-cardinality, minimum-total-distance assignment.
inline MatchResult match_frames(const std::vector<LabelFrame>& label_frames,
                                const std::vector<std::vector<TrackRecord>>& track_frames,
                                const MatchConfig& cfg = {}) {
  if (label_frames.size() != track_frames.size()) {
    throw std::invalid_argument("label/track frame counts differ");
  }
  MatchResult res;
  std::unordered_map<uint64_t, uint64_t> last_track;  // label -> last matched track
  struct Coverage {
    int present = 0;
    int matched = 0;
    bool ever_matched = false;
    bool in_gap = false;
  };
  std::map<uint64_t, Coverage> coverage;

  for (size_t fi = 0; fi < label_frames.size(); ++fi) {
    const std::vector<Label>& labels = label_frames[fi].labels;
    const std::vector<TrackRecord>& tracks = track_frames[fi];
    res.gt += static_cast<int>(labels.size());

    std::unordered_map<uint64_t, size_t> track_index;
    for (size_t i = 0; i < tracks.size(); ++i) track_index[tracks[i].track_id] = i;

    std::vector<bool> label_done(labels.size(), false);
    std::vector<bool> track_done(tracks.size(), false);
    std::vector<std::pair<size_t, size_t>> matched;  // (label idx, track idx)

    // keep correspondences that persist from earlier frames
    for (size_t li = 0; li < labels.size(); ++li) {
      auto it = last_track.find(labels[li].track_id);
      if (it == last_track.end()) continue;
      auto ti = track_index.find(it->second);
      if (ti == track_index.end() || track_done[ti->second]) continue;
      const TrackRecord& tr = tracks[ti->second];
      const double d =
          std::hypot(tr.state.x - labels[li].box.cx, tr.state.y - labels[li].box.cy);
      if (d < cfg.match_radius) {
        matched.push_back({li, ti->second});
        label_done[li] = true;
        track_done[ti->second] = true;
      }
    }

    // optimal assignment for the rest
    std::vector<assoc::ScoredPair> pairs;
    for (size_t li = 0; li < labels.size(); ++li) {
      if (label_done[li]) continue;
      for (size_t ti = 0; ti < tracks.size(); ++ti) {
        if (track_done[ti]) continue;
        const double d = std::hypot(tracks[ti].state.x - labels[li].box.cx,
                                    tracks[ti].state.y - labels[li].box.cy);
        if (d < cfg.match_radius) {
          pairs.push_back({labels[li].track_id, tracks[ti].track_id, d});
        }
      }
    }
    if (!pairs.empty()) {
      std::unordered_map<uint64_t, size_t> label_by_id, track_by_id;
      for (size_t li = 0; li < labels.size(); ++li) label_by_id[labels[li].track_id] = li;
      const assoc::Assignment opt = assoc::hungarian_assign(pairs);
      for (const auto& p : opt.matched) {
        matched.push_back({label_by_id.at(p.track_id), track_index.at(p.detection_id)});
        label_done[label_by_id.at(p.track_id)] = true;
        track_done[track_index.at(p.detection_id)] = true;
      }
    }

    for (const auto& [li, ti] : matched) {
      const Label& lab = labels[li];
      const TrackRecord& tr = tracks[ti];
      auto it = last_track.find(lab.track_id);
      if (it != last_track.end() && it->second != tr.track_id) res.idsw += 1;
      last_track[lab.track_id] = tr.track_id;

      Correspondence c;
      c.time = label_frames[fi].time;
      c.label_id = lab.track_id;
      c.track_id = tr.track_id;
      c.cls = lab.cls;
      c.distance = std::hypot(tr.state.x - lab.box.cx, tr.state.y - lab.box.cy);
      c.velocity_error = std::hypot(tr.state.vx - lab.vx, tr.state.vy - lab.vy);
      res.correspondences.push_back(c);
    }

    res.fn += static_cast<int>(labels.size() - matched.size());
    res.fp += static_cast<int>(tracks.size() - matched.size());

    for (size_t li = 0; li < labels.size(); ++li) {
      Coverage& cov = coverage[labels[li].track_id];
      cov.present += 1;
      if (label_done[li]) {
        if (cov.in_gap) res.frag += 1;  // re-acquired after an interruption
        cov.matched += 1;
        cov.ever_matched = true;
        cov.in_gap = false;
      } else if (cov.ever_matched) {
        cov.in_gap = true;
      }
    }
  }

  res.label_trajectories = static_cast<int>(coverage.size());
  for (const auto& [id, cov] : coverage) {
    const double ratio = cov.present > 0
                             ? static_cast<double>(cov.matched) / cov.present
                             : 0.0;
    if (ratio > 0.8) res.mostly_tracked += 1;
    if (ratio < 0.2) res.mostly_lost += 1;
  }
  return res;
}

// Mean velocity-vector error over true-positive pairs of one class.
inline std::optional<double> motve(const std::vector<Correspondence>& corr,
                                   ObjectClass cls) {
  double sum = 0.0;
  int count = 0;
  for (const Correspondence& c : corr) {
    if (c.cls != cls) continue;
    sum += c.velocity_error;
    count += 1;
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

// Fraction of pairs whose velocity error strictly exceeds the threshold.
inline std::optional<double> motvo(const std::vector<Correspondence>& corr,
                                   ObjectClass cls, double nu) {
  int outliers = 0;
  int count = 0;
  for (const Correspondence& c : corr) {
    if (c.cls != cls) continue;
    if (c.velocity_error > nu) outliers += 1;
    count += 1;
  }
  if (count == 0) return std::nullopt;
  return static_cast<double>(outliers) / count;
}

struct MetricReport {
  double mota = 0.0;
  double motp = 0.0;  // meters
  double mt = 0.0;
  double ml = 0.0;
  int idsw = 0;
  int frag = 0;
  int fp = 0;
  int fn = 0;
  int gt = 0;
  int matches = 0;
  std::optional<double> motve_ped, motve_bike;
  std::optional<double> motvo_ped, motvo_bike;
};

inline MetricReport clear_mot(const MatchResult& m, const MatchConfig& cfg = {}) {
  if (m.gt == 0) throw std::invalid_argument("no ground truth labels");
  MetricReport r;
  r.fp = m.fp;
  r.fn = m.fn;
  r.idsw = m.idsw;
  r.frag = m.frag;
  r.gt = m.gt;
  r.matches = static_cast<int>(m.correspondences.size());
  r.mota = 1.0 - static_cast<double>(m.fp + m.fn + m.idsw) / m.gt;
  double dist = 0.0;
  for (const Correspondence& c : m.correspondences) dist += c.distance;
  r.motp = m.correspondences.empty() ? 0.0 : dist / m.correspondences.size();
  r.mt = m.label_trajectories > 0
             ? static_cast<double>(m.mostly_tracked) / m.label_trajectories
             : 0.0;
  r.ml = m.label_trajectories > 0
             ? static_cast<double>(m.mostly_lost) / m.label_trajectories
             : 0.0;
  r.motve_ped = motve(m.correspondences, ObjectClass::kPedestrian);
  r.motve_bike = motve(m.correspondences, ObjectClass::kBicyclist);
  r.motvo_ped = motvo(m.correspondences, ObjectClass::kPedestrian, cfg.nu_ped);
  r.motvo_bike = motvo(m.correspondences, ObjectClass::kBicyclist, cfg.nu_bike);
  return r;
}

// Aligns raw track rows to the label timestamps (rows at unlabeled frame
// times, e.g. the asynchronous camera frames, are skipped) and evaluates.
inline MetricReport evaluate(const std::vector<Label>& labels,
                             const std::vector<TrackRecord>& tracks,
                             const MatchConfig& cfg = {}) {
  std::map<double, std::vector<Label>> labels_by_time;
  for (const Label& l : labels) labels_by_time[l.time].push_back(l);
  std::vector<LabelFrame> label_frames;
  for (auto& [t, v] : labels_by_time) label_frames.push_back({t, std::move(v)});

  std::map<double, std::vector<TrackRecord>> tracks_by_time;
  for (const TrackRecord& t : tracks) tracks_by_time[t.time].push_back(t);

  std::vector<std::vector<TrackRecord>> track_frames;
  track_frames.reserve(label_frames.size());
  for (const LabelFrame& lf : label_frames) {
    auto it = tracks_by_time.lower_bound(lf.time - cfg.time_tolerance);
    if (it != tracks_by_time.end() &&
        std::abs(it->first - lf.time) <= cfg.time_tolerance) {
      track_frames.push_back(it->second);
    } else {
      track_frames.push_back({});
    }
  }
  return clear_mot(match_frames(label_frames, track_frames, cfg), cfg);
}

}  // namespace lamot::metrics
