// Copyright (c) 2026 lamot contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <lamot/assoc/assignment.hpp>
#include <lamot/core/geometry.hpp>
#include <lamot/core/types.hpp>
#include <lamot/imm/imm_filter.hpp>

namespace lamot::assoc {

// What the association stage needs to know about a live track, captured
// after prediction to the current frame time.
struct TrackView {
  uint64_t id = 0;
  StateEstimate predicted;           // fused state at the frame time
  StateEstimate previous;            // fused state at the end of the last frame
  const imm::ImmState* state = nullptr;
  BevBox last_box;                   // box of the last associated detection
  Timestamp last_update_time = 0.0;
  ObjectClass cls = ObjectClass::kPedestrian;
};

struct CandidatePair {
  size_t track_index = 0;
  size_t detection_index = 0;
  uint64_t track_id = 0;
  uint64_t detection_id = 0;
  double gate_distance = 0.0;
  double score = 0.0;
};

// Keeps exactly the pairs whose predicted-to-detection centroid distance is
// below the gating radius.
inline std::vector<CandidatePair> gate(const std::vector<TrackView>& tracks,
                                       const std::vector<Detection>& detections,
                                       double radius) {
  std::vector<CandidatePair> out;
  for (size_t ti = 0; ti < tracks.size(); ++ti) {
    const Vec2 p(tracks[ti].predicted.x, tracks[ti].predicted.y);
    for (size_t di = 0; di < detections.size(); ++di) {
      const double dist = (p - centroid(detections[di].box)).norm();
      if (dist < radius) {
        out.push_back({ti, di, tracks[ti].id, detections[di].id, dist, 0.0});
      }
    }
  }
  return out;
}

// The track's predicted footprint: its last associated box translated to the
// predicted position.
inline BevBox predicted_box(const TrackView& track) {
  BevBox b = track.last_box;
  b.cx = track.predicted.x;
  b.cy = track.predicted.y;
  return b;
}

// Classical scorers; all are minimized by the assignment stage.
inline double score_iou(const TrackView& track, const Detection& det) {
  return 1.0 - polygon_iou(predicted_box(track), det.box);
}

inline double score_l2(const TrackView& track, const Detection& det) {
  return (Vec2(track.predicted.x, track.predicted.y) - centroid(det.box)).norm();
}

inline double score_mahalanobis(const imm::ImmFilter& filter,
                                const TrackView& track, const Detection& det,
                                double sensor_sigma) {
  const Vec2 c = centroid(det.box);
  return filter.mahalanobis(*track.state,
                            imm::Observation::position(c.x(), c.y(), sensor_sigma));
}

}  // namespace lamot::assoc
