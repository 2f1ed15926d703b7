// Copyright (c) 2026 lamot contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>

#include <lamot/assoc/candidates.hpp>
#include <lamot/core/types.hpp>

namespace lamot::features {

// Bump when the layout below changes; stored in weight files so stale models
// cannot be loaded against a different encoding.
inline constexpr uint32_t kFeatureLayoutVersion = 1;
inline constexpr int kFeatureDim = 25;

using FeatureVector = std::array<double, kFeatureDim>;

// Fixed layout. All coordinates are relative to the track's predicted
// position so the encoding is translation invariant.
//
//  [0..4]   detection shape:   length, width, height, cx', cy'
//  [5..9]   track last shape:  length, width, height, cx', cy'
//  [10..13] track previous state: x', y', vx, vy
//  [14..17] track predicted state: x', y', vx, vy  (x', y' are 0 by construction)
//  [18..20] difference: dx, dy, |d|   with d = predicted - detection
//  [21]     dt since the track's last update
//  [22]     detector confidence
//  [23..24] sensor one-hot: lidar, camera
inline FeatureVector extract_features(const assoc::TrackView& track,
                                      const Detection& det, Timestamp now) {
  const double px = track.predicted.x;
  const double py = track.predicted.y;
  FeatureVector f{};
  f[0] = det.box.length;
  f[1] = det.box.width;
  f[2] = det.box.height;
  f[3] = det.box.cx - px;
  f[4] = det.box.cy - py;
  f[5] = track.last_box.length;
  f[6] = track.last_box.width;
  f[7] = track.last_box.height;
  f[8] = track.last_box.cx - px;
  f[9] = track.last_box.cy - py;
  f[10] = track.previous.x - px;
  f[11] = track.previous.y - py;
  f[12] = track.previous.vx;
  f[13] = track.previous.vy;
  f[14] = 0.0;
  f[15] = 0.0;
  f[16] = track.predicted.vx;
  f[17] = track.predicted.vy;
  const double dx = px - det.box.cx;
  const double dy = py - det.box.cy;
  f[18] = dx;
  f[19] = dy;
  f[20] = std::hypot(dx, dy);
  f[21] = now - track.last_update_time;
  f[22] = det.confidence;
  f[23] = det.sensor == SensorChannel::kLidar ? 1.0 : 0.0;
  f[24] = det.sensor == SensorChannel::kCamera ? 1.0 : 0.0;
  return f;
}

}  // namespace lamot::features
