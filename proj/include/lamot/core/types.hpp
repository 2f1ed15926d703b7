// Copyright (c) 2026 lamot contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lamot {

// Seconds within one sequence. Frames are strictly increasing; nominal
// spacing is 0.1 s (10 Hz).
using Timestamp = double;

enum class ObjectClass : uint8_t { kPedestrian = 0, kBicyclist = 1 };
enum class SensorChannel : uint8_t { kLidar = 0, kCamera = 1 };

inline const char* to_string(ObjectClass c) {
  return c == ObjectClass::kPedestrian ? "ped" : "bike";
}
inline const char* to_string(SensorChannel s) {
  return s == SensorChannel::kLidar ? "lidar" : "camera";
}

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double kTwoPi = 2.0 * M_PI;
  a = std::fmod(a, kTwoPi);
  if (a <= -M_PI) a += kTwoPi;
  if (a > M_PI) a -= kTwoPi;
  return a;
}

// Oriented bird's-eye-view box. `length` runs along `heading`, `width`
// across it. Height is carried for the feature vector but ignored by all
// planar geometry.
struct BevBox {
  double cx = 0.0;
  double cy = 0.0;
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  double heading = 0.0;  // radians, (-pi, pi]

  static BevBox make(double cx, double cy, double length, double width,
                     double height, double heading) {
    return BevBox{cx, cy, length, width, height, wrap_angle(heading)};
  }
  double footprint_area() const { return length * width; }
};

struct Detection {
  uint64_t id = 0;
  Timestamp time = 0.0;
  BevBox box;
  ObjectClass cls = ObjectClass::kPedestrian;
  double confidence = 0.0;  // [0, 1]
  SensorChannel sensor = SensorChannel::kLidar;
  bool is_null = false;  // synthetic "no match" target used in training

  static Detection null_at(Timestamp t, double x, double y) {
    Detection d;
    d.time = t;
    d.box = BevBox{x, y, 0.0, 0.0, 0.0, 0.0};
    d.confidence = 0.0;
    d.is_null = true;
    return d;
  }
};

// One sensor delivery: all detections share the timestamp. Asynchronous
// channels arrive as separate frames at their own timestamps.
struct DetectionFrame {
  Timestamp time = 0.0;
  std::vector<Detection> detections;
};

// Fused track state: position, velocity and per-element standard deviations.
struct StateEstimate {
  double x = 0.0, y = 0.0;
  double vx = 0.0, vy = 0.0;
  double sigma_x = 1.0, sigma_y = 1.0;
  double sigma_vx = 1.0, sigma_vy = 1.0;

  double speed() const { return std::hypot(vx, vy); }
};

// Ground-truth annotation with a time-consistent identity.
struct Label {
  uint64_t track_id = 0;
  Timestamp time = 0.0;
  BevBox box;
  double vx = 0.0, vy = 0.0;
  ObjectClass cls = ObjectClass::kPedestrian;
};

// One serialized output row of the tracker: the contract consumed by the
// metrics module and the log files.
struct TrackRecord {
  Timestamp time = 0.0;
  uint64_t track_id = 0;
  ObjectClass cls = ObjectClass::kPedestrian;
  StateEstimate state;
  BevBox box;
};

struct LabelFrame {
  Timestamp time = 0.0;
  std::vector<Label> labels;
};

// Linear-algebra failure inside a filter step (non-PSD covariance,
// singular innovation, ...).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lamot
