// Copyright (c) 2026 lamot contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <lamot/core/geometry.hpp>
#include <lamot/core/random.hpp>
#include <lamot/core/types.hpp>

namespace lamot::sim {

struct SensorModel {
  SensorChannel channel = SensorChannel::kLidar;
  double sigma_pos = 0.1;          // average per-axis position noise, meters
  double p_detect = 0.95;
  double fp_rate = 0.2;            // Poisson mean clutter per frame
  double duplicate_prob = 0.0;
  double range_noise_ratio = 1.0;  // sigma_range / sigma_lateral
  double confidence_mean = 0.85;
  double confidence_sigma = 0.08;
  double fp_confidence_mean = 0.35;
  double time_offset = 0.0;        // seconds relative to the label frames

  static SensorModel lidar_default() { return SensorModel{}; }
  static SensorModel camera_default() {
    SensorModel s;
    s.channel = SensorChannel::kCamera;
    s.sigma_pos = 0.5;
    s.p_detect = 0.85;
    s.fp_rate = 0.4;
    s.duplicate_prob = 0.05;
    s.range_noise_ratio = 3.0;  // range estimates dominate the error
    s.confidence_mean = 0.7;
    s.confidence_sigma = 0.12;
    s.time_offset = 0.05;
    return s;
  }
};

struct ScenarioConfig {
  int n_pedestrians = 20;
  int n_bicyclists = 2;
  double duration = 20.0;    // seconds
  double frame_rate = 10.0;  // label frames per second
  double area_half = 25.0;   // actors live in [-area_half, area_half]^2
  double mode_switch_prob = 0.02;  // per actor per frame
  double ped_speed_max = 2.0;
  double bike_speed_max = 8.0;
  double ped_accel_max = 1.0;
  double bike_accel_max = 2.0;
  std::vector<SensorModel> sensors = {SensorModel::lidar_default()};
  uint64_t seed = 1;

  static ScenarioConfig with_camera() {
    ScenarioConfig c;
    c.sensors.push_back(SensorModel::camera_default());
    return c;
  }
};

struct Scenario {
  std::vector<LabelFrame> label_frames;            // at the base frame rate
  std::vector<DetectionFrame> detection_frames;    // sorted by time
  // Exact actor states at every detection-frame time (including offset
  // channels); consumed by training-label generation, never exported.
  std::vector<LabelFrame> truth_per_detection_frame;
};

namespace detail {

enum class Mode { kStatic, kCruise, kAccelerate };

struct Actor {
  ObjectClass cls;
  Vec2 pos, vel, acc;
  double heading = 0.0;  // kept while stationary
  Mode mode = Mode::kCruise;

  double speed_max(const ScenarioConfig& c) const {
    return cls == ObjectClass::kPedestrian ? c.ped_speed_max : c.bike_speed_max;
  }
  double accel_max(const ScenarioConfig& c) const {
    return cls == ObjectClass::kPedestrian ? c.ped_accel_max : c.bike_accel_max;
  }
  BevBox box() const {
    const bool ped = cls == ObjectClass::kPedestrian;
    return BevBox::make(pos.x(), pos.y(), ped ? 0.6 : 1.8, 0.6, ped ? 1.7 : 1.5,
                        heading);
  }
};

inline Vec2 heading_vec(double h) { return {std::cos(h), std::sin(h)}; }

inline void enter_mode(Actor& a, Mode m, const ScenarioConfig& cfg, Rng& rng) {
  a.mode = m;
  switch (m) {
    case Mode::kStatic:
      a.vel.setZero();
      a.acc.setZero();
      break;
    case Mode::kCruise:
      if (a.vel.norm() < 1e-9) {
        const double speed = rng.uniform(0.25, 1.0) * a.speed_max(cfg);
        a.heading = rng.uniform(-M_PI, M_PI);
        a.vel = speed * heading_vec(a.heading);
      }
      a.acc.setZero();
      break;
    case Mode::kAccelerate: {
      const double mag = rng.uniform(0.2, 1.0) * a.accel_max(cfg);
      const double dir = rng.uniform(-M_PI, M_PI);
      a.acc = mag * heading_vec(dir);
      break;
    }
  }
}

inline Actor spawn_actor(ObjectClass cls, const ScenarioConfig& cfg, Rng& rng) {
  Actor a;
  a.cls = cls;
  a.pos = {rng.uniform(-cfg.area_half, cfg.area_half),
           rng.uniform(-cfg.area_half, cfg.area_half)};
  a.heading = rng.uniform(-M_PI, M_PI);
  const double u = rng.uniform();
  enter_mode(a, u < 0.2 ? Mode::kStatic : (u < 0.9 ? Mode::kCruise : Mode::kAccelerate),
             cfg, rng);
  return a;
}

// Frame-boundary behavior update; between boundaries the motion is exactly
// constant-acceleration, so label velocities are analytic.
inline void update_actor(Actor& a, std::vector<Actor>& all, size_t self,
                         const ScenarioConfig& cfg, Rng& rng, double dt) {
  // integrate the previous segment
  a.pos += a.vel * dt + 0.5 * dt * dt * a.acc;
  a.vel += a.acc * dt;

  const double vmax = a.speed_max(cfg);
  if (a.vel.norm() > vmax) {
    a.vel *= vmax / a.vel.norm();
    if (a.mode == Mode::kAccelerate) enter_mode(a, Mode::kCruise, cfg, rng);
  }

  // soft repulsion from the nearest neighbor
  double best = 1e18;
  Vec2 push = Vec2::Zero();
  for (size_t j = 0; j < all.size(); ++j) {
    if (j == self) continue;
    const Vec2 d = a.pos - all[j].pos;
    const double dist = d.norm();
    if (dist < best) {
      best = dist;
      push = d;
    }
  }
  if (best < 0.6 && best > 1e-9) {
    a.vel += 0.3 * push / (best * best);
    if (a.vel.norm() > vmax) a.vel *= vmax / a.vel.norm();
  }

  // turn back at the boundary
  for (int axis = 0; axis < 2; ++axis) {
    if ((a.pos(axis) > cfg.area_half && a.vel(axis) > 0.0) ||
        (a.pos(axis) < -cfg.area_half && a.vel(axis) < 0.0)) {
      a.vel(axis) = -a.vel(axis);
      a.acc(axis) = 0.0;
    }
  }

  if (rng.bernoulli(cfg.mode_switch_prob)) {
    const double u = rng.uniform();
    enter_mode(a, u < 0.25 ? Mode::kStatic : (u < 0.8 ? Mode::kCruise : Mode::kAccelerate),
               cfg, rng);
  }

  if (a.vel.norm() > 1e-9) a.heading = std::atan2(a.vel.y(), a.vel.x());
}

// Position of the actor `gamma` seconds into the current segment.
inline Vec2 pos_at(const Actor& a, double gamma) {
  return a.pos + a.vel * gamma + 0.5 * gamma * gamma * a.acc;
}
inline Vec2 vel_at(const Actor& a, double gamma) { return a.vel + a.acc * gamma; }

}  // namespace detail

inline Scenario generate_scenario(const ScenarioConfig& cfg) {
  Scenario out;
  Rng motion_rng(mix_seed(cfg.seed, 1));
  std::vector<Rng> sensor_rngs;
  for (size_t si = 0; si < cfg.sensors.size(); ++si) {
    sensor_rngs.emplace_back(mix_seed(cfg.seed, 100 + si));
  }

  std::vector<detail::Actor> actors;
  for (int i = 0; i < cfg.n_pedestrians; ++i) {
    actors.push_back(detail::spawn_actor(ObjectClass::kPedestrian, cfg, motion_rng));
  }
  for (int i = 0; i < cfg.n_bicyclists; ++i) {
    actors.push_back(detail::spawn_actor(ObjectClass::kBicyclist, cfg, motion_rng));
  }

  const double dt = 1.0 / cfg.frame_rate;
  const int n_frames = static_cast<int>(std::round(cfg.duration * cfg.frame_rate));
  std::vector<uint64_t> det_seq(cfg.sensors.size(), 0);

  for (int k = 0; k < n_frames; ++k) {
    const double t = k * dt;
    if (k > 0) {
      for (size_t i = 0; i < actors.size(); ++i) {
        detail::update_actor(actors[i], actors, i, cfg, motion_rng, dt);
      }
    }

    LabelFrame lf;
    lf.time = t;
    for (size_t i = 0; i < actors.size(); ++i) {
      const detail::Actor& a = actors[i];
      Label l;
      l.track_id = i + 1;
      l.time = t;
      l.box = a.box();
      l.vx = a.vel.x();
      l.vy = a.vel.y();
      l.cls = a.cls;
      lf.labels.push_back(l);
    }
    out.label_frames.push_back(std::move(lf));

    for (size_t si = 0; si < cfg.sensors.size(); ++si) {
      const SensorModel& sm = cfg.sensors[si];
      Rng& rng = sensor_rngs[si];
      DetectionFrame df;
      df.time = t + sm.time_offset;

      LabelFrame truth;
      truth.time = df.time;
      for (size_t i = 0; i < actors.size(); ++i) {
        const detail::Actor& a = actors[i];
        const Vec2 p = detail::pos_at(a, sm.time_offset);
        const Vec2 v = detail::vel_at(a, sm.time_offset);
        Label l;
        l.track_id = i + 1;
        l.time = df.time;
        l.box = a.box();
        l.box.cx = p.x();
        l.box.cy = p.y();
        l.vx = v.x();
        l.vy = v.y();
        l.cls = a.cls;
        truth.labels.push_back(l);
      }

      auto emit = [&](const detail::Actor& a, const Vec2& true_pos,
                      const Vec2&, double conf_mean, double conf_scale) {
        // anisotropic noise in the (range, lateral) frame seen from the
        // sensor origin; ratio 1 reduces to isotropic
        const double ratio = sm.range_noise_ratio;
        const double sigma_l = sm.sigma_pos * std::sqrt(2.0 / (1.0 + ratio * ratio));
        const double sigma_r = ratio * sigma_l;
        Vec2 u = true_pos;
        if (u.norm() < 1e-6) {
          u = Vec2(1, 0);
        } else {
          u.normalize();
        }
        const Vec2 perp(-u.y(), u.x());
        const Vec2 noisy = true_pos + sigma_r * rng.normal() * u +
                           sigma_l * rng.normal() * perp;
        BevBox b = a.box();
        b.cx = noisy.x();
        b.cy = noisy.y();
        b.length = std::max(0.1, b.length * (1.0 + 0.05 * rng.normal()));
        b.width = std::max(0.1, b.width * (1.0 + 0.05 * rng.normal()));
        b.heading = wrap_angle(b.heading + 0.05 * rng.normal());
        Detection d;
        d.id = (si + 1) * 1000000000ULL + det_seq[si]++;
        d.time = df.time;
        d.box = b;
        d.cls = a.cls;
        d.confidence = std::clamp(
            rng.normal(conf_mean * conf_scale, sm.confidence_sigma), 0.05, 1.0);
        d.sensor = sm.channel;
        df.detections.push_back(d);
      };

      for (size_t i = 0; i < actors.size(); ++i) {
        const detail::Actor& a = actors[i];
        const Vec2 tp = detail::pos_at(a, sm.time_offset);
        // proximity-correlated dropouts
        int close = 0;
        for (size_t j = 0; j < actors.size(); ++j) {
          if (j != i && (actors[j].pos - a.pos).norm() < 0.8) close += 1;
        }
        const double p_eff = sm.p_detect * std::pow(0.9, close);
        if (!rng.bernoulli(p_eff)) continue;
        emit(a, tp, detail::vel_at(a, sm.time_offset), sm.confidence_mean, 1.0);
        if (rng.bernoulli(sm.duplicate_prob)) {
          emit(a, tp, detail::vel_at(a, sm.time_offset), sm.confidence_mean, 0.7);
        }
      }

      // clutter, kept away from real actors so mined negatives stay negative
      const int n_fp = rng.poisson(sm.fp_rate);
      for (int f = 0; f < n_fp; ++f) {
        Vec2 p;
        for (int attempt = 0; attempt < 10; ++attempt) {
          p = {rng.uniform(-cfg.area_half, cfg.area_half),
               rng.uniform(-cfg.area_half, cfg.area_half)};
          double nearest = 1e18;
          for (const auto& a : actors) {
            nearest = std::min(nearest, (a.pos - p).norm());
          }
          if (nearest > 2.0) break;
        }
        const bool ped = rng.uniform() < 0.9;
        Detection d;
        d.id = (si + 1) * 1000000000ULL + det_seq[si]++;
        d.time = df.time;
        d.box = BevBox::make(p.x(), p.y(), ped ? 0.6 : 1.8, 0.6, ped ? 1.7 : 1.5,
                             rng.uniform(-M_PI, M_PI));
        d.cls = ped ? ObjectClass::kPedestrian : ObjectClass::kBicyclist;
        d.confidence =
            std::clamp(rng.normal(sm.fp_confidence_mean, 0.1), 0.05, 0.95);
        d.sensor = sm.channel;
        df.detections.push_back(d);
      }

      out.detection_frames.push_back(std::move(df));
      out.truth_per_detection_frame.push_back(std::move(truth));
    }
  }

  std::vector<size_t> order(out.detection_frames.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return out.detection_frames[a].time < out.detection_frames[b].time;
  });
  std::vector<DetectionFrame> dsorted;
  std::vector<LabelFrame> tsorted;
  dsorted.reserve(order.size());
  tsorted.reserve(order.size());
  for (size_t i : order) {
    dsorted.push_back(std::move(out.detection_frames[i]));
    tsorted.push_back(std::move(out.truth_per_detection_frame[i]));
  }
  out.detection_frames = std::move(dsorted);
  out.truth_per_detection_frame = std::move(tsorted);
  return out;
}

// Clones of the base configuration across pedestrian densities; shares the
// seed so the map extent and actor dynamics distribution stay comparable.
inline std::vector<ScenarioConfig> density_sweep(const ScenarioConfig& base,
                                                 const std::vector<int>& densities) {
  std::vector<ScenarioConfig> out;
  out.reserve(densities.size());
  for (int d : densities) {
    ScenarioConfig c = base;
    c.n_pedestrians = d;
    out.push_back(c);
  }
  return out;
}

}  // namespace lamot::sim
