// Copyright (c) 2026 lamot contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include <lamot/sim/scenario.hpp>
#include <lamot/tracker/tracker.hpp>
#include <lamot/train/trainer.hpp>

namespace lamot::io {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Synthetic-training-set shape used by the train subcommand.
struct DatasetSpec {
  int sequences = 60;
  double duration = 10.0;  // seconds per sequence
  int min_pedestrians = 4;
  int max_pedestrians = 40;
  int max_bicyclists = 4;
  bool camera = true;
};

struct Config {
  sim::ScenarioConfig scenario;
  TrackerConfig tracker;
  train::TrainConfig train;
  DatasetSpec dataset;
};

namespace detail {

template <typename T>
void get_if_present(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void parse_sensor(const nlohmann::json& j, sim::SensorModel& s) {
  get_if_present(j, "sigma_pos", s.sigma_pos);
  get_if_present(j, "p_detect", s.p_detect);
  get_if_present(j, "fp_rate", s.fp_rate);
  get_if_present(j, "duplicate_prob", s.duplicate_prob);
  get_if_present(j, "range_noise_ratio", s.range_noise_ratio);
  get_if_present(j, "confidence_mean", s.confidence_mean);
  get_if_present(j, "confidence_sigma", s.confidence_sigma);
  get_if_present(j, "fp_confidence_mean", s.fp_confidence_mean);
  get_if_present(j, "time_offset", s.time_offset);
}

inline void parse_scenario(const nlohmann::json& j, sim::ScenarioConfig& c) {
  get_if_present(j, "n_pedestrians", c.n_pedestrians);
  get_if_present(j, "n_bicyclists", c.n_bicyclists);
  get_if_present(j, "duration", c.duration);
  get_if_present(j, "frame_rate", c.frame_rate);
  get_if_present(j, "area_half", c.area_half);
  get_if_present(j, "mode_switch_prob", c.mode_switch_prob);
  get_if_present(j, "ped_speed_max", c.ped_speed_max);
  get_if_present(j, "bike_speed_max", c.bike_speed_max);
  get_if_present(j, "ped_accel_max", c.ped_accel_max);
  get_if_present(j, "bike_accel_max", c.bike_accel_max);
  get_if_present(j, "seed", c.seed);
  if (j.contains("sensors")) {
    c.sensors.clear();
    for (const auto& name : j.at("sensors")) {
      if (name == "lidar") {
        c.sensors.push_back(sim::SensorModel::lidar_default());
      } else if (name == "camera") {
        c.sensors.push_back(sim::SensorModel::camera_default());
      } else {
        throw ConfigError("unknown sensor: " + name.get<std::string>());
      }
    }
  }
  for (auto& s : c.sensors) {
    const char* key = s.channel == SensorChannel::kLidar ? "lidar" : "camera";
    if (j.contains(key)) parse_sensor(j.at(key), s);
  }
}

inline void parse_imm(const nlohmann::json& j, imm::ImmConfig& c) {
  get_if_present(j, "self_transition", c.self_transition);
  get_if_present(j, "embed_vel_var", c.embed_vel_var);
  get_if_present(j, "embed_acc_var", c.embed_acc_var);
  if (j.contains("static_noise")) {
    c.models[0].noise_intensity = j.at("static_noise").get<double>();
  }
  if (j.contains("cv_noise")) {
    c.models[1].noise_intensity = j.at("cv_noise").get<double>();
  }
  if (j.contains("ca_noise")) {
    c.models[2].noise_intensity = j.at("ca_noise").get<double>();
  }
}

inline void parse_tracker(const nlohmann::json& j, TrackerConfig& c) {
  get_if_present(j, "gating_radius", c.gating_radius);
  get_if_present(j, "max_unseen", c.max_unseen);
  if (j.contains("mode")) {
    const auto mode = parse_assoc_mode(j.at("mode").get<std::string>());
    if (!mode) throw ConfigError("unknown association mode");
    c.mode = *mode;
  }
  get_if_present(j, "confirmation", c.confirmation_enabled);
  get_if_present(j, "confirm_min_hits", c.confirm_min_hits);
  get_if_present(j, "confirm_window", c.confirm_window);
  get_if_present(j, "birth_vel_sigma_ped", c.birth_vel_sigma_ped);
  get_if_present(j, "birth_vel_sigma_bike", c.birth_vel_sigma_bike);
  get_if_present(j, "probability_filter", c.probability_filter);
  get_if_present(j, "rank_by_score", c.rank_by_score);
  get_if_present(j, "score_threshold", c.score_threshold);
  get_if_present(j, "use_learned_state", c.use_learned_state);
  get_if_present(j, "min_learned_sigma", c.min_learned_sigma);
  if (j.contains("lidar_sigma")) {
    c.sensor_noise.lidar_sigma = j.at("lidar_sigma").get<double>();
  }
  if (j.contains("camera_sigma")) {
    c.sensor_noise.camera_sigma = j.at("camera_sigma").get<double>();
  }
  if (j.contains("imm")) parse_imm(j.at("imm"), c.imm);
}

inline void parse_train(const nlohmann::json& j, train::TrainConfig& c) {
  get_if_present(j, "epochs", c.epochs);
  get_if_present(j, "batch_size", c.batch_size);
  get_if_present(j, "lr", c.lr);
  get_if_present(j, "momentum", c.momentum);
  get_if_present(j, "lr_decay", c.lr_decay);
  get_if_present(j, "plateau_patience", c.plateau_patience);
  get_if_present(j, "bptt_window", c.bptt_window);
  get_if_present(j, "val_fraction", c.val_fraction);
  get_if_present(j, "seed", c.seed);
  if (j.contains("w_score")) c.weights.w_score = j.at("w_score").get<double>();
  if (j.contains("w_state")) c.weights.w_state = j.at("w_state").get<double>();
  get_if_present(j, "use_prob", c.mask.use_prob);
  get_if_present(j, "use_score", c.mask.use_score);
  get_if_present(j, "use_state", c.mask.use_state);
}

inline void parse_dataset(const nlohmann::json& j, DatasetSpec& c) {
  get_if_present(j, "sequences", c.sequences);
  get_if_present(j, "duration", c.duration);
  get_if_present(j, "min_pedestrians", c.min_pedestrians);
  get_if_present(j, "max_pedestrians", c.max_pedestrians);
  get_if_present(j, "max_bicyclists", c.max_bicyclists);
  get_if_present(j, "camera", c.camera);
}

}  // namespace detail

inline Config parse_config(const nlohmann::json& j) {
  Config cfg;
  try {
    if (j.contains("scenario")) detail::parse_scenario(j.at("scenario"), cfg.scenario);
    if (j.contains("tracker")) detail::parse_tracker(j.at("tracker"), cfg.tracker);
    if (j.contains("train")) detail::parse_train(j.at("train"), cfg.train);
    if (j.contains("dataset")) detail::parse_dataset(j.at("dataset"), cfg.dataset);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

// FNV-1a over the canonical dump; identifies the effective configuration in
// result sidecars.
inline std::string config_hash(const nlohmann::json& j) {
  const std::string s = j.dump();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace lamot::io
