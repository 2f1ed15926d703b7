// Copyright (c) 2026 lamot contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: simulation, training, evaluation, method
// comparison, density sweeps and latency benchmarking.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <lamot/io/config_io.hpp>
#include <lamot/io/log_io.hpp>
#include <lamot/metrics/clearmot.hpp>
#include <lamot/model/weights_io.hpp>
#include <lamot/sim/scenario.hpp>
#include <lamot/tracker/tracker.hpp>
#include <lamot/train/label_gen.hpp>
#include <lamot/train/trainer.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lamot;

namespace {

#ifndef LAMOT_GIT_DESCRIBE
#define LAMOT_GIT_DESCRIBE "unknown"
#endif

std::string fmtf(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string opt_str(const std::optional<double>& v) {
  return v ? fmtf(*v) : std::string("-");
}

void write_sidecar(const fs::path& out_dir, const std::string& name,
                   const std::string& command, uint64_t seed, const json& config,
                   json extra = json::object()) {
  json meta;
  meta["command"] = command;
  meta["git_describe"] = LAMOT_GIT_DESCRIBE;
  meta["seed"] = seed;
  meta["config_hash"] = io::config_hash(config);
  meta["extra"] = std::move(extra);
  std::ofstream out(out_dir / (name + ".meta.json"), std::ios::trunc);
  out << meta.dump(2) << '\n';
}

json read_config_json(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw io::ConfigError("cannot open config: " + path);
  json j;
  in >> j;
  return j;
}

void apply_sensors_flag(sim::ScenarioConfig& cfg, const std::string& sensors) {
  if (sensors.empty()) return;
  const bool want_camera = sensors == "lidar+camera";
  if (!want_camera && sensors != "lidar") {
    throw io::ConfigError("--sensors must be 'lidar' or 'lidar+camera'");
  }
  bool has_camera = false;
  for (const auto& s : cfg.sensors) {
    has_camera |= s.channel == SensorChannel::kCamera;
  }
  if (want_camera && !has_camera) {
    cfg.sensors.push_back(sim::SensorModel::camera_default());
  }
  if (!want_camera) {
    std::erase_if(cfg.sensors, [](const sim::SensorModel& s) {
      return s.channel == SensorChannel::kCamera;
    });
  }
}

struct LoadedWeights {
  std::optional<model::Mlp<float>> mlp;
  std::optional<model::Lstm<float>> lstm;
};

void require_weights(AssocMode mode, const LoadedWeights& w) {
  if (mode == AssocMode::kLearnedMlp && !w.mlp) {
    throw TrackerError(
        "learned-mlp weights missing; train them with:\n"
        "  lamot train --arch mlp --out <dir>");
  }
  if (mode == AssocMode::kLearnedLstm && !w.lstm) {
    throw TrackerError(
        "learned-lstm weights missing; train them with:\n"
        "  lamot train --arch lstm --out <dir>");
  }
}

Tracker make_tracker(TrackerConfig cfg, AssocMode mode, const LoadedWeights& w) {
  cfg.mode = mode;
  require_weights(mode, w);
  Tracker tracker(cfg);
  if (w.mlp) tracker.set_mlp(*w.mlp);
  if (w.lstm) tracker.set_lstm(*w.lstm);
  return tracker;
}

std::vector<TrackRecord> run_tracker(Tracker& tracker,
                                     const std::vector<DetectionFrame>& frames) {
  std::vector<TrackRecord> rows;
  for (const DetectionFrame& f : frames) {
    FrameLog log = tracker.step(f);
    rows.insert(rows.end(), log.tracks.begin(), log.tracks.end());
  }
  return rows;
}

std::vector<Label> flatten_labels(const std::vector<LabelFrame>& frames) {
  std::vector<Label> out;
  for (const auto& f : frames) {
    out.insert(out.end(), f.labels.begin(), f.labels.end());
  }
  return out;
}

void merge_match_result(metrics::MatchResult& into, const metrics::MatchResult& from) {
  into.correspondences.insert(into.correspondences.end(),
                              from.correspondences.begin(),
                              from.correspondences.end());
  into.fp += from.fp;
  into.fn += from.fn;
  into.idsw += from.idsw;
  into.frag += from.frag;
  into.gt += from.gt;
  into.label_trajectories += from.label_trajectories;
  into.mostly_tracked += from.mostly_tracked;
  into.mostly_lost += from.mostly_lost;
}

metrics::MatchResult match_scenario(const sim::Scenario& scenario,
                                    const std::vector<TrackRecord>& rows,
                                    const metrics::MatchConfig& mcfg) {
  std::map<double, std::vector<TrackRecord>> by_time;
  for (const TrackRecord& r : rows) by_time[r.time].push_back(r);
  std::vector<std::vector<TrackRecord>> track_frames;
  for (const LabelFrame& lf : scenario.label_frames) {
    auto it = by_time.find(lf.time);
    track_frames.push_back(it == by_time.end() ? std::vector<TrackRecord>{}
                                               : it->second);
  }
  return metrics::match_frames(scenario.label_frames, track_frames, mcfg);
}

json report_to_json(const metrics::MetricReport& r) {
  json j;
  j["mota"] = r.mota;
  j["motp"] = r.motp;
  j["mt"] = r.mt;
  j["ml"] = r.ml;
  j["idsw"] = r.idsw;
  j["frag"] = r.frag;
  j["fp"] = r.fp;
  j["fn"] = r.fn;
  j["gt"] = r.gt;
  j["matches"] = r.matches;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) {
      j[key] = *v;
    } else {
      j[key] = nullptr;
    }
  };
  put("motve_ped", r.motve_ped);
  put("motve_bike", r.motve_bike);
  put("motvo_ped", r.motvo_ped);
  put("motvo_bike", r.motvo_bike);
  return j;
}

const char* kCompareHeader =
    "sensors,method,mota,motvo_ped,motvo_bike,motve_ped,motve_bike,fp,fn,idsw,"
    "motp,mt,ml,frag";

std::string compare_row(const std::string& sensors, const std::string& method,
                        const metrics::MetricReport& r) {
  std::string s = sensors + ',' + method + ',' + fmtf(r.mota) + ',' +
                  opt_str(r.motvo_ped) + ',' + opt_str(r.motvo_bike) + ',' +
                  opt_str(r.motve_ped) + ',' + opt_str(r.motve_bike) + ',' +
                  std::to_string(r.fp) + ',' + std::to_string(r.fn) + ',' +
                  std::to_string(r.idsw) + ',' + fmtf(r.motp) + ',' +
                  fmtf(r.mt) + ',' + fmtf(r.ml) + ',' + std::to_string(r.frag);
  return s;
}

std::string format_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<size_t> widths;
  for (const auto& row : rows) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (size_t i = 0; i < row.size(); ++i) {
      widths[i] = std::max(widths[i], row[i].size());
    }
  }
  std::string out;
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      out += row[i];
      if (i + 1 < row.size()) out += std::string(widths[i] - row[i].size() + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

std::string metrics_table(const metrics::MetricReport& r) {
  auto round3 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return std::string(buf);
  };
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"MOTA", "MOTVO-Ped", "MOTVO-Bike", "MOTVE-Ped", "MOTVE-Bike",
                  "FP", "FN", "IDSW", "MOTP", "MT", "ML", "Frag"});
  rows.push_back({round3(r.mota), opt_str(r.motvo_ped), opt_str(r.motvo_bike),
                  opt_str(r.motve_ped), opt_str(r.motve_bike),
                  std::to_string(r.fp), std::to_string(r.fn),
                  std::to_string(r.idsw), round3(r.motp), round3(r.mt),
                  round3(r.ml), std::to_string(r.frag)});
  return format_table(rows);
}

// --- subcommands ----------------------------------------------------------

int cmd_simulate(const json& config_json, uint64_t seed, const std::string& sensors,
                 const fs::path& out_dir) {
  io::Config cfg = io::parse_config(config_json);
  cfg.scenario.seed = seed;
  apply_sensors_flag(cfg.scenario, sensors);
  const sim::Scenario scenario = sim::generate_scenario(cfg.scenario);

  fs::create_directories(out_dir);
  std::vector<Detection> dets;
  for (const auto& f : scenario.detection_frames) {
    dets.insert(dets.end(), f.detections.begin(), f.detections.end());
  }
  io::write_log((out_dir / "detections.log").string(), dets);
  io::write_log((out_dir / "labels.log").string(), flatten_labels(scenario.label_frames));

  json extra;
  extra["frames"] = scenario.label_frames.size();
  extra["detections"] = dets.size();
  extra["actors"] = cfg.scenario.n_pedestrians + cfg.scenario.n_bicyclists;
  write_sidecar(out_dir, "simulate", "simulate", seed, config_json, extra);
  std::cout << "wrote " << dets.size() << " detections over "
            << scenario.label_frames.size() << " frames to " << out_dir << "\n";
  return 0;
}

train::Dataset build_training_set(const io::Config& cfg, uint64_t seed) {
  train::Dataset ds;
  train::LabelGenConfig lg;
  lg.radius = cfg.tracker.gating_radius;
  for (int i = 0; i < cfg.dataset.sequences; ++i) {
    Rng shape_rng(mix_seed(seed, 5000 + i));
    sim::ScenarioConfig sc = cfg.scenario;
    sc.duration = cfg.dataset.duration;
    sc.n_pedestrians =
        cfg.dataset.min_pedestrians +
        static_cast<int>(shape_rng.uniform_index(
            cfg.dataset.max_pedestrians - cfg.dataset.min_pedestrians + 1));
    sc.n_bicyclists =
        static_cast<int>(shape_rng.uniform_index(cfg.dataset.max_bicyclists + 1));
    sc.seed = mix_seed(seed, i);
    std::erase_if(sc.sensors, [](const sim::SensorModel& s) {
      return s.channel == SensorChannel::kCamera;
    });
    if (cfg.dataset.camera) {
      sc.sensors.push_back(sim::SensorModel::camera_default());
    }
    const sim::Scenario scenario = sim::generate_scenario(sc);
    train::harvest_sequence(ds, i, scenario.detection_frames,
                            scenario.truth_per_detection_frame, cfg.tracker, lg,
                            seed);
  }
  return ds;
}

int cmd_train(const json& config_json, const std::string& arch, uint64_t seed,
              const fs::path& out_dir, const std::string& dataset_in,
              const std::string& dataset_out) {
  io::Config cfg = io::parse_config(config_json);
  fs::create_directories(out_dir);

  train::Dataset ds;
  if (!dataset_in.empty()) {
    ds = train::read_dataset(dataset_in);
  } else {
    std::cout << "generating training set: " << cfg.dataset.sequences
              << " sequences...\n";
    ds = build_training_set(cfg, seed);
  }
  std::cout << "dataset: " << ds.examples.size() << " examples ("
            << ds.stats.positives << " positive, " << ds.stats.negatives
            << " negative, " << ds.stats.null_positives << " null)\n";
  if (!dataset_out.empty()) train::write_dataset(dataset_out, ds);

  cfg.train.seed = mix_seed(seed, 42);
  train::TrainHistory hist;
  std::string weights_path;
  if (arch == "mlp") {
    auto net = model::Mlp<double>::random_init(mix_seed(seed, 777));
    hist = train::train_mlp(net, ds, cfg.train);
    weights_path = (out_dir / "weights_mlp.bin").string();
    model::save_mlp(net, weights_path);
  } else if (arch == "lstm") {
    auto net = model::Lstm<double>::random_init(mix_seed(seed, 777));
    hist = train::train_lstm(net, ds, cfg.train);
    weights_path = (out_dir / "weights_lstm.bin").string();
    model::save_lstm(net, weights_path);
  } else {
    throw io::ConfigError("--arch must be 'mlp' or 'lstm'");
  }
  train::write_history_csv((out_dir / "loss_history.csv").string(), hist);

  const train::EpochStats& best = hist.epochs[hist.best_epoch];
  json extra;
  extra["arch"] = arch;
  extra["examples"] = ds.examples.size();
  extra["best_epoch"] = hist.best_epoch;
  extra["best_val_loss"] = hist.best_val_loss;
  extra["val_accuracy"] = best.val_accuracy;
  write_sidecar(out_dir, "train", "train", seed, config_json, extra);
  std::cout << "best epoch " << hist.best_epoch << ": val_loss "
            << fmtf(hist.best_val_loss) << ", val_accuracy "
            << fmtf(best.val_accuracy) << "\nweights: " << weights_path << "\n";
  return 0;
}

LoadedWeights load_weight_flags(const std::string& mlp_path,
                                const std::string& lstm_path) {
  LoadedWeights w;
  if (!mlp_path.empty()) w.mlp = model::load_mlp<float>(mlp_path);
  if (!lstm_path.empty()) w.lstm = model::load_lstm<float>(lstm_path);
  return w;
}

int cmd_eval(const json& config_json, const std::string& mode_str, uint64_t seed,
             const std::string& sensors, const fs::path& out_dir,
             const std::string& mlp_path, const std::string& lstm_path,
             const std::string& detections_path, const std::string& labels_path) {
  io::Config cfg = io::parse_config(config_json);
  const auto mode = parse_assoc_mode(mode_str);
  if (!mode) throw io::ConfigError("unknown association mode: " + mode_str);
  const LoadedWeights weights = load_weight_flags(mlp_path, lstm_path);

  std::vector<DetectionFrame> frames;
  std::vector<Label> labels;
  if (!detections_path.empty() || !labels_path.empty()) {
    if (detections_path.empty() || labels_path.empty()) {
      throw io::ConfigError("--detections and --labels must be given together");
    }
    frames = io::group_detections(io::read_detections(detections_path));
    labels = io::read_labels(labels_path);
  } else {
    cfg.scenario.seed = seed;
    apply_sensors_flag(cfg.scenario, sensors);
    const sim::Scenario scenario = sim::generate_scenario(cfg.scenario);
    frames = scenario.detection_frames;
    labels = flatten_labels(scenario.label_frames);
  }

  Tracker tracker = make_tracker(cfg.tracker, *mode, weights);
  const std::vector<TrackRecord> rows = run_tracker(tracker, frames);
  const metrics::MetricReport report = metrics::evaluate(labels, rows);

  fs::create_directories(out_dir);
  io::write_log((out_dir / "tracks.log").string(), rows);
  {
    std::ofstream mj(out_dir / "metrics.json", std::ios::trunc);
    mj << report_to_json(report).dump(2) << '\n';
    std::ofstream mt(out_dir / "metrics.txt", std::ios::trunc);
    mt << metrics_table(report);
  }
  write_sidecar(out_dir, "eval", "eval", seed, config_json,
                {{"mode", mode_str}, {"rows", rows.size()}});
  std::cout << metrics_table(report);
  return 0;
}

int cmd_compare(const json& config_json, uint64_t seed, const fs::path& out_dir,
                const std::string& mlp_path, const std::string& lstm_path,
                int n_scenarios) {
  io::Config cfg = io::parse_config(config_json);
  const LoadedWeights weights = load_weight_flags(mlp_path, lstm_path);
  const std::vector<AssocMode> methods = {
      AssocMode::kIou, AssocMode::kL2, AssocMode::kMahalanobis,
      AssocMode::kLearnedMlp, AssocMode::kLearnedLstm};
  for (AssocMode m : methods) require_weights(m, weights);

  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "comparison.csv", std::ios::trunc);
  csv << kCompareHeader << '\n';

  const metrics::MatchConfig mcfg;
  std::vector<std::vector<std::string>> table;
  table.push_back({"sensors", "method", "MOTA", "MOTVO-Ped", "MOTVE-Ped", "FP",
                   "FN", "IDSW", "Frag"});
  for (const std::string sensors : {"lidar", "lidar+camera"}) {
    // scenario set is identical across methods and shares actor motion with
    // the other sensor row
    std::vector<sim::Scenario> scenarios;
    for (int i = 0; i < n_scenarios; ++i) {
      sim::ScenarioConfig sc = cfg.scenario;
      sc.seed = mix_seed(seed, 900 + i);
      apply_sensors_flag(sc, sensors);
      scenarios.push_back(sim::generate_scenario(sc));
    }
    for (AssocMode mode : methods) {
      metrics::MatchResult merged;
      for (const sim::Scenario& scenario : scenarios) {
        Tracker tracker = make_tracker(cfg.tracker, mode, weights);
        const std::vector<TrackRecord> rows =
            run_tracker(tracker, scenario.detection_frames);
        merge_match_result(merged, match_scenario(scenario, rows, mcfg));
      }
      const metrics::MetricReport r = metrics::clear_mot(merged, mcfg);
      csv << compare_row(sensors, to_string(mode), r) << '\n';
      table.push_back({sensors, to_string(mode), fmtf(r.mota),
                       opt_str(r.motvo_ped), opt_str(r.motve_ped),
                       std::to_string(r.fp), std::to_string(r.fn),
                       std::to_string(r.idsw), std::to_string(r.frag)});
      std::cout << "done: " << sensors << " / " << to_string(mode) << "\n";
    }
  }
  write_sidecar(out_dir, "comparison", "compare", seed, config_json,
                {{"scenarios", n_scenarios}});
  std::cout << format_table(table);
  return 0;
}

struct BenchRow {
  int actors = 0;
  int frames = 0;
  double mean_ms = 0.0, p50_ms = 0.0, p99_ms = 0.0, max_ms = 0.0;
};

BenchRow bench_actor_count(const io::Config& cfg, const LoadedWeights& weights,
                           int actors, uint64_t seed) {
  sim::ScenarioConfig sc = cfg.scenario;
  sc.n_pedestrians = actors;
  sc.n_bicyclists = 0;
  sc.duration = 10.0;
  // constant crowd density: the scene grows with the actor count
  sc.area_half = 25.0 * std::sqrt(std::max(actors, 10) / 100.0);
  sc.seed = mix_seed(seed, actors);
  std::erase_if(sc.sensors, [](const sim::SensorModel& s) {
    return s.channel == SensorChannel::kCamera;
  });
  const sim::Scenario scenario = sim::generate_scenario(sc);

  // warm-up pass, then the timed pass on a fresh tracker
  {
    Tracker warm = make_tracker(cfg.tracker, AssocMode::kLearnedLstm, weights);
    run_tracker(warm, scenario.detection_frames);
  }
  Tracker tracker = make_tracker(cfg.tracker, AssocMode::kLearnedLstm, weights);
  std::vector<double> ms;
  ms.reserve(scenario.detection_frames.size());
  for (const DetectionFrame& f : scenario.detection_frames) {
    const auto t0 = std::chrono::steady_clock::now();
    tracker.step(f);
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  BenchRow row;
  row.actors = actors;
  row.frames = static_cast<int>(ms.size());
  row.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / ms.size();
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  row.p50_ms = sorted[sorted.size() / 2];
  row.p99_ms = sorted[static_cast<size_t>(sorted.size() * 0.99)];
  row.max_ms = sorted.back();
  return row;
}

double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 1.0;
  const double b = sxy / sxx;
  double ss_res = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double pred = my + b * (x[i] - mx);
    ss_res += (y[i] - pred) * (y[i] - pred);
  }
  return 1.0 - ss_res / syy;
}

int cmd_bench(const json& config_json, uint64_t seed, const fs::path& out_dir,
              const std::string& lstm_path, bool assert_budget,
              std::vector<int> actor_counts) {
  io::Config cfg = io::parse_config(config_json);
  LoadedWeights weights;
  if (!lstm_path.empty()) {
    weights.lstm = model::load_lstm<float>(lstm_path);
  } else {
    // latency does not depend on the weight values
    model::Lstm<double> net = model::Lstm<double>::random_init(mix_seed(seed, 3));
    model::Lstm<float> netf = model::Lstm<float>::zero_like();
    auto src = model::parameter_blocks<const model::Lstm<double>, const double>(net);
    auto dst = model::parameter_blocks<model::Lstm<float>, float>(netf);
    for (size_t k = 0; k < src.size(); ++k) {
      for (int i = 0; i < src[k].second; ++i) {
        dst[k].first[i] = static_cast<float>(src[k].first[i]);
      }
    }
    weights.lstm = std::move(netf);
  }
  if (actor_counts.empty()) actor_counts = {10, 50, 100, 200, 500};

  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "latency.csv", std::ios::trunc);
  csv << "actors,frames,mean_ms,p50_ms,p99_ms,max_ms\n";
  std::vector<double> xs, ys;
  double p50_100 = -1.0, p50_500 = -1.0;
  for (int actors : actor_counts) {
    const BenchRow row = bench_actor_count(cfg, weights, actors, seed);
    csv << row.actors << ',' << row.frames << ',' << fmtf(row.mean_ms) << ','
        << fmtf(row.p50_ms) << ',' << fmtf(row.p99_ms) << ',' << fmtf(row.max_ms)
        << '\n';
    std::cout << "actors " << row.actors << ": p50 " << fmtf(row.p50_ms)
              << " ms, p99 " << fmtf(row.p99_ms) << " ms\n";
    xs.push_back(row.actors);
    ys.push_back(row.p50_ms);
    if (actors == 100) p50_100 = row.p50_ms;
    if (actors == 500) p50_500 = row.p50_ms;
  }
  const double r2 = xs.size() >= 3 ? linear_fit_r2(xs, ys) : 1.0;
  std::cout << "linear fit R^2: " << fmtf(r2) << "\n";
  write_sidecar(out_dir, "latency", "bench", seed, config_json,
                {{"r2", r2}, {"p50_100", p50_100}, {"p50_500", p50_500}});

  if (assert_budget) {
    bool ok = true;
    if (p50_100 >= 0.0 && p50_100 > 2.5) {
      std::cerr << "budget violation: p50 at 100 actors " << fmtf(p50_100)
                << " ms > 2.5 ms\n";
      ok = false;
    }
    if (p50_500 >= 0.0 && p50_500 > 5.0) {
      std::cerr << "budget violation: p50 at 500 actors " << fmtf(p50_500)
                << " ms > 5 ms\n";
      ok = false;
    }
    return ok ? 0 : 1;
  }
  return 0;
}

int cmd_density(const json& config_json, uint64_t seed, const fs::path& out_dir,
                const std::string& lstm_path, std::vector<int> densities,
                int scenarios_per_density) {
  io::Config cfg = io::parse_config(config_json);
  LoadedWeights weights;
  weights.lstm = model::load_lstm<float>(lstm_path);
  if (densities.empty()) densities = {10, 25, 50, 100, 150};

  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "density.csv", std::ios::trunc);
  csv << "density,method,mota,idsw,motvo_ped,motve_ped,matches\n";
  const metrics::MatchConfig mcfg;

  json trend = json::array();
  for (int density : densities) {
    sim::ScenarioConfig base = cfg.scenario;
    base.n_pedestrians = density;
    apply_sensors_flag(base, "lidar+camera");
    std::map<std::string, metrics::MetricReport> reports;
    for (AssocMode mode : {AssocMode::kLearnedLstm, AssocMode::kMahalanobis}) {
      metrics::MatchResult merged;
      for (int i = 0; i < scenarios_per_density; ++i) {
        sim::ScenarioConfig sc = base;
        sc.seed = mix_seed(seed, density * 131 + i);
        const sim::Scenario scenario = sim::generate_scenario(sc);
        Tracker tracker = make_tracker(cfg.tracker, mode, weights);
        const std::vector<TrackRecord> rows =
            run_tracker(tracker, scenario.detection_frames);
        merge_match_result(merged, match_scenario(scenario, rows, mcfg));
      }
      const metrics::MetricReport r = metrics::clear_mot(merged, mcfg);
      reports[to_string(mode)] = r;
      csv << density << ',' << to_string(mode) << ',' << fmtf(r.mota) << ','
          << r.idsw << ',' << opt_str(r.motvo_ped) << ',' << opt_str(r.motve_ped)
          << ',' << r.matches << '\n';
    }
    const auto& learned = reports.at("learned-lstm");
    const auto& classical = reports.at("mahalanobis");
    double improvement = 0.0;
    if (classical.motvo_ped && *classical.motvo_ped > 0.0 && learned.motvo_ped) {
      improvement = 1.0 - *learned.motvo_ped / *classical.motvo_ped;
    }
    trend.push_back({{"density", density}, {"motvo_improvement", improvement}});
    std::cout << "density " << density << ": learned idsw " << learned.idsw
              << " vs mahalanobis " << classical.idsw << ", motvo improvement "
              << fmtf(improvement) << "\n";
  }
  write_sidecar(out_dir, "density", "density", seed, config_json,
                {{"trend", trend}, {"scenarios_per_density", scenarios_per_density}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learned-association multi-object tracking toolkit"};
  app.require_subcommand(1);

  std::string config_path, sensors, mode = "mahalanobis";
  std::string out_dir = "out";
  std::string mlp_weights, lstm_weights, detections_path, labels_path;
  std::string dataset_in, dataset_out, arch = "lstm";
  uint64_t seed = 1;
  bool assert_budget = false;
  int n_scenarios = 20, scenarios_per_density = 3;
  std::vector<int> actor_counts, densities;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--out", out_dir, "output directory");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic scenario");
  add_common(simulate);
  simulate->add_option("--sensors", sensors, "lidar or lidar+camera");

  CLI::App* train_cmd = app.add_subcommand("train", "train an association model");
  add_common(train_cmd);
  train_cmd->add_option("--arch", arch, "mlp or lstm");
  train_cmd->add_option("--dataset", dataset_in, "use a serialized dataset");
  train_cmd->add_option("--save-dataset", dataset_out, "serialize the dataset");

  CLI::App* eval_cmd = app.add_subcommand("eval", "run the tracker and score it");
  add_common(eval_cmd);
  eval_cmd->add_option("--mode", mode, "association mode");
  eval_cmd->add_option("--sensors", sensors, "lidar or lidar+camera");
  eval_cmd->add_option("--mlp-weights", mlp_weights, "MLP weight file");
  eval_cmd->add_option("--lstm-weights", lstm_weights, "LSTM weight file");
  eval_cmd->add_option("--detections", detections_path, "detection log input");
  eval_cmd->add_option("--labels", labels_path, "label log input");

  CLI::App* compare = app.add_subcommand("compare", "compare all association methods");
  add_common(compare);
  compare->add_option("--mlp-weights", mlp_weights, "MLP weight file");
  compare->add_option("--lstm-weights", lstm_weights, "LSTM weight file");
  compare->add_option("--scenarios", n_scenarios, "scenarios per sensor set");

  CLI::App* bench = app.add_subcommand("bench", "per-frame latency benchmark");
  add_common(bench);
  bench->add_option("--lstm-weights", lstm_weights, "LSTM weight file");
  bench->add_option("--actors", actor_counts, "actor counts to sweep");
  bench->add_flag("--assert-budget", assert_budget, "fail if budgets are exceeded");

  CLI::App* density = app.add_subcommand("density", "crowd density sweep");
  add_common(density);
  density->add_option("--lstm-weights", lstm_weights, "LSTM weight file")->required();
  density->add_option("--densities", densities, "pedestrian densities");
  density->add_option("--scenarios", scenarios_per_density, "scenarios per density");

  CLI11_PARSE(app, argc, argv);

  try {
    const json config_json = read_config_json(config_path);
    if (simulate->parsed()) {
      return cmd_simulate(config_json, seed, sensors, out_dir);
    }
    if (train_cmd->parsed()) {
      return cmd_train(config_json, arch, seed, out_dir, dataset_in, dataset_out);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(config_json, mode, seed, sensors, out_dir, mlp_weights,
                      lstm_weights, detections_path, labels_path);
    }
    if (compare->parsed()) {
      return cmd_compare(config_json, seed, out_dir, mlp_weights, lstm_weights,
                         n_scenarios);
    }
    if (bench->parsed()) {
      return cmd_bench(config_json, seed, out_dir, lstm_weights, assert_budget,
                       actor_counts);
    }
    if (density->parsed()) {
      return cmd_density(config_json, seed, out_dir, lstm_weights, densities,
                         scenarios_per_density);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
