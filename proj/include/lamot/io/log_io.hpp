// Copyright (c) 2026 lamot contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <lamot/core/types.hpp>

namespace lamot::io {

struct ParseError : std::runtime_error {
  ParseError(size_t line_no, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + what),
        line(line_no) {}
  size_t line;
};

using LogRecord = std::variant<Detection, TrackRecord, Label>;

namespace detail {

// Values are serialized as 32-bit floats with 9 significant digits, which
// round-trips them exactly.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(static_cast<float>(v)));
  return buf;
}

struct FieldCursor {
  const std::vector<std::string>& fields;
  size_t line_no;
  size_t next = 1;  // fields[0] is the record tag

  const std::string& take(const char* name) {
    if (next >= fields.size()) {
      throw ParseError(line_no, std::string("missing field '") + name + "'");
    }
    return fields[next++];
  }

  double real(const char* name) {
    const std::string& s = take(name);
    char* end = nullptr;
    const float v = std::strtof(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
      throw ParseError(line_no, std::string("bad number in '") + name + "': " + s);
    }
    if (!std::isfinite(v)) {
      throw ParseError(line_no, std::string("non-finite value in '") + name + "'");
    }
    return v;
  }

  uint64_t integer(const char* name) {
    const std::string& s = take(name);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') {
      throw ParseError(line_no, std::string("bad integer in '") + name + "': " + s);
    }
    return v;
  }

  ObjectClass object_class() {
    const std::string& s = take("class");
    if (s == "ped") return ObjectClass::kPedestrian;
    if (s == "bike") return ObjectClass::kBicyclist;
    throw ParseError(line_no, "unknown class: " + s);
  }

  SensorChannel sensor() {
    const std::string& s = take("sensor");
    if (s == "lidar") return SensorChannel::kLidar;
    if (s == "camera") return SensorChannel::kCamera;
    throw ParseError(line_no, "unknown sensor: " + s);
  }

  BevBox box() {
    BevBox b;
    b.cx = real("cx");
    b.cy = real("cy");
    b.length = real("length");
    b.width = real("width");
    b.height = real("height");
    b.heading = real("heading");
    if (b.length < 0.0 || b.width < 0.0 || b.height < 0.0) {
      throw ParseError(line_no, "negative box extent");
    }
    return b;
  }
};

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

}  // namespace detail

// --- serialization -------------------------------------------------------
// D time id class sensor confidence cx cy length width height heading null
// T time id class x y vx vy sx sy svx svy cx cy length width height heading
// L time id class cx cy length width height heading vx vy
// Unknown trailing fields are ignored on read.

inline std::string serialize(const Detection& d) {
  using detail::fmt;
  std::string s = "D " + fmt(d.time) + ' ' + std::to_string(d.id) + ' ' +
                  to_string(d.cls) + ' ' + to_string(d.sensor) + ' ' +
                  fmt(d.confidence) + ' ' + fmt(d.box.cx) + ' ' + fmt(d.box.cy) +
                  ' ' + fmt(d.box.length) + ' ' + fmt(d.box.width) + ' ' +
                  fmt(d.box.height) + ' ' + fmt(d.box.heading) + ' ' +
                  (d.is_null ? "1" : "0");
  return s;
}

inline std::string serialize(const TrackRecord& t) {
  using detail::fmt;
  return "T " + fmt(t.time) + ' ' + std::to_string(t.track_id) + ' ' +
         to_string(t.cls) + ' ' + fmt(t.state.x) + ' ' + fmt(t.state.y) + ' ' +
         fmt(t.state.vx) + ' ' + fmt(t.state.vy) + ' ' + fmt(t.state.sigma_x) +
         ' ' + fmt(t.state.sigma_y) + ' ' + fmt(t.state.sigma_vx) + ' ' +
         fmt(t.state.sigma_vy) + ' ' + fmt(t.box.cx) + ' ' + fmt(t.box.cy) +
         ' ' + fmt(t.box.length) + ' ' + fmt(t.box.width) + ' ' +
         fmt(t.box.height) + ' ' + fmt(t.box.heading);
}

inline std::string serialize(const Label& l) {
  using detail::fmt;
  return "L " + fmt(l.time) + ' ' + std::to_string(l.track_id) + ' ' +
         to_string(l.cls) + ' ' + fmt(l.box.cx) + ' ' + fmt(l.box.cy) + ' ' +
         fmt(l.box.length) + ' ' + fmt(l.box.width) + ' ' + fmt(l.box.height) +
         ' ' + fmt(l.box.heading) + ' ' + fmt(l.vx) + ' ' + fmt(l.vy);
}

inline LogRecord parse_line(const std::string& line, size_t line_no) {
  const std::vector<std::string> fields = detail::split_fields(line);
  if (fields.empty()) throw ParseError(line_no, "empty record");
  detail::FieldCursor cur{fields, line_no};
  if (fields[0] == "D") {
    Detection d;
    d.time = cur.real("time");
    d.id = cur.integer("id");
    d.cls = cur.object_class();
    d.sensor = cur.sensor();
    d.confidence = cur.real("confidence");
    if (d.confidence < 0.0 || d.confidence > 1.0) {
      throw ParseError(line_no, "confidence out of [0,1]");
    }
    d.box = cur.box();
    d.is_null = cur.integer("null") != 0;
    return d;
  }
  if (fields[0] == "T") {
    TrackRecord t;
    t.time = cur.real("time");
    t.track_id = cur.integer("id");
    t.cls = cur.object_class();
    t.state.x = cur.real("x");
    t.state.y = cur.real("y");
    t.state.vx = cur.real("vx");
    t.state.vy = cur.real("vy");
    t.state.sigma_x = cur.real("sigma_x");
    t.state.sigma_y = cur.real("sigma_y");
    t.state.sigma_vx = cur.real("sigma_vx");
    t.state.sigma_vy = cur.real("sigma_vy");
    if (t.state.sigma_x <= 0.0 || t.state.sigma_y <= 0.0 ||
        t.state.sigma_vx <= 0.0 || t.state.sigma_vy <= 0.0) {
      throw ParseError(line_no, "non-positive sigma");
    }
    t.box = cur.box();
    return t;
  }
  if (fields[0] == "L") {
    Label l;
    l.time = cur.real("time");
    l.track_id = cur.integer("id");
    l.cls = cur.object_class();
    l.box = cur.box();
    l.vx = cur.real("vx");
    l.vy = cur.real("vy");
    return l;
  }
  throw ParseError(line_no, "unknown record tag: " + fields[0]);
}

// Streaming reader; memory use is independent of the file length.
class LogReader {
 public:
  explicit LogReader(const std::string& path) : in_(path) {
    if (!in_) throw ParseError(0, "cannot open: " + path);
  }

  std::optional<LogRecord> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.empty()) continue;
      return parse_line(line, line_no_);
    }
    return std::nullopt;
  }

 private:
  std::ifstream in_;
  size_t line_no_ = 0;
};

inline std::vector<LogRecord> read_log(const std::string& path) {
  LogReader reader(path);
  std::vector<LogRecord> out;
  while (auto rec = reader.next()) out.push_back(std::move(*rec));
  return out;
}

template <typename Record>
void write_log(const std::string& path, const std::vector<Record>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& r : records) out << serialize(r) << '\n';
}

inline void append_line(std::ofstream& out, const std::string& line) {
  out << line << '\n';
}

// --- grouping helpers ----------------------------------------------------

inline std::vector<DetectionFrame> group_detections(std::vector<Detection> dets) {
  std::map<double, std::vector<Detection>> by_time;
  for (auto& d : dets) by_time[d.time].push_back(std::move(d));
  std::vector<DetectionFrame> frames;
  frames.reserve(by_time.size());
  for (auto& [t, v] : by_time) frames.push_back({t, std::move(v)});
  return frames;
}

inline std::vector<LabelFrame> group_labels(std::vector<Label> labels) {
  std::map<double, std::vector<Label>> by_time;
  for (auto& l : labels) by_time[l.time].push_back(std::move(l));
  std::vector<LabelFrame> frames;
  frames.reserve(by_time.size());
  for (auto& [t, v] : by_time) frames.push_back({t, std::move(v)});
  return frames;
}

inline std::vector<Detection> read_detections(const std::string& path) {
  std::vector<Detection> out;
  LogReader reader(path);
  while (auto rec = reader.next()) {
    if (auto* d = std::get_if<Detection>(&*rec)) out.push_back(*d);
  }
  return out;
}

inline std::vector<Label> read_labels(const std::string& path) {
  std::vector<Label> out;
  LogReader reader(path);
  while (auto rec = reader.next()) {
    if (auto* l = std::get_if<Label>(&*rec)) out.push_back(*l);
  }
  return out;
}

inline std::vector<TrackRecord> read_tracks(const std::string& path) {
  std::vector<TrackRecord> out;
  LogReader reader(path);
  while (auto rec = reader.next()) {
    if (auto* t = std::get_if<TrackRecord>(&*rec)) out.push_back(*t);
  }
  return out;
}

}  // namespace lamot::io
