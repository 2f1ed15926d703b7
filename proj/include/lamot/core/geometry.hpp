// Copyright (c) 2026 lamot contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <lamot/core/types.hpp>

namespace lamot {

using Vec2 = Eigen::Vector2d;

inline Vec2 centroid(const BevBox& box) { return {box.cx, box.cy}; }

// Corners in counter-clockwise order.
inline std::array<Vec2, 4> box_corners(const BevBox& box) {
  const double c = std::cos(box.heading), s = std::sin(box.heading);
  const double hl = 0.5 * box.length, hw = 0.5 * box.width;
  auto rot = [&](double x, double y) {
    return Vec2(box.cx + c * x - s * y, box.cy + s * x + c * y);
  };
  return {rot(hl, hw), rot(-hl, hw), rot(-hl, -hw), rot(hl, -hw)};
}

// Shoelace area of a simple polygon (vertices in order).
inline double polygon_area(const std::vector<Vec2>& pts) {
  if (pts.size() < 3) return 0.0;
  double acc = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    const Vec2& a = pts[i];
    const Vec2& b = pts[(i + 1) % pts.size()];
    acc += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * std::abs(acc);
}

// Sutherland-Hodgman clip of `subject` against one half-plane defined by the
// directed edge a->b (keeps the left side, i.e. the interior of a CCW clip
// polygon).
inline std::vector<Vec2> clip_against_edge(const std::vector<Vec2>& subject,
                                           const Vec2& a, const Vec2& b) {
  std::vector<Vec2> out;
  out.reserve(subject.size() + 1);
  auto side = [&](const Vec2& p) {
    return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
  };
  const size_t n = subject.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& cur = subject[i];
    const Vec2& prev = subject[(i + n - 1) % n];
    const double sc = side(cur), sp = side(prev);
    const bool cur_in = sc >= 0.0, prev_in = sp >= 0.0;
    if (cur_in != prev_in) {
      const double t = sp / (sp - sc);
      out.push_back(prev + t * (cur - prev));
    }
    if (cur_in) out.push_back(cur);
  }
  return out;
}

inline std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject,
                                     const std::array<Vec2, 4>& clip) {
  std::vector<Vec2> poly = subject;
  for (size_t i = 0; i < clip.size() && !poly.empty(); ++i) {
    poly = clip_against_edge(poly, clip[i], clip[(i + 1) % clip.size()]);
  }
  return poly;
}

// Planar IoU of two oriented boxes. Degenerate footprints give 0.
inline double polygon_iou(const BevBox& a, const BevBox& b) {
  const double area_a = a.footprint_area();
  const double area_b = b.footprint_area();
  if (area_a <= 0.0 || area_b <= 0.0) return 0.0;
  const auto ca = box_corners(a);
  const auto cb = box_corners(b);
  const std::vector<Vec2> subject(ca.begin(), ca.end());
  const double inter = polygon_area(clip_convex(subject, cb));
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace lamot
