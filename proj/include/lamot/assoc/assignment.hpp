// Copyright (c) 2026 lamot contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace lamot::assoc {

// One gated (track, detection) pairing. `score` is "lower is better" for
// every association mode.
struct ScoredPair {
  uint64_t track_id = 0;
  uint64_t detection_id = 0;
  double score = 0.0;
};

struct Assignment {
  std::vector<ScoredPair> matched;
  std::vector<uint64_t> unmatched_tracks;
  std::vector<uint64_t> unmatched_detections;

  double total_cost() const {
    double c = 0.0;
    for (const auto& p : matched) c += p.score;
    return c;
  }
};

namespace detail {

inline void collect_ids(const std::vector<ScoredPair>& pairs,
                        std::vector<uint64_t>& tracks,
                        std::vector<uint64_t>& detections) {
  std::unordered_set<uint64_t> ts, ds;
  for (const auto& p : pairs) {
    if (ts.insert(p.track_id).second) tracks.push_back(p.track_id);
    if (ds.insert(p.detection_id).second) detections.push_back(p.detection_id);
  }
  std::sort(tracks.begin(), tracks.end());
  std::sort(detections.begin(), detections.end());
}

inline void fill_unmatched(const std::vector<ScoredPair>& pairs,
                           Assignment& out) {
  std::unordered_set<uint64_t> mt, md;
  for (const auto& p : out.matched) {
    mt.insert(p.track_id);
    md.insert(p.detection_id);
  }
  std::vector<uint64_t> tracks, detections;
  collect_ids(pairs, tracks, detections);
  for (uint64_t t : tracks) {
    if (!mt.count(t)) out.unmatched_tracks.push_back(t);
  }
  for (uint64_t d : detections) {
    if (!md.count(d)) out.unmatched_detections.push_back(d);
  }
}

}  // namespace detail

// Best-first matching: repeatedly commits the globally lowest-score pair
// whose track and detection are both still free. Ties break on
// (track_id, detection_id) so runs are reproducible.
inline Assignment greedy_assign(std::vector<ScoredPair> pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const ScoredPair& a, const ScoredPair& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.track_id != b.track_id) return a.track_id < b.track_id;
    return a.detection_id < b.detection_id;
  });
  Assignment out;
  std::unordered_set<uint64_t> used_t, used_d;
  for (const auto& p : pairs) {
    if (used_t.count(p.track_id) || used_d.count(p.detection_id)) continue;
    used_t.insert(p.track_id);
    used_d.insert(p.detection_id);
    out.matched.push_back(p);
  }
  detail::fill_unmatched(pairs, out);
  return out;
}

// Minimum-total-cost bipartite matching (Jonker-Volgenant style shortest
// augmenting paths on a padded square matrix). Pairs absent from the input
// are unmatchable; a committed entry at the padding cost is dropped, so the
// result is a maximum-cardinality, minimum-cost matching over the given
// pairs. Used as the optimal oracle for greedy_assign and as an optional
// runtime mode.
inline Assignment hungarian_assign(const std::vector<ScoredPair>& pairs) {
  std::vector<uint64_t> tracks, detections;
  detail::collect_ids(pairs, tracks, detections);
  const int nt = static_cast<int>(tracks.size());
  const int nd = static_cast<int>(detections.size());
  const int n = std::max(nt, nd);
  Assignment out;
  if (n == 0) return out;

  std::unordered_map<uint64_t, int> tidx, didx;
  for (int i = 0; i < nt; ++i) tidx[tracks[i]] = i;
  for (int j = 0; j < nd; ++j) didx[detections[j]] = j;

  double max_abs = 1.0;
  for (const auto& p : pairs) max_abs = std::max(max_abs, std::abs(p.score));
  const double kForbidden = max_abs * (n + 1) * 4.0 + 1.0;

  std::vector<std::vector<double>> cost(n, std::vector<double>(n, kForbidden));
  std::vector<std::vector<double>> best_seen(nt, std::vector<double>(nd, kForbidden));
  for (const auto& p : pairs) {
    auto& c = best_seen[tidx[p.track_id]][didx[p.detection_id]];
    c = std::min(c, p.score);
  }
  for (int i = 0; i < nt; ++i) {
    for (int j = 0; j < nd; ++j) cost[i][j] = best_seen[i][j];
  }

  // Shortest augmenting path assignment with potentials (1-indexed scratch).
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match_col(n + 1, 0);  // column -> row
  std::vector<int> way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match_col[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match_col[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match_col[j0] != 0);
    do {
      const int j1 = way[j0];
      match_col[j0] = match_col[j1];
      j0 = j1;
    } while (j0);
  }

  for (int j = 1; j <= n; ++j) {
    const int i = match_col[j];
    if (i == 0) continue;
    const int ti = i - 1, dj = j - 1;
    if (ti >= nt || dj >= nd) continue;  // padding row/column
    if (best_seen[ti][dj] >= kForbidden) continue;
    out.matched.push_back({tracks[ti], detections[dj], best_seen[ti][dj]});
  }
  std::sort(out.matched.begin(), out.matched.end(),
            [](const ScoredPair& a, const ScoredPair& b) {
              return a.track_id < b.track_id;
            });
  detail::fill_unmatched(pairs, out);
  return out;
}

}  // namespace lamot::assoc
