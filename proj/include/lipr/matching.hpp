// lipr: descriptor matching between two feature sets.
//
// The query side is pre-filtered to its N_s highest corner scores; each
// selected descriptor takes its nearest Hamming neighbor in the candidate set.
// Matches are kept when their distance is strictly below
// lambda_h = max(2 * d_min, lambda_floor), then made one-to-one on the
// candidate side (smaller distance wins).
#pragma once

#include <algorithm>
#include <vector>

#include "lipr/orb.hpp"

namespace lipr {

struct Match {
  int i_index = 0;  // into the query FeatureSet
  int j_index = 0;  // into the candidate FeatureSet
  int distance = 0;
};

struct MatchSet {
  std::vector<Match> matches;  // ascending by distance
  int lambda_h = 0;
  int d_min = -1;
  int preselected = 0;  // how many query features entered matching

  std::size_t size() const { return matches.size(); }
  bool empty() const { return matches.empty(); }
};

inline MatchSet match_features(const FeatureSet& fi, const FeatureSet& fj, int n_s,
                               int lambda_floor = 25) {
  MatchSet out;
  out.lambda_h = lambda_floor;
  if (fi.empty() || fj.empty() || n_s < 1) return out;

  // top-N_s query descriptors by corner score
  std::vector<int> order(fi.features.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double sa = fi.features[static_cast<std::size_t>(a)].kp.score;
    const double sb = fi.features[static_cast<std::size_t>(b)].kp.score;
    if (sa != sb) return sa > sb;
    return a < b;
  });
  if (static_cast<int>(order.size()) > n_s) order.resize(static_cast<std::size_t>(n_s));
  out.preselected = static_cast<int>(order.size());

  std::vector<Match> raw;
  raw.reserve(order.size());
  for (const int i : order) {
    const Descriptor256& di = fi.features[static_cast<std::size_t>(i)].descriptor;
    int best_j = -1, best_d = 257;
    for (std::size_t j = 0; j < fj.features.size(); ++j) {
      const int d = hamming(di, fj.features[j].descriptor);
      if (d < best_d) {
        best_d = d;
        best_j = static_cast<int>(j);
      }
    }
    raw.push_back({i, best_j, best_d});
  }

  std::sort(raw.begin(), raw.end(), [](const Match& a, const Match& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.i_index < b.i_index;
  });

  out.d_min = raw.front().distance;
  out.lambda_h = std::max(2 * out.d_min, lambda_floor);

  std::vector<char> j_used(fj.features.size(), 0);
  for (const Match& m : raw) {
    if (m.distance >= out.lambda_h) break;
    if (j_used[static_cast<std::size_t>(m.j_index)]) continue;
    j_used[static_cast<std::size_t>(m.j_index)] = 1;
    out.matches.push_back(m);
  }
  return out;
}

}  // namespace lipr
