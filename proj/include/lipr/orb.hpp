// lipr: oriented multi-scale binary features on intensity images.
//
// FAST-9 corners per pyramid level, Harris corner response for ranking,
// intensity-centroid orientation, and steered BRIEF bits sampled through the
// shared BriefPattern. Every kept feature carries the 3D point of its image
// cell, so descriptors can be matched geometrically later.
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lipr/descriptor.hpp"
#include "lipr/fast.hpp"
#include "lipr/projection.hpp"
#include "lipr/pyramid.hpp"

namespace lipr {

struct Keypoint {
  double u = 0.0;  // level-0 column (sub-pixel)
  double v = 0.0;  // level-0 row
  int level = 0;
  int lx = 0;  // integer position at the detection level
  int ly = 0;
  double score = 0.0;  // Harris corner response
  double angle = 0.0;  // radians in [0, 2pi), image axes (y down)
};

struct Feature {
  Keypoint kp;
  Descriptor256 descriptor;
  Point3I point;  // 3D point associated through the projection cell
};

struct FeatureSet {
  int scan_id = 0;
  double timestamp = 0.0;
  std::uint64_t pattern_seed = 0;
  std::vector<Feature> features;

  std::size_t size() const { return features.size(); }
  bool empty() const { return features.empty(); }
};

/// Harris corner response: det(M) - 0.04 trace(M)^2 of the Sobel structure
/// tensor over a Gaussian-weighted 7x7 window (sigma 2).
inline double harris_score(const Image8& img, int x, int y) {
  static const std::array<double, 7> kGauss = [] {
    std::array<double, 7> g{};
    double sum = 0.0;
    for (int i = -3; i <= 3; ++i) {
      g[i + 3] = std::exp(-i * i / (2.0 * 2.0 * 2.0));
      sum += g[i + 3];
    }
    for (double& v : g) v /= sum;
    return g;
  }();

  const auto px = [&](int dx, int dy) -> double {
    return img.at_wrapped(x + dx, y + dy);
  };
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (int dy = -3; dy <= 3; ++dy) {
    for (int dx = -3; dx <= 3; ++dx) {
      const double gx = (px(dx + 1, dy - 1) + 2.0 * px(dx + 1, dy) + px(dx + 1, dy + 1)) -
                        (px(dx - 1, dy - 1) + 2.0 * px(dx - 1, dy) + px(dx - 1, dy + 1));
      const double gy = (px(dx - 1, dy + 1) + 2.0 * px(dx, dy + 1) + px(dx + 1, dy + 1)) -
                        (px(dx - 1, dy - 1) + 2.0 * px(dx, dy - 1) + px(dx + 1, dy - 1));
      const double w = kGauss[dx + 3] * kGauss[dy + 3];
      sxx += w * gx * gx;
      syy += w * gy * gy;
      sxy += w * gx * gy;
    }
  }
  return sxx * syy - sxy * sxy - 0.04 * (sxx + syy) * (sxx + syy);
}

/// Intensity-centroid orientation over the radius-15 disk, in [0, 2pi).
/// Returns 0 when both first moments vanish.
inline double orientation(const Image8& img, int x, int y) {
  constexpr int r = 15;
  double m10 = 0.0, m01 = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy > r * r) continue;
      const double val = img.at_wrapped(x + dx, y + dy);
      m10 += dx * val;
      m01 += dy * val;
    }
  }
  if (m10 == 0.0 && m01 == 0.0) return 0.0;
  double a = std::atan2(m01, m10);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  return a;
}

/// Steered BRIEF: pattern offsets rotated by the keypoint angle discretized to
/// 30 steps of 12 degrees. Bit k is set iff I(p_k) < I(q_k).
inline Descriptor256 describe(const Image8& img, int x, int y, double angle,
                              const BriefPattern& pattern) {
  const double step = 2.0 * std::numbers::pi / BriefPattern::kAngleBins;
  int bin = static_cast<int>(std::lround(angle / step)) % BriefPattern::kAngleBins;
  if (bin < 0) bin += BriefPattern::kAngleBins;
  const auto& table = pattern.steered[static_cast<std::size_t>(bin)];

  Descriptor256 d;
  for (int k = 0; k < 256; ++k) {
    const auto& pr = table[static_cast<std::size_t>(k)];
    const std::uint8_t ip = img.at_wrapped(x + pr.px, y + pr.py);
    const std::uint8_t iq = img.at_wrapped(x + pr.qx, y + pr.qy);
    if (ip < iq) d.set_bit(k);
  }
  return d;
}

struct ExtractParams {
  int n_bow = 2500;
  int fast_threshold = 20;
  int min_corners_per_level = 50;  // threshold halves once below this
  int pyramid_levels = 8;
  double pyramid_ratio = 1.2;
  int border_y = 16;
  int grid_cols = 64;
  int grid_rows = 16;
};

namespace detail {

struct Candidate {
  Keypoint kp;
  Point3I point;
};

/// Deterministic ranking: score desc, then level, row, column.
inline bool better_candidate(const Candidate& a, const Candidate& b) {
  if (a.kp.score != b.kp.score) return a.kp.score > b.kp.score;
  if (a.kp.level != b.kp.level) return a.kp.level < b.kp.level;
  if (a.kp.ly != b.kp.ly) return a.kp.ly < b.kp.ly;
  return a.kp.lx < b.kp.lx;
}

/// Associates a level-0 position with the 3D point of the nearest non-empty
/// cell in its 3x3 neighborhood; rejects if the point's continuous
/// reprojection sits more than 1.5 px away (azimuth wrap respected).
inline std::optional<Point3I> associate_point(const IntensityImage& img, double u0, double v0) {
  const int W = img.width(), H = img.height();
  const int cu = wrap_col(static_cast<int>(std::lround(u0)), W);
  const int cv = static_cast<int>(std::lround(v0));

  const auto reprojection_d2 = [&](const Point3I& p) {
    double pu, pv;
    detail::project_continuous(p.x, p.y, p.z, W, H, img.vfov_deg, pu, pv);
    double duu = std::fmod(pu - u0, static_cast<double>(W));
    if (duu > W / 2.0) duu -= W;
    if (duu < -W / 2.0) duu += W;
    const double dvv = pv - v0;
    return duu * duu + dvv * dvv;
  };

  // a neighbor cell's point re-projects inside its own cell, so it sits more
  // than 0.5 px from (u0, v0); an own-cell point within 0.5 px wins outright
  if (cv >= 0 && cv < H) {
    const std::int32_t idx = img.cells[static_cast<std::size_t>(cv) * W + cu];
    if (idx >= 0) {
      const Point3I& p = img.points[static_cast<std::size_t>(idx)];
      if (reprojection_d2(p) <= 0.25) return p;
    }
  }

  double best_d2 = 1.5 * 1.5;
  std::optional<Point3I> best;
  for (int dv = -1; dv <= 1; ++dv) {
    const int v = cv + dv;
    if (v < 0 || v >= H) continue;
    for (int du = -1; du <= 1; ++du) {
      const int u = wrap_col(cu + du, W);
      const std::int32_t idx = img.cells[static_cast<std::size_t>(v) * W + u];
      if (idx < 0) continue;
      const Point3I& p = img.points[static_cast<std::size_t>(idx)];
      const double d2 = reprojection_d2(p);
      if (d2 <= best_d2) {
        best_d2 = d2;
        best = p;
      }
    }
  }
  return best;
}

/// Grid-bucketed retention followed by a global top-N cut, both by score.
inline std::vector<Candidate> select_candidates(std::vector<Candidate> cands, int n_bow, int W,
                                                int H, int grid_cols, int grid_rows) {
  std::sort(cands.begin(), cands.end(), better_candidate);
  const int cap = std::max(1, (2 * n_bow + grid_cols * grid_rows - 1) / (grid_cols * grid_rows));
  std::vector<int> cell_count(static_cast<std::size_t>(grid_cols) * grid_rows, 0);
  std::vector<Candidate> kept;
  kept.reserve(static_cast<std::size_t>(n_bow));
  for (const Candidate& c : cands) {
    const int gx = std::clamp(static_cast<int>(c.kp.u * grid_cols / W), 0, grid_cols - 1);
    const int gy = std::clamp(static_cast<int>(c.kp.v * grid_rows / H), 0, grid_rows - 1);
    int& count = cell_count[static_cast<std::size_t>(gy) * grid_cols + gx];
    if (count >= cap) continue;
    ++count;
    kept.push_back(c);
    // kept stays score-sorted because cands is
  }
  if (kept.size() > static_cast<std::size_t>(n_bow)) kept.resize(static_cast<std::size_t>(n_bow));
  return kept;
}

}  // namespace detail

/// Extracts up to `n_bow` oriented descriptors from a projected intensity
/// image. Returns an empty set (valid) when the image has no usable corners.
inline FeatureSet extract(const IntensityImage& img, const BriefPattern& pattern,
                          const ExtractParams& params = {}) {
  if (params.n_bow < 1) throw std::invalid_argument("extract: n_bow must be >= 1");
  FeatureSet out;
  out.scan_id = img.source_id;
  out.timestamp = img.timestamp;
  out.pattern_seed = pattern.seed;

  if (img.width() < 16 || img.height() < 16) return out;
  const Pyramid pyr =
      build_pyramid(img.image, params.pyramid_levels, params.pyramid_ratio, /*min_levels=*/1);

  std::vector<detail::Candidate> cands;
  for (int level = 0; level < pyr.num_levels(); ++level) {
    const Image8& li = pyr.levels[level];
    std::vector<FastKeypoint> kps = detect_fast(li, params.fast_threshold, params.border_y);
    if (static_cast<int>(kps.size()) < params.min_corners_per_level)
      kps = detect_fast(li, std::max(1, params.fast_threshold / 2), params.border_y);
    for (const FastKeypoint& fk : kps) {
      detail::Candidate c;
      c.kp.level = level;
      c.kp.lx = fk.x;
      c.kp.ly = fk.y;
      c.kp.u = pyr.to_level0_x(level, fk.x);
      c.kp.v = pyr.to_level0_y(level, fk.y);
      c.kp.score = harris_score(li, fk.x, fk.y);
      const auto assoc = detail::associate_point(img, c.kp.u, c.kp.v);
      if (!assoc) continue;
      c.point = *assoc;
      cands.push_back(c);
    }
  }

  std::vector<detail::Candidate> kept = detail::select_candidates(
      std::move(cands), params.n_bow, img.width(), img.height(), params.grid_cols,
      params.grid_rows);

  out.features.reserve(kept.size());
  for (detail::Candidate& c : kept) {
    Feature f;
    const Image8& li = pyr.levels[c.kp.level];
    c.kp.angle = orientation(li, c.kp.lx, c.kp.ly);
    f.kp = c.kp;
    f.descriptor = describe(li, c.kp.lx, c.kp.ly, c.kp.angle, pattern);
    f.point = c.point;
    out.features.push_back(f);
  }
  return out;
}

/// Debug dump of keypoints.
inline std::string keypoints_to_csv(const FeatureSet& fs) {
  std::string out = "u,v,level,score,angle\n";
  for (const Feature& f : fs.features) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.3f,%.3f,%d,%.6g,%.6f\n", f.kp.u, f.kp.v, f.kp.level,
                  f.kp.score, f.kp.angle);
    out += buf;
  }
  return out;
}

}  // namespace lipr
