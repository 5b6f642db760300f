// lipr: cylindrical intensity-image projection.
//
// Column k covers azimuth [-pi + k*2pi/W, -pi + (k+1)*2pi/W); row r covers
// elevation (vfov/2 - (r+1)*vfov/H, vfov/2 - r*vfov/H]. Pixel value 0 is
// reserved for cells with no associated point; a valid cell whose normalized
// intensity rounds to 0 is stored as 1.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lipr/image.hpp"
#include "lipr/scan.hpp"

namespace lipr {

struct IntensityImage {
  Image8 image;                     // normalized 8-bit pixels, 0 = empty cell
  std::vector<std::int32_t> cells;  // per-pixel index into `points`, -1 = empty
  std::vector<Point3I> points;      // winning point per non-empty cell
  double vfov_deg = 45.0;
  int source_id = 0;
  double timestamp = 0.0;

  int width() const { return image.width; }
  int height() const { return image.height; }

  bool cell_valid(int u, int v) const {
    return cells[static_cast<std::size_t>(v) * image.width + u] >= 0;
  }

  /// Winning 3D point for a cell, or nullopt. Throws on out-of-bounds coordinates.
  std::optional<Point3I> pixel_point(int u, int v) const {
    if (!image.in_bounds(u, v)) throw std::out_of_range("pixel_point: coordinates out of bounds");
    const std::int32_t idx = cells[static_cast<std::size_t>(v) * image.width + u];
    if (idx < 0) return std::nullopt;
    return points[static_cast<std::size_t>(idx)];
  }
};

namespace detail {

/// Continuous forward map of a sensor-frame point; u in (0, W], v unbounded.
inline void project_continuous(double x, double y, double z, int W, int H, double vfov_deg,
                               double& u, double& v) {
  const double az = std::atan2(y, x);
  u = W * (az + std::numbers::pi) / (2.0 * std::numbers::pi);
  const double elev_deg = std::atan2(z, std::sqrt(x * x + y * y)) * 180.0 / std::numbers::pi;
  v = H * (vfov_deg / 2.0 - elev_deg) / vfov_deg;
}

/// Order-independent "who wins a cell" relation: nearest range first, then
/// lexicographic on the raw fields so ties do not depend on input order.
inline bool wins_cell(const Point3I& a, double range_a, const Point3I& b, double range_b) {
  if (range_a != range_b) return range_a < range_b;
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  if (a.z != b.z) return a.z < b.z;
  return a.intensity < b.intensity;
}

inline std::uint8_t round_half_up_255(double v) {
  const double r = std::floor(v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

}  // namespace detail

/// Raw (pre-normalization) intensity grid with per-cell validity.
struct RawGrid {
  int width = 0;
  int height = 0;
  std::vector<double> value;
  std::vector<char> valid;

  RawGrid() = default;
  RawGrid(int w, int h)
      : width(w), height(h), value(static_cast<std::size_t>(w) * h, 0.0),
        valid(static_cast<std::size_t>(w) * h, 0) {}
};

/// Percentile bounds (nearest-rank) of the valid cells; lo = 1st, hi = 99th.
inline std::pair<double, double> intensity_bounds(const RawGrid& g) {
  std::vector<double> vals;
  vals.reserve(g.value.size());
  for (std::size_t i = 0; i < g.value.size(); ++i)
    if (g.valid[i]) vals.push_back(g.value[i]);
  if (vals.empty()) return {0.0, 0.0};
  std::sort(vals.begin(), vals.end());
  const auto rank = [&](double pct) {
    const std::size_t idx = static_cast<std::size_t>(std::floor(pct / 100.0 * vals.size()));
    return vals[std::min(idx, vals.size() - 1)];
  };
  return {rank(1.0), rank(99.0)};
}

/// Linear 8-bit normalization of the valid cells, clamped to [lo, hi].
/// Empty cells map to 0; a valid cell never does (floor of 1).
inline Image8 normalize(const RawGrid& g, double lo, double hi) {
  Image8 out(g.width, g.height, 0);
  for (std::size_t i = 0; i < g.value.size(); ++i) {
    if (!g.valid[i]) continue;
    std::uint8_t px = 255;
    if (hi > lo) {
      const double c = std::clamp(g.value[i], lo, hi);
      px = detail::round_half_up_255(255.0 * (c - lo) / (hi - lo));
    }
    out.pixels[i] = std::max<std::uint8_t>(px, 1);
  }
  return out;
}

/// Percentile-bounds variant (1st..99th of the valid cells).
inline Image8 normalize(const RawGrid& g) {
  const auto [lo, hi] = intensity_bounds(g);
  return normalize(g, lo, hi);
}

/// Projects a scan onto a W x H cylindrical intensity image covering the full
/// azimuth circle and a vertical field of view of vfov_deg degrees centered on
/// the horizon. Points outside the vertical FOV are dropped; when several
/// points fall into one cell the nearest-range one wins.
inline IntensityImage project(const Scan& scan, int W, int H, double vfov_deg) {
  if (W < 8 || H < 8) throw std::invalid_argument("project: W and H must be >= 8");
  if (!(vfov_deg > 0.0)) throw std::invalid_argument("project: vfov must be positive");
  if (scan.empty()) throw std::invalid_argument("project: empty scan");

  const std::size_t ncells = static_cast<std::size_t>(W) * H;
  std::vector<std::int32_t> winner(ncells, -1);
  std::vector<double> winner_range(ncells, 0.0);

  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const Point3I& p = scan.points[i];
    double uc, vc;
    detail::project_continuous(p.x, p.y, p.z, W, H, vfov_deg, uc, vc);
    const int row = static_cast<int>(std::floor(vc));
    if (row < 0 || row >= H) continue;
    const int col = wrap_col(static_cast<int>(std::floor(uc)), W);
    const std::size_t cell = static_cast<std::size_t>(row) * W + col;
    const double range = p.range();
    if (winner[cell] < 0 ||
        detail::wins_cell(p, range, scan.points[static_cast<std::size_t>(winner[cell])],
                          winner_range[cell])) {
      winner[cell] = static_cast<std::int32_t>(i);
      winner_range[cell] = range;
    }
  }

  RawGrid raw(W, H);
  bool any = false;
  for (std::size_t c = 0; c < ncells; ++c) {
    if (winner[c] < 0) continue;
    raw.value[c] = scan.points[static_cast<std::size_t>(winner[c])].intensity;
    raw.valid[c] = 1;
    any = true;
  }
  if (!any) throw std::runtime_error("project: empty projection (all points outside FOV)");

  IntensityImage img;
  img.image = normalize(raw);
  img.vfov_deg = vfov_deg;
  img.source_id = scan.id;
  img.timestamp = scan.timestamp;
  img.cells.assign(ncells, -1);
  img.points.reserve(scan.points.size() / 4 + 1);
  for (std::size_t c = 0; c < ncells; ++c) {
    if (winner[c] < 0) continue;
    img.cells[c] = static_cast<std::int32_t>(img.points.size());
    img.points.push_back(scan.points[static_cast<std::size_t>(winner[c])]);
  }
  return img;
}

/// Keeps every (H/target_h)-th row starting at row 0; width unchanged.
inline IntensityImage downsample_rows(const IntensityImage& img, int target_h) {
  const int H = img.height();
  if (target_h < 1 || H % target_h != 0)
    throw std::invalid_argument("downsample_rows: target height must divide image height");
  const int stride = H / target_h;
  const int W = img.width();

  IntensityImage out;
  out.image = Image8(W, target_h, 0);
  out.cells.assign(static_cast<std::size_t>(W) * target_h, -1);
  out.vfov_deg = img.vfov_deg;
  out.source_id = img.source_id;
  out.timestamp = img.timestamp;
  for (int r = 0; r < target_h; ++r) {
    const int src_row = r * stride;
    for (int u = 0; u < W; ++u) {
      const std::size_t src_cell = static_cast<std::size_t>(src_row) * W + u;
      const std::size_t dst_cell = static_cast<std::size_t>(r) * W + u;
      out.image.pixels[dst_cell] = img.image.pixels[src_cell];
      if (img.cells[src_cell] >= 0) {
        out.cells[dst_cell] = static_cast<std::int32_t>(out.points.size());
        out.points.push_back(img.points[static_cast<std::size_t>(img.cells[src_cell])]);
      }
    }
  }
  return out;
}

}  // namespace lipr
