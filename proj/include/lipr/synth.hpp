// lipr: synthetic lidar scenes.
//
// Scenes are collections of textured rectangular patches. A scan is the exact
// analytic ray-cast of the cylindrical beam pattern (W azimuth x H elevation
// rays over the configured FOV) from a sensor pose; intensities come from
// procedural textures, so everything is deterministic for a fixed seed.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "lipr/hash.hpp"
#include "lipr/pose.hpp"
#include "lipr/scan.hpp"

namespace lipr {

/// Procedural surface intensity as a function of patch-local coordinates
/// (meters). `blocks` layers an optional fine random grid on top of the base
/// grid; the fine layer carries the detail that low-resolution projections
/// cannot resolve.
struct Texture {
  enum class Kind { constant, checker, blocks };
  Kind kind = Kind::blocks;
  double cell = 0.3;
  double lo = 20.0;
  double hi = 240.0;
  double fine_amount = 0.0;  // 0..1 share of the range given to the fine grid
  double fine_cell = 0.06;
  std::uint64_t seed = 0;

  double value(double a, double b) const {
    switch (kind) {
      case Kind::constant: return hi;
      case Kind::checker: {
        const long ia = static_cast<long>(std::floor(a / cell));
        const long ib = static_cast<long>(std::floor(b / cell));
        return ((ia + ib) & 1) ? hi : lo;
      }
      case Kind::blocks: {
        const auto grid = [this](double x, double y, double size, std::uint64_t salt) {
          const std::uint64_t ia = static_cast<std::uint64_t>(
              static_cast<std::int64_t>(std::floor(x / size)));
          const std::uint64_t ib = static_cast<std::uint64_t>(
              static_cast<std::int64_t>(std::floor(y / size)));
          const std::uint64_t h = splitmix64(splitmix64(splitmix64(seed ^ salt) ^ ia) ^ ib);
          return static_cast<double>(h >> 11) * 0x1.0p-53;
        };
        double u = grid(a, b, cell, 0);
        if (fine_amount > 0.0)
          u = (1.0 - fine_amount) * u + fine_amount * grid(a, b, fine_cell, 0x66696e65ULL);
        return lo + (hi - lo) * u;
      }
    }
    return lo;
  }
};

/// Finite rectangle: origin corner plus two edge vectors (their lengths are
/// the extents). Hit from either side; texture depends only on the hit point.
struct RectPatch {
  Eigen::Vector3d origin;
  Eigen::Vector3d edge_a;
  Eigen::Vector3d edge_b;
  Texture texture;
};

struct SceneSpec {
  std::vector<RectPatch> patches;
  Eigen::AlignedBox3d bounds;  // sensor poses must stay inside
  double min_range = 0.3;
  double max_range = 40.0;
};

namespace detail {

struct RayHit {
  double t = 0.0;
  double a = 0.0;  // local coordinates on the patch, meters
  double b = 0.0;
  int patch = -1;
};

/// Per-patch quantities that do not depend on the ray.
struct PatchPlane {
  Eigen::Vector3d normal;   // edge_a x edge_b, unnormalized
  Eigen::Vector3d ea_over;  // edge_a / |edge_a|^2
  Eigen::Vector3d eb_over;
  double len_a = 0.0;
  double len_b = 0.0;

  explicit PatchPlane(const RectPatch& r)
      : normal(r.edge_a.cross(r.edge_b)),
        ea_over(r.edge_a / r.edge_a.squaredNorm()),
        eb_over(r.edge_b / r.edge_b.squaredNorm()),
        len_a(r.edge_a.norm()),
        len_b(r.edge_b.norm()) {}
};

inline bool intersect(const RectPatch& r, const PatchPlane& plane, const Eigen::Vector3d& o,
                      const Eigen::Vector3d& d, double tmin, double tmax, RayHit& hit) {
  const double denom = plane.normal.dot(d);
  if (std::abs(denom) < 1e-12) return false;
  const double t = plane.normal.dot(r.origin - o) / denom;
  if (t < tmin || t > tmax) return false;
  const Eigen::Vector3d local = o + t * d - r.origin;
  const double fa = local.dot(plane.ea_over);
  const double fb = local.dot(plane.eb_over);
  if (fa < 0.0 || fa > 1.0 || fb < 0.0 || fb > 1.0) return false;
  hit.t = t;
  hit.a = fa * plane.len_a;
  hit.b = fb * plane.len_b;
  return true;
}

}  // namespace detail

/// Ray-casts the scene from `pose` (sensor-to-world). Rays go through bin
/// centers: azimuth -pi + (k+0.5)*2pi/W, elevation vfov/2 - (r+0.5)*vfov/H.
/// Returns hit points in the sensor frame, row-major ray order, misses absent.
inline Scan synth_scene(const SceneSpec& scene, const Pose& pose, int W = 1024, int H = 128,
                        double vfov_deg = 45.0) {
  if (!scene.bounds.isEmpty() && !scene.bounds.contains(pose.t))
    throw std::invalid_argument("synth_scene: pose outside scene bounds");
  const double vfov = vfov_deg * std::numbers::pi / 180.0;
  const Eigen::Matrix3d R = pose.q.toRotationMatrix();
  const Pose inv = pose.inverse();

  std::vector<detail::PatchPlane> planes;
  planes.reserve(scene.patches.size());
  for (const RectPatch& p : scene.patches) planes.emplace_back(p);

  Scan scan;
  scan.points.reserve(static_cast<std::size_t>(W) * H / 4);
  for (int r = 0; r < H; ++r) {
    const double elev = vfov / 2.0 - (r + 0.5) * vfov / H;
    const double ce = std::cos(elev), se = std::sin(elev);
    for (int k = 0; k < W; ++k) {
      const double az = -std::numbers::pi + (k + 0.5) * 2.0 * std::numbers::pi / W;
      const Eigen::Vector3d dir_sensor(ce * std::cos(az), ce * std::sin(az), se);
      const Eigen::Vector3d dir = R * dir_sensor;
      detail::RayHit best;
      best.t = scene.max_range + 1.0;
      for (std::size_t i = 0; i < scene.patches.size(); ++i) {
        detail::RayHit h;
        if (detail::intersect(scene.patches[i], planes[i], pose.t, dir, scene.min_range,
                              scene.max_range, h) &&
            h.t < best.t) {
          best = h;
          best.patch = static_cast<int>(i);
        }
      }
      if (best.patch < 0) continue;
      const Eigen::Vector3d world = pose.t + best.t * dir;
      const Eigen::Vector3d local = inv.apply(world);
      Point3I p;
      p.x = static_cast<float>(local.x());
      p.y = static_cast<float>(local.y());
      p.z = static_cast<float>(local.z());
      p.intensity =
          static_cast<float>(scene.patches[static_cast<std::size_t>(best.patch)].texture.value(
              best.a, best.b));
      scan.points.push_back(p);
    }
  }
  return scan;
}

// ---------------------------------------------------------------------------
// Scene builders

namespace detail {

inline Texture blocks(std::uint64_t seed, double cell, double lo = 20.0, double hi = 240.0,
                      double fine_amount = 0.0) {
  Texture t;
  t.kind = Texture::Kind::blocks;
  t.cell = cell;
  t.lo = lo;
  t.hi = hi;
  t.seed = seed;
  t.fine_amount = fine_amount;
  return t;
}

/// Vertical wall over the segment (x1,y1)-(x2,y2), z in [z0, z0+height].
inline RectPatch wall(double x1, double y1, double x2, double y2, double z0, double height,
                      const Texture& tex) {
  RectPatch p;
  p.origin = Eigen::Vector3d(x1, y1, z0);
  p.edge_a = Eigen::Vector3d(x2 - x1, y2 - y1, 0.0);
  p.edge_b = Eigen::Vector3d(0.0, 0.0, height);
  p.texture = tex;
  return p;
}

/// Horizontal rectangle [x1,x2] x [y1,y2] at height z.
inline RectPatch slab(double x1, double y1, double x2, double y2, double z, const Texture& tex) {
  RectPatch p;
  p.origin = Eigen::Vector3d(x1, y1, z);
  p.edge_a = Eigen::Vector3d(x2 - x1, 0.0, 0.0);
  p.edge_b = Eigen::Vector3d(0.0, y2 - y1, 0.0);
  p.texture = tex;
  return p;
}

}  // namespace detail

/// Closed box room with block-textured walls, floor and ceiling, plus a couple
/// of finer-grained "posters". Dimensions vary slightly with the seed.
inline SceneSpec make_room_scene(std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed ^ 0x526f6f6dULL));
  std::uniform_real_distribution<double> dim(8.0, 14.0);
  std::uniform_real_distribution<double> cell(0.22, 0.42);
  const double hw = dim(rng) / 2.0;  // half width (x)
  const double hd = dim(rng) / 2.0;  // half depth (y)
  const double height = 3.2;

  SceneSpec s;
  int wall_id = 0;
  const auto tex = [&] {
    return detail::blocks(splitmix64(seed) + 1000 + wall_id++, cell(rng), 20.0, 240.0, 0.35);
  };
  s.patches.push_back(detail::wall(-hw, -hd, hw, -hd, 0.0, height, tex()));
  s.patches.push_back(detail::wall(hw, -hd, hw, hd, 0.0, height, tex()));
  s.patches.push_back(detail::wall(hw, hd, -hw, hd, 0.0, height, tex()));
  s.patches.push_back(detail::wall(-hw, hd, -hw, -hd, 0.0, height, tex()));
  s.patches.push_back(detail::slab(-hw, -hd, hw, hd, 0.0, tex()));
  s.patches.push_back(detail::slab(-hw, -hd, hw, hd, height, tex()));
  // posters: fine-textured panels just in front of two walls
  RectPatch poster = detail::wall(-2.0, -hd + 0.05, 2.0, -hd + 0.05, 0.8, 1.6,
                                  detail::blocks(splitmix64(seed) + 77, 0.12, 40.0, 250.0));
  s.patches.push_back(poster);
  RectPatch poster2 = detail::wall(hw - 0.05, -1.5, hw - 0.05, 1.5, 0.9, 1.4,
                                   detail::blocks(splitmix64(seed) + 78, 0.10, 30.0, 255.0));
  s.patches.push_back(poster2);

  s.bounds = Eigen::AlignedBox3d(Eigen::Vector3d(-hw + 0.5, -hd + 0.5, 0.2),
                                 Eigen::Vector3d(hw - 0.5, hd - 0.5, height - 0.2));
  s.max_range = 40.0;
  return s;
}

/// Straight corridor along +x: side walls, end caps, floor, ceiling.
inline SceneSpec make_corridor_scene(std::uint64_t seed, double length = 30.0,
                                     double width = 4.0, double height = 3.0) {
  std::mt19937_64 rng(splitmix64(seed ^ 0x436f7272ULL));
  std::uniform_real_distribution<double> cell(0.22, 0.42);
  const double hw = width / 2.0;

  SceneSpec s;
  int wall_id = 0;
  const auto tex = [&] {
    return detail::blocks(splitmix64(seed) + 2000 + wall_id++, cell(rng), 20.0, 240.0, 0.35);
  };
  s.patches.push_back(detail::wall(0.0, -hw, length, -hw, 0.0, height, tex()));
  s.patches.push_back(detail::wall(0.0, hw, length, hw, 0.0, height, tex()));
  s.patches.push_back(detail::wall(0.0, -hw, 0.0, hw, 0.0, height, tex()));
  s.patches.push_back(detail::wall(length, -hw, length, hw, 0.0, height, tex()));
  s.patches.push_back(detail::slab(0.0, -hw, length, hw, 0.0, tex()));
  s.patches.push_back(detail::slab(0.0, -hw, length, hw, height, tex()));
  s.bounds = Eigen::AlignedBox3d(Eigen::Vector3d(0.3, -hw + 0.3, 0.2),
                                 Eigen::Vector3d(length - 0.3, hw - 0.3, height - 0.2));
  s.max_range = 40.0;
  return s;
}

/// Figure-eight corridor network: two 14 m square rings joined by an open
/// X-crossing at the origin. Corridors are 4 m wide and 3 m tall.
inline SceneSpec make_figure_eight_scene(std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed ^ 0x46696738ULL));
  std::uniform_real_distribution<double> cell(0.22, 0.40);
  const double h = 3.0;

  SceneSpec s;
  int wall_id = 0;
  const auto add = [&](double x1, double y1, double x2, double y2) {
    s.patches.push_back(detail::wall(x1, y1, x2, y2, 0.0, h,
                                     detail::blocks(splitmix64(seed) + 3000 + wall_id++,
                                                    cell(rng), 20.0, 240.0, 0.45)));
  };
  // top-left ring, outer boundary (openings at the crossing)
  add(-16, -2, -16, 16);
  add(-16, 16, 2, 16);
  add(2, 16, 2, 2);
  add(-16, -2, -2, -2);
  // top-left ring, inner block
  add(-12, 2, -2, 2);
  add(-2, 2, -2, 12);
  add(-2, 12, -12, 12);
  add(-12, 12, -12, 2);
  // bottom-right ring, outer boundary
  add(16, -16, 16, 2);
  add(-2, -16, 16, -16);
  add(-2, -16, -2, -2);
  add(2, 2, 16, 2);
  // bottom-right ring, inner block
  add(2, -12, 12, -12);
  add(12, -12, 12, -2);
  add(12, -2, 2, -2);
  add(2, -2, 2, -12);

  s.patches.push_back(detail::slab(-16, -16, 16, 16, 0.0,
                                   detail::blocks(splitmix64(seed) + 3100, 0.35, 20.0, 240.0,
                                                  0.35)));
  s.patches.push_back(detail::slab(-16, -16, 16, 16, h,
                                   detail::blocks(splitmix64(seed) + 3101, 0.40, 20.0, 240.0,
                                                  0.35)));
  s.bounds = Eigen::AlignedBox3d(Eigen::Vector3d(-16, -16, 0.2), Eigen::Vector3d(16, 16, h - 0.2));
  s.max_range = 20.0;
  return s;
}

// ---------------------------------------------------------------------------
// Trajectories

/// Piecewise-linear path through waypoints, constant speed, yaw along travel.
struct PathSampler {
  std::vector<Eigen::Vector2d> waypoints;
  double z = 1.0;

  double length() const {
    double total = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i)
      total += (waypoints[i] - waypoints[i - 1]).norm();
    return total;
  }

  /// Pose at arclength s (clamped to the path).
  Pose at(double s) const {
    double acc = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
      const Eigen::Vector2d seg = waypoints[i] - waypoints[i - 1];
      const double len = seg.norm();
      if (s <= acc + len || i + 1 == waypoints.size()) {
        const double f = len > 0.0 ? std::clamp((s - acc) / len, 0.0, 1.0) : 0.0;
        const Eigen::Vector2d p = waypoints[i - 1] + f * seg;
        const double yaw = std::atan2(seg.y(), seg.x());
        Pose pose;
        pose.t = Eigen::Vector3d(p.x(), p.y(), z);
        pose.q = Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
        return pose;
      }
      acc += len;
    }
    throw std::logic_error("PathSampler: empty path");
  }
};

/// Centerline of the figure-eight corridor network, starting at the crossing.
inline PathSampler figure_eight_path() {
  PathSampler p;
  p.waypoints = {{0, 0}, {0, 14}, {-14, 14}, {-14, 0}, {0, 0},
                 {14, 0}, {14, -14}, {0, -14}, {0, 0}};
  return p;
}

struct TrajectorySample {
  Pose pose;        // ground-truth sensor pose (world frame)
  double timestamp = 0.0;
};

/// Samples `n` poses over `laps` traversals of the path at `speed` m/s, with
/// small seeded pose jitter so repeated laps are near but not exact revisits.
inline std::vector<TrajectorySample> sample_trajectory(const PathSampler& path, int n, int laps,
                                                       double speed, std::uint64_t seed,
                                                       double pos_jitter = 0.15,
                                                       double yaw_jitter_deg = 4.0,
                                                       double tilt_jitter_deg = 1.0) {
  std::mt19937_64 rng(splitmix64(seed ^ 0x54726a31ULL));
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const double lap_len = path.length();
  const double total_len = lap_len * laps;
  std::vector<TrajectorySample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double s_total = total_len * i / n;
    const double s = std::fmod(s_total, lap_len);
    TrajectorySample ts;
    ts.timestamp = s_total / speed;
    ts.pose = path.at(s);
    ts.pose.t.x() += pos_jitter * uni(rng);
    ts.pose.t.y() += pos_jitter * uni(rng);
    ts.pose.t.z() += 0.3 * pos_jitter * uni(rng);
    const double d2r = std::numbers::pi / 180.0;
    const Eigen::Quaterniond jq =
        Eigen::AngleAxisd(yaw_jitter_deg * d2r * uni(rng), Eigen::Vector3d::UnitZ()) *
        Eigen::AngleAxisd(tilt_jitter_deg * d2r * uni(rng), Eigen::Vector3d::UnitY()) *
        Eigen::AngleAxisd(tilt_jitter_deg * d2r * uni(rng), Eigen::Vector3d::UnitX());
    ts.pose.q = (ts.pose.q * jq).normalized();
    out.push_back(ts);
  }
  return out;
}

/// Out-and-back trajectory along the corridor centerline (reverse revisit).
inline std::vector<TrajectorySample> corridor_out_and_back(double length, int n,
                                                           double speed, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed ^ 0x436f5242ULL));
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const double x0 = 1.5, x1 = length - 1.5;
  const double leg = x1 - x0;
  std::vector<TrajectorySample> out;
  for (int i = 0; i < n; ++i) {
    const double s = 2.0 * leg * i / n;
    const bool back = s > leg;
    const double x = back ? x1 - (s - leg) : x0 + s;
    TrajectorySample ts;
    ts.timestamp = s / speed;
    ts.pose.t = Eigen::Vector3d(x + 0.1 * uni(rng), 0.15 * uni(rng), 1.0 + 0.05 * uni(rng));
    const double yaw = (back ? std::numbers::pi : 0.0) + 0.05 * uni(rng);
    ts.pose.q = Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
    out.push_back(ts);
  }
  return out;
}

}  // namespace lipr
