// lipr: lidar scan container types.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lipr/pose.hpp"

namespace lipr {

/// One lidar return: position in the sensor frame plus raw intensity.
struct Point3I {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
  float intensity = 0.0f;

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) &&
           std::isfinite(intensity) && intensity >= 0.0f;
  }

  double range() const { return std::sqrt(double(x) * x + double(y) * y + double(z) * z); }
};

/// A timestamped point cloud; the unit of processing.
struct Scan {
  std::vector<Point3I> points;
  double timestamp = 0.0;  // seconds, monotone within a sequence
  int id = 0;              // sequence index

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
};

/// One manifest row: where a scan lives plus optional ground-truth pose.
struct ManifestEntry {
  std::string path;
  double timestamp = 0.0;
  std::optional<Pose> pose;
};

struct SequenceManifest {
  std::vector<ManifestEntry> entries;
  std::string base_dir;  // relative scan paths resolve against this
};

}  // namespace lipr
