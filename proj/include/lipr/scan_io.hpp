// lipr: scan and manifest file I/O.
//
// Supported scan formats:
//   csv          one "x,y,z,intensity" record per line
//   ascii_pcd    PCD subset: FIELDS x y z intensity, DATA ascii
//   flat_binary  little-endian records of four 32-bit floats (x,y,z,intensity)
//
// Manifest: CSV rows "path,timestamp[,tx,ty,tz,qx,qy,qz,qw]".
#pragma once

#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lipr/scan.hpp"

namespace lipr {

enum class ScanFormat { csv, ascii_pcd, flat_binary };

struct LoadStats {
  std::size_t records = 0;
  std::size_t dropped_nan = 0;  // records rejected for non-finite coordinates
};

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("malformed number '" + s + "' at " + where);
  }
}

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace detail

inline Scan load_scan_csv(const std::string& path, LoadStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scan file: " + path);
  Scan scan;
  std::string line;
  std::size_t line_no = 0;
  LoadStats st;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto fields = detail::split(t, ',');
    if (fields.size() != 4)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 4 fields, got " + std::to_string(fields.size()));
    const std::string where = path + ":" + std::to_string(line_no);
    Point3I p;
    p.x = static_cast<float>(detail::parse_double(fields[0], where));
    p.y = static_cast<float>(detail::parse_double(fields[1], where));
    p.z = static_cast<float>(detail::parse_double(fields[2], where));
    p.intensity = static_cast<float>(detail::parse_double(fields[3], where));
    ++st.records;
    if (!p.finite()) {
      ++st.dropped_nan;
      continue;
    }
    scan.points.push_back(p);
  }
  if (stats) *stats = st;
  return scan;
}

inline Scan load_scan_flat_binary(const std::string& path, LoadStats* stats = nullptr) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open scan file: " + path);
  const std::streamoff size = in.tellg();
  if (size % (4 * sizeof(float)) != 0)
    throw std::runtime_error(path + ": size " + std::to_string(size) +
                             " is not a multiple of 16-byte records");
  in.seekg(0, std::ios::beg);
  const std::size_t n = static_cast<std::size_t>(size) / (4 * sizeof(float));
  std::vector<float> buf(n * 4);
  if (n > 0 && !in.read(reinterpret_cast<char*>(buf.data()), size))
    throw std::runtime_error(path + ": short read");
  Scan scan;
  scan.points.reserve(n);
  LoadStats st;
  for (std::size_t i = 0; i < n; ++i) {
    Point3I p{buf[i * 4], buf[i * 4 + 1], buf[i * 4 + 2], buf[i * 4 + 3]};
    ++st.records;
    if (!p.finite()) {
      ++st.dropped_nan;
      continue;
    }
    scan.points.push_back(p);
  }
  if (stats) *stats = st;
  return scan;
}

/// PCD subset: only "FIELDS x y z intensity" with "DATA ascii" is accepted.
inline Scan load_scan_ascii_pcd(const std::string& path, LoadStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scan file: " + path);
  std::string line;
  std::size_t line_no = 0;
  std::size_t declared_points = 0;
  bool fields_ok = false, data_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ls(t);
    std::string key;
    ls >> key;
    if (key == "FIELDS") {
      std::string rest;
      std::getline(ls, rest);
      if (detail::trim(rest) != "x y z intensity")
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": unsupported FIELDS (need 'x y z intensity')");
      fields_ok = true;
    } else if (key == "POINTS") {
      ls >> declared_points;
    } else if (key == "DATA") {
      std::string kind;
      ls >> kind;
      if (kind != "ascii")
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": unsupported DATA '" + kind + "' (need ascii)");
      data_seen = true;
      break;
    }
    // VERSION / SIZE / TYPE / COUNT / WIDTH / HEIGHT / VIEWPOINT are accepted and ignored.
  }
  if (!fields_ok || !data_seen)
    throw std::runtime_error(path + ": missing FIELDS or DATA header");

  Scan scan;
  LoadStats st;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    std::istringstream ls(t);
    Point3I p;
    if (!(ls >> p.x >> p.y >> p.z >> p.intensity))
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed point record");
    ++st.records;
    if (!p.finite()) {
      ++st.dropped_nan;
      continue;
    }
    scan.points.push_back(p);
  }
  if (declared_points != 0 && st.records != declared_points)
    throw std::runtime_error(path + ": POINTS says " + std::to_string(declared_points) +
                             " but file has " + std::to_string(st.records));
  if (stats) *stats = st;
  return scan;
}

inline Scan load_scan(const std::string& path, ScanFormat format, LoadStats* stats = nullptr) {
  switch (format) {
    case ScanFormat::csv: return load_scan_csv(path, stats);
    case ScanFormat::ascii_pcd: return load_scan_ascii_pcd(path, stats);
    case ScanFormat::flat_binary: return load_scan_flat_binary(path, stats);
  }
  throw std::logic_error("unknown scan format");
}

/// Picks the format from the file extension: .csv, .pcd, anything else -> flat binary.
inline ScanFormat format_from_extension(const std::string& path) {
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".csv") return ScanFormat::csv;
  if (ext == ".pcd") return ScanFormat::ascii_pcd;
  return ScanFormat::flat_binary;
}

inline void write_scan_flat_binary(const Scan& scan, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write scan file: " + path);
  std::vector<float> buf;
  buf.reserve(scan.points.size() * 4);
  for (const Point3I& p : scan.points) {
    buf.push_back(p.x);
    buf.push_back(p.y);
    buf.push_back(p.z);
    buf.push_back(p.intensity);
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw std::runtime_error("short write: " + path);
}

inline void write_scan_csv(const Scan& scan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scan file: " + path);
  for (const Point3I& p : scan.points) {
    char line[128];
    std::snprintf(line, sizeof(line), "%.9g,%.9g,%.9g,%.9g\n", p.x, p.y, p.z, p.intensity);
    out << line;
  }
}

// ---------------------------------------------------------------------------
// Sequence manifests

inline SequenceManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  SequenceManifest m;
  m.base_dir = std::filesystem::path(path).parent_path().string();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = detail::split(t, ',');
    if (fields.size() != 2 && fields.size() != 9)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 2 or 9 fields, got " + std::to_string(fields.size()));
    const std::string where = path + ":" + std::to_string(line_no);
    ManifestEntry e;
    e.path = detail::trim(fields[0]);
    e.timestamp = detail::parse_double(fields[1], where);
    if (fields.size() == 9) {
      Pose pose;
      pose.t = Eigen::Vector3d(detail::parse_double(fields[2], where),
                               detail::parse_double(fields[3], where),
                               detail::parse_double(fields[4], where));
      pose.q = Eigen::Quaterniond(detail::parse_double(fields[8], where),   // w
                                  detail::parse_double(fields[5], where),   // x
                                  detail::parse_double(fields[6], where),   // y
                                  detail::parse_double(fields[7], where));  // z
      pose.check_unit();
      e.pose = pose;
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline void write_manifest(const SequenceManifest& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  for (const ManifestEntry& e : m.entries) {
    char buf[512];
    if (e.pose) {
      std::snprintf(buf, sizeof(buf), "%s,%.9f,%.9f,%.9f,%.9f,%.17g,%.17g,%.17g,%.17g\n",
                    e.path.c_str(), e.timestamp, e.pose->t.x(), e.pose->t.y(), e.pose->t.z(),
                    e.pose->q.x(), e.pose->q.y(), e.pose->q.z(), e.pose->q.w());
    } else {
      std::snprintf(buf, sizeof(buf), "%s,%.9f\n", e.path.c_str(), e.timestamp);
    }
    out << buf;
  }
}

inline std::string resolve_scan_path(const SequenceManifest& m, const ManifestEntry& e) {
  std::filesystem::path p(e.path);
  if (p.is_absolute() || m.base_dir.empty()) return e.path;
  return (std::filesystem::path(m.base_dir) / p).string();
}

/// Loads every scan named by the manifest, in timestamp order, ids 0..n-1.
inline std::vector<std::pair<Scan, std::optional<Pose>>> load_sequence(
    const SequenceManifest& m) {
  for (std::size_t i = 1; i < m.entries.size(); ++i) {
    if (!(m.entries[i].timestamp > m.entries[i - 1].timestamp))
      throw std::runtime_error("manifest timestamps not strictly increasing at row " +
                               std::to_string(i + 1));
  }
  std::vector<std::pair<Scan, std::optional<Pose>>> out;
  out.reserve(m.entries.size());
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const ManifestEntry& e = m.entries[i];
    const std::string full = resolve_scan_path(m, e);
    Scan scan = load_scan(full, format_from_extension(full));
    scan.timestamp = e.timestamp;
    scan.id = static_cast<int>(i);
    out.emplace_back(std::move(scan), e.pose);
  }
  return out;
}

}  // namespace lipr
