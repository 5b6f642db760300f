// lipr: evaluation of detections against ground-truth trajectories.
//
// Ground-truth loops are all scan pairs more than `min_gap` seconds apart and
// within `radius` meters. A detection is a true positive iff its matched pair
// is strictly closer than the radius. ROC curves sweep the final inlier count
// per query; queries with no candidate score -1 and always predict negative.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lipr/pipeline.hpp"
#include "lipr/scan_io.hpp"

namespace lipr {

struct TrajectoryPoint {
  int id = 0;
  double timestamp = 0.0;
  Eigen::Vector3d position{0.0, 0.0, 0.0};
};

struct GroundTruth {
  double radius = 2.0;
  double min_gap = 30.0;
  std::set<std::pair<int, int>> pairs;  // (earlier id, later id)
  std::set<int> positive_queries;       // ids that close a loop with an older scan

  bool pair_positive(int a, int b) const {
    return pairs.count({a, b}) > 0 || pairs.count({b, a}) > 0;
  }
  bool query_positive(int id) const { return positive_queries.count(id) > 0; }
};

/// All pairs (a, b) with |t_a - t_b| > min_gap and ||pos_a - pos_b|| <= radius.
inline GroundTruth ground_truth(const std::vector<TrajectoryPoint>& traj, double radius,
                                double min_gap) {
  GroundTruth gt;
  gt.radius = radius;
  gt.min_gap = min_gap;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    for (std::size_t j = i + 1; j < traj.size(); ++j) {
      const TrajectoryPoint& a = traj[i];
      const TrajectoryPoint& b = traj[j];
      if (std::abs(a.timestamp - b.timestamp) <= min_gap) continue;
      if ((a.position - b.position).norm() > radius) continue;
      const bool a_first = a.timestamp < b.timestamp;
      const TrajectoryPoint& early = a_first ? a : b;
      const TrajectoryPoint& late = a_first ? b : a;
      gt.pairs.insert({early.id, late.id});
      gt.positive_queries.insert(late.id);
    }
  }
  return gt;
}

struct EvalReport {
  int detected = 0;
  int true_positives = 0;
  int false_positives = 0;
  double mean_time_ms = 0.0;

  double tp_rate() const { return detected > 0 ? double(true_positives) / detected : 0.0; }
  double fp_rate() const { return detected > 0 ? double(false_positives) / detected : 0.0; }
};

/// Table-style classification: TP iff the matched positions are strictly
/// within `radius` meters. Throws when a detection references an unknown id.
inline EvalReport classify(const std::vector<Detection>& detections,
                           const std::map<int, Eigen::Vector3d>& positions, double radius) {
  EvalReport rep;
  rep.detected = static_cast<int>(detections.size());
  for (const Detection& d : detections) {
    const auto qi = positions.find(d.query_id);
    const auto qj = positions.find(d.match_id);
    if (qi == positions.end() || qj == positions.end())
      throw std::invalid_argument("classify: detection references a scan without a pose");
    if ((qi->second - qj->second).norm() < radius)
      ++rep.true_positives;
    else
      ++rep.false_positives;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// ROC / AUC

struct RocRecord {
  int scan_id = 0;
  int candidate_id = -1;
  int score = -1;          // final inlier count, or -1 when no candidate cleared lambda_bow
  double bow_score = -1.0;  // retrieval score of the candidate, for the alternate sweep
};

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // ascending fpr
  std::optional<double> auc;     // empty when gt has no positive or no negative queries
  int positives = 0;
  int negatives = 0;
};

/// Sweeps "predict loop iff score > threshold" over the given thresholds.
/// Query labels come from the ground truth (a query is positive iff some
/// older scan closes a loop with it). The default score is the final inlier
/// count; `sweep_bow` swaps in the retrieval score instead.
inline RocCurve roc(const std::vector<RocRecord>& records, const GroundTruth& gt,
                    std::vector<double> sweep, bool sweep_bow = false) {
  RocCurve curve;
  for (const RocRecord& r : records)
    (gt.query_positive(r.scan_id) ? curve.positives : curve.negatives)++;

  const auto score_of = [sweep_bow](const RocRecord& r) {
    return sweep_bow ? r.bow_score : static_cast<double>(r.score);
  };
  std::sort(sweep.begin(), sweep.end(), std::greater<double>());
  for (const double theta : sweep) {
    int tp = 0, fp = 0;
    for (const RocRecord& r : records) {
      if (!(score_of(r) > theta)) continue;
      if (gt.query_positive(r.scan_id))
        ++tp;
      else
        ++fp;
    }
    RocPoint pt;
    pt.threshold = theta;
    pt.tpr = curve.positives > 0 ? double(tp) / curve.positives : 0.0;
    pt.fpr = curve.negatives > 0 ? double(fp) / curve.negatives : 0.0;
    curve.points.push_back(pt);
  }
  std::sort(curve.points.begin(), curve.points.end(), [](const RocPoint& a, const RocPoint& b) {
    if (a.fpr != b.fpr) return a.fpr < b.fpr;
    return a.tpr < b.tpr;
  });

  if (curve.positives == 0 || curve.negatives == 0) return curve;  // AUC undefined

  double auc = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  for (const RocPoint& pt : curve.points) {
    auc += (pt.fpr - prev_fpr) * (pt.tpr + prev_tpr) / 2.0;
    prev_fpr = pt.fpr;
    prev_tpr = pt.tpr;
  }
  auc += (1.0 - prev_fpr) * (1.0 + prev_tpr) / 2.0;
  curve.auc = auc;
  return curve;
}

/// Integer thresholds -2 .. max score: enough steps to trace the whole curve.
inline std::vector<double> default_roc_sweep(const std::vector<RocRecord>& records) {
  int max_score = 0;
  for (const RocRecord& r : records) max_score = std::max(max_score, r.score);
  std::vector<double> sweep;
  for (int t = -2; t <= max_score; ++t) sweep.push_back(t);
  return sweep;
}

/// Every distinct retrieval score plus a catch-all below the minimum.
inline std::vector<double> bow_roc_sweep(const std::vector<RocRecord>& records) {
  std::vector<double> sweep;
  for (const RocRecord& r : records) sweep.push_back(r.bow_score);
  sweep.push_back(-2.0);
  std::sort(sweep.begin(), sweep.end());
  sweep.erase(std::unique(sweep.begin(), sweep.end()), sweep.end());
  return sweep;
}

// ---------------------------------------------------------------------------
// Sequence driving

struct SequenceResult {
  std::vector<Detection> detections;
  std::vector<ScanRecord> records;

  std::vector<RocRecord> roc_records() const {
    std::vector<RocRecord> out;
    out.reserve(records.size());
    for (const ScanRecord& r : records)
      out.push_back({r.scan_id, r.candidate_id, r.inliers,
                     r.candidate_id >= 0 ? r.bow_score : -1.0});
    return out;
  }

  double mean_time_ms() const {
    if (records.empty()) return 0.0;
    double sum = 0.0;
    for (const ScanRecord& r : records) sum += r.timings.total_ms();
    return sum / static_cast<double>(records.size());
  }

  double mean_features() const {
    if (records.empty()) return 0.0;
    double sum = 0.0;
    for (const ScanRecord& r : records) sum += r.feature_count;
    return sum / static_cast<double>(records.size());
  }
};

inline SequenceResult run_sequence(PlaceRecognizer& rec, const std::vector<Scan>& scans) {
  SequenceResult out;
  for (const Scan& scan : scans) {
    auto det = rec.process_scan(scan);
    out.records.push_back(rec.last_record());
    if (det) out.detections.push_back(*det);
  }
  return out;
}

struct ResolutionRow {
  int rows = 0;
  EvalReport report;
  double mean_features = 0.0;
  double mean_time_ms = 0.0;
};

/// Re-runs the full pipeline per row count (row-downsampled projection) and
/// classifies each run against the trajectory.
inline std::vector<ResolutionRow> resolution_study(const std::vector<Scan>& scans,
                                                   const std::map<int, Eigen::Vector3d>& positions,
                                                   const Vocabulary& vocab, const Config& cfg,
                                                   const std::vector<int>& rows_list,
                                                   double gt_radius = 2.0) {
  std::vector<ResolutionRow> table;
  for (const int rows : rows_list) {
    if (rows < 1 || cfg.height % rows != 0)
      throw std::invalid_argument("resolution_study: rows must divide the base image height");
    PlaceRecognizer rec(cfg, vocab, rows == cfg.height ? 0 : rows);
    const SequenceResult res = run_sequence(rec, scans);
    ResolutionRow row;
    row.rows = rows;
    row.report = classify(res.detections, positions, gt_radius);
    row.report.mean_time_ms = res.mean_time_ms();
    row.mean_features = res.mean_features();
    row.mean_time_ms = res.mean_time_ms();
    table.push_back(row);
  }
  return table;
}

// ---------------------------------------------------------------------------
// CSV emit / parse

inline std::string detection_csv_header(bool with_timings = true) {
  std::string h = "i,j,bow_score,matches,inliers,tx,ty,tz,qx,qy,qz,qw";
  if (with_timings) h += ",t_project_ms,t_extract_ms,t_query_ms,t_match_ms,t_pnp_ms";
  return h + "\n";
}

inline std::string detection_to_csv(const Detection& d, bool with_timings = true) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%d,%d,%.9f,%d,%d,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f",
                d.query_id, d.match_id, d.bow_score, d.match_count, d.inlier_count,
                d.relative.t.x(), d.relative.t.y(), d.relative.t.z(), d.relative.q.x(),
                d.relative.q.y(), d.relative.q.z(), d.relative.q.w());
  std::string row(buf);
  if (with_timings) {
    std::snprintf(buf, sizeof(buf), ",%.3f,%.3f,%.3f,%.3f,%.3f", d.timings.project_ms,
                  d.timings.extract_ms, d.timings.query_ms, d.timings.match_ms, d.timings.pnp_ms);
    row += buf;
  }
  return row + "\n";
}

inline std::string detections_to_csv(const std::vector<Detection>& dets,
                                     bool with_timings = true) {
  std::string out = detection_csv_header(with_timings);
  for (const Detection& d : dets) out += detection_to_csv(d, with_timings);
  return out;
}

inline std::vector<Detection> parse_detections_csv(std::istream& in,
                                                   const std::string& name = "<csv>") {
  std::vector<Detection> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t.rfind("i,j,", 0) == 0) continue;
    const auto f = detail::split(t, ',');
    if (f.size() != 12 && f.size() != 17)
      throw std::runtime_error(name + ":" + std::to_string(line_no) +
                               ": expected 12 or 17 fields");
    const std::string where = name + ":" + std::to_string(line_no);
    Detection d;
    d.query_id = static_cast<int>(detail::parse_double(f[0], where));
    d.match_id = static_cast<int>(detail::parse_double(f[1], where));
    d.bow_score = detail::parse_double(f[2], where);
    d.match_count = static_cast<int>(detail::parse_double(f[3], where));
    d.inlier_count = static_cast<int>(detail::parse_double(f[4], where));
    d.relative.t = Eigen::Vector3d(detail::parse_double(f[5], where),
                                   detail::parse_double(f[6], where),
                                   detail::parse_double(f[7], where));
    d.relative.q = Eigen::Quaterniond(detail::parse_double(f[11], where),
                                      detail::parse_double(f[8], where),
                                      detail::parse_double(f[9], where),
                                      detail::parse_double(f[10], where));
    if (f.size() == 17) {
      d.timings.project_ms = detail::parse_double(f[12], where);
      d.timings.extract_ms = detail::parse_double(f[13], where);
      d.timings.query_ms = detail::parse_double(f[14], where);
      d.timings.match_ms = detail::parse_double(f[15], where);
      d.timings.pnp_ms = detail::parse_double(f[16], where);
    }
    out.push_back(d);
  }
  return out;
}

inline std::string records_to_csv(const std::vector<RocRecord>& records) {
  std::string out = "i,candidate,inliers,bow_score\n";
  for (const RocRecord& r : records) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.9f\n", r.scan_id, r.candidate_id, r.score,
                  r.bow_score);
    out += buf;
  }
  return out;
}

inline std::vector<RocRecord> parse_records_csv(std::istream& in,
                                                const std::string& name = "<csv>") {
  std::vector<RocRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t.rfind("i,", 0) == 0) continue;
    const auto f = detail::split(t, ',');
    if (f.size() != 3 && f.size() != 4)
      throw std::runtime_error(name + ":" + std::to_string(line_no) + ": expected 3 or 4 fields");
    const std::string where = name + ":" + std::to_string(line_no);
    RocRecord r;
    r.scan_id = static_cast<int>(detail::parse_double(f[0], where));
    r.candidate_id = static_cast<int>(detail::parse_double(f[1], where));
    r.score = static_cast<int>(detail::parse_double(f[2], where));
    if (f.size() == 4) r.bow_score = detail::parse_double(f[3], where);
    out.push_back(r);
  }
  return out;
}

inline std::string roc_to_csv(const RocCurve& curve) {
  std::string out = "threshold,fpr,tpr\n";
  for (const RocPoint& p : curve.points) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.1f,%.9f,%.9f\n", p.threshold, p.fpr, p.tpr);
    out += buf;
  }
  return out;
}

/// Table-I-style one-method summary.
inline std::string format_report(const std::string& label, const EvalReport& rep) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-12s detected %5d   TP %5d (%5.1f%%)   FP %5d (%5.1f%%)   %8.2f ms/query\n",
                label.c_str(), rep.detected, rep.true_positives, 100.0 * rep.tp_rate(),
                rep.false_positives, 100.0 * rep.fp_rate(), rep.mean_time_ms);
  return buf;
}

}  // namespace lipr
