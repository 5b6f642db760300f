// lipr: the per-scan detection pipeline.
//
// project -> extract -> bag-of-words transform -> database query (before
// insert) -> insert -> verify the best candidate by descriptor matching and
// PnP RANSAC. A candidate becomes a Detection when its match count exceeds
// N_m and its final inlier count exceeds N_p.
#pragma once

#include <chrono>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lipr/bow.hpp"
#include "lipr/config.hpp"
#include "lipr/database.hpp"
#include "lipr/geometry.hpp"
#include "lipr/matching.hpp"
#include "lipr/orb.hpp"
#include "lipr/projection.hpp"

namespace lipr {

struct StageTimings {
  double project_ms = 0.0;
  double extract_ms = 0.0;
  double query_ms = 0.0;  // transform + query + insert
  double match_ms = 0.0;
  double pnp_ms = 0.0;

  double total_ms() const { return project_ms + extract_ms + query_ms + match_ms + pnp_ms; }
};

struct Detection {
  int query_id = 0;
  int match_id = 0;
  double bow_score = 0.0;
  int match_count = 0;
  int inlier_count = 0;
  Pose relative;  // maps query-frame points into the matched frame
  StageTimings timings;
};

/// Per-query bookkeeping: the best candidate considered and how far it got.
/// `inliers` is -1 when no candidate cleared lambda_bow, 0 when the candidate
/// failed the match-count gate before PnP ran.
struct ScanRecord {
  int scan_id = 0;
  int candidate_id = -1;
  int inliers = -1;
  double bow_score = 0.0;
  int match_count = 0;
  int feature_count = 0;
  bool detected = false;
  StageTimings timings;
};

class PlaceRecognizer {
 public:
  PlaceRecognizer(Config cfg, const Vocabulary& vocab, int downsample_to_rows = 0)
      : cfg_(std::move(cfg)), vocab_(&vocab), target_rows_(downsample_to_rows) {
    cfg_.validate();
    pattern_ = BriefPattern::generate(cfg_.brief_seed);
    if (vocab_->pattern_seed != pattern_.seed)
      throw std::invalid_argument(
          "PlaceRecognizer: vocabulary was trained with a different BRIEF pattern seed");
  }

  const Config& config() const { return cfg_; }
  const BowDatabase& database() const { return db_; }
  const ScanRecord& last_record() const { return record_; }
  const std::vector<FeatureSet>& feature_history() const { return features_; }

  /// Runs the full pipeline on one scan. Scan timestamps must be monotone.
  std::optional<Detection> process_scan(const Scan& scan) {
    using clock = std::chrono::steady_clock;
    const auto ms_since = [](clock::time_point t0) {
      return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };

    if (scan.timestamp < last_timestamp_)
      throw std::invalid_argument("process_scan: non-monotone scan timestamp");
    last_timestamp_ = scan.timestamp;

    record_ = ScanRecord{};
    record_.scan_id = scan.id;

    // project
    auto t0 = clock::now();
    IntensityImage img;
    bool have_image = false;
    if (!scan.empty()) {
      img = project(scan, cfg_.width, cfg_.height, cfg_.vfov_deg);
      if (target_rows_ > 0 && target_rows_ != cfg_.height)
        img = downsample_rows(img, target_rows_);
      have_image = true;
    }
    record_.timings.project_ms = ms_since(t0);

    // extract
    t0 = clock::now();
    FeatureSet features;
    features.scan_id = scan.id;
    features.timestamp = scan.timestamp;
    features.pattern_seed = pattern_.seed;
    if (have_image) {
      ExtractParams ep;
      ep.n_bow = cfg_.n_bow;
      ep.fast_threshold = cfg_.fast_threshold;
      ep.pyramid_levels = cfg_.pyramid_levels;
      ep.pyramid_ratio = cfg_.pyramid_ratio;
      features = extract(img, pattern_, ep);
    }
    record_.timings.extract_ms = ms_since(t0);
    record_.feature_count = static_cast<int>(features.size());

    // transform + query (before insert) + insert
    t0 = clock::now();
    const BowVector vec = vocab_->transform(features);
    const QueryResult candidates = db_.query(vec, scan.timestamp, cfg_.exclusion_sec,
                                             cfg_.lambda_bow,
                                             static_cast<std::size_t>(cfg_.max_results));
    db_.insert(vec, scan.timestamp, scan.id);
    features_.push_back(std::move(features));
    record_.timings.query_ms = ms_since(t0);

    if (candidates.empty()) return std::nullopt;
    const QueryMatch& best = candidates.best();
    record_.candidate_id = db_.entry(best.entry_id).scan_id;
    record_.bow_score = best.score;
    record_.inliers = 0;

    // descriptor matching against the candidate's stored features
    const FeatureSet& fi = features_.back();
    const FeatureSet& fj = features_[best.entry_id];
    t0 = clock::now();
    const MatchSet matches = match_features(fi, fj, cfg_.n_s, cfg_.lambda_h_floor);
    record_.timings.match_ms = ms_since(t0);
    record_.match_count = static_cast<int>(matches.size());

    if (record_.match_count <= cfg_.n_m || record_.match_count < 4) return std::nullopt;

    // PnP RANSAC verification
    t0 = clock::now();
    std::vector<PnpCorrespondence> corrs;
    corrs.reserve(matches.size());
    for (const Match& m : matches.matches) {
      const Feature& a = fi.features[static_cast<std::size_t>(m.i_index)];
      const Feature& b = fj.features[static_cast<std::size_t>(m.j_index)];
      PnpCorrespondence c;
      c.p_i = Eigen::Vector3d(a.point.x, a.point.y, a.point.z);
      c.p_j = Eigen::Vector3d(b.point.x, b.point.y, b.point.z);
      c.z_j = Eigen::Vector2d(b.kp.u, b.kp.v);
      corrs.push_back(c);
    }
    CylindricalModel model;
    model.width = cfg_.width;
    model.height = target_rows_ > 0 ? target_rows_ : cfg_.height;
    model.vfov_deg = cfg_.vfov_deg;
    PnpParams pp;
    pp.n_p = cfg_.n_p;
    pp.inlier_px = cfg_.inlier_px;
    pp.max_iters = cfg_.ransac_max_iters;
    // per-scan seed so hypothesis sampling is deterministic per query
    pp.seed = splitmix64(cfg_.ransac_seed ^ static_cast<std::uint64_t>(scan.id));
    const auto pnp = pnp_ransac_best(model, corrs, pp);
    record_.timings.pnp_ms = ms_since(t0);

    if (!pnp) return std::nullopt;
    record_.inliers = static_cast<int>(pnp->inliers.size());
    if (record_.inliers <= cfg_.n_p) return std::nullopt;

    Detection det;
    det.query_id = scan.id;
    det.match_id = db_.entry(best.entry_id).scan_id;
    det.bow_score = best.score;
    det.match_count = record_.match_count;
    det.inlier_count = record_.inliers;
    det.relative = pnp->pose;
    det.timings = record_.timings;
    record_.detected = true;
    return det;
  }

 private:
  Config cfg_;
  const Vocabulary* vocab_;
  BriefPattern pattern_;
  BowDatabase db_;
  std::vector<FeatureSet> features_;  // entry id -> features, for verification
  double last_timestamp_ = -std::numeric_limits<double>::infinity();
  int target_rows_ = 0;
  ScanRecord record_;
};

}  // namespace lipr
