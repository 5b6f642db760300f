// lipr: candidate verification by cylindrical-reprojection PnP inside RANSAC.
//
// Frame-i features carry 3D points; frame-j features provide the 2D image
// targets (and 3D points for the closed-form hypothesis seed). The estimated
// pose maps frame-i points into frame j: z ~ project(pose * p_i). Azimuth
// residuals wrap, so matches across the image seam cost what they should.
#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "lipr/hash.hpp"
#include "lipr/pose.hpp"

namespace lipr {

/// Continuous forward model of the cylindrical intensity image.
struct CylindricalModel {
  int width = 1024;
  int height = 128;
  double vfov_deg = 45.0;

  /// (u, v) in continuous pixels; u in [0, W). Throws if p is at the origin.
  Eigen::Vector2d project(const Eigen::Vector3d& p) const {
    const double rho2 = p.x() * p.x() + p.y() * p.y();
    if (rho2 + p.z() * p.z() < 1e-18)
      throw std::domain_error("CylindricalModel::project: point at sensor origin");
    double u = width * (std::atan2(p.y(), p.x()) + std::numbers::pi) /
               (2.0 * std::numbers::pi);
    if (u >= width) u -= width;
    const double elev_deg =
        std::atan2(p.z(), std::sqrt(rho2)) * 180.0 / std::numbers::pi;
    const double v = height * (vfov_deg / 2.0 - elev_deg) / vfov_deg;
    return {u, v};
  }

  /// d(u,v)/dp at p.
  Eigen::Matrix<double, 2, 3> jacobian(const Eigen::Vector3d& p) const {
    const double x = p.x(), y = p.y(), z = p.z();
    const double rho2 = x * x + y * y;
    const double rho = std::sqrt(rho2);
    const double r2 = rho2 + z * z;
    Eigen::Matrix<double, 2, 3> J;
    const double ku = width / (2.0 * std::numbers::pi);
    J(0, 0) = ku * (-y / rho2);
    J(0, 1) = ku * (x / rho2);
    J(0, 2) = 0.0;
    const double kv = -height * (180.0 / std::numbers::pi) / vfov_deg;
    J(1, 0) = kv * (-x * z / (rho * r2));
    J(1, 1) = kv * (-y * z / (rho * r2));
    J(1, 2) = kv * (rho / r2);
    return J;
  }

  /// Azimuth difference wrapped to [-W/2, W/2].
  double wrap_du(double du) const {
    const double W = width;
    du = std::fmod(du, W);
    if (du > W / 2.0) du -= W;
    if (du < -W / 2.0) du += W;
    return du;
  }

  /// Residual of a predicted pixel against a measured one, azimuth-wrapped.
  Eigen::Vector2d residual(const Eigen::Vector2d& predicted,
                           const Eigen::Vector2d& measured) const {
    return {wrap_du(predicted.x() - measured.x()), predicted.y() - measured.y()};
  }
};

/// One 3D-2D correspondence for verification; p_j is carried along so minimal
/// samples can be seeded in closed form.
struct PnpCorrespondence {
  Eigen::Vector3d p_i;  // 3D point in frame i
  Eigen::Vector3d p_j;  // 3D point in frame j
  Eigen::Vector2d z_j;  // measured pixel in image j (level-0 scale)
};

/// Closed-form least-squares rigid transform (SVD) with det(R) = +1 enforced:
/// dst ~ R * src + t. Throws on fewer than 3 pairs or a degenerate
/// (collinear) configuration.
inline Pose kabsch_init(const std::vector<Eigen::Vector3d>& src,
                        const std::vector<Eigen::Vector3d>& dst) {
  if (src.size() != dst.size() || src.size() < 3)
    throw std::invalid_argument("kabsch_init: need at least 3 point pairs");
  const std::size_t n = src.size();
  Eigen::Vector3d cs = Eigen::Vector3d::Zero(), cd = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    cs += src[i];
    cd += dst[i];
  }
  cs /= static_cast<double>(n);
  cd /= static_cast<double>(n);

  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  double spread = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d a = src[i] - cs;
    const Eigen::Vector3d b = dst[i] - cd;
    H += a * b.transpose();
    spread += a.squaredNorm();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  // collinear source points leave rotation about the line unconstrained
  if (spread < 1e-12 || sv(1) <= 1e-9 * std::max(sv(0), 1e-300))
    throw std::invalid_argument("kabsch_init: degenerate (collinear) configuration");
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  D(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant();
  const Eigen::Matrix3d R = svd.matrixV() * D * svd.matrixU().transpose();

  Pose pose;
  pose.q = Eigen::Quaterniond(R).normalized();
  pose.t = cd - R * cs;
  return pose;
}

namespace detail {

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

inline Pose apply_increment(const Eigen::Matrix<double, 6, 1>& delta, const Pose& pose) {
  const Eigen::Vector3d omega = delta.head<3>();
  const double angle = omega.norm();
  Eigen::Quaterniond dq = Eigen::Quaterniond::Identity();
  if (angle > 0.0) dq = Eigen::Quaterniond(Eigen::AngleAxisd(angle, omega / angle));
  Pose out;
  out.q = (dq * pose.q).normalized();
  out.t = dq * pose.t + delta.tail<3>();
  return out;
}

constexpr double kHuberPx = 2.0;

inline double robust_cost(double err_norm) {
  if (err_norm <= kHuberPx) return err_norm * err_norm;
  return 2.0 * kHuberPx * err_norm - kHuberPx * kHuberPx;
}

}  // namespace detail

/// Analytic 2x6 Jacobian of the predicted pixel with respect to the
/// left-multiplicative pose increment [omega | t], evaluated at delta = 0.
inline Eigen::Matrix<double, 2, 6> reprojection_jacobian(const CylindricalModel& model,
                                                         const Pose& pose,
                                                         const Eigen::Vector3d& p_i) {
  const Eigen::Vector3d pc = pose.apply(p_i);
  Eigen::Matrix<double, 2, 6> J;
  J.block<2, 3>(0, 0) = -model.jacobian(pc) * detail::skew(pc);
  J.block<2, 3>(0, 3) = model.jacobian(pc);
  return J;
}

struct RefineResult {
  Pose pose;
  double cost = 0.0;
  int iterations = 0;
};

/// Gauss-Newton on the 6-dof pose minimizing the Huber-robustified
/// reprojection error, with additive diagonal damping as fallback whenever a
/// step would increase the cost. Left-multiplicative increment
/// pose <- Exp(delta) * pose.
inline RefineResult refine(const CylindricalModel& model,
                           const std::vector<PnpCorrespondence>& corrs, const Pose& init,
                           int max_iters = 10) {
  if (corrs.size() < 4) throw std::invalid_argument("refine: need at least 4 correspondences");
  Pose pose = init;

  const auto total_cost = [&](const Pose& p) {
    double c = 0.0;
    for (const PnpCorrespondence& m : corrs) {
      const Eigen::Vector2d r = model.residual(model.project(p.apply(m.p_i)), m.z_j);
      c += detail::robust_cost(r.norm());
    }
    return c;
  };

  double cost = total_cost(pose);
  if (!std::isfinite(cost)) throw std::runtime_error("refine: non-finite cost");

  double lambda = 0.0;
  RefineResult res;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    for (const PnpCorrespondence& m : corrs) {
      const Eigen::Vector3d pc = pose.apply(m.p_i);
      const Eigen::Vector2d r = model.residual(model.project(pc), m.z_j);
      const double e = r.norm();
      const double w = e <= detail::kHuberPx ? 1.0 : detail::kHuberPx / e;
      const Eigen::Matrix<double, 2, 6> J = reprojection_jacobian(model, pose, m.p_i);
      H += w * J.transpose() * J;
      g += w * J.transpose() * r;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::Matrix<double, 6, 6> Hd = H;
      Hd.diagonal().array() += lambda;
      const Eigen::Matrix<double, 6, 1> delta = Hd.ldlt().solve(-g);
      if (!delta.allFinite()) {
        lambda = std::max(lambda * 10.0, 1e-6);
        continue;
      }
      if (delta.norm() < 1e-8) {
        res.pose = pose;
        res.cost = cost;
        res.iterations = iter;
        return res;
      }
      const Pose trial = detail::apply_increment(delta, pose);
      const double trial_cost = total_cost(trial);
      if (!std::isfinite(trial_cost)) throw std::runtime_error("refine: non-finite cost");
      if (trial_cost < cost) {
        pose = trial;
        cost = trial_cost;
        lambda *= 0.5;
        accepted = true;
        break;
      }
      lambda = std::max(lambda * 10.0, 1e-6);
    }
    if (!accepted) break;  // damping exhausted
  }
  res.pose = pose;
  res.cost = cost;
  res.iterations = iter;
  return res;
}

struct PnpResult {
  Pose pose;                       // maps frame-i points into frame j
  std::vector<int> inliers;        // indices into the correspondence list
  double mean_error_px = 0.0;      // mean inlier reprojection error
  int iterations_run = 0;
};

struct PnpParams {
  int n_p = 15;             // acceptance gate: inliers must exceed this
  double inlier_px = 5.0;   // reprojection error threshold (level-0 pixels)
  int max_iters = 200;
  std::uint64_t seed = 7;
};

namespace detail {

inline std::vector<int> inliers_under(const CylindricalModel& model,
                                      const std::vector<PnpCorrespondence>& corrs,
                                      const Pose& pose, double inlier_px) {
  std::vector<int> in;
  for (std::size_t k = 0; k < corrs.size(); ++k) {
    Eigen::Vector3d pc = pose.apply(corrs[k].p_i);
    if (pc.squaredNorm() < 1e-18) continue;
    const Eigen::Vector2d r = model.residual(model.project(pc), corrs[k].z_j);
    if (r.norm() < inlier_px) in.push_back(static_cast<int>(k));
  }
  return in;
}

}  // namespace detail

/// RANSAC over minimal 4-match samples: Kabsch on the sample's 3D-3D pairs
/// seeds the pose, refinement polishes it, consensus is counted with the
/// azimuth-wrapped pixel threshold. The best consensus is re-refined on all
/// of its inliers. Returns the best hypothesis found regardless of the N_p
/// gate, or nullopt when no sample produced a usable pose.
inline std::optional<PnpResult> pnp_ransac_best(const CylindricalModel& model,
                                                const std::vector<PnpCorrespondence>& corrs,
                                                const PnpParams& params) {
  const std::size_t n = corrs.size();
  if (n < 4) throw std::invalid_argument("pnp_ransac: need at least 4 matches");
  std::mt19937_64 rng(splitmix64(params.seed ^ 0x506e5052ULL));

  std::optional<PnpResult> best;
  std::size_t best_count = 0;
  int adaptive = params.max_iters;
  std::vector<int> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = static_cast<int>(i);

  int it = 0;
  for (; it < adaptive && it < params.max_iters; ++it) {
    // partial Fisher-Yates for 4 distinct indices
    for (int s = 0; s < 4; ++s) {
      std::uniform_int_distribution<std::size_t> pick(s, n - 1);
      std::swap(pool[s], pool[pick(rng)]);
    }
    std::vector<Eigen::Vector3d> src(4), dst(4);
    std::vector<PnpCorrespondence> sample(4);
    for (int s = 0; s < 4; ++s) {
      src[s] = corrs[static_cast<std::size_t>(pool[s])].p_i;
      dst[s] = corrs[static_cast<std::size_t>(pool[s])].p_j;
      sample[s] = corrs[static_cast<std::size_t>(pool[s])];
    }

    Pose hyp;
    try {
      hyp = kabsch_init(src, dst);
      hyp = refine(model, sample, hyp).pose;
    } catch (const std::exception&) {
      continue;  // degenerate sample or a point crossing the origin
    }

    const std::vector<int> in = detail::inliers_under(model, corrs, hyp, params.inlier_px);
    if (in.size() > best_count) {
      best_count = in.size();
      PnpResult r;
      r.pose = hyp;
      r.inliers = in;
      best = r;
      // 99% confidence iteration bound from the current inlier ratio
      const double w = static_cast<double>(in.size()) / static_cast<double>(n);
      const double p_bad = 1.0 - w * w * w * w;
      if (p_bad < 1e-12) {
        adaptive = it + 1;
      } else if (p_bad < 1.0) {
        adaptive = std::min<int>(params.max_iters,
                                 static_cast<int>(std::ceil(std::log(0.01) / std::log(p_bad))));
      }
    }
  }

  if (!best) return std::nullopt;

  // polish on the full consensus set, then recompute the set under the final pose
  if (best->inliers.size() >= 4) {
    std::vector<PnpCorrespondence> in_corrs;
    in_corrs.reserve(best->inliers.size());
    for (const int k : best->inliers) in_corrs.push_back(corrs[static_cast<std::size_t>(k)]);
    try {
      best->pose = refine(model, in_corrs, best->pose).pose;
    } catch (const std::exception&) {
      // keep the unpolished pose
    }
  }
  best->inliers = detail::inliers_under(model, corrs, best->pose, params.inlier_px);
  best->iterations_run = it;

  double err = 0.0;
  for (const int k : best->inliers) {
    const Eigen::Vector2d r = model.residual(
        model.project(best->pose.apply(corrs[static_cast<std::size_t>(k)].p_i)),
        corrs[static_cast<std::size_t>(k)].z_j);
    err += r.norm();
  }
  best->mean_error_px = best->inliers.empty() ? 0.0 : err / best->inliers.size();
  return best;
}

/// The verification gate: a result is returned iff the final inlier count
/// strictly exceeds N_p.
inline std::optional<PnpResult> pnp_ransac(const CylindricalModel& model,
                                           const std::vector<PnpCorrespondence>& corrs,
                                           const PnpParams& params) {
  auto best = pnp_ransac_best(model, corrs, params);
  if (!best || static_cast<int>(best->inliers.size()) <= params.n_p) return std::nullopt;
  return best;
}

}  // namespace lipr
