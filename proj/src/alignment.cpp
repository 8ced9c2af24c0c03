#include "treeloc/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "treeloc/errors.hpp"

namespace treeloc {

namespace {

double deg2rad(double d) { return d * M_PI / 180.0; }

// 1 - |v.a| for unit vectors, without the cancellation of the direct form.
double residual(const Vec3& v, const Vec3& a) { return v.cross(a).squaredNorm() / (1.0 + std::abs(v.dot(a))); }

double objective(const Vec3& v, const std::vector<Vec3>& axes) {
  double f = 0;
  for (const auto& a : axes) {
    const double r = residual(v, a);
    f += r * r;
  }
  return f;
}

// Orthonormal basis of the plane perpendicular to v.
Eigen::Matrix<double, 3, 2> tangent_basis(const Vec3& v) {
  const Vec3 helper = std::abs(v.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 b1 = v.cross(helper).normalized();
  const Vec3 b2 = v.cross(b1);
  Eigen::Matrix<double, 3, 2> b;
  b.col(0) = b1;
  b.col(1) = b2;
  return b;
}

// Minimizes sum (1 - |v.a|)^2 over unit v, starting at v. Returns false only if the
// first iteration cannot reduce a non-stationary objective or the iterate degenerates.
bool refine_direction(Vec3& v, const std::vector<Vec3>& axes, int max_iters) {
  double f = objective(v, axes);
  const double f0 = f;
  for (int it = 0; it < max_iters; ++it) {
    if (f < 1e-30) return true;
    const auto basis = tangent_basis(v);
    Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
    Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
    for (const auto& a : axes) {
      const double d = v.dot(a);
      const double s = d >= 0 ? 1.0 : -1.0;
      const double r = residual(v, a);
      const Eigen::RowVector2d j = -s * a.transpose() * basis;
      jtj += j.transpose() * j;
      jtr += j.transpose() * r;
    }
    Eigen::LDLT<Eigen::Matrix2d> ldlt(jtj);
    if (ldlt.info() != Eigen::Success || jtj.trace() < 1e-300) return true;
    Eigen::Vector2d step = -ldlt.solve(jtr);
    if (!step.allFinite()) return true;

    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      const Vec3 cand = (v + basis * step).normalized();
      const double fc = objective(cand, axes);
      if (fc <= f) {
        const double moved = (cand - v).norm();
        v = cand;
        const double prev = f;
        f = fc;
        accepted = true;
        if (moved < 1e-15 || prev - fc <= 1e-15 * std::max(prev, 1e-300)) return true;
        break;
      }
      step *= 0.5;
    }
    // No descent direction left: numerically at the minimum.
    if (!accepted) return true;
  }
  return v.allFinite() && (f < f0 || f0 < 1e-30 || max_iters == 0);
}

}  // namespace

AlignmentResult estimate_axis_alignment(const std::vector<TreeObservation>& trees, const AlignConfig& cfg) {
  AlignmentResult result;
  std::vector<Vec3> axes;
  axes.reserve(trees.size());
  for (const auto& t : trees) axes.push_back(canonicalize_axis(t.axis));

  const double cos_tilt = std::cos(deg2rad(cfg.max_tilt_deg));
  std::vector<int> seeds;
  for (int i = 0; i < static_cast<int>(axes.size()); ++i)
    if (axes[i].z() >= cos_tilt) seeds.push_back(i);
  if (seeds.empty()) {
    result.degenerate = true;
    return result;
  }

  const double cos_tol = std::cos(deg2rad(cfg.angle_tol_deg));
  auto inliers_of = [&](const Vec3& v) {
    std::vector<int> in;
    for (int i = 0; i < static_cast<int>(axes.size()); ++i)
      if (std::abs(v.dot(axes[i])) >= cos_tol) in.push_back(i);
    return in;
  };
  auto support = [&](const std::vector<int>& in, const Vec3& v) {
    double s = 0;
    for (int i : in) s += std::abs(v.dot(axes[i]));
    return s;
  };

  // Small sets are scored exhaustively; larger ones by seeded sampling.
  std::vector<int> hypotheses;
  if (static_cast<int>(seeds.size()) <= cfg.ransac_iters) {
    hypotheses = seeds;
  } else {
    std::mt19937_64 rng(cfg.seed);
    for (int it = 0; it < cfg.ransac_iters; ++it) hypotheses.push_back(seeds[rng() % seeds.size()]);
  }

  std::vector<int> best;
  double best_support = -1;
  for (int h : hypotheses) {
    auto in = inliers_of(axes[h]);
    const double s = support(in, axes[h]);
    if (in.size() > best.size() || (in.size() == best.size() && s > best_support)) {
      best = std::move(in);
      best_support = s;
    }
  }

  Vec3 v = Vec3::Zero();
  for (int i : best) v += axes[i];
  v.normalize();
  std::vector<int> inliers = best;
  for (int round = 0; round < 3; ++round) {
    std::vector<Vec3> fit;
    for (int i : inliers) fit.push_back(axes[i]);
    if (!refine_direction(v, fit, cfg.max_iters))
      throw Error(ErrorCode::NoConvergence, "axis alignment did not converge");
    auto next = inliers_of(v);
    if (next == inliers || next.empty()) break;
    inliers = std::move(next);
  }
  if (inliers.empty() || v.z() < cos_tilt) {
    result.degenerate = true;
    return result;
  }

  std::vector<Vec3> fit;
  for (int i : inliers) {
    fit.push_back(axes[i]);
    result.inlier_ids.push_back(trees[i].id);
  }
  result.correction = tilt_to_vertical(v);
  result.residual = objective(v, fit);
  return result;
}

ProjectedScene project(const SceneInventory& scene, const AlignmentResult& alignment) {
  ProjectedScene out;
  out.scene_index = scene.index;
  out.alignment = alignment;
  out.trees.reserve(scene.trees.size());
  for (const auto& t : scene.trees) {
    const Vec3 p = alignment.correction * t.position;
    out.trees.push_back({t.id, p.head<2>(), p.z(), t.dbh, t.is_candidate});
  }
  return out;
}

}  // namespace treeloc
