#include "treeloc/verification.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/SVD>

#include "treeloc/errors.hpp"
#include "treeloc/spatial_grid.hpp"

namespace treeloc {

void VerifyConfig::validate() const {
  if (!(centroid_inlier_tol > 0 && planar_gate > 0 && dbh_gate > 0 && dz_inlier_tol > 0))
    throw Error(ErrorCode::ConfigError, "verification gates must be positive");
  if (min_refine_pairs < 2) throw Error(ErrorCode::ConfigError, "min_refine_pairs must be >= 2");
  if (ransac_iters < 1 || max_pairs_per_key < 1)
    throw Error(ErrorCode::ConfigError, "ransac_iters and max_pairs_per_key must be positive");
}

double PlanarTransform::angle() const { return std::atan2(rotation(1, 0), rotation(0, 0)); }

PlanarTransform svd_align_2d(const std::vector<Vec2>& src, const std::vector<Vec2>& dst) {
  if (src.size() != dst.size() || src.size() < 2)
    throw Error(ErrorCode::DimensionMismatch, "svd_align_2d needs two equal-length sets of >= 2 points");
  const double n = static_cast<double>(src.size());
  Vec2 mu_s = Vec2::Zero(), mu_d = Vec2::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mu_s += src[i];
    mu_d += dst[i];
  }
  mu_s /= n;
  mu_d /= n;

  Mat2 h = Mat2::Zero();
  double var_s = 0, var_d = 0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec2 a = src[i] - mu_s, b = dst[i] - mu_d;
    h += a * b.transpose();
    var_s += a.squaredNorm();
    var_d += b.squaredNorm();
  }
  if (var_s <= 0 || var_d <= 0 || h.norm() <= 1e-14 * std::sqrt(var_s * var_d))
    throw Error(ErrorCode::DegenerateConfiguration, "cross-covariance has rank 0");

  Eigen::JacobiSVD<Mat2> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat2 u = svd.matrixU(), v = svd.matrixV();
  Mat2 d = Mat2::Identity();
  d(1, 1) = (v * u.transpose()).determinant() < 0 ? -1.0 : 1.0;

  PlanarTransform t;
  t.rotation = v * d * u.transpose();
  t.translation = mu_d - t.rotation * mu_s;
  return t;
}

double alignment_cost(const PlanarTransform& t, const std::vector<Vec2>& src, const std::vector<Vec2>& dst) {
  double c = 0;
  for (std::size_t i = 0; i < src.size(); ++i) c += (dst[i] - t.apply(src[i])).squaredNorm();
  return c;
}

std::vector<TriangleMatch> match_triangles(const TriangleEntry& query, const TriangleEntry& cand, int cap_per_key) {
  std::vector<TriangleMatch> out;
  for (TriKey key : query.keys) {
    const auto qs = query.lookup(key);
    const auto cs = cand.lookup(key);
    int taken = 0;
    for (const auto& q : qs) {
      for (const auto& c : cs) {
        if (taken >= cap_per_key) break;
        out.push_back({q, c});
        ++taken;
      }
      if (taken >= cap_per_key) break;
    }
  }
  return out;
}

namespace {

PlanarTransform triangle_hypothesis(const TriangleMatch& m) {
  return svd_align_2d({m.query.vertices.begin(), m.query.vertices.end()},
                      {m.cand.vertices.begin(), m.cand.vertices.end()});
}

std::vector<int> hypothesis_order(std::size_t n, int iters, std::uint64_t seed) {
  std::vector<int> order;
  if (n <= static_cast<std::size_t>(iters)) {
    order.resize(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  } else {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < iters; ++i) order.push_back(static_cast<int>(rng() % n));
  }
  return order;
}

}  // namespace

CoarseAlignment coarse_planar_align(const std::vector<TriangleMatch>& matches, const VerifyConfig& cfg,
                                    std::uint64_t seed) {
  if (matches.empty()) throw Error(ErrorCode::NoValidHypothesis, "no matched triangles");
  const double tol2 = cfg.centroid_inlier_tol * cfg.centroid_inlier_tol;

  std::vector<int> best_inliers;
  double best_cost = 0;
  PlanarTransform best_h;
  for (int h : hypothesis_order(matches.size(), cfg.ransac_iters, seed)) {
    PlanarTransform t;
    try {
      t = triangle_hypothesis(matches[h]);
    } catch (const Error&) {
      continue;
    }
    std::vector<int> inliers;
    double cost = 0;
    for (int u = 0; u < static_cast<int>(matches.size()); ++u) {
      const double r2 = (matches[u].cand.centroid - t.apply(matches[u].query.centroid)).squaredNorm();
      if (r2 < tol2) {
        inliers.push_back(u);
        cost += r2;
      }
    }
    if (inliers.size() > best_inliers.size() || (inliers.size() == best_inliers.size() && cost < best_cost)) {
      best_inliers = std::move(inliers);
      best_cost = cost;
      best_h = t;
    }
  }

  const std::size_t needed = std::min<std::size_t>(2, matches.size());
  if (best_inliers.size() < needed)
    throw Error(ErrorCode::NoValidHypothesis, "best hypothesis has too few centroid inliers");

  CoarseAlignment out;
  out.inliers = static_cast<int>(best_inliers.size());
  if (best_inliers.size() < 2) {
    // a lone match: its own vertex fit is the estimate
    out.transform = best_h;
    return out;
  }
  std::vector<Vec2> src, dst;
  for (int u : best_inliers) {
    src.push_back(matches[u].query.centroid);
    dst.push_back(matches[u].cand.centroid);
  }
  try {
    out.transform = svd_align_2d(src, dst);
  } catch (const Error&) {
    // coincident inlier centroids (repeated triangles) carry no rotation
    out.transform = best_h;
  }
  return out;
}

std::vector<std::pair<int, int>> pair_nearest(const std::vector<Vec2>& query_centers,
                                              const std::vector<double>& query_dbh, const ProjectedScene& cand,
                                              double planar_gate, double dbh_gate) {
  SpatialGrid2D grid(planar_gate);
  for (const auto& t : cand.trees) grid.insert(t.center);

  struct Edge {
    double d2;
    int q, c;
  };
  std::vector<Edge> edges;
  for (int q = 0; q < static_cast<int>(query_centers.size()); ++q)
    for (int c : grid.radius(query_centers[q], planar_gate)) {
      if (std::abs(query_dbh[q] - cand.trees[c].dbh) >= dbh_gate) continue;
      edges.push_back({(query_centers[q] - cand.trees[c].center).squaredNorm(), q, c});
    }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.d2 != b.d2) return a.d2 < b.d2;
    if (a.q != b.q) return a.q < b.q;
    return a.c < b.c;
  });

  std::vector<char> used_q(query_centers.size(), 0), used_c(cand.trees.size(), 0);
  std::vector<std::pair<int, int>> out;
  for (const auto& e : edges) {
    if (used_q[e.q] || used_c[e.c]) continue;
    used_q[e.q] = used_c[e.c] = 1;
    out.emplace_back(e.q, e.c);
  }
  return out;
}

namespace {

// 1-point RANSAC on base-height offsets; returns (dz, inlier positions in `offsets`).
std::pair<double, std::vector<int>> vertical_offset(const std::vector<double>& offsets, double tol, int iters,
                                                    std::uint64_t seed) {
  std::vector<int> best;
  double best_dev = 0;
  for (int h : hypothesis_order(offsets.size(), iters, seed)) {
    std::vector<int> in;
    double dev = 0;
    for (int u = 0; u < static_cast<int>(offsets.size()); ++u) {
      const double r = std::abs(offsets[u] - offsets[h]);
      if (r < tol) {
        in.push_back(u);
        dev += r;
      }
    }
    if (in.size() > best.size() || (in.size() == best.size() && dev < best_dev)) {
      best = std::move(in);
      best_dev = dev;
    }
  }
  double dz = 0;
  for (int u : best) dz += offsets[u];
  if (!best.empty()) dz /= static_cast<double>(best.size());
  return {dz, best};
}

}  // namespace

RefinedAlignment refine_alignment(const ProjectedScene& query, const ProjectedScene& cand,
                                  const PlanarTransform& coarse, const VerifyConfig& cfg, std::uint64_t seed) {
  const std::size_t nq = query.trees.size();
  std::vector<Vec2> moved(nq);
  std::vector<double> dbh(nq);
  for (std::size_t i = 0; i < nq; ++i) {
    moved[i] = coarse.apply(query.trees[i].center);
    dbh[i] = query.trees[i].dbh;
  }

  auto pairs = pair_nearest(moved, dbh, cand, cfg.planar_gate, cfg.dbh_gate);
  const auto min_pairs = static_cast<std::size_t>(cfg.min_refine_pairs);
  if (pairs.size() < min_pairs)
    throw Error(ErrorCode::InsufficientPairs, std::to_string(pairs.size()) + " pairs after coarse alignment");

  std::vector<double> offsets;
  for (auto [q, c] : pairs) offsets.push_back(cand.trees[c].base_height - query.trees[q].base_height);
  auto [dz, dz_inliers] = vertical_offset(offsets, cfg.dz_inlier_tol, cfg.ransac_iters, seed);
  if (dz_inliers.size() < min_pairs)
    throw Error(ErrorCode::InsufficientPairs, "too few pairs agree on the vertical offset");

  std::vector<Vec2> src, dst;
  for (int u : dz_inliers) {
    src.push_back(moved[pairs[u].first]);
    dst.push_back(cand.trees[pairs[u].second].center);
  }
  RefinedAlignment out;
  try {
    out.refine = svd_align_2d(src, dst);
  } catch (const Error& e) {
    throw Error(ErrorCode::InsufficientPairs, e.what());
  }
  out.total = out.refine.compose(coarse);

  for (std::size_t i = 0; i < nq; ++i) moved[i] = out.total.apply(query.trees[i].center);
  double dz_sum = 0;
  for (auto [q, c] : pair_nearest(moved, dbh, cand, cfg.planar_gate, cfg.dbh_gate)) {
    const double off = cand.trees[c].base_height - query.trees[q].base_height;
    if (std::abs(off - dz) >= cfg.dz_inlier_tol) continue;
    out.pairs.emplace_back(query.trees[q].id, cand.trees[c].id);
    dz_sum += off;
  }
  if (out.pairs.size() < min_pairs)
    throw Error(ErrorCode::InsufficientPairs, "too few pairs under the refined transform");
  out.dz = dz_sum / static_cast<double>(out.pairs.size());
  return out;
}

double overlap_ratio(std::size_t matched, std::size_t n_query, std::size_t n_cand) {
  const double denom = static_cast<double>(n_query + n_cand) - static_cast<double>(matched);
  return denom > 0 ? static_cast<double>(matched) / denom : 0.0;
}

LocalizationResult verify_candidate(const ProjectedScene& query, const TriangleEntry& query_tri,
                                    const CandidateView& cand, const VerifyConfig& cfg, std::uint64_t seed) {
  const auto matches = match_triangles(query_tri, *cand.triangles, cfg.max_pairs_per_key);
  const auto coarse = coarse_planar_align(matches, cfg, seed);
  const auto refined = refine_alignment(query, *cand.projected, coarse.transform, cfg, mix_seed(seed, 1));

  LocalizationResult r;
  r.candidate_index = cand.index;
  r.matched_pairs = refined.pairs;
  r.n_query_trees = static_cast<int>(query.trees.size());
  r.n_cand_trees = static_cast<int>(cand.projected->trees.size());
  r.overlap = overlap_ratio(r.matched_pairs.size(), query.trees.size(), cand.projected->trees.size());

  r.transform_4dof.rotation = Mat3::Identity();
  r.transform_4dof.rotation.topLeftCorner<2, 2>() = refined.total.rotation;
  r.transform_4dof.translation << refined.total.translation, refined.dz;
  r.transform_6dof = compose_6dof(r, query.alignment, cand.projected->alignment);
  return r;
}

std::vector<LocalizationResult> verify_candidates(const ProjectedScene& query, const TriangleEntry& query_tri,
                                                  const std::vector<CandidateView>& candidates,
                                                  const VerifyConfig& cfg, std::uint64_t seed) {
  std::vector<LocalizationResult> out;
  for (const auto& cand : candidates) {
    try {
      out.push_back(verify_candidate(query, query_tri, cand, cfg, mix_seed(seed, static_cast<std::uint64_t>(cand.index))));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoValidHypothesis && e.code() != ErrorCode::InsufficientPairs &&
          e.code() != ErrorCode::DegenerateConfiguration)
        throw;
    }
  }
  std::sort(out.begin(), out.end(), [](const LocalizationResult& a, const LocalizationResult& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    return a.candidate_index < b.candidate_index;
  });
  return out;
}

Pose compose_6dof(const LocalizationResult& best, const AlignmentResult& align_q, const AlignmentResult& align_c) {
  const Pose ta_q = Pose::from_rotation(align_q.correction);
  const Pose ta_c = Pose::from_rotation(align_c.correction);
  return ta_c.inverse().compose(best.transform_4dof).compose(ta_q);
}

}  // namespace treeloc
