#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "treeloc/alignment.hpp"
#include "treeloc/tri_desc.hpp"

namespace treeloc {

struct VerifyConfig {
  double centroid_inlier_tol = 0.5;  // m
  double planar_gate = 0.4;          // m
  double dbh_gate = 0.2;             // m
  double dz_inlier_tol = 0.3;        // m
  int min_refine_pairs = 2;
  int ransac_iters = 200;
  double overlap_accept = 0.2;
  int max_pairs_per_key = 16;

  void validate() const;
};

struct PlanarTransform {
  Mat2 rotation = Mat2::Identity();
  Vec2 translation = Vec2::Zero();

  Vec2 apply(const Vec2& p) const { return rotation * p + translation; }
  /// this after b
  PlanarTransform compose(const PlanarTransform& b) const {
    return {rotation * b.rotation, rotation * b.translation + translation};
  }
  double angle() const;
};

/// Least-squares rigid alignment dst ~ R src + t (centroid subtraction, 2x2
/// cross-covariance SVD, det forced to +1). Throws Error(DimensionMismatch) on
/// unequal or short inputs and Error(DegenerateConfiguration) on a zero cross-covariance.
PlanarTransform svd_align_2d(const std::vector<Vec2>& src, const std::vector<Vec2>& dst);

/// sum ||dst - (R src + t)||^2
double alignment_cost(const PlanarTransform& t, const std::vector<Vec2>& src, const std::vector<Vec2>& dst);

struct TriangleMatch {
  TriangleDescriptor query;
  TriangleDescriptor cand;
};

/// All cross pairs of triangles sharing a key, at most cap per key.
std::vector<TriangleMatch> match_triangles(const TriangleEntry& query, const TriangleEntry& cand, int cap_per_key);

struct CoarseAlignment {
  PlanarTransform transform;
  int inliers = 0;
};

/// RANSAC over single-triangle hypotheses (vertex correspondences from the
/// canonical side order), scored on centroid residuals; the final transform is
/// the SVD fit over the inlier centroids. Throws Error(NoValidHypothesis).
CoarseAlignment coarse_planar_align(const std::vector<TriangleMatch>& matches, const VerifyConfig& cfg,
                                    std::uint64_t seed);

using TreePair = std::pair<TreeId, TreeId>;  // (query id, candidate id)

/// One-to-one pairing of transformed query centers with candidate centers:
/// all pairs inside the planar and DBH gates, accepted nearest first.
/// Returns (query index, candidate index) pairs ordered by acceptance.
std::vector<std::pair<int, int>> pair_nearest(const std::vector<Vec2>& query_centers,
                                              const std::vector<double>& query_dbh, const ProjectedScene& cand,
                                              double planar_gate, double dbh_gate);

struct RefinedAlignment {
  PlanarTransform refine;  // (R_f, t_f), applied after the coarse transform
  PlanarTransform total;   // refine ∘ coarse
  double dz = 0.0;         // candidate base height minus query base height
  std::vector<TreePair> pairs;
};

/// Throws Error(InsufficientPairs) if fewer than cfg.min_refine_pairs survive.
RefinedAlignment refine_alignment(const ProjectedScene& query, const ProjectedScene& cand,
                                  const PlanarTransform& coarse, const VerifyConfig& cfg, std::uint64_t seed);

struct LocalizationResult {
  int candidate_index = -1;
  Pose transform_4dof;
  Pose transform_6dof;
  std::vector<TreePair> matched_pairs;
  double overlap = 0.0;
  int n_query_trees = 0;
  int n_cand_trees = 0;
};

double overlap_ratio(std::size_t matched, std::size_t n_query, std::size_t n_cand);

/// Borrowed view of an indexed candidate.
struct CandidateView {
  int index = -1;
  const ProjectedScene* projected = nullptr;
  const TriangleEntry* triangles = nullptr;
};

/// Full two-step verification of one candidate. Propagates NoValidHypothesis / InsufficientPairs.
LocalizationResult verify_candidate(const ProjectedScene& query, const TriangleEntry& query_tri,
                                    const CandidateView& cand, const VerifyConfig& cfg, std::uint64_t seed);

/// Verifies each candidate with its own RNG stream mix_seed(seed, index); failures
/// are dropped and survivors sorted by descending overlap, then ascending index.
std::vector<LocalizationResult> verify_candidates(const ProjectedScene& query, const TriangleEntry& query_tri,
                                                  const std::vector<CandidateView>& candidates,
                                                  const VerifyConfig& cfg, std::uint64_t seed);

/// (T^A_C)^-1 * T4D * T^A_Q with T^A the pure rotations of the two corrections.
Pose compose_6dof(const LocalizationResult& best, const AlignmentResult& align_q, const AlignmentResult& align_c);

}  // namespace treeloc
