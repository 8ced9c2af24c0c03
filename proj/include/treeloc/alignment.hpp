#pragma once

#include <cstdint>
#include <vector>

#include "treeloc/model.hpp"

namespace treeloc {

struct AlignConfig {
  int ransac_iters = 100;
  double angle_tol_deg = 5.0;
  int max_iters = 100;            // Gauss-Newton iterations
  double max_tilt_deg = 60.0;     // axes tilted further than this never seed a hypothesis
  std::uint64_t seed = 7;
};

/// Roll/pitch correction taking the dominant stem direction onto e_z. The yaw
/// gauge is fixed at zero: `correction` is always a rotation about a horizontal axis.
struct AlignmentResult {
  Mat3 correction = Mat3::Identity();
  std::vector<TreeId> inlier_ids;
  double residual = 0.0;
  bool degenerate = false;
};

/// Robustly fits the vertical direction from stem axes: one-axis RANSAC
/// hypotheses followed by Gauss-Newton on sum_j (1 - |e_z^T R a_j|)^2 over the inliers.
/// Degenerate axis sets return identity with `degenerate` set; throws
/// Error(NoConvergence) if the refinement cannot reduce the objective at all.
AlignmentResult estimate_axis_alignment(const std::vector<TreeObservation>& trees, const AlignConfig& cfg);

struct ProjectedTree {
  TreeId id = 0;
  Vec2 center = Vec2::Zero();
  double base_height = 0.0;
  double dbh = 0.0;
  bool is_candidate = false;
};

struct ProjectedScene {
  int scene_index = 0;
  std::vector<ProjectedTree> trees;
  AlignmentResult alignment;
};

/// Rotates every stem position by the correction and drops it onto the xy-plane.
ProjectedScene project(const SceneInventory& scene, const AlignmentResult& alignment);

}  // namespace treeloc
