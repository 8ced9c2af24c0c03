#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "treeloc/model.hpp"
#include "treeloc/verification.hpp"

namespace treeloc {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Relative-pose measurement: measurement ~ x_from^-1 * x_to. Residual and
/// information are ordered (translation, rotation) like the g2o text format.
struct PoseEdge {
  int from = 0;
  int to = 0;
  Pose measurement;
  Mat6 information = Mat6::Identity();
};

struct PoseGraph {
  std::map<int, Pose> nodes;
  std::vector<PoseEdge> edges;
  int anchor = 0;

  /// Throws Error(InvalidGraph) for dangling edges, a missing anchor, or nodes
  /// unreachable from the anchor.
  void validate() const;
};

struct OptimizeResult {
  std::map<int, Pose> poses;
  double chi2 = 0;
  double initial_chi2 = 0;
  int iterations = 0;
  std::vector<double> chi2_history;  // accepted iterations, starting with the initial value
};

/// 6-vector residual of one edge: [t_E; log(R_E)] with E = Z^-1 x_i^-1 x_j.
Vec6 edge_residual(const Pose& xi, const Pose& xj, const Pose& z);

/// Analytic Jacobians of edge_residual under right perturbations
/// x <- (R exp(w), t + R v) with the perturbation ordered (v, w).
void edge_jacobians(const Pose& xi, const Pose& xj, const Pose& z, Mat6& ji, Mat6& jj);

/// Applies the same right perturbation used by edge_jacobians.
Pose retract(const Pose& x, const Vec6& delta);

double graph_chi2(const PoseGraph& g, const std::map<int, Pose>& poses);

/// Gauss-Newton with step halving; the anchor stays fixed. Stops when the
/// relative chi2 decrease drops below tol. Dense solve below 600 free nodes,
/// sparse Cholesky above. Throws Error(SingularSystem) on a rank-deficient system.
OptimizeResult optimize(const PoseGraph& graph, int max_iters = 50, double tol = 1e-10);

struct LocalizationLink {
  int query_node = 0;
  int cand_node = 0;
  LocalizationResult result;
};

/// One edge cand -> query per result whose overlap exceeds cfg.overlap_accept,
/// measuring T_{C<-Q}, with information base_information * overlap.
std::vector<PoseEdge> constraints_from_localization(const std::vector<LocalizationLink>& links,
                                                    const VerifyConfig& cfg,
                                                    const Mat6& base_information = Mat6::Identity());

/// VERTEX_SE3:QUAT / EDGE_SE3:QUAT text. The anchor is written as "FIX id".
std::string write_g2o(const PoseGraph& g);
PoseGraph read_g2o(const std::string& text);

}  // namespace treeloc
