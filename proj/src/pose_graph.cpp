#include "treeloc/pose_graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "treeloc/errors.hpp"

namespace treeloc {

namespace {

Mat3 right_jacobian_inverse(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 k = skew(phi);
  if (theta < 1e-6) return Mat3::Identity() + 0.5 * k + (1.0 / 12.0) * k * k;
  const double c = 1.0 / (theta * theta) - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  return Mat3::Identity() + 0.5 * k + c * k * k;
}

constexpr std::size_t kDenseLimit = 600;

}  // namespace

void PoseGraph::validate() const {
  if (!nodes.count(anchor)) throw Error(ErrorCode::InvalidGraph, "anchor node missing");
  std::unordered_map<int, std::vector<int>> adj;
  for (const auto& e : edges) {
    if (!nodes.count(e.from) || !nodes.count(e.to))
      throw Error(ErrorCode::InvalidGraph, "edge references a missing node");
    adj[e.from].push_back(e.to);
    adj[e.to].push_back(e.from);
  }
  std::set<int> seen{anchor};
  std::queue<int> todo;
  todo.push(anchor);
  while (!todo.empty()) {
    const int n = todo.front();
    todo.pop();
    for (int m : adj[n])
      if (seen.insert(m).second) todo.push(m);
  }
  if (seen.size() != nodes.size()) throw Error(ErrorCode::InvalidGraph, "graph is not connected to the anchor");
}

Vec6 edge_residual(const Pose& xi, const Pose& xj, const Pose& z) {
  const Pose e = z.inverse().compose(xi.inverse()).compose(xj);
  Vec6 r;
  r << e.translation, so3_log(e.rotation);
  return r;
}

void edge_jacobians(const Pose& xi, const Pose& xj, const Pose& z, Mat6& ji, Mat6& jj) {
  const Mat3 rzt = z.rotation.transpose();
  const Mat3 rij = xi.rotation.transpose() * xj.rotation;
  const Mat3 re = rzt * rij;
  const Vec3 phi = so3_log(re);
  const Mat3 jr_inv = right_jacobian_inverse(phi);
  const Vec3 d = xi.rotation.transpose() * (xj.translation - xi.translation);

  ji.setZero();
  ji.block<3, 3>(0, 0) = -rzt;
  ji.block<3, 3>(0, 3) = rzt * skew(d);
  ji.block<3, 3>(3, 3) = -jr_inv * rij.transpose();

  jj.setZero();
  jj.block<3, 3>(0, 0) = re;
  jj.block<3, 3>(3, 3) = jr_inv;
}

Pose retract(const Pose& x, const Vec6& delta) {
  return {x.rotation * so3_exp(delta.tail<3>()), x.translation + x.rotation * delta.head<3>()};
}

double graph_chi2(const PoseGraph& g, const std::map<int, Pose>& poses) {
  double chi2 = 0;
  for (const auto& e : g.edges) {
    const Vec6 r = edge_residual(poses.at(e.from), poses.at(e.to), e.measurement);
    chi2 += r.dot(e.information * r);
  }
  return chi2;
}

OptimizeResult optimize(const PoseGraph& graph, int max_iters, double tol) {
  graph.validate();
  OptimizeResult out;
  out.poses = graph.nodes;

  std::unordered_map<int, int> slot;
  std::vector<int> free_ids;
  for (const auto& [id, p] : graph.nodes)
    if (id != graph.anchor) {
      slot[id] = static_cast<int>(free_ids.size());
      free_ids.push_back(id);
    }
  const int dim = 6 * static_cast<int>(free_ids.size());

  double chi2 = graph_chi2(graph, out.poses);
  out.initial_chi2 = chi2;
  out.chi2_history.push_back(chi2);
  if (dim == 0 || graph.edges.empty()) {
    out.chi2 = chi2;
    return out;
  }

  const bool dense = free_ids.size() < kDenseLimit;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd h_dense;
    std::vector<Eigen::Triplet<double>> triplets;
    if (dense) h_dense = Eigen::MatrixXd::Zero(dim, dim);

    auto add_block = [&](int r, int c, const Mat6& m) {
      if (dense) {
        h_dense.block<6, 6>(r, c) += m;
      } else {
        for (int u = 0; u < 6; ++u)
          for (int v = 0; v < 6; ++v)
            if (m(u, v) != 0) triplets.emplace_back(r + u, c + v, m(u, v));
      }
    };

    for (const auto& e : graph.edges) {
      const Pose& xi = out.poses.at(e.from);
      const Pose& xj = out.poses.at(e.to);
      const Vec6 r = edge_residual(xi, xj, e.measurement);
      Mat6 ji, jj;
      edge_jacobians(xi, xj, e.measurement, ji, jj);
      const int si = e.from == graph.anchor ? -1 : 6 * slot[e.from];
      const int sj = e.to == graph.anchor ? -1 : 6 * slot[e.to];
      if (si >= 0) {
        add_block(si, si, ji.transpose() * e.information * ji);
        b.segment<6>(si) += ji.transpose() * e.information * r;
      }
      if (sj >= 0) {
        add_block(sj, sj, jj.transpose() * e.information * jj);
        b.segment<6>(sj) += jj.transpose() * e.information * r;
      }
      if (si >= 0 && sj >= 0) {
        const Mat6 off = ji.transpose() * e.information * jj;
        add_block(si, sj, off);
        add_block(sj, si, off.transpose());
      }
    }

    Eigen::VectorXd dx;
    if (dense) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(h_dense);
      const Eigen::VectorXd diag = ldlt.vectorD().cwiseAbs();
      if (ldlt.info() != Eigen::Success || diag.minCoeff() <= 1e-12 * std::max(diag.maxCoeff(), 1e-300))
        throw Error(ErrorCode::SingularSystem, "normal equations are rank deficient");
      dx = -ldlt.solve(b);
    } else {
      Eigen::SparseMatrix<double> h(dim, dim);
      h.setFromTriplets(triplets.begin(), triplets.end());
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(h);
      if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "sparse factorization failed");
      const Eigen::VectorXd diag = ldlt.vectorD().cwiseAbs();
      if (diag.minCoeff() <= 1e-12 * std::max(diag.maxCoeff(), 1e-300))
        throw Error(ErrorCode::SingularSystem, "normal equations are rank deficient");
      dx = -ldlt.solve(b);
    }

    double step = 1.0;
    bool accepted = false;
    std::map<int, Pose> trial;
    double trial_chi2 = chi2;
    for (int halving = 0; halving < 12; ++halving) {
      trial = out.poses;
      for (int id : free_ids) trial[id] = retract(out.poses.at(id), step * dx.segment<6>(6 * slot[id]));
      trial_chi2 = graph_chi2(graph, trial);
      if (trial_chi2 <= chi2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const double decrease = chi2 - trial_chi2;
    out.poses = std::move(trial);
    chi2 = trial_chi2;
    out.chi2_history.push_back(chi2);
    out.iterations = it + 1;
    if (chi2 < 1e-24 || decrease <= tol * std::max(out.chi2_history[out.chi2_history.size() - 2], 1e-300)) break;
  }
  out.chi2 = chi2;
  return out;
}

std::vector<PoseEdge> constraints_from_localization(const std::vector<LocalizationLink>& links,
                                                    const VerifyConfig& cfg, const Mat6& base_information) {
  std::vector<PoseEdge> edges;
  for (const auto& link : links) {
    if (!(link.result.overlap > cfg.overlap_accept)) continue;
    PoseEdge e;
    e.from = link.cand_node;
    e.to = link.query_node;
    e.measurement = link.result.transform_6dof;
    e.information = base_information * link.result.overlap;
    edges.push_back(e);
  }
  return edges;
}

namespace {

void write_pose(std::ostream& os, const Pose& p) {
  const auto q = p.quaternion();
  os << p.translation.x() << ' ' << p.translation.y() << ' ' << p.translation.z() << ' ' << q.x() << ' ' << q.y()
     << ' ' << q.z() << ' ' << q.w();
}

bool read_pose(std::istream& is, Pose& p) {
  double x, y, z, qx, qy, qz, qw;
  if (!(is >> x >> y >> z >> qx >> qy >> qz >> qw)) return false;
  const Eigen::Quaterniond q(qw, qx, qy, qz);
  if (!(q.norm() > 0)) return false;
  p = Pose::from_quaternion(q, Vec3(x, y, z));
  return true;
}

}  // namespace

std::string write_g2o(const PoseGraph& g) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& [id, p] : g.nodes) {
    os << "VERTEX_SE3:QUAT " << id << ' ';
    write_pose(os, p);
    os << '\n';
  }
  os << "FIX " << g.anchor << '\n';
  for (const auto& e : g.edges) {
    os << "EDGE_SE3:QUAT " << e.from << ' ' << e.to << ' ';
    write_pose(os, e.measurement);
    for (int r = 0; r < 6; ++r)
      for (int c = r; c < 6; ++c) os << ' ' << e.information(r, c);
    os << '\n';
  }
  return os.str();
}

PoseGraph read_g2o(const std::string& text) {
  PoseGraph g;
  bool have_fix = false;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    const auto bad = [&] { return Error(ErrorCode::FormatError, "malformed g2o line " + std::to_string(lineno)); };
    if (tag == "VERTEX_SE3:QUAT") {
      int id;
      Pose p;
      if (!(ls >> id) || !read_pose(ls, p)) throw bad();
      g.nodes[id] = p;
      if (!have_fix && g.nodes.size() == 1) g.anchor = id;
    } else if (tag == "EDGE_SE3:QUAT") {
      PoseEdge e;
      if (!(ls >> e.from >> e.to) || !read_pose(ls, e.measurement)) throw bad();
      for (int r = 0; r < 6; ++r)
        for (int c = r; c < 6; ++c) {
          if (!(ls >> e.information(r, c))) throw bad();
          e.information(c, r) = e.information(r, c);
        }
      g.edges.push_back(e);
    } else if (tag == "FIX") {
      if (!(ls >> g.anchor)) throw bad();
      have_fix = true;
    } else {
      throw Error(ErrorCode::FormatError, "unknown g2o record '" + tag + "'");
    }
  }
  return g;
}

}  // namespace treeloc
