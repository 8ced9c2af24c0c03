#include "treeloc/scene_assembly.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "treeloc/errors.hpp"
#include "treeloc/spatial_grid.hpp"

namespace treeloc {

void AssemblyConfig::validate() const {
  if (window_size < 1 || window_size % 2 == 0)
    throw Error(ErrorCode::ConfigError, "window_size must be odd and >= 1");
  if (!(merge_radius > 0)) throw Error(ErrorCode::ConfigError, "merge_radius must be positive");
  if (min_trees < 1 || candidate_min_obs < 1)
    throw Error(ErrorCode::ConfigError, "min_trees and candidate_min_obs must be positive");
}

namespace {

struct Cluster {
  TreeId id = 0;
  double weight = 0;
  Vec3 position_sum = Vec3::Zero();
  Vec3 axis_sum = Vec3::Zero();
  double dbh_sum = 0;
  std::uint64_t obs = 0;
  bool candidate = true;
  bool alive = true;

  void add(const TreeObservation& t) {
    const double w = std::max<std::uint32_t>(t.obs_count, 1);
    position_sum += w * t.position;
    axis_sum += w * canonicalize_axis(t.axis);
    dbh_sum += w * t.dbh;
    weight += w;
    obs += t.obs_count;
    candidate = candidate && t.is_candidate;
  }
  void absorb(const Cluster& o) {
    position_sum += o.position_sum;
    axis_sum += o.axis_sum;
    dbh_sum += o.dbh_sum;
    weight += o.weight;
    obs += o.obs;
    candidate = candidate && o.candidate;
  }
  Vec3 position() const { return position_sum / weight; }
  Vec2 center() const { return position().head<2>(); }
  double dbh() const { return dbh_sum / weight; }

  TreeObservation tree() const {
    TreeObservation t;
    t.id = id;
    t.position = position();
    t.axis = axis_sum.norm() > 0 ? canonicalize_axis(axis_sum) : Vec3::UnitZ();
    t.dbh = dbh();
    t.obs_count = static_cast<std::uint32_t>(std::min<std::uint64_t>(obs, UINT32_MAX));
    t.is_candidate = candidate;
    return t;
  }
};

}  // namespace

std::vector<TreeObservation> merge_trees(const std::vector<TreeObservation>& trees, double radius,
                                         double dbh_gate) {
  std::vector<Cluster> clusters;
  clusters.reserve(trees.size());
  SpatialGrid2D grid(radius);

  for (const auto& t : trees) {
    int best = -1;
    double best_d2 = radius * radius;
    for (int idx : grid.radius(t.center(), radius)) {
      const auto& c = clusters[idx];
      if (std::abs(c.dbh() - t.dbh) >= dbh_gate) continue;
      const double d2 = (c.center() - t.center()).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = idx;
      }
    }
    if (best < 0) {
      Cluster c;
      c.id = t.id;
      c.add(t);
      clusters.push_back(c);
      grid.insert(clusters.back().center());
    } else {
      clusters[best].add(t);
      grid.update(best, clusters[best].center());
    }
  }

  // Merged means can drift into each other's gate; fold until stable.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      if (!clusters[i].alive) continue;
      for (int j : grid.radius(clusters[i].center(), radius)) {
        if (j <= static_cast<int>(i) || !clusters[j].alive) continue;
        if (std::abs(clusters[i].dbh() - clusters[j].dbh()) >= dbh_gate) continue;
        clusters[i].absorb(clusters[j]);
        clusters[j].alive = false;
        grid.remove(j);
        grid.update(static_cast<int>(i), clusters[i].center());
        changed = true;
        break;
      }
    }
  }

  std::vector<TreeObservation> out;
  for (const auto& c : clusters)
    if (c.alive) out.push_back(c.tree());
  return out;
}

namespace {

std::vector<TreeObservation> window_trees(const std::vector<Payload>& payloads, int center_index,
                                          const AssemblyConfig& cfg, bool candidates, Pose* center_pose) {
  cfg.validate();
  std::map<int, const Payload*> by_index;
  for (const auto& p : payloads) by_index[p.index] = &p;

  const int half = (cfg.window_size - 1) / 2;
  auto center_it = by_index.find(center_index);
  if (center_it == by_index.end())
    throw Error(ErrorCode::WindowOutOfRange, "missing center payload " + std::to_string(center_index));
  const Pose center_inv = center_it->second->pose.inverse();
  if (center_pose) *center_pose = center_it->second->pose;

  std::vector<TreeObservation> collected;
  for (int u = center_index - half; u <= center_index + half; ++u) {
    auto it = by_index.find(u);
    if (it == by_index.end())
      throw Error(ErrorCode::WindowOutOfRange, "missing payload " + std::to_string(u));
    const Pose to_center = center_inv.compose(it->second->pose);
    for (const auto& t : it->second->trees)
      if (t.is_candidate == candidates) collected.push_back(transform_tree(to_center, t));
  }
  return collected;
}

}  // namespace

SceneInventory assemble(const std::vector<Payload>& payloads, int center_index, const AssemblyConfig& cfg) {
  SceneInventory scene;
  scene.index = center_index;
  scene.trees = merge_trees(window_trees(payloads, center_index, cfg, false, &scene.pose), cfg.merge_radius);
  return scene;
}

std::vector<TreeObservation> assemble_candidates(const std::vector<Payload>& payloads, int center_index,
                                                 const AssemblyConfig& cfg) {
  return merge_trees(window_trees(payloads, center_index, cfg, true, nullptr), cfg.merge_radius);
}

SceneInventory supplement_candidates(const SceneInventory& scene, const std::vector<TreeObservation>& candidates,
                                     const AssemblyConfig& cfg) {
  const auto reconstructed = std::count_if(scene.trees.begin(), scene.trees.end(),
                                           [](const TreeObservation& t) { return !t.is_candidate; });
  if (reconstructed >= cfg.min_trees) return scene;

  std::vector<TreeObservation> eligible;
  for (const auto& c : candidates)
    if (c.obs_count >= static_cast<std::uint32_t>(cfg.candidate_min_obs)) eligible.push_back(c);
  std::stable_sort(eligible.begin(), eligible.end(), [](const TreeObservation& a, const TreeObservation& b) {
    if (a.obs_count != b.obs_count) return a.obs_count > b.obs_count;
    return a.id < b.id;
  });

  SceneInventory out = scene;
  const auto needed = static_cast<std::size_t>(cfg.min_trees - reconstructed);
  for (std::size_t i = 0; i < eligible.size() && i < needed; ++i) {
    auto c = eligible[i];
    c.is_candidate = true;
    out.trees.push_back(c);
  }
  return out;
}

}  // namespace treeloc
