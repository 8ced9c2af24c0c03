#include "treeloc/tri_desc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "treeloc/errors.hpp"

namespace treeloc {

void TriConfig::validate() const {
  if (knn < 2) throw Error(ErrorCode::ConfigError, "tri knn must be >= 2");
  if (!(min_side < max_side)) throw Error(ErrorCode::ConfigError, "tri requires min_side < max_side");
  if (!(len_quant > 0)) throw Error(ErrorCode::ConfigError, "tri len_quant must be positive");
  if (top_m < 1) throw Error(ErrorCode::ConfigError, "tri top_m must be positive");
}

TriKey make_key(const std::array<double, 3>& sides, const TriConfig& cfg) {
  constexpr std::uint64_t kFieldLimit = 1ULL << 20;
  TriKey key = 0;
  for (double s : sides) {
    const double q = std::floor(s / cfg.len_quant);
    if (!(q >= 0) || q >= static_cast<double>(kFieldLimit))
      throw Error(ErrorCode::QuantizationOverflow, "side length does not fit a 20-bit field");
    key = (key << 20) | static_cast<std::uint64_t>(q);
  }
  return key;
}

std::optional<TriangleDescriptor> make_triangle(const ProjectedTree& a, const ProjectedTree& b,
                                                const ProjectedTree& c, int scene_index, const TriConfig& cfg) {
  const std::array<const ProjectedTree*, 3> pts{&a, &b, &c};
  // side opposite each vertex
  const std::array<double, 3> opposite{(b.center - c.center).norm(), (c.center - a.center).norm(),
                                       (a.center - b.center).norm()};
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int u, int v) {
    if (opposite[u] != opposite[v]) return opposite[u] < opposite[v];
    return pts[u]->id < pts[v]->id;
  });

  TriangleDescriptor d;
  d.scene_index = scene_index;
  for (int u = 0; u < 3; ++u) {
    d.vertex_ids[u] = pts[order[u]]->id;
    d.vertices[u] = pts[order[u]]->center;
    d.sides[u] = opposite[order[u]];
  }
  if (d.sides[0] < cfg.min_side || d.sides[2] > cfg.max_side) return std::nullopt;

  const Vec2 e1 = d.vertices[1] - d.vertices[0];
  const Vec2 e2 = d.vertices[2] - d.vertices[0];
  const double twice_area = std::abs(e1.x() * e2.y() - e1.y() * e2.x());
  if (twice_area / d.sides[2] < cfg.min_altitude) return std::nullopt;

  d.centroid = (d.vertices[0] + d.vertices[1] + d.vertices[2]) / 3.0;
  d.key = make_key(d.sides, cfg);
  return d;
}

std::vector<TriangleDescriptor> build_triangles(const ProjectedScene& scene, const TriConfig& cfg) {
  cfg.validate();
  const auto& trees = scene.trees;
  const int n = static_cast<int>(trees.size());
  std::vector<TriangleDescriptor> out;
  if (n < 3) return out;

  std::unordered_set<std::uint64_t> seen;
  std::vector<std::pair<double, int>> dist;
  std::vector<int> neigh;
  for (int i = 0; i < n; ++i) {
    dist.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) dist.emplace_back((trees[j].center - trees[i].center).squaredNorm(), j);
    const auto k = std::min<std::size_t>(dist.size(), static_cast<std::size_t>(cfg.knn));
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    neigh.clear();
    for (std::size_t u = 0; u < k; ++u) neigh.push_back(dist[u].second);

    for (std::size_t u = 0; u < neigh.size(); ++u)
      for (std::size_t v = u + 1; v < neigh.size(); ++v) {
        std::array<int, 3> tri{i, neigh[u], neigh[v]};
        std::sort(tri.begin(), tri.end());
        const std::uint64_t packed = (static_cast<std::uint64_t>(tri[0]) << 42) |
                                     (static_cast<std::uint64_t>(tri[1]) << 21) | static_cast<std::uint64_t>(tri[2]);
        if (!seen.insert(packed).second) continue;
        if (auto d = make_triangle(trees[tri[0]], trees[tri[1]], trees[tri[2]], scene.scene_index, cfg))
          out.push_back(*d);
      }
  }
  std::sort(out.begin(), out.end(), [](const TriangleDescriptor& x, const TriangleDescriptor& y) {
    if (x.key != y.key) return x.key < y.key;
    return x.vertex_ids < y.vertex_ids;
  });
  return out;
}

TriangleEntry TriangleEntry::from(std::vector<TriangleDescriptor> descriptors) {
  TriangleEntry e;
  std::stable_sort(descriptors.begin(), descriptors.end(),
                   [](const TriangleDescriptor& x, const TriangleDescriptor& y) { return x.key < y.key; });
  e.descriptors = std::move(descriptors);
  e.all_keys.reserve(e.descriptors.size());
  for (const auto& d : e.descriptors) e.all_keys.push_back(d.key);
  e.keys = e.all_keys;
  e.keys.erase(std::unique(e.keys.begin(), e.keys.end()), e.keys.end());
  return e;
}

std::span<const TriangleDescriptor> TriangleEntry::lookup(TriKey key) const {
  auto lo = std::lower_bound(descriptors.begin(), descriptors.end(), key,
                             [](const TriangleDescriptor& d, TriKey k) { return d.key < k; });
  auto hi = std::upper_bound(lo, descriptors.end(), key,
                             [](TriKey k, const TriangleDescriptor& d) { return k < d.key; });
  return {lo, hi};
}

std::size_t similarity(std::span<const TriKey> a, std::span<const TriKey> b) {
  // sorted-merge intersection count
  std::size_t i = 0, j = 0, count = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

std::size_t similarity(const TriangleEntry& query, const TriangleEntry& cand, const TriConfig& cfg) {
  return cfg.count_multiplicity ? similarity(query.all_keys, cand.all_keys) : similarity(query.keys, cand.keys);
}

std::vector<int> fine_retrieve(const TriangleEntry& query, const std::vector<int>& candidates,
                               const TriangleIndex& index, const TriConfig& cfg) {
  std::vector<std::pair<std::size_t, int>> scored;
  for (int c : candidates) {
    const auto* entry = index.find(c);
    if (!entry) continue;
    const auto s = similarity(query, *entry, cfg);
    if (s > 0) scored.emplace_back(s, c);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;
  });
  std::vector<int> out;
  for (std::size_t i = 0; i < scored.size() && i < static_cast<std::size_t>(cfg.top_m); ++i)
    out.push_back(scored[i].second);
  return out;
}

}  // namespace treeloc
