#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "treeloc/alignment.hpp"

namespace treeloc {

using TriKey = std::uint64_t;

struct TriConfig {
  int knn = 6;
  double min_side = 1.0;          // m
  double max_side = 40.0;         // m
  double len_quant = 0.2;         // m
  int top_m = 10;
  double min_altitude = 0.05;     // m; thinner triangles are treated as collinear
  bool count_multiplicity = false;

  void validate() const;
};

/// Triangle over three stem centers. Vertex u sits opposite sides[u], so the
/// vertex order is fixed by the ascending side order.
struct TriangleDescriptor {
  std::array<TreeId, 3> vertex_ids{};
  std::array<Vec2, 3> vertices{};
  std::array<double, 3> sides{};
  Vec2 centroid = Vec2::Zero();
  int scene_index = 0;
  TriKey key = 0;
};

/// Packs floor(side / len_quant) of the three ascending sides into 20-bit fields,
/// shortest in the high bits. Throws Error(QuantizationOverflow).
TriKey make_key(const std::array<double, 3>& sides_ascending, const TriConfig& cfg);

/// Descriptor for one triple, or nothing if it fails the side/degeneracy filters.
std::optional<TriangleDescriptor> make_triangle(const ProjectedTree& a, const ProjectedTree& b,
                                                const ProjectedTree& c, int scene_index, const TriConfig& cfg);

/// Triangles from every tree and each pair among its knn nearest neighbors,
/// deduplicated and sorted by (key, vertex ids).
std::vector<TriangleDescriptor> build_triangles(const ProjectedScene& scene, const TriConfig& cfg);

/// Per-scene hash table: descriptors sorted by key plus the deduplicated key list.
struct TriangleEntry {
  std::vector<TriangleDescriptor> descriptors;
  std::vector<TriKey> keys;     // sorted, unique
  std::vector<TriKey> all_keys; // sorted, with multiplicity

  static TriangleEntry from(std::vector<TriangleDescriptor> descriptors);
  std::span<const TriangleDescriptor> lookup(TriKey key) const;
};

/// scene index -> triangle table. Entries are shared so a scene database can hold
/// the same table without copying it.
class TriangleIndex {
 public:
  void insert(int scene_index, TriangleEntry entry) {
    entries_[scene_index] = std::make_shared<const TriangleEntry>(std::move(entry));
  }
  void insert(int scene_index, std::shared_ptr<const TriangleEntry> entry) { entries_[scene_index] = std::move(entry); }
  const TriangleEntry* find(int scene_index) const {
    auto it = entries_.find(scene_index);
    return it == entries_.end() ? nullptr : it->second.get();
  }
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<int, std::shared_ptr<const TriangleEntry>> entries_;
};

/// |K_Q ∩ K_C| over sorted key lists.
std::size_t similarity(std::span<const TriKey> query_keys, std::span<const TriKey> cand_keys);
/// Dispatches on cfg.count_multiplicity.
std::size_t similarity(const TriangleEntry& query, const TriangleEntry& cand, const TriConfig& cfg);

/// Up to top_m candidates by descending similarity (ties by ascending index);
/// zero-similarity and unindexed candidates are dropped.
std::vector<int> fine_retrieve(const TriangleEntry& query, const std::vector<int>& candidates,
                               const TriangleIndex& index, const TriConfig& cfg);

}  // namespace treeloc
