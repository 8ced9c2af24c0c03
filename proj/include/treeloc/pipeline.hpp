#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include "treeloc/alignment.hpp"
#include "treeloc/scene_assembly.hpp"
#include "treeloc/tdh.hpp"
#include "treeloc/tri_desc.hpp"
#include "treeloc/verification.hpp"

namespace treeloc {

struct PipelineConfig {
  AssemblyConfig assembly;
  AlignConfig align;
  TdhConfig tdh;
  TriConfig tri;
  VerifyConfig verify;

  void validate() const;
};

/// A scene with everything retrieval needs precomputed.
struct DescribedScene {
  SceneInventory scene;
  ProjectedScene projected;
  TdhDescriptor tdh;
  std::shared_ptr<const TriangleEntry> triangles;
};

struct StageTimings {
  double align_ms = 0;
  double tdh_ms = 0;
  double fine_ms = 0;      // triangle build + fine retrieval
  double verify_ms = 0;
  double total_ms = 0;     // wall clock around the whole query

  double stage_sum() const { return align_ms + tdh_ms + fine_ms + verify_ms; }
};

/// Alignment, projection, TDH and triangle table for one scene.
DescribedScene describe(const SceneInventory& scene, const PipelineConfig& cfg, StageTimings* timings = nullptr);

struct QueryOutcome {
  std::vector<int> coarse;                  // TDH ranking
  std::vector<int> fine;                    // triangle ranking
  std::vector<LocalizationResult> results;  // verified, best first
  double best_distance = 0;                 // chi-square of the best result's candidate
  StageTimings timings;

  const LocalizationResult* best() const { return results.empty() ? nullptr : &results.front(); }
};

/// In-memory scene database. Queries are read-only and may run concurrently;
/// add() needs exclusive access.
class SceneDatabase {
 public:
  explicit SceneDatabase(PipelineConfig cfg) : cfg_(std::move(cfg)) {}

  void add(DescribedScene scene);
  const DescribedScene* find(int scene_index) const;
  std::size_t size() const { return scenes_.size(); }
  const std::deque<DescribedScene>& scenes() const { return scenes_; }
  const PipelineConfig& config() const { return cfg_; }

  /// Runs coarse -> fine -> verification for an already-described query.
  QueryOutcome query(const DescribedScene& q, std::uint64_t seed,
                     const std::function<bool(int)>& excluded = {}) const;

  /// Describes the raw scene first; the description time is charged to the stages.
  QueryOutcome query(const SceneInventory& q, std::uint64_t seed,
                     const std::function<bool(int)>& excluded = {}) const;

 private:
  PipelineConfig cfg_;
  std::deque<DescribedScene> scenes_;
  std::unordered_map<int, std::size_t> by_index_;
  std::vector<std::pair<int, const TdhDescriptor*>> tdh_view_;
  TriangleIndex tri_index_;
};

}  // namespace treeloc
