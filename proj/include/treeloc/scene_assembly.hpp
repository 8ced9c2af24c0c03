#pragma once

#include <vector>

#include "treeloc/model.hpp"

namespace treeloc {

/// DBH difference below which two nearby observations are considered the same stem.
inline constexpr double kDbhMergeGate = 0.2;

struct AssemblyConfig {
  int window_size = 5;            // odd
  double merge_radius = 0.5;      // m
  int min_trees = 8;
  int candidate_min_obs = 2;

  void validate() const;
};

/// Greedy single-linkage merge in input order followed by a fixpoint pass that
/// folds any clusters whose merged centers ended up closer than `radius`.
/// Merged attributes are obs_count-weighted means (a zero count weighs as 1);
/// obs_counts are summed and the first member's id is kept.
std::vector<TreeObservation> merge_trees(const std::vector<TreeObservation>& trees, double radius,
                                         double dbh_gate = kDbhMergeGate);

/// Builds the scene centered on payload `center_index` from the reconstructed
/// (non-candidate) trees of every payload in the window, expressed in the center frame.
/// Throws Error(WindowOutOfRange) if a window index is missing.
SceneInventory assemble(const std::vector<Payload>& payloads, int center_index, const AssemblyConfig& cfg);

/// Candidate stems of the same window, merged across payloads so that obs_count
/// reflects how many payloads saw them.
std::vector<TreeObservation> assemble_candidates(const std::vector<Payload>& payloads, int center_index,
                                                 const AssemblyConfig& cfg);

/// Tops up sparse scenes with the most frequently observed candidate stems.
SceneInventory supplement_candidates(const SceneInventory& scene, const std::vector<TreeObservation>& candidates,
                                     const AssemblyConfig& cfg);

}  // namespace treeloc
