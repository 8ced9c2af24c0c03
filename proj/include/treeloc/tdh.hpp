#pragma once

#include <functional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "treeloc/alignment.hpp"

namespace treeloc {

struct TdhConfig {
  int n_spatial = 5;
  int n_sections = 8;
  double r_res = 6.0;          // m, radial bin width
  double w_range = 0.5;        // m, radial boundary overlap half-width
  double r_min = 0.05;         // m, DBH domain
  double r_max = 0.85;
  double w_dbh = 0.0;          // m; <= 0 means (r_max - r_min) / n_sections
  double w_dbh_overlap = 0.02; // m
  int top_k = 100;

  double dbh_width() const { return w_dbh > 0 ? w_dbh : (r_max - r_min) / n_sections; }
  void validate() const;
};

/// Smoothed radial x DBH histogram, row-major (radial bin major).
struct TdhDescriptor {
  int n_spatial = 0;
  int n_sections = 0;
  std::vector<double> flat;

  double at(int radial, int section) const { return flat[radial * n_sections + section]; }
  std::size_t size() const { return flat.size(); }
  bool operator==(const TdhDescriptor&) const = default;
};

/// Integer bin counts before smoothing; a tree near a boundary lands in both neighbors.
TdhDescriptor raw_histogram(const ProjectedScene& scene, const TdhConfig& cfg);
/// 2x2 mean filter anchored at the top-left, zero padded at the high edges.
TdhDescriptor smooth_2x2(const TdhDescriptor& raw);
TdhDescriptor build_tdh(const ProjectedScene& scene, const TdhConfig& cfg);

/// sum_i (a_i - b_i)^2 / (a_i + b_i + 1e-10). Throws Error(DimensionMismatch).
double chi_square(const TdhDescriptor& a, const TdhDescriptor& b);

/// Up to cfg.top_k scene indices, ascending by chi-square distance then by index.
std::vector<int> coarse_retrieve(const TdhDescriptor& query,
                                 const std::vector<std::pair<int, TdhDescriptor>>& database,
                                 const TdhConfig& cfg, const std::set<int>& exclusions = {});

/// Same ranking over borrowed descriptors with a predicate-based exclusion.
std::vector<int> coarse_retrieve(const TdhDescriptor& query,
                                 std::span<const std::pair<int, const TdhDescriptor*>> database,
                                 const TdhConfig& cfg, const std::function<bool(int)>& excluded);

}  // namespace treeloc
