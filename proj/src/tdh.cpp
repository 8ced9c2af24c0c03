#include "treeloc/tdh.hpp"

#include <algorithm>
#include <cmath>

#include "treeloc/errors.hpp"

namespace treeloc {

void TdhConfig::validate() const {
  if (n_spatial < 1 || n_sections < 1) throw Error(ErrorCode::ConfigError, "tdh bin counts must be positive");
  if (!(r_min < r_max)) throw Error(ErrorCode::ConfigError, "tdh requires r_min < r_max");
  if (!(r_res > 0) || !(w_range >= 0) || !(w_range < r_res / 2))
    throw Error(ErrorCode::ConfigError, "tdh requires 0 <= w_range < r_res/2");
  if (!(w_dbh_overlap >= 0) || !(w_dbh_overlap < dbh_width() / 2))
    throw Error(ErrorCode::ConfigError, "tdh requires 0 <= w_dbh_overlap < w_dbh/2");
  if (top_k < 1) throw Error(ErrorCode::ConfigError, "tdh top_k must be positive");
}

TdhDescriptor raw_histogram(const ProjectedScene& scene, const TdhConfig& cfg) {
  cfg.validate();
  TdhDescriptor h{cfg.n_spatial, cfg.n_sections, std::vector<double>(cfg.n_spatial * cfg.n_sections, 0.0)};
  const double w = cfg.dbh_width();
  const double r_limit = cfg.n_spatial * cfg.r_res;

  std::vector<int> radial, section;
  for (const auto& t : scene.trees) {
    const double r = t.center.norm();
    if (r >= r_limit) continue;

    radial.clear();
    for (int i = 0; i < cfg.n_spatial; ++i)
      if (r >= i * cfg.r_res - cfg.w_range && r < (i + 1) * cfg.r_res + cfg.w_range) radial.push_back(i);

    section.clear();
    if (t.dbh < cfg.r_min) {
      section.push_back(0);
    } else if (t.dbh >= cfg.r_max) {
      section.push_back(cfg.n_sections - 1);
    } else {
      for (int k = 0; k < cfg.n_sections; ++k) {
        const double lo = cfg.r_min + k * w - cfg.w_dbh_overlap;
        const double hi = cfg.r_min + (k + 1) * w + cfg.w_dbh_overlap;
        if (t.dbh >= lo && t.dbh < hi) section.push_back(k);
      }
    }

    for (int i : radial)
      for (int k : section) h.flat[i * cfg.n_sections + k] += 1.0;
  }
  return h;
}

TdhDescriptor smooth_2x2(const TdhDescriptor& raw) {
  TdhDescriptor out{raw.n_spatial, raw.n_sections, std::vector<double>(raw.flat.size(), 0.0)};
  auto get = [&](int i, int k) { return (i < raw.n_spatial && k < raw.n_sections) ? raw.at(i, k) : 0.0; };
  for (int i = 0; i < raw.n_spatial; ++i)
    for (int k = 0; k < raw.n_sections; ++k)
      out.flat[i * raw.n_sections + k] = (get(i, k) + get(i + 1, k) + get(i, k + 1) + get(i + 1, k + 1)) / 4.0;
  return out;
}

TdhDescriptor build_tdh(const ProjectedScene& scene, const TdhConfig& cfg) {
  return smooth_2x2(raw_histogram(scene, cfg));
}

double chi_square(const TdhDescriptor& a, const TdhDescriptor& b) {
  if (a.flat.size() != b.flat.size())
    throw Error(ErrorCode::DimensionMismatch, "tdh descriptors differ in length");
  constexpr double eps = 1e-10;
  double d = 0;
  for (std::size_t i = 0; i < a.flat.size(); ++i) {
    const double diff = a.flat[i] - b.flat[i];
    d += diff * diff / (a.flat[i] + b.flat[i] + eps);
  }
  return d;
}

std::vector<int> coarse_retrieve(const TdhDescriptor& query,
                                 std::span<const std::pair<int, const TdhDescriptor*>> database,
                                 const TdhConfig& cfg, const std::function<bool(int)>& excluded) {
  std::vector<std::pair<double, int>> scored;
  scored.reserve(database.size());
  for (const auto& [idx, desc] : database) {
    if (excluded && excluded(idx)) continue;
    scored.emplace_back(chi_square(query, *desc), idx);
  }
  const auto k = std::min<std::size_t>(scored.size(), static_cast<std::size_t>(cfg.top_k));
  std::partial_sort(scored.begin(), scored.begin() + k, scored.end());
  std::vector<int> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(scored[i].second);
  return out;
}

std::vector<int> coarse_retrieve(const TdhDescriptor& query,
                                 const std::vector<std::pair<int, TdhDescriptor>>& database,
                                 const TdhConfig& cfg, const std::set<int>& exclusions) {
  std::vector<std::pair<int, const TdhDescriptor*>> view;
  view.reserve(database.size());
  for (const auto& [idx, d] : database) view.emplace_back(idx, &d);
  return coarse_retrieve(query, view, cfg, [&](int idx) { return exclusions.count(idx) > 0; });
}

}  // namespace treeloc
