#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "treeloc/model.hpp"

namespace treeloc {

/// Uniform hash grid over 2D points. Exact radius and box queries; results are
/// point indices in ascending order.
class SpatialGrid2D {
 public:
  explicit SpatialGrid2D(double cell_size = 1.0) : cell_(cell_size) {}

  void clear() {
    cells_.clear();
    points_.clear();
  }

  /// Inserts a point and returns its index.
  int insert(const Vec2& p) {
    const int idx = static_cast<int>(points_.size());
    points_.push_back(p);
    cells_[key(cell_of(p.x()), cell_of(p.y()))].push_back(idx);
    return idx;
  }

  /// Moves an existing point to a new location.
  void update(int idx, const Vec2& p) {
    auto& old_cell = cells_[key(cell_of(points_[idx].x()), cell_of(points_[idx].y()))];
    std::erase(old_cell, idx);
    points_[idx] = p;
    cells_[key(cell_of(p.x()), cell_of(p.y()))].push_back(idx);
  }

  void remove(int idx) {
    auto it = cells_.find(key(cell_of(points_[idx].x()), cell_of(points_[idx].y())));
    if (it != cells_.end()) std::erase(it->second, idx);
  }

  const Vec2& point(int idx) const { return points_[idx]; }
  std::size_t size() const { return points_.size(); }

  /// Indices with ||p - c|| < radius.
  std::vector<int> radius(const Vec2& c, double radius) const {
    std::vector<int> out;
    const double r2 = radius * radius;
    visit_box(c.array() - radius, c.array() + radius, [&](int idx) {
      if ((points_[idx] - c).squaredNorm() < r2) out.push_back(idx);
    });
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Indices with lo <= p <= hi componentwise.
  std::vector<int> box(const Vec2& lo, const Vec2& hi) const {
    std::vector<int> out;
    visit_box(lo, hi, [&](int idx) {
      const Vec2& p = points_[idx];
      if (p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y()) out.push_back(idx);
    });
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::int64_t cell_of(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
  static std::int64_t key(std::int64_t cx, std::int64_t cy) { return (cx << 32) ^ (cy & 0xffffffffLL); }

  template <typename F>
  void visit_box(const Vec2& lo, const Vec2& hi, F&& f) const {
    const auto x0 = cell_of(lo.x()), x1 = cell_of(hi.x());
    const auto y0 = cell_of(lo.y()), y1 = cell_of(hi.y());
    if ((x1 - x0 + 1) * (y1 - y0 + 1) > static_cast<std::int64_t>(cells_.size())) {
      for (const auto& [k, idxs] : cells_)
        for (int idx : idxs) f(idx);
      return;
    }
    for (auto cx = x0; cx <= x1; ++cx)
      for (auto cy = y0; cy <= y1; ++cy) {
        auto it = cells_.find(key(cx, cy));
        if (it == cells_.end()) continue;
        for (int idx : it->second) f(idx);
      }
  }

  double cell_;
  std::unordered_map<std::int64_t, std::vector<int>> cells_;
  std::vector<Vec2> points_;
};

}  // namespace treeloc
