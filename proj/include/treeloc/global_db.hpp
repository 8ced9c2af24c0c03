#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

#include "treeloc/model.hpp"
#include "treeloc/spatial_grid.hpp"

namespace treeloc {

struct MergeReport {
  std::size_t inserted = 0;
  std::size_t merged = 0;
};

/// World-frame tree map shared by all sessions.
///
/// Axes and DBH are held at single precision (rounded on every write) so the
/// binary format round-trips exactly. Any number of readers (local_scene, save,
/// trees) may run concurrently; insert_session takes the lock exclusively.
class GlobalTreeDb {
 public:
  static constexpr std::uint16_t kFormatVersion = 1;
  static constexpr std::size_t kHeaderBytes = 30;
  static constexpr std::size_t kRecordBytes = 64;

  explicit GlobalTreeDb(double merge_radius = 0.5);
  GlobalTreeDb(const GlobalTreeDb& other);
  GlobalTreeDb& operator=(const GlobalTreeDb& other);
  GlobalTreeDb(GlobalTreeDb&&) noexcept;
  GlobalTreeDb& operator=(GlobalTreeDb&&) noexcept;
  ~GlobalTreeDb();

  /// Maps every scene into the world with session_pose * scene.pose and merges
  /// each tree into an existing one (2D distance < merge_radius, DBH within
  /// 0.2 m) or inserts it under a fresh id.
  MergeReport insert_session(const std::vector<SceneInventory>& scenes, const Pose& session_pose);

  /// Trees whose world center lies in the square of half-width half_extent around
  /// `center`, shifted so the center is the local xy origin (z unchanged).
  SceneInventory local_scene(const Vec2& center, double half_extent = 30.0, int scene_index = 0) const;

  std::vector<TreeObservation> trees() const;  // ascending id
  std::size_t size() const;
  double merge_radius() const { return merge_radius_; }
  TreeId next_id() const;

  /// Little-endian "TLDB" container, fixed 64-byte records.
  std::string save() const;
  void save(std::ostream& os) const;
  /// Throws Error(FormatError) on bad magic/version, truncation or inconsistent records.
  static GlobalTreeDb load(const std::string& bytes);
  static GlobalTreeDb load(std::istream& is);

  /// One tree per line: id x y z axis_x axis_y axis_z dbh obs_count
  std::string export_text() const;
  static GlobalTreeDb import_text(const std::string& text, double merge_radius = 0.5);

  bool operator==(const GlobalTreeDb& other) const;

 private:
  void merge_or_insert(const TreeObservation& tree, MergeReport& report);
  void rebuild_index();

  double merge_radius_;
  TreeId next_id_ = 0;
  std::vector<TreeObservation> trees_;  // slot-indexed; slot order == grid index order
  std::vector<char> alive_;
  SpatialGrid2D grid_;
  std::unique_ptr<std::shared_mutex> mutex_;
};

/// Rounds axis components and DBH to single precision, as stored in the database.
TreeObservation quantize_for_storage(TreeObservation t);

}  // namespace treeloc
