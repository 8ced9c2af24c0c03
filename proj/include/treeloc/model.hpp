#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace treeloc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

using TreeId = std::int64_t;

/// Rigid transform in 3D. Applying `a.compose(b)` equals applying b first, then a.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static Pose from_rotation(const Mat3& r) { return {r, Vec3::Zero()}; }
  /// Builds from a (possibly unnormalized) quaternion; used by the text interchange formats.
  static Pose from_quaternion(const Eigen::Quaterniond& q, const Vec3& t);

  Pose compose(const Pose& b) const { return {rotation * b.rotation, rotation * b.translation + translation}; }
  Pose inverse() const {
    Mat3 rt = rotation.transpose();
    return {rt, -rt * translation};
  }
  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
  /// Rotates an undirected stem axis and canonicalizes its sign.
  Vec3 apply_axis(const Vec3& axis) const;

  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(rotation).normalized(); }
};

inline Pose compose(const Pose& a, const Pose& b) { return a.compose(b); }
inline Pose inverse(const Pose& p) { return p.inverse(); }
inline Vec3 apply(const Pose& p, const Vec3& x) { return p.apply(x); }

/// Normalizes and flips the axis so that z >= 0. Exactly horizontal axes fall back
/// to y >= 0, then x >= 0, so the map is idempotent and sign-blind.
Vec3 canonicalize_axis(const Vec3& axis);

Mat3 rot_x(double rad);
Mat3 rot_y(double rad);
Mat3 rot_z(double rad);
Mat2 rot2(double rad);

/// Minimal rotation (about a horizontal axis) taking `v` onto e_z.
Mat3 tilt_to_vertical(const Vec3& v);
/// Splits R = Rz(yaw) * tilt where tilt is the minimal rotation taking R^T e_z onto e_z; returns yaw.
double yaw_of(const Mat3& r);
/// The tilt factor of the decomposition above.
Mat3 tilt_part(const Mat3& r);

/// Rotation angle of R in radians, in [0, pi].
double rotation_angle(const Mat3& r);

Mat3 so3_exp(const Vec3& w);
Vec3 so3_log(const Mat3& r);
Mat3 skew(const Vec3& v);

/// One reconstructed stem.
struct TreeObservation {
  TreeId id = 0;
  Vec3 axis = Vec3::UnitZ();       // unit, z >= 0
  Vec3 position = Vec3::Zero();    // (center x, center y, base height)
  double dbh = 0.3;                // meters
  std::uint32_t obs_count = 1;
  bool is_candidate = false;

  Vec2 center() const { return position.head<2>(); }
};

/// Transforms position and axis of a tree into another frame.
TreeObservation transform_tree(const Pose& p, const TreeObservation& tree);

struct Payload {
  int index = 0;
  Pose pose;
  std::vector<TreeObservation> trees;
};

struct SceneInventory {
  int index = 0;
  Pose pose;
  std::vector<TreeObservation> trees;
};

/// SplitMix64 finalizer; used to derive independent per-item seeds from a base seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace treeloc
