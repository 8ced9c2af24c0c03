#include "treeloc/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace treeloc {

Pose Pose::from_quaternion(const Eigen::Quaterniond& q, const Vec3& t) {
  return {q.normalized().toRotationMatrix(), t};
}

Vec3 Pose::apply_axis(const Vec3& axis) const { return canonicalize_axis(rotation * axis); }

Vec3 canonicalize_axis(const Vec3& axis) {
  // Leaving already-unit input untouched keeps the map exactly idempotent.
  const double n2 = axis.squaredNorm();
  Vec3 a = std::abs(n2 - 1.0) <= 4 * std::numeric_limits<double>::epsilon() ? axis : Vec3(axis / std::sqrt(n2));
  bool flip = false;
  if (a.z() != 0.0) {
    flip = a.z() < 0.0;
  } else if (a.y() != 0.0) {
    flip = a.y() < 0.0;
  } else {
    flip = a.x() < 0.0;
  }
  return flip ? Vec3(-a) : a;
}

Mat3 rot_x(double rad) { return Eigen::AngleAxisd(rad, Vec3::UnitX()).toRotationMatrix(); }
Mat3 rot_y(double rad) { return Eigen::AngleAxisd(rad, Vec3::UnitY()).toRotationMatrix(); }
Mat3 rot_z(double rad) { return Eigen::AngleAxisd(rad, Vec3::UnitZ()).toRotationMatrix(); }

Mat2 rot2(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

Mat3 tilt_to_vertical(const Vec3& v) {
  const Vec3 a = v.normalized();
  const Vec3 ez = Vec3::UnitZ();
  const Vec3 cross = a.cross(ez);  // horizontal
  const double s = cross.norm();
  const double c = a.dot(ez);
  if (s < 1e-15) {
    if (c > 0) return Mat3::Identity();
    // antiparallel: half turn about x
    return rot_x(M_PI);
  }
  return Eigen::AngleAxisd(std::atan2(s, c), cross / s).toRotationMatrix();
}

Mat3 tilt_part(const Mat3& r) { return tilt_to_vertical(r.transpose() * Vec3::UnitZ()); }

double yaw_of(const Mat3& r) {
  const Mat3 z = r * tilt_part(r).transpose();
  return std::atan2(z(1, 0), z(0, 0));
}

double rotation_angle(const Mat3& r) {
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  // acos loses precision near 0; use the skew part there
  const Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(0.5 * w.norm(), c);
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

Mat3 so3_exp(const Vec3& w) {
  const double theta = w.norm();
  if (theta < 1e-12) return Mat3::Identity() + skew(w);
  return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

Vec3 so3_log(const Mat3& r) {
  const double theta = rotation_angle(r);
  const Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  if (theta < 1e-8) return 0.5 * w;
  if (M_PI - theta < 1e-6) {
    Eigen::AngleAxisd aa(r);
    return aa.angle() * aa.axis();
  }
  return theta / (2.0 * std::sin(theta)) * w;
}

TreeObservation transform_tree(const Pose& p, const TreeObservation& tree) {
  TreeObservation out = tree;
  out.position = p.apply(tree.position);
  out.axis = p.apply_axis(tree.axis);
  return out;
}

}  // namespace treeloc
