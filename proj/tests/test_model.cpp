#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "treeloc/model.hpp"

using namespace treeloc;

namespace {

void expect_pose_near(const Pose& a, const Pose& b, double tol) {
  EXPECT_LE((a.rotation - b.rotation).cwiseAbs().maxCoeff(), tol);
  EXPECT_LE((a.translation - b.translation).cwiseAbs().maxCoeff(), tol);
}

}  // namespace

TEST(Pose, IdentityComposition) { expect_pose_near(compose(Pose{}, Pose{}), Pose{}, 0.0); }

TEST(Pose, ComposeWithInverseIsIdentity) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const Pose p = oracle::random_pose(rng, 100.0);
    expect_pose_near(compose(p, inverse(p)), Pose{}, 1e-12);
  }
}

TEST(Pose, YawAddsUp) {
  const Pose a = Pose::from_rotation(rot_z(oracle::rad(30)));
  const Pose b = Pose::from_rotation(rot_z(oracle::rad(60)));
  expect_pose_near(compose(a, b), Pose::from_rotation(rot_z(oracle::rad(90))), 1e-12);
}

TEST(Pose, ComposeAppliesRightOperandFirst) {
  const Pose t = Pose::from_translation(Vec3(1, 0, 0));
  const Pose r = Pose::from_rotation(rot_z(M_PI / 2));
  EXPECT_LT((apply(compose(t, r), Vec3(1, 0, 0)) - Vec3(1, 1, 0)).norm(), 1e-12);
  EXPECT_LT((apply(compose(r, t), Vec3(1, 0, 0)) - Vec3(0, 2, 0)).norm(), 1e-12);
}

TEST(Pose, Apply) {
  EXPECT_EQ(apply(Pose{}, Vec3(1, 2, 3)), Vec3(1, 2, 3));
  EXPECT_EQ(apply(Pose::from_translation(Vec3(0, 0, 5)), Vec3::Zero()), Vec3(0, 0, 5));
  EXPECT_LT((apply(Pose::from_rotation(rot_z(M_PI / 2)), Vec3(1, 0, 0)) - Vec3(0, 1, 0)).norm(), 1e-12);
}

TEST(Pose, PreservesDistances) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 1000; ++i) {
    const Pose p = oracle::random_pose(rng, 100.0);
    const Vec3 x(u(rng), u(rng), u(rng)), y(u(rng), u(rng), u(rng));
    EXPECT_NEAR((p.apply(x) - p.apply(y)).norm(), (x - y).norm(), 1e-9);
  }
}

TEST(Pose, QuaternionRoundTrip) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Pose p = oracle::random_pose(rng);
    expect_pose_near(Pose::from_quaternion(p.quaternion(), p.translation), p, 1e-12);
  }
}

TEST(Axis, CanonicalizationIsIdempotentAndSignBlind) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 v(n(rng), n(rng), n(rng));
    const Vec3 c = canonicalize_axis(v);
    EXPECT_NEAR(c.norm(), 1.0, 1e-12);
    EXPECT_GE(c.z(), 0.0);
    EXPECT_EQ(canonicalize_axis(c), c);
    EXPECT_EQ(canonicalize_axis(-v), c);
  }
  EXPECT_EQ(canonicalize_axis(Vec3(0, -1, 0)), Vec3(0, 1, 0));
  EXPECT_EQ(canonicalize_axis(Vec3(-2, 0, 0)), Vec3(1, 0, 0));
}

TEST(Rotation, YawTiltDecomposition) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Mat3 r = oracle::random_pose(rng).rotation;
    const Mat3 tilt = tilt_part(r);
    const Mat3 back = rot_z(yaw_of(r)) * tilt;
    EXPECT_LT((back - r).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((tilt * r.transpose() * Vec3::UnitZ() - Vec3::UnitZ()).norm(), 1e-12);
    // the tilt factor carries no yaw
    EXPECT_NEAR(yaw_of(tilt), 0.0, 1e-9);
  }
}

TEST(Rotation, LogExpRoundTrip) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 500; ++i) {
    Vec3 w(u(rng), u(rng), u(rng));
    w = w.normalized() * 3.1 * u(rng);
    EXPECT_LT((so3_log(so3_exp(w)) - w).norm(), 1e-9);
    EXPECT_NEAR(rotation_angle(so3_exp(w)), w.norm(), 1e-12);
  }
  EXPECT_LT(so3_log(Mat3::Identity()).norm(), 1e-15);
}

TEST(Seeds, MixSeedSeparatesStreams) {
  EXPECT_NE(mix_seed(1, 0), mix_seed(1, 1));
  EXPECT_NE(mix_seed(1, 0), mix_seed(2, 0));
  EXPECT_EQ(mix_seed(7, 3), mix_seed(7, 3));
}
