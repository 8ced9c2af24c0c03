#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "treeloc/alignment.hpp"

using namespace treeloc;

namespace {

std::vector<TreeObservation> forest(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-25, 25), z(-1, 1);
  std::vector<TreeObservation> out;
  for (int i = 0; i < n; ++i) {
    TreeObservation t;
    t.id = i;
    t.position = Vec3(u(rng), u(rng), z(rng));
    out.push_back(t);
  }
  return out;
}

std::vector<TreeObservation> rotated(const std::vector<TreeObservation>& trees, const Mat3& r) {
  std::vector<TreeObservation> out;
  for (const auto& t : trees) out.push_back(transform_tree(Pose::from_rotation(r), t));
  return out;
}

double tilt_error_deg(const AlignmentResult& a, const Mat3& view) {
  const Vec3 est = a.correction.transpose() * Vec3::UnitZ();
  return oracle::deg(std::acos(std::clamp(est.dot(view * Vec3::UnitZ()), -1.0, 1.0)));
}

}  // namespace

TEST(Alignment, VerticalAxesGiveIdentity) {
  std::mt19937_64 rng(1);
  const auto a = estimate_axis_alignment(forest(rng, 20), AlignConfig{});
  EXPECT_FALSE(a.degenerate);
  EXPECT_LT((a.correction - Mat3::Identity()).norm(), 1e-15);
  EXPECT_EQ(a.residual, 0.0);
  EXPECT_EQ(a.inlier_ids.size(), 20u);
}

TEST(Alignment, CompensatesKnownRollPitch) {
  std::mt19937_64 rng(2);
  const Mat3 view = rot_y(oracle::rad(-7)) * rot_x(oracle::rad(10));
  const auto a = estimate_axis_alignment(rotated(forest(rng, 30), view), AlignConfig{});
  const Mat3 expected = tilt_part(view.transpose());
  EXPECT_LT(rotation_angle(a.correction.transpose() * expected), 1e-6);
  EXPECT_NEAR(yaw_of(a.correction), 0.0, 1e-9);
  EXPECT_NEAR(a.correction.determinant(), 1.0, 1e-12);
  EXPECT_LT((a.correction * a.correction.transpose() - Mat3::Identity()).norm(), 1e-12);
}

TEST(Alignment, RobustToOutlierAxes) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  auto trees = forest(rng, 100);
  for (int i = 80; i < 100; ++i) trees[i].axis = canonicalize_axis(Vec3(n(rng), n(rng), n(rng)));
  const Mat3 view = rot_y(oracle::rad(15)) * rot_x(oracle::rad(-15));
  const auto a = estimate_axis_alignment(rotated(trees, view), AlignConfig{});
  EXPECT_LT(tilt_error_deg(a, view), 1.0);
  EXPECT_GE(a.inlier_ids.size(), 80u);
}

TEST(Alignment, InlierAxesEndUpNearVertical) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, oracle::rad(2));
  auto trees = forest(rng, 60);
  for (auto& t : trees) t.axis = canonicalize_axis(Vec3(n(rng), n(rng), 1));
  const AlignConfig cfg;
  const auto a = estimate_axis_alignment(trees, cfg);
  double mean = 0;
  for (TreeId id : a.inlier_ids) mean += std::abs((a.correction * trees[id].axis).z());
  mean /= a.inlier_ids.size();
  EXPECT_GE(mean, std::cos(oracle::rad(cfg.angle_tol_deg)));
}

TEST(Alignment, HorizontalAxesAreDegenerate) {
  std::vector<TreeObservation> trees(5);
  for (int i = 0; i < 5; ++i) trees[i].axis = Vec3(std::cos(i), std::sin(i), 0);
  const auto a = estimate_axis_alignment(trees, AlignConfig{});
  EXPECT_TRUE(a.degenerate);
  EXPECT_EQ(a.correction, Mat3::Identity());
}

TEST(Alignment, Deterministic) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  auto trees = forest(rng, 300);
  for (int i = 0; i < 60; ++i) trees[i].axis = canonicalize_axis(Vec3(n(rng), n(rng), n(rng)));
  trees = rotated(trees, rot_x(0.2));
  AlignConfig cfg;
  cfg.ransac_iters = 20;
  const auto a = estimate_axis_alignment(trees, cfg);
  const auto b = estimate_axis_alignment(trees, cfg);
  EXPECT_EQ(a.correction, b.correction);
  EXPECT_EQ(a.inlier_ids, b.inlier_ids);
  EXPECT_EQ(a.residual, b.residual);
}

TEST(Project, IdentityAndSignConvention) {
  SceneInventory s;
  TreeObservation t;
  t.position = Vec3(1, 2, 3);
  t.dbh = 0.25;
  s.trees = {t};
  auto p = project(s, AlignmentResult{});
  EXPECT_EQ(p.trees[0].center, Vec2(1, 2));
  EXPECT_EQ(p.trees[0].base_height, 3.0);
  EXPECT_EQ(p.trees[0].dbh, 0.25);

  AlignmentResult roll;
  roll.correction = rot_x(M_PI / 2);
  s.trees[0].position = Vec3(0, 0, 5);
  p = project(s, roll);
  EXPECT_NEAR(p.trees[0].center.x(), 0.0, 1e-12);
  EXPECT_NEAR(p.trees[0].center.y(), -5.0, 1e-12);
  EXPECT_NEAR(p.trees[0].base_height, 0.0, 1e-12);
}

TEST(Project, ViewpointInvariantDistances) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ang(-oracle::rad(30), oracle::rad(30)), yaw(-M_PI, M_PI);
  for (int trial = 0; trial < 50; ++trial) {
    SceneInventory ref;
    ref.trees = forest(rng, 25);
    const Mat3 view = rot_z(yaw(rng)) * rot_y(ang(rng)) * rot_x(ang(rng));
    SceneInventory moved;
    moved.trees = rotated(ref.trees, view);
    const auto p0 = project(ref, estimate_axis_alignment(ref.trees, AlignConfig{}));
    const auto p1 = project(moved, estimate_axis_alignment(moved.trees, AlignConfig{}));
    double worst = 0;
    for (std::size_t i = 0; i < p0.trees.size(); ++i)
      for (std::size_t j = i + 1; j < p0.trees.size(); ++j)
        worst = std::max(worst, std::abs((p0.trees[i].center - p0.trees[j].center).norm() -
                                         (p1.trees[i].center - p1.trees[j].center).norm()));
    EXPECT_LT(worst, 1e-6);
  }
}
