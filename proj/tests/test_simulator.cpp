#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "treeloc/errors.hpp"
#include "treeloc/simulator.hpp"

using namespace treeloc;

namespace {

SimConfig hectare() {
  SimConfig c;
  c.area_width = 100;
  c.area_height = 100;
  c.tree_density = 400;
  c.min_spacing = 2;
  return c;
}

Trajectory short_path(const SimConfig& cfg) { return make_trajectory({Vec2(20, 50), Vec2(80, 50)}, cfg); }

}  // namespace

TEST(World, EmptyAtZeroDensity) {
  SimConfig c = hectare();
  c.tree_density = 0;
  EXPECT_TRUE(generate_world(c).empty());
}

TEST(World, DensityAndSpacing) {
  const auto world = generate_world(hectare());
  EXPECT_GE(world.size(), 380u);
  EXPECT_LE(world.size(), 420u);
  for (std::size_t i = 0; i < world.size(); ++i) {
    EXPECT_GE(world[i].dbh, 0.05);
    EXPECT_LE(world[i].dbh, 1.0);
    EXPECT_GE(world[i].axis.z(), std::cos(oracle::rad(3.0)) - 1e-12);
    EXPECT_NEAR(world[i].position.z(), terrain_height(hectare(), world[i].position.x(), world[i].position.y()), 1e-12);
    for (std::size_t j = i + 1; j < world.size(); ++j)
      EXPECT_GE((world[i].position.head<2>() - world[j].position.head<2>()).norm(), 2.0);
  }
}

TEST(World, DeterministicPerSeed) {
  const auto a = generate_world(hectare()), b = generate_world(hectare());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].position, b[i].position);
  SimConfig other = hectare();
  other.seed = 2;
  EXPECT_NE(generate_world(other)[0].position, a[0].position);
}

TEST(World, InfeasibleDensityThrows) {
  SimConfig c = hectare();
  c.tree_density = 5000;
  try {
    generate_world(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DensityInfeasible);
  }
}

TEST(Trajectory, SpacingAndHeading) {
  const SimConfig c = hectare();
  const auto traj = make_trajectory({Vec2(10, 10), Vec2(30, 10), Vec2(30, 40)}, c);
  ASSERT_GT(traj.size(), 10u);
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double step = (traj[i].pose.translation.head<2>() - traj[i - 1].pose.translation.head<2>()).norm();
    EXPECT_LE(step, c.payload_spacing + 1e-9);
  }
  EXPECT_NEAR(yaw_of(traj.front().pose.rotation), 0.0, 1e-12);
  EXPECT_NEAR(yaw_of(traj.back().pose.rotation), M_PI / 2, 1e-12);
  const auto& p = traj[3].pose.translation;
  EXPECT_NEAR(p.z(), terrain_height(c, p.x(), p.y()) + c.sensor_height, 1e-12);
}

TEST(Session, NoiselessObservationsAreExactTransforms) {
  SimConfig c = hectare();
  c.viewpoint_rp_max_deg = 10;
  const auto world = generate_world(c);
  const auto traj = short_path(c);
  const auto s = simulate_session(world, traj, c, 1);
  ASSERT_EQ(s.payloads.size(), traj.size());
  std::map<TreeId, const WorldTree*> by_id;
  for (const auto& w : world) by_id[w.id] = &w;
  std::size_t row = 0;
  for (const auto& p : s.payloads) {
    std::size_t in_range = 0;
    for (const auto& w : world)
      in_range += (w.position.head<2>() - p.pose.translation.head<2>()).norm() <= c.sensor_range;
    EXPECT_EQ(p.trees.size(), in_range);
    for (const auto& t : p.trees) {
      const auto& a = s.association[row++];
      EXPECT_EQ(a.payload_index, p.index);
      EXPECT_EQ(a.local_tree_id, t.id);
      const WorldTree& w = *by_id.at(a.world_tree_id);
      EXPECT_LT((p.pose.apply(t.position) - w.position).norm(), 1e-9);
      EXPECT_LT((p.pose.apply_axis(t.axis) - w.axis).norm(), 1e-9);
      EXPECT_EQ(t.dbh, w.dbh);
      EXPECT_EQ(t.obs_count, 1u);
    }
  }
  EXPECT_EQ(row, s.association.size());
}

TEST(Session, ZeroDetectionGivesEmptyPayloads) {
  SimConfig c = hectare();
  c.detect_prob = 0;
  const auto s = simulate_session(generate_world(c), short_path(c), c, 1);
  for (const auto& p : s.payloads) EXPECT_TRUE(p.trees.empty());
  EXPECT_TRUE(s.association.empty());
}

TEST(Session, CenterNoiseStatistic) {
  SimConfig c = hectare();
  c.noise_center = 0.05;
  const auto world = generate_world(c);
  std::map<TreeId, const WorldTree*> by_id;
  for (const auto& w : world) by_id[w.id] = &w;
  double sq = 0;
  std::size_t n = 0;
  for (std::uint64_t seed = 1; n < 10000; ++seed) {
    const auto s = simulate_session(world, short_path(c), c, seed);
    std::size_t row = 0;
    for (const auto& p : s.payloads)
      for (const auto& t : p.trees) {
        const auto& w = *by_id.at(s.association[row++].world_tree_id);
        sq += (p.pose.apply(t.position).head<2>() - w.position.head<2>()).squaredNorm();
        ++n;
      }
  }
  const double rmse = std::sqrt(sq / n);
  EXPECT_GE(rmse, 0.065);
  EXPECT_LE(rmse, 0.077);
}

TEST(Session, SharedWorldIdsAcrossSessions) {
  const SimConfig c = hectare();
  const auto world = generate_world(c);
  const auto a = simulate_session(world, short_path(c), c, 1);
  const auto b = simulate_session(world, short_path(c), c, 2);
  std::set<TreeId> wa, wb;
  for (const auto& r : a.association) wa.insert(r.world_tree_id);
  for (const auto& r : b.association) wb.insert(r.world_tree_id);
  EXPECT_EQ(wa, wb);
}

TEST(Odometry, DriftsFromTruthDeterministically) {
  const SimConfig c = hectare();
  std::vector<Pose> truth;
  for (const auto& p : short_path(c)) truth.push_back(p.pose);
  const auto a = drift_odometry(truth, OdometryNoise{});
  const auto b = drift_odometry(truth, OdometryNoise{});
  ASSERT_EQ(a.size(), truth.size());
  EXPECT_EQ(a.front().translation, truth.front().translation);
  EXPECT_EQ(a.back().translation, b.back().translation);
  EXPECT_GT((a.back().translation - truth.back().translation).norm(), 0.1);
  OdometryNoise none;
  none.lateral_bias = none.sigma_t = none.sigma_r_deg = 0;
  const auto exact = drift_odometry(truth, none);
  EXPECT_LT((exact.back().translation - truth.back().translation).norm(), 1e-9);
}
