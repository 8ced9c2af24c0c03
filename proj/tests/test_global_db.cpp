#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "oracles.hpp"
#include "treeloc/errors.hpp"
#include "treeloc/global_db.hpp"

using namespace treeloc;

namespace {

std::vector<TreeObservation> world_trees(std::mt19937_64& rng, int n, double extent) {
  std::uniform_real_distribution<double> u(-extent, extent), d(0.1, 0.7);
  std::vector<TreeObservation> out;
  while (static_cast<int>(out.size()) < n) {
    const Vec2 c(u(rng), u(rng));
    bool ok = true;
    for (const auto& t : out) ok = ok && (t.center() - c).norm() >= 2.0;
    if (!ok) continue;
    TreeObservation t;
    t.id = static_cast<TreeId>(out.size());
    t.position = Vec3(c.x(), c.y(), 0.1 * c.x());
    t.dbh = d(rng);
    out.push_back(t);
  }
  return out;
}

SceneInventory scene_in_frame(const std::vector<TreeObservation>& trees, const Pose& frame) {
  SceneInventory s;
  s.pose = frame;
  for (const auto& t : trees) s.trees.push_back(transform_tree(frame.inverse(), t));
  return s;
}

}  // namespace

TEST(GlobalDb, InsertIntoEmptyAndRepeat) {
  std::mt19937_64 rng(1);
  const auto trees = world_trees(rng, 50, 30);
  GlobalTreeDb db;
  const SceneInventory s = scene_in_frame(trees, Pose{});
  auto r = db.insert_session({s}, Pose{});
  EXPECT_EQ(r.inserted, 50u);
  EXPECT_EQ(r.merged, 0u);
  r = db.insert_session({s}, Pose{});
  EXPECT_EQ(r.inserted, 0u);
  EXPECT_EQ(r.merged, 50u);
  EXPECT_EQ(db.size(), 50u);
  for (const auto& t : db.trees()) EXPECT_EQ(t.obs_count, 2u);
  for (int k = 0; k < 3; ++k) db.insert_session({s}, Pose{});
  EXPECT_EQ(db.size(), 50u);
}

TEST(GlobalDb, OverlappingSessionsGiveUnion) {
  std::mt19937_64 rng(2);
  const auto trees = world_trees(rng, 140, 60);
  const std::vector<TreeObservation> a(trees.begin(), trees.begin() + 100), b(trees.begin() + 40, trees.end());
  const Pose session_b{rot_z(1.1), Vec3(7, -3, 0.4)};
  GlobalTreeDb db;
  db.insert_session({scene_in_frame(a, Pose{})}, Pose{});
  // session B scenes live in its own frame; the session pose maps them to the world
  db.insert_session({scene_in_frame(b, Pose{})}, Pose{});
  EXPECT_EQ(db.size(), 140u);

  GlobalTreeDb db2;
  db2.insert_session({scene_in_frame(a, Pose{})}, Pose{});
  SceneInventory sb;
  for (const auto& t : b) sb.trees.push_back(transform_tree(session_b.inverse(), t));
  db2.insert_session({sb}, session_b);
  EXPECT_EQ(db2.size(), 140u);
  for (const auto& t : db2.trees()) {
    double best = 1e9;
    for (const auto& w : trees) best = std::min(best, (w.position - t.position).norm());
    EXPECT_LT(best, 1e-9);
  }
}

TEST(GlobalDb, LocalSceneQueries) {
  std::mt19937_64 rng(3);
  const auto trees = world_trees(rng, 1000, 120);
  GlobalTreeDb db;
  db.insert_session({scene_in_frame(trees, Pose{})}, Pose{});
  ASSERT_EQ(db.size(), 1000u);

  EXPECT_TRUE(db.local_scene(Vec2(1000, 1000), 30).trees.empty());

  const auto stored = db.trees();
  const auto one = db.local_scene(stored[17].center(), 0.1);
  ASSERT_EQ(one.trees.size(), 1u);
  EXPECT_EQ(one.trees[0].id, stored[17].id);
  EXPECT_LT(one.trees[0].center().norm(), 1e-12);
  EXPECT_EQ(one.trees[0].position.z(), stored[17].position.z());

  std::vector<Vec2> pts;
  for (const auto& t : stored) pts.push_back(t.center());
  std::uniform_real_distribution<double> u(-130, 130), h(5, 40);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 c(u(rng), u(rng));
    const double half = h(rng);
    std::set<TreeId> expected, got;
    for (int i : oracle::box_filter(pts, c, half)) expected.insert(stored[i].id);
    for (const auto& t : db.local_scene(c, half).trees) got.insert(t.id);
    EXPECT_EQ(got, expected);
  }
}

TEST(GlobalDb, SaveLoadRoundTrip) {
  GlobalTreeDb empty;
  const auto header = empty.save();
  EXPECT_EQ(header.size(), GlobalTreeDb::kHeaderBytes);
  EXPECT_EQ(GlobalTreeDb::load(header), empty);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 0.05);
  auto trees = world_trees(rng, 1000, 120);
  for (auto& t : trees) t.axis = canonicalize_axis(Vec3(n(rng), n(rng), 1));
  GlobalTreeDb db;
  db.insert_session({scene_in_frame(trees, Pose{rot_z(0.3), Vec3(1, 2, 3)})}, Pose{rot_z(0.3), Vec3(1, 2, 3)});
  const auto bytes = db.save();
  EXPECT_LE(bytes.size(), GlobalTreeDb::kHeaderBytes + 64 * 1000);
  const auto back = GlobalTreeDb::load(bytes);
  EXPECT_EQ(back, db);
  EXPECT_EQ(back.save(), bytes);
  const auto a = db.trees(), b = back.trees();
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].position, b[i].position);
    EXPECT_EQ(a[i].axis, b[i].axis) << std::hexfloat << a[i].axis.transpose() << " vs " << b[i].axis.transpose();
    EXPECT_EQ(a[i].dbh, b[i].dbh);
  }
}

TEST(GlobalDb, CorruptionFailsClosed) {
  std::mt19937_64 rng(5);
  GlobalTreeDb db;
  db.insert_session({scene_in_frame(world_trees(rng, 10, 20), Pose{})}, Pose{});
  const auto bytes = db.save();
  auto expect_format_error = [](const std::string& b) {
    try {
      GlobalTreeDb::load(b);
      ADD_FAILURE() << "expected FormatError";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::FormatError);
    }
  };
  std::string bad = bytes;
  const std::uint64_t huge = 11;
  std::memcpy(bad.data() + 6, &huge, sizeof huge);
  expect_format_error(bad);
  expect_format_error(bytes.substr(0, bytes.size() - 1));
  bad = bytes;
  bad[0] = 'X';
  expect_format_error(bad);
  bad = bytes;
  bad[4] = 9;
  expect_format_error(bad);
  expect_format_error("");
}

TEST(GlobalDb, TextExportImport) {
  std::mt19937_64 rng(6);
  GlobalTreeDb db;
  db.insert_session({scene_in_frame(world_trees(rng, 30, 20), Pose{})}, Pose{});
  const auto text = db.export_text();
  const auto back = GlobalTreeDb::import_text(text);
  EXPECT_EQ(back.size(), db.size());
  EXPECT_EQ(back.export_text(), text);
}
