#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "treeloc/errors.hpp"
#include "treeloc/io.hpp"

using namespace treeloc;

TEST(Config, RoundTripAndOverrides) {
  RunConfig cfg;
  apply_config_text("# comment\ntdh.r_res = 5.5\nsim.seed=42\n\nexp.mode = intra  # trailing\n", cfg);
  EXPECT_EQ(cfg.pipeline.tdh.r_res, 5.5);
  EXPECT_EQ(cfg.sim.seed, 42u);
  EXPECT_EQ(cfg.exp.mode, "intra");
  const auto text = config_to_text(cfg);
  RunConfig back;
  apply_config_text(text, back);
  EXPECT_EQ(config_to_text(back), text);
}

TEST(Config, Errors) {
  RunConfig cfg;
  auto code_of = [&](const std::string& text) {
    try {
      apply_config_text(text, cfg);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::NoConvergence;
  };
  EXPECT_EQ(code_of("tdh.nope = 1\n"), ErrorCode::ConfigError);
  EXPECT_EQ(code_of("tdh.r_res = abc\n"), ErrorCode::ConfigError);
  EXPECT_EQ(code_of("no equals sign\n"), ErrorCode::ConfigError);
}

TEST(Session, TextRoundTrip) {
  std::mt19937_64 rng(1);
  std::vector<Payload> payloads(3);
  for (int k = 0; k < 3; ++k) {
    payloads[k].index = k;
    payloads[k].pose = oracle::random_pose(rng);
    for (int j = 0; j < 4; ++j) {
      TreeObservation t;
      t.id = 10 * k + j;
      t.position = oracle::random_pose(rng).translation;
      t.axis = canonicalize_axis(Vec3(0.1 * j, -0.05, 1));
      t.dbh = 0.1 + 0.05 * j;
      t.obs_count = j + 1;
      t.is_candidate = j == 3;
      payloads[k].trees.push_back(t);
    }
  }
  const auto text = session_to_text(payloads);
  const auto back = session_from_text(text);
  ASSERT_EQ(back.size(), 3u);
  for (int k = 0; k < 3; ++k) {
    EXPECT_LT((back[k].pose.rotation - payloads[k].pose.rotation).norm(), 1e-12);
    EXPECT_EQ(back[k].pose.translation, payloads[k].pose.translation);
    EXPECT_EQ(back[k].trees[2].position, payloads[k].trees[2].position);
    EXPECT_EQ(back[k].trees[2].axis, payloads[k].trees[2].axis);
    EXPECT_EQ(back[k].trees[2].obs_count, 3u);
    EXPECT_EQ(back[k].trees[3].is_candidate, true);
  }
  EXPECT_THROW(session_from_text("TREE 1 2 3\n"), Error);
}

TEST(Scenes, TextRoundTrip) {
  SceneInventory s;
  s.index = 7;
  s.pose = Pose{rot_z(0.5), Vec3(1, 2, 3)};
  TreeObservation t;
  t.id = 3;
  t.position = Vec3(0.1, 0.2, 0.3);
  s.trees = {t};
  const auto text = scenes_to_text({s, s});
  const auto back = scenes_from_text(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].index, 7);
  EXPECT_LT((back[1].pose.rotation - s.pose.rotation).norm(), 1e-14);
  EXPECT_EQ(back[1].trees[0].position, t.position);
}

TEST(Poses, CsvRoundTrip) {
  std::mt19937_64 rng(2);
  std::map<int, Pose> poses;
  for (int i = 0; i < 10; ++i) poses[i * 3] = oracle::random_pose(rng);
  const auto csv = poses_to_csv(poses);
  const auto back = poses_from_csv(csv);
  ASSERT_EQ(back.size(), poses.size());
  for (const auto& [k, p] : poses) {
    EXPECT_EQ(back.at(k).translation, p.translation);
    EXPECT_LT((back.at(k).rotation - p.rotation).norm(), 1e-14);
  }
}

TEST(Manifest, MentionsCommandAndConfig) {
  RunConfig cfg;
  const auto m = manifest_text("query", cfg, {"a.txt"});
  EXPECT_NE(m.find("query"), std::string::npos);
  EXPECT_NE(m.find("a.txt"), std::string::npos);
  EXPECT_NE(m.find("sim.seed"), std::string::npos);
}
