#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "treeloc/eval.hpp"
#include "treeloc/global_db.hpp"
#include "treeloc/pipeline.hpp"
#include "treeloc/pose_graph.hpp"
#include "treeloc/simulator.hpp"

namespace treeloc {

struct ExperimentConfig {
  std::string mode = "inter";  // "inter": session B queries session A; "intra": A against itself
  int scene_stride = 1;
  double margin = 12.5;        // trajectory inset from the area border
  double lane_spacing = 25.0;
  bool reverse_second = true;  // second traversal runs the lanes backwards
  double lateral_offset = 0.0; // second traversal lane shift, m
  double tp_radius = 10.0;
  int exclusion_window = 50;
  int max_queries = 0;         // 0: all
  int threads = 1;
  std::uint64_t query_seed = 11;

  int n_sessions = 3;
  bool disjoint_worlds = false;
  double odo_sigma_t = 0.05;      // graph weight per payload step
  double odo_sigma_r_deg = 0.2;
  double loop_sigma_t = 0.05;
  double loop_sigma_r_deg = 0.3;
  int graph_iters = 50;

  int bench_scenes = 1000;
  int bench_queries = 100;
  double ondemand_half_extent = 25.0;

  void validate() const;
};

struct RunConfig {
  SimConfig sim;
  PipelineConfig pipeline;
  ExperimentConfig exp;
  OdometryNoise odo;

  void validate() const;
};

/// Scenes of one session plus the world pose of each scene frame.
struct SceneSet {
  std::vector<SceneInventory> scenes;
  std::map<int, Pose> truth;  // by scene index
};

/// One scene per `stride` payloads whose full window exists. Scene indices are
/// index_offset + running count; payload poses are taken from `poses` when given.
SceneSet build_scene_set(const SessionData& session, const std::vector<Pose>& true_poses,
                         const AssemblyConfig& cfg, int stride, int index_offset = 0,
                         const std::vector<Pose>* assembly_poses = nullptr);

std::vector<DescribedScene> describe_all(const std::vector<SceneInventory>& scenes, const PipelineConfig& cfg,
                                         int threads);

struct EvalOptions {
  double tp_radius = 10.0;
  bool intra = false;        // exclude database scenes with index > query - exclusion_window
  int exclusion_window = 50;
  std::uint64_t seed = 11;
  int threads = 1;
};

struct EvalRun {
  std::vector<QueryRecord> records;  // sorted by query index
  std::vector<QueryTiming> timings;
};

/// Full pipeline per query against `db`, scored against ground-truth scene poses.
/// Records are identical for any thread count.
EvalRun evaluate_queries(const SceneDatabase& db, const std::map<int, Pose>& db_truth,
                         const std::vector<SceneInventory>& queries, const std::map<int, Pose>& query_truth,
                         const EvalOptions& opt);

struct PairScenario {
  std::vector<WorldTree> world;
  SceneSet database;
  SceneSet queries;
};

/// Two traversals of one simulated world (or one, in intra mode).
PairScenario make_pair_scenario(const RunConfig& cfg);

struct ExperimentResult {
  EvalRun run;
  PlaceRecognitionSummary pr;
  LocalizationSummary loc;
  std::vector<PrPoint> curve;
  std::size_t database_size = 0;
  double wall_ms = 0;
};

ExperimentResult run_experiment(const RunConfig& cfg);

struct SessionReport {
  int session = 0;
  int n_nodes = 0;
  bool connected = false;  // shares a component with session 0
  double ate_before = 0, ate_after = 0;  // m
  double are_before = 0, are_after = 0;  // deg
};

struct MultiSessionReport {
  std::vector<SessionReport> sessions;
  double ate_before = 0, ate_after = 0;  // RMSE over all nodes
  double are_before = 0, are_after = 0;
  int n_constraints = 0;
  int n_false_constraints = 0;  // accepted constraints with TE > 0.5 m against truth
  double max_constraint_te = 0;
  int n_components = 0;
  std::vector<std::string> warnings;
  std::vector<double> chi2_history;  // component containing session 0

  PoseGraph graph;                  // initial estimates, odometry and TreeLoc edges
  std::map<int, Pose> optimized;
  std::map<int, Pose> truth;
  std::map<int, int> node_session;
  GlobalTreeDb merged;
};

/// Node ids are session * 100000 + scene number.
MultiSessionReport run_multisession(const RunConfig& cfg);

/// Rigid (rotation + translation) least-squares fit of estimated to true positions.
Pose fit_rigid_3d(const std::vector<Vec3>& est, const std::vector<Vec3>& truth);

/// RMSE translation (m) and rotation (deg) error after a joint rigid alignment.
std::pair<double, double> trajectory_error(const std::vector<Pose>& est, const std::vector<Pose>& truth);

struct BenchReport {
  int db_scenes = 0;
  double mean_trees_per_scene = 0;
  int max_trees_per_scene = 0;
  int n_queries = 0;
  double median_query_ms = 0;
  double p90_query_ms = 0;
  double median_stage_sum_ms = 0;
  double median_ondemand_ms = 0;
  std::size_t db_trees = 0;
  std::size_t db_bytes = 0;
  double db_bytes_per_tree = 0;
  double build_ms = 0;
};

BenchReport run_bench(const RunConfig& cfg);

std::string report_to_text(const MultiSessionReport& r);
std::string report_to_text(const BenchReport& r);

}  // namespace treeloc
