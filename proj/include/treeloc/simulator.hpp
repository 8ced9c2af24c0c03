#pragma once

#include <cstdint>
#include <vector>

#include "treeloc/model.hpp"

namespace treeloc {

struct SimConfig {
  std::uint64_t seed = 1;
  double area_width = 200.0;       // m
  double area_height = 100.0;      // m
  double tree_density = 250.0;     // trees per hectare
  double min_spacing = 2.0;        // m
  double dbh_log_mu = -1.2;        // log-normal parameters of DBH in meters
  double dbh_log_sigma = 0.35;
  double lean_max_deg = 3.0;
  double terrain_amplitude = 1.5;  // m
  double terrain_wavelength = 80.0;
  double sensor_height = 1.5;      // m above terrain
  double sensor_range = 25.0;      // m, horizontal
  double detect_prob = 1.0;
  double dropout_extra = 0.0;
  double candidate_prob = 0.0;     // share of detections flagged as candidate stems
  double noise_center = 0.0;       // m, per horizontal axis
  double noise_dbh = 0.0;          // m
  double noise_base = 0.0;         // m
  double noise_axis_deg = 0.0;
  double payload_spacing = 2.0;    // m
  double viewpoint_rp_max_deg = 0.0;
  int scans_per_payload = 10;      // k, metadata only
  int shared_scans = 5;            // v, metadata only

  void validate() const;
};

struct WorldTree {
  TreeId id = 0;
  Vec3 position = Vec3::Zero();  // (x, y, terrain z)
  Vec3 axis = Vec3::UnitZ();
  double dbh = 0.3;
};

struct TrajectoryPoint {
  double stamp = 0;
  Pose pose;  // body pose (level, heading along the path)
};
using Trajectory = std::vector<TrajectoryPoint>;

double terrain_height(const SimConfig& cfg, double x, double y);

/// Dart-throwing Poisson-disc forest at the configured density. Deterministic per
/// cfg.seed. Throws Error(DensityInfeasible) if the target count cannot be placed.
std::vector<WorldTree> generate_world(const SimConfig& cfg);

/// Resamples a polyline every cfg.payload_spacing meters; heading follows the
/// segment direction and height follows the terrain plus sensor_height.
Trajectory make_trajectory(const std::vector<Vec2>& waypoints, const SimConfig& cfg);

/// Back-and-forth lanes covering the area with the given margin and lane spacing.
std::vector<Vec2> lawnmower_waypoints(const SimConfig& cfg, double margin, double lane_spacing);
/// Closed rectangular loop inset by `margin`.
std::vector<Vec2> loop_waypoints(const SimConfig& cfg, double margin);

struct AssociationRow {
  int payload_index = 0;
  TreeId local_tree_id = 0;
  TreeId world_tree_id = 0;
};

struct SessionData {
  std::vector<Payload> payloads;       // poses are the true sensor poses
  std::vector<AssociationRow> association;
};

/// One payload per trajectory point. The sensor frame gets a random roll/pitch;
/// in-range trees are detected with probability detect_prob * (1 - dropout_extra)
/// and observed with Gaussian noise on center, base height, DBH and axis.
SessionData simulate_session(const std::vector<WorldTree>& world, const Trajectory& trajectory,
                             const SimConfig& cfg, std::uint64_t session_seed);

struct OdometryNoise {
  double lateral_bias = 0.02;  // m per step, to the left of travel
  double sigma_t = 0.01;       // m per step
  double sigma_r_deg = 0.05;   // deg per step
  std::uint64_t seed = 3;
};

/// Dead-reckoned poses: the true relative motions corrupted by noise and a
/// constant lateral bias, chained from the first true pose.
std::vector<Pose> drift_odometry(const std::vector<Pose>& true_poses, const OdometryNoise& noise);

}  // namespace treeloc
