#include "treeloc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "treeloc/errors.hpp"
#include "treeloc/spatial_grid.hpp"

namespace treeloc {

namespace {

double deg2rad(double d) { return d * M_PI / 180.0; }

// Small rotation of `axis` by a normally distributed angle about a random perpendicular.
Vec3 perturb_axis(const Vec3& axis, double sigma_rad, std::mt19937_64& rng) {
  if (sigma_rad <= 0) return axis;
  std::normal_distribution<double> angle(0.0, sigma_rad);
  std::uniform_real_distribution<double> az(0.0, 2 * M_PI);
  const Vec3 helper = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 b1 = axis.cross(helper).normalized();
  const Vec3 b2 = axis.cross(b1);
  const double phi = az(rng);
  const Vec3 dir = std::cos(phi) * b1 + std::sin(phi) * b2;
  return Eigen::AngleAxisd(angle(rng), dir) * axis;
}

}  // namespace

void SimConfig::validate() const {
  if (!(min_spacing > 0)) throw Error(ErrorCode::ConfigError, "min_spacing must be positive");
  for (double p : {detect_prob, dropout_extra, candidate_prob})
    if (p < 0 || p > 1) throw Error(ErrorCode::ConfigError, "probabilities must lie in [0, 1]");
  if (!(area_width > 0 && area_height > 0)) throw Error(ErrorCode::ConfigError, "area must be positive");
  if (!(payload_spacing > 0)) throw Error(ErrorCode::ConfigError, "payload_spacing must be positive");
  if (tree_density < 0) throw Error(ErrorCode::ConfigError, "tree_density must be non-negative");
}

double terrain_height(const SimConfig& cfg, double x, double y) {
  if (cfg.terrain_wavelength <= 0) return 0.0;
  const double k = 2 * M_PI / cfg.terrain_wavelength;
  return cfg.terrain_amplitude * std::sin(k * x) * std::cos(k * y);
}

std::vector<WorldTree> generate_world(const SimConfig& cfg) {
  cfg.validate();
  const auto target =
      static_cast<std::size_t>(std::llround(cfg.tree_density * cfg.area_width * cfg.area_height / 1e4));
  std::vector<WorldTree> world;
  if (target == 0) return world;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> ux(0.0, cfg.area_width), uy(0.0, cfg.area_height);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::lognormal_distribution<double> dbh(cfg.dbh_log_mu, cfg.dbh_log_sigma);
  SpatialGrid2D grid(cfg.min_spacing);

  const std::size_t max_attempts = 100 * target + 1000;
  for (std::size_t attempt = 0; attempt < max_attempts && world.size() < target; ++attempt) {
    const Vec2 c(ux(rng), uy(rng));
    if (!grid.radius(c, cfg.min_spacing).empty()) continue;
    grid.insert(c);
    WorldTree t;
    t.id = static_cast<TreeId>(world.size());
    t.position = Vec3(c.x(), c.y(), terrain_height(cfg, c.x(), c.y()));
    const double lean = deg2rad(cfg.lean_max_deg) * unit(rng);
    const double az = 2 * M_PI * unit(rng);
    t.axis = Vec3(std::sin(lean) * std::cos(az), std::sin(lean) * std::sin(az), std::cos(lean));
    t.dbh = std::clamp(dbh(rng), 0.05, 1.0);
    world.push_back(t);
  }
  if (world.size() < target)
    throw Error(ErrorCode::DensityInfeasible, "placed " + std::to_string(world.size()) + " of " +
                                                  std::to_string(target) + " trees");
  return world;
}

Trajectory make_trajectory(const std::vector<Vec2>& waypoints, const SimConfig& cfg) {
  Trajectory traj;
  if (waypoints.empty()) return traj;
  auto make_point = [&](const Vec2& p, double heading) {
    TrajectoryPoint tp;
    tp.stamp = static_cast<double>(traj.size());
    tp.pose.rotation = rot_z(heading);
    tp.pose.translation = Vec3(p.x(), p.y(), terrain_height(cfg, p.x(), p.y()) + cfg.sensor_height);
    traj.push_back(tp);
  };

  double carry = 0.0;  // distance already travelled past the last emitted point
  double heading = 0.0;
  if (waypoints.size() > 1) {
    const Vec2 d = waypoints[1] - waypoints[0];
    heading = std::atan2(d.y(), d.x());
  }
  make_point(waypoints[0], heading);
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const Vec2 a = waypoints[i], b = waypoints[i + 1];
    const double len = (b - a).norm();
    if (len <= 0) continue;
    heading = std::atan2(b.y() - a.y(), b.x() - a.x());
    double s = cfg.payload_spacing - carry;
    while (s <= len + 1e-9) {
      make_point(a + (b - a) * (s / len), heading);
      s += cfg.payload_spacing;
    }
    carry = len - (s - cfg.payload_spacing);
  }
  return traj;
}

std::vector<Vec2> lawnmower_waypoints(const SimConfig& cfg, double margin, double lane_spacing) {
  std::vector<Vec2> wp;
  const double x0 = margin, x1 = cfg.area_width - margin;
  bool forward = true;
  for (double y = margin; y <= cfg.area_height - margin + 1e-9; y += lane_spacing) {
    wp.emplace_back(forward ? x0 : x1, y);
    wp.emplace_back(forward ? x1 : x0, y);
    forward = !forward;
  }
  return wp;
}

std::vector<Vec2> loop_waypoints(const SimConfig& cfg, double margin) {
  const double x0 = margin, x1 = cfg.area_width - margin;
  const double y0 = margin, y1 = cfg.area_height - margin;
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
}

SessionData simulate_session(const std::vector<WorldTree>& world, const Trajectory& trajectory,
                             const SimConfig& cfg, std::uint64_t session_seed) {
  cfg.validate();
  SessionData out;
  std::mt19937_64 rng(mix_seed(cfg.seed, session_seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SpatialGrid2D grid(std::max(cfg.sensor_range / 4, 1.0));
  for (const auto& t : world) grid.insert(t.position.head<2>());

  const double p_detect = cfg.detect_prob * (1.0 - cfg.dropout_extra);
  const double rp = deg2rad(cfg.viewpoint_rp_max_deg);
  TreeId next_id = 0;
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    Payload payload;
    payload.index = static_cast<int>(k);
    const double roll = rp * (2 * unit(rng) - 1);
    const double pitch = rp * (2 * unit(rng) - 1);
    payload.pose = trajectory[k].pose;
    payload.pose.rotation = trajectory[k].pose.rotation * rot_y(pitch) * rot_x(roll);
    const Pose world_to_sensor = payload.pose.inverse();

    for (int idx : grid.radius(trajectory[k].pose.translation.head<2>(), cfg.sensor_range)) {
      const auto& wt = world[idx];
      // draw every variate regardless of detection so streams stay aligned
      const double u_detect = unit(rng), u_cand = unit(rng);
      const double n1 = gauss(rng), n2 = gauss(rng), n3 = gauss(rng), n4 = gauss(rng);
      const Vec3 axis = perturb_axis(wt.axis, deg2rad(cfg.noise_axis_deg), rng);
      if (u_detect >= p_detect) continue;

      TreeObservation obs;
      obs.id = next_id++;
      const Vec3 observed = wt.position + Vec3(cfg.noise_center * n1, cfg.noise_center * n2, cfg.noise_base * n3);
      obs.position = world_to_sensor.apply(observed);
      obs.axis = world_to_sensor.apply_axis(axis);
      obs.dbh = std::max(0.02, wt.dbh + cfg.noise_dbh * n4);
      obs.obs_count = 1;
      obs.is_candidate = u_cand < cfg.candidate_prob;
      payload.trees.push_back(obs);
      out.association.push_back({payload.index, obs.id, wt.id});
    }
    out.payloads.push_back(std::move(payload));
  }
  return out;
}

std::vector<Pose> drift_odometry(const std::vector<Pose>& true_poses, const OdometryNoise& noise) {
  std::vector<Pose> est;
  if (true_poses.empty()) return est;
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  est.push_back(true_poses.front());
  for (std::size_t k = 1; k < true_poses.size(); ++k) {
    Pose rel = true_poses[k - 1].inverse().compose(true_poses[k]);
    const Vec3 dt(noise.sigma_t * gauss(rng), noise.sigma_t * gauss(rng) + noise.lateral_bias,
                  noise.sigma_t * gauss(rng));
    const Vec3 dr = deg2rad(noise.sigma_r_deg) * Vec3(gauss(rng), gauss(rng), gauss(rng));
    rel.translation += dt;
    rel.rotation = rel.rotation * so3_exp(dr);
    est.push_back(est.back().compose(rel));
  }
  return est;
}

}  // namespace treeloc
