#include "treeloc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <Eigen/SVD>

#include "treeloc/errors.hpp"

namespace treeloc {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double deg2rad(double d) { return d * M_PI / 180.0; }

template <class F>
void parallel_for(int n, int threads, F&& body) {
  threads = std::clamp(threads, 1, std::max(n, 1));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::vector<Pose> payload_poses(const SessionData& s) {
  std::vector<Pose> out;
  out.reserve(s.payloads.size());
  for (const auto& p : s.payloads) out.push_back(p.pose);
  return out;
}

std::vector<Vec2> shifted(std::vector<Vec2> wp, bool reverse, double dy) {
  if (reverse) std::reverse(wp.begin(), wp.end());
  for (auto& p : wp) p.y() += dy;
  return wp;
}

Mat6 diag_information(double sigma_t, double sigma_r_rad) {
  Mat6 info = Mat6::Zero();
  info.diagonal().head<3>().setConstant(1.0 / (sigma_t * sigma_t));
  info.diagonal().tail<3>().setConstant(1.0 / (sigma_r_rad * sigma_r_rad));
  return info;
}

double dist2d(const Pose& a, const Pose& b) { return (a.translation - b.translation).head<2>().norm(); }

}  // namespace

void ExperimentConfig::validate() const {
  if (mode != "inter" && mode != "intra") throw Error(ErrorCode::ConfigError, "exp.mode must be inter or intra");
  if (scene_stride < 1) throw Error(ErrorCode::ConfigError, "exp.scene_stride must be >= 1");
  if (!(lane_spacing > 0)) throw Error(ErrorCode::ConfigError, "exp.lane_spacing must be positive");
  if (!(tp_radius > 0)) throw Error(ErrorCode::ConfigError, "exp.tp_radius must be positive");
  if (exclusion_window < 0 || max_queries < 0) throw Error(ErrorCode::ConfigError, "negative count");
  if (threads < 1) throw Error(ErrorCode::ConfigError, "exp.threads must be >= 1");
  if (n_sessions < 1) throw Error(ErrorCode::ConfigError, "exp.n_sessions must be >= 1");
  if (!(odo_sigma_t > 0 && odo_sigma_r_deg > 0 && loop_sigma_t > 0 && loop_sigma_r_deg > 0))
    throw Error(ErrorCode::ConfigError, "graph sigmas must be positive");
  if (bench_scenes < 1 || bench_queries < 1) throw Error(ErrorCode::ConfigError, "bench sizes must be >= 1");
}

void RunConfig::validate() const {
  sim.validate();
  pipeline.validate();
  exp.validate();
}

SceneSet build_scene_set(const SessionData& session, const std::vector<Pose>& true_poses, const AssemblyConfig& cfg,
                         int stride, int index_offset, const std::vector<Pose>* assembly_poses) {
  std::vector<Payload> payloads = session.payloads;
  if (assembly_poses)
    for (std::size_t i = 0; i < payloads.size(); ++i) payloads[i].pose = (*assembly_poses)[i];
  const int n = static_cast<int>(payloads.size());
  const int half = cfg.window_size / 2;

  SceneSet out;
  int count = 0;
  for (int c = half; c + half < n; c += stride) {
    SceneInventory scene = assemble(payloads, payloads[c].index, cfg);
    const auto candidates = assemble_candidates(payloads, payloads[c].index, cfg);
    if (!candidates.empty()) scene = supplement_candidates(scene, candidates, cfg);
    scene.index = index_offset + count++;
    out.truth[scene.index] = true_poses[c];
    out.scenes.push_back(std::move(scene));
  }
  return out;
}

std::vector<DescribedScene> describe_all(const std::vector<SceneInventory>& scenes, const PipelineConfig& cfg,
                                         int threads) {
  std::vector<DescribedScene> out(scenes.size());
  parallel_for(static_cast<int>(scenes.size()), threads, [&](int i) { out[i] = describe(scenes[i], cfg); });
  return out;
}

EvalRun evaluate_queries(const SceneDatabase& db, const std::map<int, Pose>& db_truth,
                         const std::vector<SceneInventory>& queries, const std::map<int, Pose>& query_truth,
                         const EvalOptions& opt) {
  const int n = static_cast<int>(queries.size());
  EvalRun run;
  run.records.resize(n);
  run.timings.resize(n);

  parallel_for(n, opt.threads, [&](int i) {
    const auto& q = queries[i];
    const Pose& tq = query_truth.at(q.index);
    auto excluded = [&](int idx) { return opt.intra && idx > q.index - opt.exclusion_window; };

    QueryRecord rec;
    rec.query = q.index;
    for (const auto& [idx, tc] : db_truth)
      if (!excluded(idx) && db.find(idx) && dist2d(tc, tq) <= opt.tp_radius) {
        rec.has_positive = true;
        break;
      }

    const auto outcome = opt.intra ? db.query(q, mix_seed(opt.seed, q.index), excluded)
                                   : db.query(q, mix_seed(opt.seed, q.index));
    for (int idx : outcome.coarse)
      if (dist2d(db_truth.at(idx), tq) <= opt.tp_radius) {
        rec.tp_in_coarse = true;
        break;
      }
    if (const auto* best = outcome.best()) {
      const Pose& tc = db_truth.at(best->candidate_index);
      rec.retrieved = best->candidate_index;
      rec.distance = outcome.best_distance;
      rec.overlap = best->overlap;
      rec.matched = static_cast<int>(best->matched_pairs.size());
      rec.truth = dist2d(tc, tq) <= opt.tp_radius;
      std::tie(rec.te, rec.re) = pose_error(best->transform_6dof, tc.inverse().compose(tq));
    }
    run.records[i] = rec;
    const auto& t = outcome.timings;
    run.timings[i] = {q.index, t.align_ms, t.tdh_ms, t.fine_ms, t.verify_ms, t.total_ms};
  });

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return run.records[a].query < run.records[b].query; });
  EvalRun sorted;
  for (int i : order) {
    sorted.records.push_back(run.records[i]);
    sorted.timings.push_back(run.timings[i]);
  }
  return sorted;
}

PairScenario make_pair_scenario(const RunConfig& cfg) {
  cfg.validate();
  PairScenario sc;
  sc.world = generate_world(cfg.sim);
  const auto wp = lawnmower_waypoints(cfg.sim, cfg.exp.margin, cfg.exp.lane_spacing);
  const auto a = simulate_session(sc.world, make_trajectory(wp, cfg.sim), cfg.sim, 1);
  sc.database = build_scene_set(a, payload_poses(a), cfg.pipeline.assembly, cfg.exp.scene_stride, 0);
  if (cfg.exp.mode == "intra") {
    sc.queries = sc.database;
  } else {
    const auto wp_b = shifted(wp, cfg.exp.reverse_second, cfg.exp.lateral_offset);
    const auto b = simulate_session(sc.world, make_trajectory(wp_b, cfg.sim), cfg.sim, 2);
    sc.queries = build_scene_set(b, payload_poses(b), cfg.pipeline.assembly, cfg.exp.scene_stride, 100000);
  }
  const int nq = static_cast<int>(sc.queries.scenes.size());
  if (cfg.exp.max_queries > 0 && nq > cfg.exp.max_queries) {
    std::vector<SceneInventory> kept;
    for (int k = 0; k < cfg.exp.max_queries; ++k)
      kept.push_back(sc.queries.scenes[static_cast<std::size_t>(k) * nq / cfg.exp.max_queries]);
    sc.queries.scenes = std::move(kept);
  }
  return sc;
}

ExperimentResult run_experiment(const RunConfig& cfg) {
  const auto start = Clock::now();
  const auto sc = make_pair_scenario(cfg);
  SceneDatabase db(cfg.pipeline);
  for (auto& d : describe_all(sc.database.scenes, cfg.pipeline, cfg.exp.threads)) db.add(std::move(d));

  EvalOptions opt;
  opt.tp_radius = cfg.exp.tp_radius;
  opt.intra = cfg.exp.mode == "intra";
  opt.exclusion_window = cfg.exp.exclusion_window;
  opt.seed = cfg.exp.query_seed;
  opt.threads = cfg.exp.threads;

  ExperimentResult res;
  res.database_size = db.size();
  res.run = evaluate_queries(db, sc.database.truth, sc.queries.scenes, sc.queries.truth, opt);
  res.pr = score_place_recognition(res.run.records);
  res.loc = score_localization(res.run.records);
  res.curve = pr_curve(res.run.records);
  res.wall_ms = ms_since(start);
  return res;
}

Pose fit_rigid_3d(const std::vector<Vec3>& est, const std::vector<Vec3>& truth) {
  if (est.size() != truth.size() || est.empty()) throw Error(ErrorCode::DimensionMismatch, "fit_rigid_3d sizes");
  Vec3 me = Vec3::Zero(), mt = Vec3::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) me += est[i], mt += truth[i];
  me /= est.size();
  mt /= truth.size();
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) h += (est[i] - me) * (truth[i] - mt).transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1 : 1;
  const Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();
  return {r, mt - r * me};
}

std::pair<double, double> trajectory_error(const std::vector<Pose>& est, const std::vector<Pose>& truth) {
  std::vector<Vec3> pe, pt;
  for (std::size_t i = 0; i < est.size(); ++i) {
    pe.push_back(est[i].translation);
    pt.push_back(truth[i].translation);
  }
  const Pose align = fit_rigid_3d(pe, pt);
  double st = 0, sr = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const auto [te, re] = pose_error(align.compose(est[i]), truth[i]);
    st += te * te;
    sr += re * re;
  }
  return {std::sqrt(st / est.size()), std::sqrt(sr / est.size())};
}

MultiSessionReport run_multisession(const RunConfig& cfg) {
  cfg.validate();
  constexpr int kNodeStride = 100000;
  const int n_sessions = cfg.exp.n_sessions;
  MultiSessionReport rep;

  const auto shared_world = generate_world(cfg.sim);
  struct Session {
    SceneSet scenes;
    std::map<int, Pose> odom;  // scene index -> odometry-frame pose
    std::vector<DescribedScene> described;
  };
  std::vector<Session> sessions(n_sessions);

  for (int s = 0; s < n_sessions; ++s) {
    SimConfig sim = cfg.sim;
    std::vector<WorldTree> own_world;
    if (cfg.exp.disjoint_worlds && s > 0) {
      sim.seed = mix_seed(cfg.sim.seed, static_cast<std::uint64_t>(s));
      own_world = generate_world(sim);
    }
    const auto& world = own_world.empty() ? shared_world : own_world;

    std::vector<Vec2> wp;
    switch (s % 3) {
      case 0: wp = lawnmower_waypoints(sim, cfg.exp.margin, cfg.exp.lane_spacing); break;
      case 1: wp = loop_waypoints(sim, cfg.exp.margin); break;
      default: {
        SimConfig swapped = sim;
        std::swap(swapped.area_width, swapped.area_height);
        wp = lawnmower_waypoints(swapped, cfg.exp.margin, cfg.exp.lane_spacing);
        for (auto& p : wp) p = Vec2(p.y(), p.x());
        std::reverse(wp.begin(), wp.end());
      }
    }
    const auto data = simulate_session(world, make_trajectory(wp, sim), sim, static_cast<std::uint64_t>(s) + 1);
    const auto truth = payload_poses(data);

    OdometryNoise odo = cfg.odo;
    odo.seed = mix_seed(cfg.odo.seed, static_cast<std::uint64_t>(s));
    auto est = drift_odometry(truth, odo);
    if (s > 0) {  // later sessions start in their own odometry frame
      const Pose to_local = est.front().inverse();
      for (auto& p : est) p = to_local.compose(p);
    }

    auto& sess = sessions[s];
    sess.scenes = build_scene_set(data, truth, cfg.pipeline.assembly, cfg.exp.scene_stride, s * kNodeStride, &est);
    for (const auto& sc : sess.scenes.scenes) {
      sess.odom[sc.index] = sc.pose;
      rep.truth[sc.index] = sess.scenes.truth.at(sc.index);
      rep.node_session[sc.index] = s;
    }
    sess.described = describe_all(sess.scenes.scenes, cfg.pipeline, cfg.exp.threads);
  }

  // Odometry edges.
  const double step_t = cfg.exp.odo_sigma_t * cfg.exp.scene_stride;
  const double step_r = deg2rad(cfg.exp.odo_sigma_r_deg) * cfg.exp.scene_stride;
  for (const auto& sess : sessions) {
    for (auto it = sess.odom.begin(); it != sess.odom.end(); ++it) {
      const auto nx = std::next(it);
      if (nx == sess.odom.end()) break;
      rep.graph.edges.push_back({it->first, nx->first, it->second.inverse().compose(nx->second),
                                 diag_information(step_t, step_r)});
    }
  }

  // TreeLoc constraints: every session against all earlier ones.
  std::vector<PoseEdge> loop_edges;
  const Mat6 loop_info = diag_information(cfg.exp.loop_sigma_t, deg2rad(cfg.exp.loop_sigma_r_deg));
  for (int s = 1; s < n_sessions; ++s) {
    SceneDatabase db(cfg.pipeline);
    for (int p = 0; p < s; ++p)
      for (const auto& d : sessions[p].described) db.add(d);
    const auto& queries = sessions[s].described;
    std::vector<std::vector<LocalizationLink>> links(queries.size());
    parallel_for(static_cast<int>(queries.size()), cfg.exp.threads, [&](int i) {
      const auto& q = queries[i];
      const auto outcome = db.query(q, mix_seed(cfg.exp.query_seed, static_cast<std::uint64_t>(q.scene.index)));
      for (const auto& r : outcome.results) links[i].push_back({q.scene.index, r.candidate_index, r});
    });
    int accepted_here = 0;
    for (const auto& per_query : links) {
      const auto edges = constraints_from_localization(per_query, cfg.pipeline.verify, loop_info);
      for (const auto& e : edges) {
        const Pose z_true = rep.truth.at(e.from).inverse().compose(rep.truth.at(e.to));
        const double te = pose_error(e.measurement, z_true).first;
        rep.max_constraint_te = std::max(rep.max_constraint_te, te);
        if (te > kSuccessTe) ++rep.n_false_constraints;
        loop_edges.push_back(e);
        ++accepted_here;
      }
    }
    if (accepted_here == 0)
      rep.warnings.push_back("session " + std::to_string(s) + ": no constraints to earlier sessions");
  }
  rep.n_constraints = static_cast<int>(loop_edges.size());
  rep.graph.edges.insert(rep.graph.edges.end(), loop_edges.begin(), loop_edges.end());

  // Initial estimates: session 0 as dead-reckoned, later sessions placed by their first link.
  std::vector<char> placed(n_sessions, 0);
  std::vector<Pose> offset(n_sessions);
  placed[0] = 1;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& e : loop_edges) {
      const int sf = rep.node_session.at(e.from), st = rep.node_session.at(e.to);
      if (placed[sf] == placed[st]) continue;
      if (placed[sf]) {
        const Pose xq = offset[sf].compose(sessions[sf].odom.at(e.from)).compose(e.measurement);
        offset[st] = xq.compose(sessions[st].odom.at(e.to).inverse());
        placed[st] = 1;
      } else {
        const Pose xc = offset[st].compose(sessions[st].odom.at(e.to)).compose(e.measurement.inverse());
        offset[sf] = xc.compose(sessions[sf].odom.at(e.from).inverse());
        placed[sf] = 1;
      }
      changed = true;
    }
  }
  for (int s = 0; s < n_sessions; ++s)
    for (const auto& [id, p] : sessions[s].odom) rep.graph.nodes[id] = offset[s].compose(p);
  if (!rep.graph.nodes.empty()) rep.graph.anchor = rep.graph.nodes.begin()->first;

  // Optimize each connected component with its smallest node fixed.
  std::map<int, int> parent;
  for (const auto& [id, p] : rep.graph.nodes) parent[id] = id;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : rep.graph.edges) parent[find(e.from)] = find(e.to);
  std::map<int, PoseGraph> components;
  for (const auto& [id, p] : rep.graph.nodes) {
    auto& g = components[find(id)];
    if (g.nodes.empty()) g.anchor = id;
    g.nodes[id] = p;
  }
  for (const auto& e : rep.graph.edges) components[find(e.from)].edges.push_back(e);
  rep.n_components = static_cast<int>(components.size());
  if (rep.n_components > 1)
    rep.warnings.push_back("pose graph has " + std::to_string(rep.n_components) + " disconnected components");
  const int root0 = rep.graph.nodes.empty() ? -1 : find(rep.graph.anchor);
  for (const auto& [root, g] : components) {
    const auto res = optimize(g, cfg.exp.graph_iters);
    for (const auto& [id, p] : res.poses) rep.optimized[id] = p;
    if (root == root0) rep.chi2_history = res.chi2_history;
  }

  // Errors: before = each session aligned on its own; after = each component aligned jointly.
  std::vector<Pose> all_before_est, all_before_truth;
  double sum_t_before = 0, sum_r_before = 0;
  for (int s = 0; s < n_sessions; ++s) {
    SessionReport sr;
    sr.session = s;
    std::vector<Pose> est, truth;
    for (const auto& [id, p] : sessions[s].odom) {
      est.push_back(p);
      truth.push_back(rep.truth.at(id));
    }
    sr.n_nodes = static_cast<int>(est.size());
    sr.connected = !est.empty() && root0 >= 0 && find(sessions[s].odom.begin()->first) == root0;
    if (!est.empty()) {
      std::tie(sr.ate_before, sr.are_before) = trajectory_error(est, truth);
      sum_t_before += sr.ate_before * sr.ate_before * est.size();
      sum_r_before += sr.are_before * sr.are_before * est.size();
    }
    rep.sessions.push_back(sr);
  }
  double sum_t_after = 0, sum_r_after = 0;
  std::size_t total = 0;
  for (const auto& [root, g] : components) {
    std::vector<Pose> est, truth;
    for (const auto& [id, p] : g.nodes) {
      est.push_back(rep.optimized.at(id));
      truth.push_back(rep.truth.at(id));
    }
    const auto [te, re] = trajectory_error(est, truth);
    sum_t_after += te * te * est.size();
    sum_r_after += re * re * est.size();
    total += est.size();
    // per-session share of this component's error
    const Pose align = fit_rigid_3d([&] {
      std::vector<Vec3> v;
      for (const auto& p : est) v.push_back(p.translation);
      return v;
    }(), [&] {
      std::vector<Vec3> v;
      for (const auto& p : truth) v.push_back(p.translation);
      return v;
    }());
    std::map<int, std::pair<double, double>> acc;
    std::map<int, int> cnt;
    for (const auto& [id, p] : g.nodes) {
      const auto [t, r] = pose_error(align.compose(rep.optimized.at(id)), rep.truth.at(id));
      const int s = rep.node_session.at(id);
      acc[s].first += t * t;
      acc[s].second += r * r;
      ++cnt[s];
    }
    for (const auto& [s, a] : acc) {
      rep.sessions[s].ate_after = std::sqrt(a.first / cnt[s]);
      rep.sessions[s].are_after = std::sqrt(a.second / cnt[s]);
    }
  }
  if (total) {
    rep.ate_before = std::sqrt(sum_t_before / total);
    rep.are_before = std::sqrt(sum_r_before / total);
    rep.ate_after = std::sqrt(sum_t_after / total);
    rep.are_after = std::sqrt(sum_r_after / total);
  }

  // Merged map from the optimized scene poses.
  for (int s = 0; s < n_sessions; ++s) {
    std::vector<SceneInventory> scenes = sessions[s].scenes.scenes;
    for (auto& sc : scenes) sc.pose = rep.optimized.at(sc.index);
    rep.merged.insert_session(scenes, Pose::identity());
  }
  return rep;
}

BenchReport run_bench(const RunConfig& cfg) {
  cfg.validate();
  BenchReport rep;
  const auto start = Clock::now();
  const auto world = generate_world(cfg.sim);
  const auto wp = lawnmower_waypoints(cfg.sim, cfg.exp.margin, cfg.exp.lane_spacing);
  const auto traj = make_trajectory(wp, cfg.sim);

  SimConfig clean = cfg.sim;
  clean.noise_center = clean.noise_dbh = clean.noise_base = clean.noise_axis_deg = 0;
  clean.dropout_extra = 0;
  const auto a = simulate_session(world, traj, clean, 1);
  const int usable = static_cast<int>(a.payloads.size()) - 2 * (cfg.pipeline.assembly.window_size / 2);
  const int stride = std::max(1, usable / cfg.exp.bench_scenes);
  auto db_set = build_scene_set(a, payload_poses(a), cfg.pipeline.assembly, stride, 0);
  if (static_cast<int>(db_set.scenes.size()) > cfg.exp.bench_scenes) db_set.scenes.resize(cfg.exp.bench_scenes);

  SceneDatabase db(cfg.pipeline);
  for (auto& d : describe_all(db_set.scenes, cfg.pipeline, cfg.exp.threads)) db.add(std::move(d));
  rep.db_scenes = static_cast<int>(db.size());
  std::size_t tree_sum = 0;
  for (const auto& s : db_set.scenes) {
    tree_sum += s.trees.size();
    rep.max_trees_per_scene = std::max(rep.max_trees_per_scene, static_cast<int>(s.trees.size()));
  }
  rep.mean_trees_per_scene = db_set.scenes.empty() ? 0 : static_cast<double>(tree_sum) / db_set.scenes.size();

  GlobalTreeDb gdb;
  gdb.insert_session(db_set.scenes, Pose::identity());
  rep.db_trees = gdb.size();
  rep.db_bytes = gdb.save().size();
  rep.db_bytes_per_tree =
      rep.db_trees ? static_cast<double>(rep.db_bytes - GlobalTreeDb::kHeaderBytes) / rep.db_trees : 0;
  rep.build_ms = ms_since(start);

  const auto b = simulate_session(world, traj, cfg.sim, 2);
  const int usable_b = static_cast<int>(b.payloads.size()) - 2 * (cfg.pipeline.assembly.window_size / 2);
  const int q_stride = std::max(1, std::min(usable_b, usable) / cfg.exp.bench_queries);
  auto q_set = build_scene_set(b, payload_poses(b), cfg.pipeline.assembly, q_stride, 100000);
  // keep queries that fall inside the indexed stretch of the trajectory
  const double covered = static_cast<double>(rep.db_scenes) * stride;
  std::vector<SceneInventory> queries;
  for (std::size_t k = 0; k < q_set.scenes.size() && static_cast<int>(queries.size()) < cfg.exp.bench_queries; ++k)
    if (static_cast<double>(k) * q_stride < covered) queries.push_back(q_set.scenes[k]);
  rep.n_queries = static_cast<int>(queries.size());

  std::vector<double> total_ms, stage_ms, ondemand_ms;
  for (const auto& q : queries) {
    const auto out = db.query(q, mix_seed(cfg.exp.query_seed, static_cast<std::uint64_t>(q.index)));
    total_ms.push_back(out.timings.total_ms);
    stage_ms.push_back(out.timings.stage_sum());

    const auto t0 = Clock::now();
    const Vec2 center = q_set.truth.at(q.index).translation.head<2>();
    const auto local = gdb.local_scene(center, cfg.exp.ondemand_half_extent, q.index);
    const auto described = describe(local, cfg.pipeline);
    ondemand_ms.push_back(ms_since(t0));
    (void)described;
  }
  rep.median_query_ms = median(total_ms);
  rep.median_stage_sum_ms = median(stage_ms);
  rep.median_ondemand_ms = median(ondemand_ms);
  if (!total_ms.empty()) {
    auto sorted = total_ms;
    std::sort(sorted.begin(), sorted.end());
    rep.p90_query_ms = sorted[std::min(sorted.size() - 1, static_cast<std::size_t>(0.9 * sorted.size()))];
  }
  return rep;
}

std::string report_to_text(const MultiSessionReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << "sessions = " << r.sessions.size() << '\n'
     << "constraints = " << r.n_constraints << '\n'
     << "false_constraints = " << r.n_false_constraints << '\n'
     << "max_constraint_te = " << r.max_constraint_te << '\n'
     << "components = " << r.n_components << '\n'
     << "ate_before = " << r.ate_before << '\n'
     << "ate_after = " << r.ate_after << '\n'
     << "are_before = " << r.are_before << '\n'
     << "are_after = " << r.are_after << '\n';
  for (const auto& s : r.sessions)
    os << "session" << s.session << ".nodes = " << s.n_nodes << '\n'
       << "session" << s.session << ".connected = " << (s.connected ? "true" : "false") << '\n'
       << "session" << s.session << ".ate_before = " << s.ate_before << '\n'
       << "session" << s.session << ".ate_after = " << s.ate_after << '\n'
       << "session" << s.session << ".are_before = " << s.are_before << '\n'
       << "session" << s.session << ".are_after = " << s.are_after << '\n';
  for (std::size_t i = 0; i < r.warnings.size(); ++i) os << "warning" << i << " = " << r.warnings[i] << '\n';
  os << "merged_trees = " << r.merged.size() << '\n';
  return os.str();
}

std::string report_to_text(const BenchReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << "db_scenes = " << r.db_scenes << '\n'
     << "mean_trees_per_scene = " << r.mean_trees_per_scene << '\n'
     << "max_trees_per_scene = " << r.max_trees_per_scene << '\n'
     << "queries = " << r.n_queries << '\n'
     << "median_query_ms = " << r.median_query_ms << '\n'
     << "p90_query_ms = " << r.p90_query_ms << '\n'
     << "median_stage_sum_ms = " << r.median_stage_sum_ms << '\n'
     << "median_ondemand_ms = " << r.median_ondemand_ms << '\n'
     << "db_trees = " << r.db_trees << '\n'
     << "db_bytes = " << r.db_bytes << '\n'
     << "db_bytes_per_tree = " << r.db_bytes_per_tree << '\n'
     << "build_ms = " << r.build_ms << '\n';
  return os.str();
}

}  // namespace treeloc
