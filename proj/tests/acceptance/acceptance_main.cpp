// Prints one PASS/FAIL line per acceptance criterion; exits non-zero if any fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "treeloc/errors.hpp"
#include "treeloc/experiments.hpp"
#include "treeloc/io.hpp"

using namespace treeloc;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

RunConfig load_config(const std::string& name) {
  RunConfig cfg;
  apply_config_text(read_file(std::string(TREELOC_CONFIG_DIR) + "/" + name), cfg);
  cfg.validate();
  return cfg;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ProjectedScene random_projected(std::mt19937_64& rng, int n, double extent) {
  std::uniform_real_distribution<double> u(-extent, extent), d(0.05, 0.9);
  ProjectedScene s;
  for (int i = 0; i < n; ++i) s.trees.push_back({TreeId(i), Vec2(u(rng), u(rng)), 0.0, d(rng), false});
  return s;
}

std::vector<TreeObservation> upright_forest(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-30, 30), z(-1.5, 1.5);
  std::vector<TreeObservation> out;
  for (int i = 0; i < n; ++i) {
    TreeObservation t;
    t.id = i;
    t.position = Vec3(u(rng), u(rng), z(rng));
    out.push_back(t);
  }
  return out;
}

Mat3 random_view(std::mt19937_64& rng, double max_deg) {
  // roll and pitch bounded by max_deg, yaw free
  std::uniform_real_distribution<double> a(-oracle::rad(max_deg), oracle::rad(max_deg)), yaw(-M_PI, M_PI);
  return rot_z(yaw(rng)) * rot_y(a(rng)) * rot_x(a(rng));
}

Outcome rigid_invariance() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ang(-M_PI, M_PI), tr(-200, 200);
  const TriConfig tri;
  const TdhConfig tdh;
  std::size_t kept = 0, total = 0, excluded = 0;
  int tdh_identical = 0;
  for (int k = 0; k < 1000; ++k) {
    auto s = random_projected(rng, 40 + k % 60, 30);
    const auto before = build_triangles(s, tri);
    const auto h0 = build_tdh(s, tdh);

    const Mat2 yaw = rot2(ang(rng));
    ProjectedScene spun = s;
    for (auto& t : spun.trees) t.center = yaw * t.center;
    tdh_identical += build_tdh(spun, tdh) == h0;

    const Vec2 shift(tr(rng), tr(rng));
    for (auto& t : s.trees) t.center = yaw * t.center + shift;
    std::multiset<TriKey> after;
    for (const auto& d : build_triangles(s, tri)) after.insert(d.key);
    for (const auto& d : before) {
      bool boundary = false;
      for (double side : d.sides) {
        const double f = side / tri.len_quant;
        boundary = boundary || std::abs(f - std::round(f)) < 1e-6;
      }
      if (boundary) {
        ++excluded;
        continue;
      }
      ++total;
      kept += after.count(d.key) > 0;
    }
  }
  const double rate = double(kept) / total;
  const double secs = seconds_since(t0);
  return {rate >= 0.999 && tdh_identical == 1000 && secs < 30,
          fmt("keys preserved %.5f (%zu boundary excluded), tdh identical %d/1000, %.1f s", rate, excluded,
              tdh_identical, secs)};
}

Outcome viewpoint_correction() {
  std::mt19937_64 rng(202);
  double worst = 0;
  for (int k = 0; k < 500; ++k) {
    const auto ref = upright_forest(rng, 30);
    const Mat3 view = random_view(rng, 30);
    SceneInventory a, b;
    a.trees = ref;
    for (const auto& t : ref) b.trees.push_back(transform_tree(Pose::from_rotation(view), t));
    const auto pa = project(a, estimate_axis_alignment(a.trees, AlignConfig{}));
    const auto pb = project(b, estimate_axis_alignment(b.trees, AlignConfig{}));
    for (std::size_t i = 0; i < pa.trees.size(); ++i)
      for (std::size_t j = i + 1; j < pa.trees.size(); ++j)
        worst = std::max(worst, std::abs((pa.trees[i].center - pa.trees[j].center).norm() -
                                         (pb.trees[i].center - pb.trees[j].center).norm()));
  }

  std::normal_distribution<double> n;
  int good = 0;
  const int trials = 500;
  for (int k = 0; k < trials; ++k) {
    auto trees = upright_forest(rng, 50);
    for (std::size_t i = 0; i < trees.size(); ++i) {
      if (i % 5 == 0) {
        trees[i].axis = canonicalize_axis(Vec3(n(rng), n(rng), n(rng)));
      } else {
        const Vec3 tilt(n(rng), n(rng), 0);
        trees[i].axis = so3_exp(tilt * oracle::rad(2.0)) * Vec3::UnitZ();
      }
    }
    const Mat3 view = random_view(rng, 30);
    for (auto& t : trees) t = transform_tree(Pose::from_rotation(view), t);
    const auto a = estimate_axis_alignment(trees, AlignConfig{});
    const Vec3 est = a.correction.transpose() * Vec3::UnitZ();
    const double err = oracle::deg(std::acos(std::clamp(est.dot(view * Vec3::UnitZ()), -1.0, 1.0)));
    good += err <= 1.0;
  }
  const double share = double(good) / trials;
  return {worst < 1e-4 && share >= 0.95,
          fmt("max distance deviation %.2e m, noisy trials within 1 deg %.3f", worst, share)};
}

struct TpStats {
  int n = 0;
  double max_te = 0, max_re = 0;
};

TpStats tp_stats(const std::vector<QueryRecord>& recs) {
  TpStats s;
  for (const auto& r : recs)
    if (r.retrieved >= 0 && r.truth) {
      ++s.n;
      s.max_te = std::max(s.max_te, r.te);
      s.max_re = std::max(s.max_re, r.re);
    }
  return s;
}

Outcome noiseless_exactness() {
  const auto res = run_experiment(load_config("noiseless.cfg"));
  const auto tp = tp_stats(res.run.records);
  return {res.pr.recall_at_1 == 1.0 && tp.max_te < 1e-6 && tp.max_re < 1e-6,
          fmt("%d queries, R@1 %.4f, max TE %.2e m, max RE %.2e deg", res.pr.n_queries, res.pr.recall_at_1,
              tp.max_te, tp.max_re)};
}

ExperimentResult noisy_result;
double noisy_secs = 0;

Outcome noisy_inter() {
  const auto t0 = Clock::now();
  noisy_result = run_experiment(load_config("noisy_inter.cfg"));
  noisy_secs = seconds_since(t0);
  const auto& pr = noisy_result.pr;
  const auto& loc = noisy_result.loc;
  return {pr.recall_at_1 >= 0.95 && pr.max_f1 >= 0.97 && loc.te_median <= 0.10 && loc.re_median <= 0.5 &&
              noisy_secs < 300,
          fmt("%d queries, R@1 %.4f, max F1 %.4f, median TE %.4f m, median RE %.4f deg, %.1f s", pr.n_queries,
              pr.recall_at_1, pr.max_f1, loc.te_median, loc.re_median, noisy_secs)};
}

Outcome coarse_containment() {
  const double c = noisy_result.pr.coarse_containment;
  return {c >= 0.98, fmt("true positive in TDH top-100 for %.4f of %d queries with a positive", c,
                         noisy_result.pr.n_with_positive)};
}

Outcome latency() {
  const auto r = run_bench(load_config("bench.cfg"));
  return {r.db_scenes >= 1000 && r.max_trees_per_scene <= 120 && r.median_query_ms < 50 &&
              r.median_ondemand_ms <= 5,
          fmt("%d scenes (max %d trees), median query %.2f ms, on-demand %.3f ms", r.db_scenes,
              r.max_trees_per_scene, r.median_query_ms, r.median_ondemand_ms)};
}

Outcome storage() {
  RunConfig cfg = load_config("noisy_inter.cfg");
  const auto sc = make_pair_scenario(cfg);
  GlobalTreeDb db;
  db.insert_session(sc.database.scenes, Pose{});
  const std::size_t once = db.size();
  for (int k = 0; k < 4; ++k) db.insert_session(sc.database.scenes, Pose{});
  const auto bytes = db.save().size();
  const double per_tree = double(bytes - GlobalTreeDb::kHeaderBytes) / db.size();
  std::size_t naive = 0;
  for (const auto& s : sc.database.scenes) naive += s.trees.size();
  return {db.size() == once && per_tree <= 64.0,
          fmt("%zu trees after 1 and %zu after 5 inserts (naive per-scene store: %zu per insert), %.1f bytes/tree",
              once, db.size(), naive, per_tree)};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(808);
  bool triangles_ok = true;
  for (int k = 0; k < 50; ++k) {
    const auto s = random_projected(rng, 6 + k % 10, 20);
    TriConfig cfg;
    cfg.knn = static_cast<int>(s.trees.size()) - 1;
    std::set<std::array<TreeId, 3>> got;
    for (const auto& d : build_triangles(s, cfg)) {
      auto ids = d.vertex_ids;
      std::sort(ids.begin(), ids.end());
      got.insert(ids);
    }
    triangles_ok = triangles_ok && got == oracle::all_triples(s.trees, cfg.min_side, cfg.max_side, cfg.min_altitude);
  }

  bool pairing_ok = true;
  std::normal_distribution<double> n(0, 0.2);
  for (int k = 0; k < 50; ++k) {
    const auto cand = random_projected(rng, 80, 20);
    std::vector<Vec2> q, c;
    std::vector<double> qd, cd;
    for (const auto& t : cand.trees) c.push_back(t.center), cd.push_back(t.dbh);
    for (std::size_t i = 0; i < c.size(); i += 2) q.push_back(c[i] + Vec2(n(rng), n(rng))), qd.push_back(cd[i] + n(rng));
    const auto got = pair_nearest(q, qd, cand, 0.4, 0.2);
    pairing_ok = pairing_ok && std::set<std::pair<int, int>>(got.begin(), got.end()) ==
                                   oracle::pair_brute(q, qd, c, cd, 0.4, 0.2);
  }

  // scorer vs reference on the per-query CSV of the noisy experiment
  const auto recs = records_from_csv(records_to_csv(noisy_result.run.records));
  const auto ref = oracle::score(recs);
  const auto pr = score_place_recognition(recs);
  const auto loc = score_localization(recs);
  const bool scorer_ok = pr.n_with_positive == ref.with_positive && loc.n_success == ref.successes &&
                         loc.n_true_positive == ref.true_positives &&
                         std::abs(pr.recall_at_1 - ref.recall_at_1) <= 1e-12 &&
                         std::abs(pr.max_f1 - ref.max_f1) <= 1e-12 && std::abs(pr.auc - ref.auc) <= 1e-12 &&
                         std::abs(loc.recall_at_50 - ref.recall_at_50) <= 1e-12 &&
                         std::abs(loc.success_rate - ref.success_rate) <= 1e-12 &&
                         std::abs(loc.te_median - ref.te_median) <= 1e-12;

  double worst_grad = 0, worst_grid = 0;
  for (int k = 0; k < 50; ++k) {
    std::uniform_real_distribution<double> u(-10, 10);
    std::vector<Vec2> src, dst, mirrored;
    const PlanarTransform truth{rot2(u(rng)), Vec2(u(rng), u(rng))};
    for (int i = 0; i < 6; ++i) {
      src.emplace_back(u(rng), u(rng));
      dst.push_back(truth.apply(src.back()) + Vec2(n(rng), n(rng)));
      mirrored.emplace_back(src.back().x(), -src.back().y());
    }
    const auto t = svd_align_2d(src, dst);
    const double th = t.angle();
    Mat2 dr;
    dr << -std::sin(th), -std::cos(th), std::cos(th), -std::sin(th);
    double g_th = 0;
    Vec2 g_t = Vec2::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
      const Vec2 r = dst[i] - t.apply(src[i]);
      g_th += -2 * r.dot(dr * src[i]);
      g_t += -2 * r;
    }
    worst_grad = std::max({worst_grad, std::abs(g_th), g_t.norm()});

    const auto m = svd_align_2d(src, mirrored);
    const double grid_deg = oracle::grid_search_rotation(src, mirrored, nullptr);
    double diff = std::fmod(std::abs(oracle::deg(m.angle()) - grid_deg) + 360.0, 360.0);
    worst_grid = std::max(worst_grid, std::min(diff, 360.0 - diff));
  }
  const bool svd_ok = worst_grad < 1e-6 && worst_grid <= 0.1;
  return {triangles_ok && pairing_ok && scorer_ok && svd_ok,
          fmt("triangles %s, pairing %s, scorer %s, svd gradient %.1e, reflection grid gap %.3f deg",
              triangles_ok ? "ok" : "MISMATCH", pairing_ok ? "ok" : "MISMATCH", scorer_ok ? "ok" : "MISMATCH",
              worst_grad, worst_grid)};
}

Outcome multisession() {
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 5; ++k) {
    RunConfig cfg = load_config("multisession.cfg");
    cfg.sim.seed = 1 + k;
    cfg.odo.seed = 3 + k;
    const auto r = run_multisession(cfg);
    const double ratio = r.ate_after / r.ate_before;
    bool monotone = true;
    for (std::size_t i = 1; i < r.chi2_history.size(); ++i) monotone = monotone && r.chi2_history[i] <= r.chi2_history[i - 1];
    const bool pass = ratio <= 0.1 && r.ate_after <= 0.25 && r.n_false_constraints == 0 && monotone && r.n_components == 1;
    ok = ok && pass;
    detail += fmt("seed %d: ATE %.3f->%.3f m (%.3f), %d constraints, %d false; ", 1 + k, r.ate_before, r.ate_after,
                  ratio, r.n_constraints, r.n_false_constraints);
  }

  std::mt19937_64 rng(909);
  double worst = 0;
  for (int e = 0; e < 100; ++e) {
    const Pose xi = oracle::random_pose(rng), xj = oracle::random_pose(rng), z = oracle::random_pose(rng);
    Mat6 ji, jj;
    edge_jacobians(xi, xj, z, ji, jj);
    for (int c = 0; c < 6; ++c) {
      Vec6 d = Vec6::Zero();
      d[c] = 1e-6;
      const Vec6 fi = (edge_residual(retract(xi, d), xj, z) - edge_residual(retract(xi, -d), xj, z)) / 2e-6;
      const Vec6 fj = (edge_residual(xi, retract(xj, d), z) - edge_residual(xi, retract(xj, -d), z)) / 2e-6;
      worst = std::max({worst, (fi - ji.col(c)).cwiseAbs().maxCoeff(), (fj - jj.col(c)).cwiseAbs().maxCoeff()});
    }
  }
  ok = ok && worst < 1e-4;
  detail += fmt("jacobian max deviation %.1e", worst);
  return {ok, detail};
}

Outcome determinism() {
  RunConfig cfg = load_config("noisy_inter.cfg");
  cfg.exp.max_queries = 120;
  std::string first;
  bool same = true;
  for (int threads : {1, 2, 4, 1}) {
    cfg.exp.threads = threads;
    const auto csv = records_to_csv(run_experiment(cfg).run.records);
    if (first.empty()) first = csv;
    same = same && csv == first;
  }
  return {same && !first.empty(), fmt("per-query CSV across 1/2/4/1 threads %s (%zu bytes)",
                                      same ? "byte-identical" : "DIFFERS", first.size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"rigid invariance", rigid_invariance},
      {"viewpoint correction", viewpoint_correction},
      {"noiseless end-to-end exactness", noiseless_exactness},
      {"noisy inter-session experiment", noisy_inter},
      {"coarse-gate containment", coarse_containment},
      {"latency", latency},
      {"storage scaling", storage},
      {"oracle equivalence", oracle_equivalence},
      {"multi-session pose graph", multisession},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
