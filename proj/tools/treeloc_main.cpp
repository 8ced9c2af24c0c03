// treeloc command-line front end.
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "treeloc/errors.hpp"
#include "treeloc/experiments.hpp"
#include "treeloc/global_db.hpp"
#include "treeloc/io.hpp"

namespace fs = std::filesystem;
using namespace treeloc;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  std::string out = ".";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "flat key = value config file")->check(CLI::ExistingFile);
  app->add_option("--set", c.overrides, "override a config key, e.g. --set tdh.r_res=5");
  app->add_option_function<std::uint64_t>(
      "--seed", [&c](const std::uint64_t& s) { c.seed = s, c.seed_set = true; }, "simulation seed");
  app->add_option("--threads", c.threads, "worker threads")->check(CLI::Range(1, 1024));
  app->add_option("--out", c.out, "output directory");
}

RunConfig load_config(const Common& c) {
  RunConfig cfg;
  if (!c.config.empty()) apply_config_text(read_file(c.config), cfg);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed_set) cfg.sim.seed = c.seed;
  if (c.threads > 0) cfg.exp.threads = c.threads;
  cfg.validate();
  return cfg;
}

fs::path out_dir(const Common& c) {
  fs::path p(c.out);
  fs::create_directories(p);
  return p;
}

void emit(const fs::path& dir, const std::string& name, const std::string& text) {
  write_file((dir / name).string(), text);
}

std::map<int, Pose> scene_poses(const std::vector<SceneInventory>& scenes) {
  std::map<int, Pose> m;
  for (const auto& s : scenes) m[s.index] = s.pose;
  return m;
}

int cmd_simulate(const Common& c, int n_sessions) {
  const auto cfg = load_config(c);
  const auto dir = out_dir(c);
  const auto world = generate_world(cfg.sim);
  emit(dir, "world.txt", world_to_text(world));
  const auto lanes = lawnmower_waypoints(cfg.sim, cfg.exp.margin, cfg.exp.lane_spacing);
  for (int s = 0; s < n_sessions; ++s) {
    auto wp = lanes;
    if (s % 2 == 1) {
      if (cfg.exp.reverse_second) std::reverse(wp.begin(), wp.end());
      for (auto& p : wp) p.y() += cfg.exp.lateral_offset;
    }
    const auto data = simulate_session(world, make_trajectory(wp, cfg.sim), cfg.sim, static_cast<std::uint64_t>(s) + 1);
    std::map<int, Pose> truth;
    for (const auto& p : data.payloads) truth[p.index] = p.pose;
    const auto tag = std::to_string(s);
    emit(dir, "session_" + tag + ".txt", session_to_text(data.payloads));
    emit(dir, "truth_" + tag + ".csv", poses_to_csv(truth));
    emit(dir, "assoc_" + tag + ".csv", association_to_csv(data.association));
    std::cout << "session " << s << ": " << data.payloads.size() << " payloads, " << data.association.size()
              << " detections\n";
  }
  emit(dir, "manifest.txt", manifest_text("simulate", cfg));
  std::cout << "world: " << world.size() << " trees\n";
  return kOk;
}

int cmd_assemble(const Common& c, const std::string& session, int stride, int offset) {
  const auto cfg = load_config(c);
  const auto dir = out_dir(c);
  SessionData data;
  data.payloads = session_from_text(read_file(session));
  std::vector<Pose> poses;
  for (const auto& p : data.payloads) poses.push_back(p.pose);
  const auto set = build_scene_set(data, poses, cfg.pipeline.assembly, stride, offset);
  emit(dir, "scenes.txt", scenes_to_text(set.scenes));
  emit(dir, "manifest.txt", manifest_text("assemble", cfg, {session}));
  std::cout << set.scenes.size() << " scenes\n";
  return kOk;
}

int cmd_index(const Common& c, const std::string& scenes_file) {
  const auto cfg = load_config(c);
  const auto dir = out_dir(c);
  const auto scenes = scenes_from_text(read_file(scenes_file));
  const auto described = describe_all(scenes, cfg.pipeline, cfg.exp.threads);
  std::ostringstream os;
  os.precision(17);
  os << "scene,trees,triangles,inliers,tdh\n";
  for (const auto& d : described) {
    os << d.scene.index << ',' << d.scene.trees.size() << ',' << d.triangles->descriptors.size() << ','
       << d.projected.alignment.inlier_ids.size() << ',';
    for (std::size_t i = 0; i < d.tdh.flat.size(); ++i) os << (i ? " " : "") << d.tdh.flat[i];
    os << '\n';
  }
  emit(dir, "descriptors.csv", os.str());
  emit(dir, "manifest.txt", manifest_text("index", cfg, {scenes_file}));
  std::cout << described.size() << " scenes indexed\n";
  return kOk;
}

int cmd_query(const Common& c, const std::string& db_file, const std::string& query_file) {
  const auto cfg = load_config(c);
  const auto dir = out_dir(c);
  const auto db_scenes = scenes_from_text(read_file(db_file));
  const auto queries = scenes_from_text(read_file(query_file));
  SceneDatabase db(cfg.pipeline);
  for (auto& d : describe_all(db_scenes, cfg.pipeline, cfg.exp.threads)) db.add(std::move(d));

  EvalOptions opt;
  opt.tp_radius = cfg.exp.tp_radius;
  opt.seed = cfg.exp.query_seed;
  opt.threads = cfg.exp.threads;
  opt.intra = cfg.exp.mode == "intra";
  opt.exclusion_window = cfg.exp.exclusion_window;
  // scene poses double as truth: meaningful when the inputs came from ground-truthed sessions
  const auto run = evaluate_queries(db, scene_poses(db_scenes), queries, scene_poses(queries), opt);
  emit(dir, "records.csv", records_to_csv(run.records));
  emit(dir, "timings.csv", timings_to_csv(run.timings));
  emit(dir, "summary.txt", summary_to_text(score_place_recognition(run.records)) +
                               summary_to_text(score_localization(run.records)));
  emit(dir, "manifest.txt", manifest_text("query", cfg, {db_file, query_file}));
  int found = 0;
  for (const auto& r : run.records) found += r.retrieved >= 0;
  std::cout << found << " of " << run.records.size() << " queries verified\n";
  return kOk;
}

int cmd_eval(const Common& c, bool localization, const std::string& records_file) {
  const auto cfg = load_config(c);
  const auto dir = out_dir(c);
  std::vector<QueryRecord> records;
  if (!records_file.empty()) {
    records = records_from_csv(read_file(records_file));
  } else {
    const auto res = run_experiment(cfg);
    records = res.run.records;
    emit(dir, "records.csv", records_to_csv(records));
    emit(dir, "timings.csv", timings_to_csv(res.run.timings));
  }
  const auto pr = score_place_recognition(records);
  const auto loc = score_localization(records);
  const std::string summary = localization ? summary_to_text(loc) : summary_to_text(pr);
  if (!localization) emit(dir, "pr_curve.csv", pr_to_csv(pr_curve(records)));
  emit(dir, "summary.txt", summary);
  emit(dir, "manifest.txt", manifest_text(localization ? "eval-loc" : "eval-pr", cfg,
                                          records_file.empty() ? std::vector<std::string>{} : std::vector{records_file}));
  std::cout << summary;
  if (!localization && pr.no_positives) std::cerr << "warning: no positives; AUC and F1 are undefined\n";
  return kOk;
}

int cmd_multisession(const Common& c) {
  const auto cfg = load_config(c);
  const auto dir = out_dir(c);
  const auto rep = run_multisession(cfg);
  std::ostringstream traj;
  traj.precision(17);
  traj << "node,session,est_x,est_y,est_z,opt_x,opt_y,opt_z,true_x,true_y,true_z\n";
  for (const auto& [id, p] : rep.graph.nodes) {
    const auto& o = rep.optimized.at(id).translation;
    const auto& t = rep.truth.at(id).translation;
    traj << id << ',' << rep.node_session.at(id) << ',' << p.translation.x() << ',' << p.translation.y() << ','
         << p.translation.z() << ',' << o.x() << ',' << o.y() << ',' << o.z() << ',' << t.x() << ',' << t.y() << ','
         << t.z() << '\n';
  }
  emit(dir, "trajectories.csv", traj.str());
  emit(dir, "optimized_poses.csv", poses_to_csv(rep.optimized));
  emit(dir, "graph.g2o", write_g2o(rep.graph));
  emit(dir, "merged.tldb", rep.merged.save());
  emit(dir, "report.txt", report_to_text(rep));
  emit(dir, "manifest.txt", manifest_text("multisession", cfg));
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << report_to_text(rep);
  return kOk;
}

int cmd_db(const Common& c, const std::string& action, const std::vector<std::string>& inputs) {
  if (action == "build") {
    const auto cfg = load_config(c);
    const auto dir = out_dir(c);
    GlobalTreeDb db(cfg.pipeline.assembly.merge_radius);
    for (const auto& f : inputs) {
      const auto rep = db.insert_session(scenes_from_text(read_file(f)), Pose::identity());
      std::cout << f << ": " << rep.inserted << " inserted, " << rep.merged << " merged\n";
    }
    emit(dir, "global.tldb", db.save());
    emit(dir, "manifest.txt", manifest_text("db build", cfg, inputs));
    return kOk;
  }
  if (inputs.size() != 1) throw CLI::ValidationError("db " + action, "expects exactly one database file");
  const auto db = GlobalTreeDb::load(read_file(inputs[0]));
  if (action == "info") {
    const auto bytes = db.save().size();
    std::cout << "trees = " << db.size() << "\nnext_id = " << db.next_id() << "\nmerge_radius = " << db.merge_radius()
              << "\nbytes = " << bytes << "\nbytes_per_tree = "
              << (db.size() ? double(bytes - GlobalTreeDb::kHeaderBytes) / db.size() : 0.0) << '\n';
  } else if (action == "export") {
    if (c.out == ".") {
      std::cout << db.export_text();
    } else {
      emit(out_dir(c), "global.txt", db.export_text());
    }
  } else {
    throw CLI::ValidationError("db", "unknown action '" + action + "' (info, export, build)");
  }
  return kOk;
}

int cmd_bench(const Common& c) {
  const auto cfg = load_config(c);
  const auto dir = out_dir(c);
  const auto rep = run_bench(cfg);
  emit(dir, "bench.txt", report_to_text(rep));
  emit(dir, "manifest.txt", manifest_text("bench", cfg));
  std::cout << report_to_text(rep);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"treeloc: tree-based place recognition and localization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(TREELOC_VERSION));

  Common common;
  int n_sessions = 2, stride = 1, offset = 0;
  std::string session_file, scenes_file, db_file, query_file, records_file, db_action;
  std::vector<std::string> db_inputs;

  auto* sim = app.add_subcommand("simulate", "generate a world and noisy sessions");
  add_common(sim, common);
  sim->add_option("--sessions", n_sessions, "number of traversals")->check(CLI::Range(1, 64));

  auto* asmb = app.add_subcommand("assemble", "build scene inventories from a session file");
  add_common(asmb, common);
  asmb->add_option("--session", session_file)->required()->check(CLI::ExistingFile);
  asmb->add_option("--stride", stride, "payloads between scene centers")->check(CLI::Range(1, 1 << 20));
  asmb->add_option("--index-offset", offset, "first scene index");

  auto* idx = app.add_subcommand("index", "compute descriptors for a scenes file");
  add_common(idx, common);
  idx->add_option("--scenes", scenes_file)->required()->check(CLI::ExistingFile);

  auto* qry = app.add_subcommand("query", "localize query scenes against a scene database");
  add_common(qry, common);
  qry->add_option("--db", db_file)->required()->check(CLI::ExistingFile);
  qry->add_option("--queries", query_file)->required()->check(CLI::ExistingFile);

  auto* epr = app.add_subcommand("eval-pr", "place-recognition experiment (R@1, F1, AUC)");
  add_common(epr, common);
  epr->add_option("--records", records_file, "re-score an existing records.csv")->check(CLI::ExistingFile);

  auto* eloc = app.add_subcommand("eval-loc", "localization experiment (R@50, SR, TE, RE)");
  add_common(eloc, common);
  eloc->add_option("--records", records_file, "re-score an existing records.csv")->check(CLI::ExistingFile);

  auto* ms = app.add_subcommand("multisession", "multi-session pose-graph demo");
  add_common(ms, common);

  auto* dbc = app.add_subcommand("db", "global tree database: info, export, build");
  add_common(dbc, common);
  dbc->add_option("action", db_action)->required()->check(CLI::IsMember({"info", "export", "build"}));
  dbc->add_option("inputs", db_inputs, "database file (info/export) or scenes files (build)")->required();

  auto* bench = app.add_subcommand("bench", "latency and storage benchmark");
  add_common(bench, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(common, n_sessions);
    if (asmb->parsed()) return cmd_assemble(common, session_file, stride, offset);
    if (idx->parsed()) return cmd_index(common, scenes_file);
    if (qry->parsed()) return cmd_query(common, db_file, query_file);
    if (epr->parsed()) return cmd_eval(common, false, records_file);
    if (eloc->parsed()) return cmd_eval(common, true, records_file);
    if (ms->parsed()) return cmd_multisession(common);
    if (dbc->parsed()) return cmd_db(common, db_action, db_inputs);
    if (bench->parsed()) return cmd_bench(common);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? kUsage : kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}
