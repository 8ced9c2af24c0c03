#include "treeloc/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>

#include "treeloc/errors.hpp"

namespace treeloc {

namespace {

using Slot = std::variant<int*, double*, std::uint64_t*, bool*, std::string*>;

std::vector<std::pair<std::string, Slot>> slots(RunConfig& c) {
  return {
      {"sim.seed", &c.sim.seed},
      {"sim.area_width", &c.sim.area_width},
      {"sim.area_height", &c.sim.area_height},
      {"sim.tree_density", &c.sim.tree_density},
      {"sim.min_spacing", &c.sim.min_spacing},
      {"sim.dbh_log_mu", &c.sim.dbh_log_mu},
      {"sim.dbh_log_sigma", &c.sim.dbh_log_sigma},
      {"sim.lean_max_deg", &c.sim.lean_max_deg},
      {"sim.terrain_amplitude", &c.sim.terrain_amplitude},
      {"sim.terrain_wavelength", &c.sim.terrain_wavelength},
      {"sim.sensor_height", &c.sim.sensor_height},
      {"sim.sensor_range", &c.sim.sensor_range},
      {"sim.detect_prob", &c.sim.detect_prob},
      {"sim.dropout_extra", &c.sim.dropout_extra},
      {"sim.candidate_prob", &c.sim.candidate_prob},
      {"sim.noise_center", &c.sim.noise_center},
      {"sim.noise_dbh", &c.sim.noise_dbh},
      {"sim.noise_base", &c.sim.noise_base},
      {"sim.noise_axis_deg", &c.sim.noise_axis_deg},
      {"sim.payload_spacing", &c.sim.payload_spacing},
      {"sim.viewpoint_rp_max_deg", &c.sim.viewpoint_rp_max_deg},
      {"sim.scans_per_payload", &c.sim.scans_per_payload},
      {"sim.shared_scans", &c.sim.shared_scans},
      {"assembly.window_size", &c.pipeline.assembly.window_size},
      {"assembly.merge_radius", &c.pipeline.assembly.merge_radius},
      {"assembly.min_trees", &c.pipeline.assembly.min_trees},
      {"assembly.candidate_min_obs", &c.pipeline.assembly.candidate_min_obs},
      {"align.ransac_iters", &c.pipeline.align.ransac_iters},
      {"align.angle_tol_deg", &c.pipeline.align.angle_tol_deg},
      {"align.max_iters", &c.pipeline.align.max_iters},
      {"align.max_tilt_deg", &c.pipeline.align.max_tilt_deg},
      {"align.seed", &c.pipeline.align.seed},
      {"tdh.n_spatial", &c.pipeline.tdh.n_spatial},
      {"tdh.n_sections", &c.pipeline.tdh.n_sections},
      {"tdh.r_res", &c.pipeline.tdh.r_res},
      {"tdh.w_range", &c.pipeline.tdh.w_range},
      {"tdh.r_min", &c.pipeline.tdh.r_min},
      {"tdh.r_max", &c.pipeline.tdh.r_max},
      {"tdh.w_dbh", &c.pipeline.tdh.w_dbh},
      {"tdh.w_dbh_overlap", &c.pipeline.tdh.w_dbh_overlap},
      {"tdh.top_k", &c.pipeline.tdh.top_k},
      {"tri.knn", &c.pipeline.tri.knn},
      {"tri.min_side", &c.pipeline.tri.min_side},
      {"tri.max_side", &c.pipeline.tri.max_side},
      {"tri.len_quant", &c.pipeline.tri.len_quant},
      {"tri.top_m", &c.pipeline.tri.top_m},
      {"tri.min_altitude", &c.pipeline.tri.min_altitude},
      {"tri.count_multiplicity", &c.pipeline.tri.count_multiplicity},
      {"verify.centroid_inlier_tol", &c.pipeline.verify.centroid_inlier_tol},
      {"verify.planar_gate", &c.pipeline.verify.planar_gate},
      {"verify.dbh_gate", &c.pipeline.verify.dbh_gate},
      {"verify.dz_inlier_tol", &c.pipeline.verify.dz_inlier_tol},
      {"verify.min_refine_pairs", &c.pipeline.verify.min_refine_pairs},
      {"verify.ransac_iters", &c.pipeline.verify.ransac_iters},
      {"verify.overlap_accept", &c.pipeline.verify.overlap_accept},
      {"verify.max_pairs_per_key", &c.pipeline.verify.max_pairs_per_key},
      {"exp.mode", &c.exp.mode},
      {"exp.scene_stride", &c.exp.scene_stride},
      {"exp.margin", &c.exp.margin},
      {"exp.lane_spacing", &c.exp.lane_spacing},
      {"exp.reverse_second", &c.exp.reverse_second},
      {"exp.lateral_offset", &c.exp.lateral_offset},
      {"exp.tp_radius", &c.exp.tp_radius},
      {"exp.exclusion_window", &c.exp.exclusion_window},
      {"exp.max_queries", &c.exp.max_queries},
      {"exp.threads", &c.exp.threads},
      {"exp.query_seed", &c.exp.query_seed},
      {"exp.n_sessions", &c.exp.n_sessions},
      {"exp.disjoint_worlds", &c.exp.disjoint_worlds},
      {"exp.odo_sigma_t", &c.exp.odo_sigma_t},
      {"exp.odo_sigma_r_deg", &c.exp.odo_sigma_r_deg},
      {"exp.loop_sigma_t", &c.exp.loop_sigma_t},
      {"exp.loop_sigma_r_deg", &c.exp.loop_sigma_r_deg},
      {"exp.graph_iters", &c.exp.graph_iters},
      {"exp.bench_scenes", &c.exp.bench_scenes},
      {"exp.bench_queries", &c.exp.bench_queries},
      {"exp.ondemand_half_extent", &c.exp.ondemand_half_extent},
      {"odo.lateral_bias", &c.odo.lateral_bias},
      {"odo.sigma_t", &c.odo.sigma_t},
      {"odo.sigma_r_deg", &c.odo.sigma_r_deg},
      {"odo.seed", &c.odo.seed},
  };
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw Error(ErrorCode::ConfigError, "invalid value '" + v + "' for " + key);
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string pose_fields(const Pose& p, char sep) {
  const auto q = p.quaternion();
  std::string s;
  for (double v : {p.translation.x(), p.translation.y(), p.translation.z(), q.x(), q.y(), q.z(), q.w()}) {
    s += sep;
    s += fmt(v);
  }
  return s;
}

Pose pose_from(const std::vector<double>& v, std::size_t at) {
  const Eigen::Quaterniond q(v[at + 6], v[at + 3], v[at + 4], v[at + 5]);
  if (!(q.norm() > 0)) throw Error(ErrorCode::FormatError, "zero quaternion");
  return Pose::from_quaternion(q, Vec3(v[at], v[at + 1], v[at + 2]));
}

std::string tree_line(const TreeObservation& t) {
  std::string s = "TREE " + std::to_string(t.id);
  for (double v : {t.position.x(), t.position.y(), t.position.z(), t.axis.x(), t.axis.y(), t.axis.z(), t.dbh})
    s += ' ' + fmt(v);
  s += ' ' + std::to_string(t.obs_count) + ' ' + (t.is_candidate ? "1" : "0") + '\n';
  return s;
}

std::vector<double> numbers(std::istringstream& ls, std::size_t n, int lineno) {
  std::vector<double> v;
  std::string tok;
  while (ls >> tok) {
    double x = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      throw Error(ErrorCode::FormatError, "bad number on line " + std::to_string(lineno));
    v.push_back(x);
  }
  if (v.size() != n) throw Error(ErrorCode::FormatError, "wrong field count on line " + std::to_string(lineno));
  return v;
}

TreeObservation tree_from(const std::vector<double>& v, int lineno) {
  TreeObservation t;
  t.id = static_cast<TreeId>(v[0]);
  t.position = Vec3(v[1], v[2], v[3]);
  const Vec3 axis(v[4], v[5], v[6]);
  if (!(axis.norm() > 0)) throw Error(ErrorCode::FormatError, "zero axis on line " + std::to_string(lineno));
  t.axis = std::abs(axis.norm() - 1.0) > 1e-12 ? canonicalize_axis(axis.normalized()) : axis;
  t.dbh = v[7];
  t.obs_count = static_cast<int>(v[8]);
  t.is_candidate = v[9] != 0;
  return t;
}

// Shared reader for PAYLOAD and SCENE blocks.
template <class Block>
std::vector<Block> read_blocks(const std::string& text, const std::string& header) {
  std::vector<Block> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == header) {
      const auto v = numbers(ls, 8, lineno);
      Block b;
      b.index = static_cast<int>(v[0]);
      b.pose = pose_from(v, 1);
      out.push_back(std::move(b));
    } else if (tag == "TREE") {
      if (out.empty()) throw Error(ErrorCode::FormatError, "TREE before " + header + " on line " + std::to_string(lineno));
      out.back().trees.push_back(tree_from(numbers(ls, 10, lineno), lineno));
    } else {
      throw Error(ErrorCode::FormatError, "unknown record '" + tag + "' on line " + std::to_string(lineno));
    }
  }
  return out;
}

template <class Block>
std::string write_blocks(const std::vector<Block>& blocks, const std::string& header) {
  std::string s;
  for (const auto& b : blocks) {
    s += header + ' ' + std::to_string(b.index) + pose_fields(b.pose, ' ') + '\n';
    for (const auto& t : b.trees) s += tree_line(t);
  }
  return s;
}

}  // namespace

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (auto& [name, slot] : slots(cfg)) {
    if (name != key) continue;
    std::visit(
        [&](auto* p) {
          using T = std::remove_pointer_t<decltype(p)>;
          if constexpr (std::is_same_v<T, std::string>) {
            *p = value;
          } else if constexpr (std::is_same_v<T, bool>) {
            if (value == "true" || value == "1") *p = true;
            else if (value == "false" || value == "0") *p = false;
            else throw Error(ErrorCode::ConfigError, "invalid boolean '" + value + "' for " + key);
          } else {
            *p = parse_number<T>(key, value);
          }
        },
        slot);
    return;
  }
  throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
}

void apply_config_text(const std::string& text, RunConfig& cfg) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ConfigError, "expected key = value on line " + std::to_string(lineno));
    set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::string config_to_text(const RunConfig& cfg) {
  RunConfig copy = cfg;
  auto all = slots(copy);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string s;
  for (const auto& [name, slot] : all) {
    s += name + " = ";
    std::visit(
        [&](auto* p) {
          using T = std::remove_pointer_t<decltype(p)>;
          if constexpr (std::is_same_v<T, std::string>) s += *p;
          else if constexpr (std::is_same_v<T, bool>) s += *p ? "true" : "false";
          else if constexpr (std::is_same_v<T, double>) s += fmt(*p);
          else s += std::to_string(*p);
        },
        slot);
    s += '\n';
  }
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::FormatError, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << contents)) throw Error(ErrorCode::FormatError, "cannot write " + path);
}

std::string session_to_text(const std::vector<Payload>& payloads) { return write_blocks(payloads, "PAYLOAD"); }
std::vector<Payload> session_from_text(const std::string& text) { return read_blocks<Payload>(text, "PAYLOAD"); }
std::string scenes_to_text(const std::vector<SceneInventory>& scenes) { return write_blocks(scenes, "SCENE"); }
std::vector<SceneInventory> scenes_from_text(const std::string& text) {
  return read_blocks<SceneInventory>(text, "SCENE");
}

std::string poses_to_csv(const std::map<int, Pose>& poses) {
  std::string s = "index,tx,ty,tz,qx,qy,qz,qw\n";
  for (const auto& [id, p] : poses) s += std::to_string(id) + pose_fields(p, ',') + '\n';
  return s;
}

std::map<int, Pose> poses_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::map<int, Pose> out;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (lineno == 1 || trim(line).empty()) continue;
    for (auto& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream ls(line);
    const auto v = numbers(ls, 8, lineno);
    out[static_cast<int>(v[0])] = pose_from(v, 1);
  }
  return out;
}

std::string association_to_csv(const std::vector<AssociationRow>& rows) {
  std::string s = "payload_index,local_tree_id,world_tree_id\n";
  for (const auto& r : rows)
    s += std::to_string(r.payload_index) + ',' + std::to_string(r.local_tree_id) + ',' +
         std::to_string(r.world_tree_id) + '\n';
  return s;
}

std::string world_to_text(const std::vector<WorldTree>& world) {
  std::string s;
  for (const auto& t : world) {
    s += std::to_string(t.id);
    for (double v : {t.position.x(), t.position.y(), t.position.z(), t.axis.x(), t.axis.y(), t.axis.z(), t.dbh})
      s += ' ' + fmt(v);
    s += " 1\n";
  }
  return s;
}

std::string manifest_text(const std::string& command, const RunConfig& cfg, const std::vector<std::string>& inputs) {
  std::string s = "treeloc_version = " TREELOC_VERSION "\ncommand = " + command + '\n';
#ifdef EIGEN_WORLD_VERSION
  s += "eigen_version = " + std::to_string(EIGEN_WORLD_VERSION) + '.' + std::to_string(EIGEN_MAJOR_VERSION) + '.' +
       std::to_string(EIGEN_MINOR_VERSION) + '\n';
#endif
  for (std::size_t i = 0; i < inputs.size(); ++i) s += "input" + std::to_string(i) + " = " + inputs[i] + '\n';
  return s + config_to_text(cfg);
}

}  // namespace treeloc
