#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "treeloc/errors.hpp"
#include "treeloc/experiments.hpp"
#include "treeloc/global_db.hpp"
#include "treeloc/io.hpp"
#include "treeloc/pipeline.hpp"
#include "treeloc/pose_graph.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace treeloc;

namespace {

py::dict to_dict(const PlaceRecognitionSummary& s) {
  py::dict d("queries"_a = s.n_queries, "queries_with_positive"_a = s.n_with_positive,
             "no_positives"_a = s.no_positives, "coarse_containment"_a = s.coarse_containment);
  if (!s.no_positives) {
    d["recall_at_1"] = s.recall_at_1;
    d["max_f1"] = s.max_f1;
    d["auc"] = s.auc;
  }
  return d;
}

py::dict to_dict(const LocalizationSummary& s) {
  return py::dict("queries"_a = s.n_queries, "true_positives"_a = s.n_true_positive, "successes"_a = s.n_success,
                  "recall_at_50"_a = s.recall_at_50, "success_rate"_a = s.success_rate, "te_mean"_a = s.te_mean,
                  "te_median"_a = s.te_median, "re_mean"_a = s.re_mean, "re_median"_a = s.re_median);
}

TdhDescriptor tdh_from(const Eigen::MatrixXd& m) {
  TdhDescriptor d;
  d.n_spatial = static_cast<int>(m.rows());
  d.n_sections = static_cast<int>(m.cols());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) d.flat.push_back(m(r, c));
  return d;
}

Eigen::MatrixXd tdh_to(const TdhDescriptor& d) {
  Eigen::MatrixXd m(d.n_spatial, d.n_sections);
  for (int r = 0; r < d.n_spatial; ++r)
    for (int c = 0; c < d.n_sections; ++c) m(r, c) = d.at(r, c);
  return m;
}

std::vector<Vec2> rows2(const Eigen::MatrixX2d& m) {
  std::vector<Vec2> v;
  for (int i = 0; i < m.rows(); ++i) v.emplace_back(m(i, 0), m(i, 1));
  return v;
}

}  // namespace

PYBIND11_MODULE(_treeloc, m) {
  m.doc() = "Tree-based place recognition and 6-DoF localization";
  m.attr("__version__") = TREELOC_VERSION;
  py::register_exception<Error>(m, "TreelocError");

  py::class_<Pose>(m, "Pose")
      .def(py::init<>())
      .def(py::init([](const Mat3& r, const Vec3& t) { return Pose{r, t}; }), "rotation"_a, "translation"_a)
      .def_readwrite("rotation", &Pose::rotation)
      .def_readwrite("translation", &Pose::translation)
      .def("compose", &Pose::compose)
      .def("inverse", &Pose::inverse)
      .def("apply", &Pose::apply)
      .def("__matmul__", &Pose::compose)
      .def("__repr__", [](const Pose& p) {
        return "Pose(t=[" + std::to_string(p.translation.x()) + ", " + std::to_string(p.translation.y()) + ", " +
               std::to_string(p.translation.z()) + "])";
      });

  m.def("rot_x", &rot_x);
  m.def("rot_y", &rot_y);
  m.def("rot_z", &rot_z);
  m.def("rotation_angle", &rotation_angle, "rotation angle in radians");
  m.def("pose_error", &pose_error, "estimate"_a, "truth"_a, "(translation m, rotation deg)");

  py::class_<TreeObservation>(m, "TreeObservation")
      .def(py::init<>())
      .def_readwrite("id", &TreeObservation::id)
      .def_readwrite("axis", &TreeObservation::axis)
      .def_readwrite("position", &TreeObservation::position)
      .def_readwrite("dbh", &TreeObservation::dbh)
      .def_readwrite("obs_count", &TreeObservation::obs_count)
      .def_readwrite("is_candidate", &TreeObservation::is_candidate);

  py::class_<SceneInventory>(m, "SceneInventory")
      .def(py::init<>())
      .def_readwrite("index", &SceneInventory::index)
      .def_readwrite("pose", &SceneInventory::pose)
      .def_readwrite("trees", &SceneInventory::trees);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def("set", [](RunConfig& c, const std::string& k, const std::string& v) { set_config_value(c, k, v); })
      .def("apply_text", [](RunConfig& c, const std::string& text) { apply_config_text(text, c); })
      .def("to_text", &config_to_text)
      .def("validate", &RunConfig::validate);

  py::class_<AlignmentResult>(m, "AlignmentResult")
      .def_readonly("correction", &AlignmentResult::correction)
      .def_readonly("inlier_ids", &AlignmentResult::inlier_ids)
      .def_readonly("residual", &AlignmentResult::residual)
      .def_readonly("degenerate", &AlignmentResult::degenerate);

  m.def(
      "estimate_axis_alignment",
      [](const std::vector<TreeObservation>& trees, const RunConfig& cfg) {
        return estimate_axis_alignment(trees, cfg.pipeline.align);
      },
      "trees"_a, "config"_a = RunConfig());

  m.def(
      "project_centers",
      [](const SceneInventory& scene, const AlignmentResult& a) {
        const auto p = project(scene, a);
        Eigen::MatrixX2d out(p.trees.size(), 2);
        for (std::size_t i = 0; i < p.trees.size(); ++i) out.row(i) = p.trees[i].center.transpose();
        return out;
      },
      "scene"_a, "alignment"_a, "projected 2D stem centers, one row per tree");

  m.def(
      "tdh",
      [](const SceneInventory& scene, const RunConfig& cfg) { return tdh_to(describe(scene, cfg.pipeline).tdh); },
      "scene"_a, "config"_a = RunConfig(), "smoothed tree distribution histogram (radial x DBH)");
  m.def(
      "chi_square", [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return chi_square(tdh_from(a), tdh_from(b)); },
      "a"_a, "b"_a);
  m.def(
      "triangle_keys",
      [](const SceneInventory& scene, const RunConfig& cfg) { return describe(scene, cfg.pipeline).triangles->keys; },
      "scene"_a, "config"_a = RunConfig(), "sorted unique triangle keys");

  m.def(
      "svd_align_2d",
      [](const Eigen::MatrixX2d& src, const Eigen::MatrixX2d& dst) {
        const auto t = svd_align_2d(rows2(src), rows2(dst));
        return py::make_tuple(Eigen::Matrix2d(t.rotation), Eigen::Vector2d(t.translation));
      },
      "src"_a, "dst"_a, "least-squares rotation and translation mapping src rows onto dst rows");

  py::class_<LocalizationResult>(m, "LocalizationResult")
      .def_readonly("candidate_index", &LocalizationResult::candidate_index)
      .def_readonly("transform_4dof", &LocalizationResult::transform_4dof)
      .def_readonly("transform_6dof", &LocalizationResult::transform_6dof)
      .def_readonly("matched_pairs", &LocalizationResult::matched_pairs)
      .def_readonly("overlap", &LocalizationResult::overlap);

  py::class_<QueryOutcome>(m, "QueryOutcome")
      .def_readonly("coarse", &QueryOutcome::coarse)
      .def_readonly("fine", &QueryOutcome::fine)
      .def_readonly("results", &QueryOutcome::results)
      .def_property_readonly("total_ms", [](const QueryOutcome& o) { return o.timings.total_ms; });

  py::class_<SceneDatabase>(m, "SceneDatabase")
      .def(py::init([](const RunConfig& c) { return SceneDatabase(c.pipeline); }), "config"_a = RunConfig())
      .def("add", [](SceneDatabase& db, const SceneInventory& s) { db.add(describe(s, db.config())); })
      .def("__len__", &SceneDatabase::size)
      .def(
          "query",
          [](const SceneDatabase& db, const SceneInventory& q, std::uint64_t seed) {
            py::gil_scoped_release release;
            return db.query(q, seed);
          },
          "scene"_a, "seed"_a = 0);

  py::class_<GlobalTreeDb>(m, "GlobalTreeDb")
      .def(py::init<double>(), "merge_radius"_a = 0.5)
      .def("insert_session",
           [](GlobalTreeDb& db, const std::vector<SceneInventory>& scenes, const Pose& pose) {
             const auto r = db.insert_session(scenes, pose);
             return py::make_tuple(r.inserted, r.merged);
           })
      .def("local_scene", &GlobalTreeDb::local_scene, "center"_a, "half_extent"_a = 30.0, "scene_index"_a = 0)
      .def("trees", &GlobalTreeDb::trees)
      .def("__len__", &GlobalTreeDb::size)
      .def("save", [](const GlobalTreeDb& db) { return py::bytes(db.save()); })
      .def_static("load", [](const py::bytes& b) { return GlobalTreeDb::load(std::string(b)); })
      .def("export_text", &GlobalTreeDb::export_text)
      .def("__eq__", &GlobalTreeDb::operator==);

  py::class_<PoseEdge>(m, "PoseEdge")
      .def(py::init<>())
      .def_readwrite("src", &PoseEdge::from)
      .def_readwrite("dst", &PoseEdge::to)
      .def_readwrite("measurement", &PoseEdge::measurement)
      .def_readwrite("information", &PoseEdge::information);

  py::class_<PoseGraph>(m, "PoseGraph")
      .def(py::init<>())
      .def_readwrite("nodes", &PoseGraph::nodes)
      .def_readwrite("edges", &PoseGraph::edges)
      .def_readwrite("anchor", &PoseGraph::anchor)
      .def("to_g2o", &write_g2o)
      .def_static("from_g2o", &read_g2o);

  py::class_<OptimizeResult>(m, "OptimizeResult")
      .def_readonly("poses", &OptimizeResult::poses)
      .def_readonly("chi2", &OptimizeResult::chi2)
      .def_readonly("initial_chi2", &OptimizeResult::initial_chi2)
      .def_readonly("iterations", &OptimizeResult::iterations)
      .def_readonly("chi2_history", &OptimizeResult::chi2_history);
  m.def("optimize", &optimize, "graph"_a, "max_iters"_a = 50, "tol"_a = 1e-10);

  m.def(
      "run_experiment",
      [](const RunConfig& cfg) {
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg);
        }
        return py::dict("place_recognition"_a = to_dict(r.pr), "localization"_a = to_dict(r.loc),
                        "records_csv"_a = records_to_csv(r.run.records), "database_size"_a = r.database_size);
      },
      "config"_a);
  m.def(
      "score_records",
      [](const std::string& csv) {
        const auto rec = records_from_csv(csv);
        return py::dict("place_recognition"_a = to_dict(score_place_recognition(rec)),
                        "localization"_a = to_dict(score_localization(rec)));
      },
      "records_csv"_a);
  m.def(
      "run_multisession",
      [](const RunConfig& cfg) {
        MultiSessionReport r;
        {
          py::gil_scoped_release release;
          r = run_multisession(cfg);
        }
        return py::dict("ate_before"_a = r.ate_before, "ate_after"_a = r.ate_after, "are_before"_a = r.are_before,
                        "are_after"_a = r.are_after, "constraints"_a = r.n_constraints,
                        "false_constraints"_a = r.n_false_constraints, "components"_a = r.n_components,
                        "warnings"_a = r.warnings, "merged_trees"_a = r.merged.size());
      },
      "config"_a);
}
