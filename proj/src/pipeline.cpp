#include "treeloc/pipeline.hpp"

#include <chrono>

namespace treeloc {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

void PipelineConfig::validate() const {
  assembly.validate();
  tdh.validate();
  tri.validate();
  verify.validate();
}

DescribedScene describe(const SceneInventory& scene, const PipelineConfig& cfg, StageTimings* timings) {
  DescribedScene d;
  d.scene = scene;

  auto t0 = Clock::now();
  AlignConfig align = cfg.align;
  align.seed = mix_seed(cfg.align.seed, static_cast<std::uint64_t>(scene.index));
  d.projected = project(scene, estimate_axis_alignment(scene.trees, align));
  if (timings) timings->align_ms += ms_since(t0);

  t0 = Clock::now();
  d.tdh = build_tdh(d.projected, cfg.tdh);
  if (timings) timings->tdh_ms += ms_since(t0);

  t0 = Clock::now();
  d.triangles = std::make_shared<const TriangleEntry>(TriangleEntry::from(build_triangles(d.projected, cfg.tri)));
  if (timings) timings->fine_ms += ms_since(t0);
  return d;
}

void SceneDatabase::add(DescribedScene scene) {
  const int idx = scene.scene.index;
  if (auto it = by_index_.find(idx); it != by_index_.end()) {
    scenes_[it->second] = std::move(scene);
  } else {
    by_index_[idx] = scenes_.size();
    scenes_.push_back(std::move(scene));
  }
  const auto& stored = scenes_[by_index_[idx]];
  tri_index_.insert(idx, stored.triangles);

  tdh_view_.clear();
  tdh_view_.reserve(scenes_.size());
  for (const auto& s : scenes_) tdh_view_.emplace_back(s.scene.index, &s.tdh);
}

const DescribedScene* SceneDatabase::find(int scene_index) const {
  auto it = by_index_.find(scene_index);
  return it == by_index_.end() ? nullptr : &scenes_[it->second];
}

QueryOutcome SceneDatabase::query(const DescribedScene& q, std::uint64_t seed,
                                  const std::function<bool(int)>& excluded) const {
  QueryOutcome out;
  const auto start = Clock::now();

  auto t0 = Clock::now();
  out.coarse = coarse_retrieve(q.tdh, tdh_view_, cfg_.tdh, excluded);
  out.timings.tdh_ms += ms_since(t0);

  t0 = Clock::now();
  out.fine = fine_retrieve(*q.triangles, out.coarse, tri_index_, cfg_.tri);
  out.timings.fine_ms += ms_since(t0);

  t0 = Clock::now();
  std::vector<CandidateView> views;
  for (int idx : out.fine) {
    const auto* s = find(idx);
    views.push_back({idx, &s->projected, s->triangles.get()});
  }
  out.results = verify_candidates(q.projected, *q.triangles, views, cfg_.verify, seed);
  if (!out.results.empty()) out.best_distance = chi_square(q.tdh, find(out.results.front().candidate_index)->tdh);
  out.timings.verify_ms += ms_since(t0);

  out.timings.total_ms = ms_since(start);
  return out;
}

QueryOutcome SceneDatabase::query(const SceneInventory& q, std::uint64_t seed,
                                  const std::function<bool(int)>& excluded) const {
  const auto start = Clock::now();
  StageTimings describe_t;
  const auto described = describe(q, cfg_, &describe_t);
  auto out = query(described, seed, excluded);
  out.timings.align_ms += describe_t.align_ms;
  out.timings.tdh_ms += describe_t.tdh_ms;
  out.timings.fine_ms += describe_t.fine_ms;
  out.timings.total_ms = ms_since(start);
  return out;
}

}  // namespace treeloc
