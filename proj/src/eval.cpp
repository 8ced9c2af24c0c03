#include "treeloc/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "treeloc/errors.hpp"

namespace treeloc {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorCode::FormatError, "bad number '" + s + "'");
  return v;
}

int parse_int(const std::string& s) {
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorCode::FormatError, "bad integer '" + s + "'");
  return v;
}

constexpr const char* kRecordHeader = "query,retrieved,distance,overlap,te,re,has_positive,truth,tp_in_coarse,matched";

}  // namespace

std::vector<PrPoint> pr_curve(const std::vector<QueryRecord>& records, int n_thresholds) {
  std::vector<PrPoint> curve;
  int positives = 0;
  for (const auto& r : records) positives += r.has_positive;
  for (int k = 0; k < n_thresholds; ++k) {
    const double t = n_thresholds > 1 ? static_cast<double>(k) / (n_thresholds - 1) : 0.0;
    int tp = 0, fp = 0;
    for (const auto& r : records) {
      if (r.retrieved < 0 || r.overlap < t) continue;
      (r.truth ? tp : fp)++;
    }
    PrPoint p;
    p.threshold = t;
    p.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp);
    p.recall = positives == 0 ? 0.0 : static_cast<double>(tp) / positives;
    curve.push_back(p);
  }
  return curve;
}

double pr_auc(const std::vector<PrPoint>& curve) {
  double area = 0, prev_r = 0, prev_p = 1;
  for (auto it = curve.rbegin(); it != curve.rend(); ++it) {
    area += (it->recall - prev_r) * (it->precision + prev_p) / 2;
    prev_r = it->recall;
    prev_p = it->precision;
  }
  return area;
}

PlaceRecognitionSummary score_place_recognition(const std::vector<QueryRecord>& records, int n_thresholds) {
  PlaceRecognitionSummary s;
  s.n_queries = static_cast<int>(records.size());
  int hits = 0, contained = 0;
  for (const auto& r : records) {
    if (!r.has_positive) continue;
    ++s.n_with_positive;
    hits += r.truth;
    contained += r.tp_in_coarse;
  }
  s.no_positives = s.n_with_positive == 0;
  if (s.no_positives) return s;
  s.recall_at_1 = static_cast<double>(hits) / s.n_with_positive;
  s.coarse_containment = static_cast<double>(contained) / s.n_with_positive;
  const auto curve = pr_curve(records, n_thresholds);
  for (const auto& p : curve)
    if (p.precision + p.recall > 0)
      s.max_f1 = std::max(s.max_f1, 2 * p.precision * p.recall / (p.precision + p.recall));
  s.auc = pr_auc(curve);
  return s;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

LocalizationSummary score_localization(const std::vector<QueryRecord>& records) {
  LocalizationSummary s;
  s.n_queries = static_cast<int>(records.size());
  std::vector<double> te, re;
  for (const auto& r : records) {
    if (!(r.retrieved >= 0 && r.truth)) continue;
    ++s.n_true_positive;
    if (r.te <= kSuccessTe && r.re <= kSuccessRe) {
      te.push_back(r.te);
      re.push_back(r.re);
    }
  }
  s.n_success = static_cast<int>(te.size());
  if (s.n_queries) s.recall_at_50 = static_cast<double>(s.n_success) / s.n_queries;
  if (s.n_true_positive) s.success_rate = static_cast<double>(s.n_success) / s.n_true_positive;
  if (!te.empty()) {
    double st = 0, sr = 0;
    for (std::size_t i = 0; i < te.size(); ++i) st += te[i], sr += re[i];
    s.te_mean = st / te.size();
    s.re_mean = sr / re.size();
    s.te_median = median(te);
    s.re_median = median(re);
  }
  return s;
}

std::pair<double, double> pose_error(const Pose& estimate, const Pose& truth) {
  const double te = (estimate.translation - truth.translation).norm();
  const double re = rotation_angle(estimate.rotation.transpose() * truth.rotation) * 180.0 / M_PI;
  return {te, re};
}

std::string records_to_csv(const std::vector<QueryRecord>& records) {
  std::ostringstream os;
  os << kRecordHeader << '\n';
  for (const auto& r : records)
    os << r.query << ',' << r.retrieved << ',' << fmt(r.distance) << ',' << fmt(r.overlap) << ',' << fmt(r.te)
       << ',' << fmt(r.re) << ',' << int(r.has_positive) << ',' << int(r.truth) << ',' << int(r.tp_in_coarse)
       << ',' << r.matched << '\n';
  return os.str();
}

std::vector<QueryRecord> records_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kRecordHeader) throw Error(ErrorCode::FormatError, "bad record header");
  std::vector<QueryRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw Error(ErrorCode::FormatError, "bad record row: " + line);
    QueryRecord r;
    r.query = parse_int(f[0]);
    r.retrieved = parse_int(f[1]);
    r.distance = parse_double(f[2]);
    r.overlap = parse_double(f[3]);
    r.te = parse_double(f[4]);
    r.re = parse_double(f[5]);
    r.has_positive = parse_int(f[6]) != 0;
    r.truth = parse_int(f[7]) != 0;
    r.tp_in_coarse = parse_int(f[8]) != 0;
    r.matched = parse_int(f[9]);
    out.push_back(r);
  }
  return out;
}

std::string timings_to_csv(const std::vector<QueryTiming>& timings) {
  std::ostringstream os;
  os << "query,align_ms,tdh_ms,fine_ms,verify_ms,total_ms\n";
  for (const auto& t : timings)
    os << t.query << ',' << fmt(t.align_ms) << ',' << fmt(t.tdh_ms) << ',' << fmt(t.fine_ms) << ','
       << fmt(t.verify_ms) << ',' << fmt(t.total_ms) << '\n';
  return os.str();
}

std::string pr_to_csv(const std::vector<PrPoint>& curve) {
  std::ostringstream os;
  os << "threshold,precision,recall\n";
  for (const auto& p : curve) os << fmt(p.threshold) << ',' << fmt(p.precision) << ',' << fmt(p.recall) << '\n';
  return os.str();
}

std::string summary_to_text(const PlaceRecognitionSummary& s) {
  std::ostringstream os;
  os << "queries = " << s.n_queries << '\n' << "queries_with_positive = " << s.n_with_positive << '\n';
  if (s.no_positives) {
    os << "no_positives = true\n";
    return os.str();
  }
  os << "recall_at_1 = " << fmt(s.recall_at_1) << '\n'
     << "max_f1 = " << fmt(s.max_f1) << '\n'
     << "auc = " << fmt(s.auc) << '\n'
     << "coarse_containment = " << fmt(s.coarse_containment) << '\n';
  return os.str();
}

std::string summary_to_text(const LocalizationSummary& s) {
  std::ostringstream os;
  os << "queries = " << s.n_queries << '\n'
     << "true_positives = " << s.n_true_positive << '\n'
     << "successes = " << s.n_success << '\n'
     << "recall_at_50 = " << fmt(s.recall_at_50) << '\n'
     << "success_rate = " << fmt(s.success_rate) << '\n'
     << "te_mean = " << fmt(s.te_mean) << '\n'
     << "te_median = " << fmt(s.te_median) << '\n'
     << "re_mean = " << fmt(s.re_mean) << '\n'
     << "re_median = " << fmt(s.re_median) << '\n';
  return os.str();
}

}  // namespace treeloc
