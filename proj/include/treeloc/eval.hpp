#pragma once

#include <string>
#include <vector>

#include "treeloc/model.hpp"

namespace treeloc {

/// One evaluated query. This is the audit trail: every aggregate is a function
/// of these records alone.
struct QueryRecord {
  int query = 0;
  int retrieved = -1;      // -1: nothing verified
  double distance = 0;     // chi-square TDH distance to the retrieved scene
  double overlap = 0;      // decision score
  double te = 0;           // m, vs ground truth
  double re = 0;           // deg, vs ground truth
  bool has_positive = false;  // some admissible database scene lies within the truth radius
  bool truth = false;         // the retrieved scene lies within the truth radius
  bool tp_in_coarse = false;  // a true positive survived the TDH gate
  int matched = 0;
};

struct QueryTiming {
  int query = 0;
  double align_ms = 0, tdh_ms = 0, fine_ms = 0, verify_ms = 0, total_ms = 0;
};

struct PrPoint {
  double threshold = 0;
  double precision = 0;
  double recall = 0;
};

struct PlaceRecognitionSummary {
  int n_queries = 0;
  int n_with_positive = 0;
  bool no_positives = true;
  double recall_at_1 = 0;
  double max_f1 = 0;
  double auc = 0;
  double coarse_containment = 0;  // share of queries with a positive whose TP passed the TDH gate
};

struct LocalizationSummary {
  int n_queries = 0;
  int n_true_positive = 0;
  int n_success = 0;
  double recall_at_50 = 0;  // successes / all queries
  double success_rate = 0;  // successes / true-positive retrievals
  double te_mean = 0, te_median = 0;
  double re_mean = 0, re_median = 0;
};

inline constexpr int kPrThresholds = 200;
inline constexpr double kSuccessTe = 0.5;  // m
inline constexpr double kSuccessRe = 5.0;  // deg

/// Thresholds k/(n-1), k = 0..n-1. A query is predicted positive at threshold t
/// when it retrieved something with overlap >= t. Precision with no predictions is 1.
std::vector<PrPoint> pr_curve(const std::vector<QueryRecord>& records, int n_thresholds = kPrThresholds);

/// Trapezoid over the curve walked from the highest threshold down, starting at (recall 0, precision 1).
double pr_auc(const std::vector<PrPoint>& curve);

PlaceRecognitionSummary score_place_recognition(const std::vector<QueryRecord>& records,
                                                int n_thresholds = kPrThresholds);

/// Success means a true-positive retrieval with te <= 0.5 m and re <= 5 deg (inclusive).
LocalizationSummary score_localization(const std::vector<QueryRecord>& records);

/// Translation (m) and rotation (deg) error of an estimate against the truth.
std::pair<double, double> pose_error(const Pose& estimate, const Pose& truth);

double median(std::vector<double> v);

std::string records_to_csv(const std::vector<QueryRecord>& records);
/// Throws Error(FormatError) on a malformed header or row.
std::vector<QueryRecord> records_from_csv(const std::string& text);
std::string timings_to_csv(const std::vector<QueryTiming>& timings);
std::string pr_to_csv(const std::vector<PrPoint>& curve);

/// Flat "key = value" text.
std::string summary_to_text(const PlaceRecognitionSummary& pr);
std::string summary_to_text(const LocalizationSummary& loc);

}  // namespace treeloc
