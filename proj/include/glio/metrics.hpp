#pragma once

// ROC analysis and confusion metrics. A predicted positive means
// score >= threshold. Tied scores collapse into single sweep steps, which
// makes the trapezoidal AUC equal the pairwise concordance statistic
// (concordant + 0.5*tied) / (P*N) exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "glio/error.hpp"

namespace glio {

struct RocPoint {
  double fpr;
  double tpr;
  double threshold;
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0,0) to (1,1), monotone
  double auc = 0.0;
};

namespace detail {

inline void check_binary_scored(const std::vector<double>& scores, const std::vector<int>& labels,
                                const char* who) {
  if (scores.size() != labels.size()) throw_internal(std::string(who) + ": size mismatch");
  if (scores.empty()) throw_data(std::string(who) + ": empty input");
  int64_t pos = 0, neg = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw_data(std::string(who) + ": labels must be 0/1");
    if (!std::isfinite(scores[i])) throw_data(std::string(who) + ": non-finite score");
    (labels[i] == 1 ? pos : neg)++;
  }
  if (pos == 0 || neg == 0)
    throw_data(std::string(who) + ": both classes must be present (single-class labels)");
}

}  // namespace detail

inline RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
  detail::check_binary_scored(scores, labels, "roc_curve");
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  int64_t total_pos = 0, total_neg = 0;
  for (int l : labels) (l == 1 ? total_pos : total_neg)++;

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  int64_t tp = 0, fp = 0;
  size_t i = 0;
  double area2 = 0.0;  // twice the trapezoid area, in count units
  while (i < n) {
    // Group all samples tied at this score into one sweep step.
    const double s = scores[order[i]];
    int64_t dpos = 0, dneg = 0;
    while (i < n && scores[order[i]] == s) {
      (labels[order[i]] == 1 ? dpos : dneg)++;
      ++i;
    }
    area2 += static_cast<double>(dneg) * static_cast<double>(2 * tp + dpos);
    tp += dpos;
    fp += dneg;
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(total_neg),
                            static_cast<double>(tp) / static_cast<double>(total_pos), s});
  }
  curve.auc = area2 / (2.0 * static_cast<double>(total_pos) * static_cast<double>(total_neg));
  return curve;
}

inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  return roc_curve(scores, labels).auc;
}

// Operating point: the threshold maximizing TPR - FPR (Youden's J).
// Ties resolve toward higher sensitivity, then toward the lower threshold.
inline double operating_point(const RocCurve& curve) {
  check_data(curve.points.size() >= 2, "operating_point: degenerate curve");
  double best_j = -2.0, best_tpr = -1.0;
  double best_thr = 0.5;
  for (const RocPoint& p : curve.points) {
    if (!std::isfinite(p.threshold)) continue;  // the (0,0) anchor
    const double j = p.tpr - p.fpr;
    // Exact comparisons: all quantities derive from integer counts, so equal
    // operating points compare bitwise equal and the tie rule is well defined.
    const bool better =
        j > best_j || (j == best_j && (p.tpr > best_tpr ||
                                       (p.tpr == best_tpr && p.threshold < best_thr)));
    if (better) {
      best_j = j;
      best_tpr = p.tpr;
      best_thr = p.threshold;
    }
  }
  check_data(best_j > -2.0, "operating_point: no finite-threshold points");
  return best_thr;
}

inline double operating_point(const std::vector<double>& scores, const std::vector<int>& labels) {
  return operating_point(roc_curve(scores, labels));
}

// Confusion-derived metrics in Table-3 layout order.
struct MetricsReport {
  double auc = std::numeric_limits<double>::quiet_NaN();  // filled by scored evaluations
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double mean_accuracy = 0.0;
  int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline MetricsReport confusion_metrics(const std::vector<int>& predictions,
                                       const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) throw_internal("confusion_metrics: size mismatch");
  if (predictions.empty()) throw_data("confusion_metrics: empty input");
  MetricsReport r;
  for (size_t i = 0; i < labels.size(); ++i) {
    check_data((labels[i] == 0 || labels[i] == 1) && (predictions[i] == 0 || predictions[i] == 1),
               "confusion_metrics: values must be 0/1");
    if (labels[i] == 1)
      (predictions[i] == 1 ? r.tp : r.fn)++;
    else
      (predictions[i] == 1 ? r.fp : r.tn)++;
  }
  check_data(r.tp + r.fn > 0 && r.tn + r.fp > 0,
             "confusion_metrics: both classes must be present (single-class labels)");
  const double total = static_cast<double>(labels.size());
  r.accuracy = static_cast<double>(r.tp + r.tn) / total;
  r.sensitivity = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  r.specificity = static_cast<double>(r.tn) / static_cast<double>(r.tn + r.fp);
  r.mean_accuracy = 0.5 * (r.sensitivity + r.specificity);
  return r;
}

}  // namespace glio
