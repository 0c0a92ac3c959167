#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "glio/ensemble.hpp"
#include "glio/hierarchy.hpp"
#include "glio/metrics.hpp"
#include "glio/rng.hpp"
#include "glio/svgplot.hpp"

using namespace glio;

namespace {

// Independent oracle: pairwise concordance over all pos x neg pairs,
// ties counted half.
double auc_pairwise_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
  double num = 0.0;
  int64_t pairs = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) num += 1.0;
      else if (scores[i] == scores[j]) num += 0.5;
    }
  }
  return num / static_cast<double>(pairs);
}

// Independent oracle: exhaustive scan over all candidate thresholds (the
// unique score values), predicting positive when score >= threshold.
double operating_point_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::set<double> uniq(scores.begin(), scores.end());
  int64_t total_pos = 0, total_neg = 0;
  for (int l : labels) (l == 1 ? total_pos : total_neg)++;
  double best_j = -2.0, best_tpr = -1.0, best_thr = 0.0;
  for (double thr : uniq) {
    int64_t tp = 0, fp = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= thr) (labels[i] == 1 ? tp : fp)++;
    }
    const double tpr = static_cast<double>(tp) / static_cast<double>(total_pos);
    const double fpr = static_cast<double>(fp) / static_cast<double>(total_neg);
    const double j = tpr - fpr;
    if (j > best_j || (j == best_j && (tpr > best_tpr || (tpr == best_tpr && thr < best_thr)))) {
      best_j = j;
      best_tpr = tpr;
      best_thr = thr;
    }
  }
  return best_thr;
}

std::pair<std::vector<double>, std::vector<int>> random_instance(Rng& rng, int max_n = 200) {
  const int n = static_cast<int>(rng.uniform_int(4, max_n));
  std::vector<double> scores(static_cast<size_t>(n));
  std::vector<int> labels(static_cast<size_t>(n));
  const bool with_ties = rng.bernoulli(0.5);
  int n_pos = 0;
  for (int i = 0; i < n; ++i) {
    scores[static_cast<size_t>(i)] =
        with_ties ? std::round(rng.uniform() * 8.0) / 8.0 : rng.uniform();
    labels[static_cast<size_t>(i)] = rng.bernoulli(0.4) ? 1 : 0;
    n_pos += labels[static_cast<size_t>(i)];
  }
  // guarantee both classes
  if (n_pos == 0) labels[0] = 1;
  if (n_pos == n) labels[0] = 0;
  return {scores, labels};
}

}  // namespace

// ---------------------------------------------------------------------------
// roc_curve

TEST(Roc, PerfectSeparation) {
  const RocCurve c = roc_curve({0.9, 0.1}, {1, 0});
  EXPECT_DOUBLE_EQ(c.auc, 1.0);
  bool passes_corner = false;
  for (const auto& p : c.points) passes_corner |= (p.fpr == 0.0 && p.tpr == 1.0);
  EXPECT_TRUE(passes_corner);
}

TEST(Roc, InvertedLabelsGiveZero) {
  EXPECT_DOUBLE_EQ(auc({0.9, 0.1}, {0, 1}), 0.0);
}

TEST(Roc, AllTiedScoresGiveHalf) {
  EXPECT_DOUBLE_EQ(auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}), 0.5);
}

TEST(Roc, CurveMonotoneWithAnchors) {
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const auto [scores, labels] = random_instance(rng, 60);
    const RocCurve c = roc_curve(scores, labels);
    ASSERT_GE(c.points.size(), 2u);
    EXPECT_DOUBLE_EQ(c.points.front().fpr, 0.0);
    EXPECT_DOUBLE_EQ(c.points.front().tpr, 0.0);
    EXPECT_DOUBLE_EQ(c.points.back().fpr, 1.0);
    EXPECT_DOUBLE_EQ(c.points.back().tpr, 1.0);
    for (size_t i = 1; i < c.points.size(); ++i) {
      EXPECT_GE(c.points[i].fpr, c.points[i - 1].fpr);
      EXPECT_GE(c.points[i].tpr, c.points[i - 1].tpr);
    }
  }
}

TEST(Roc, SingleClassRejected) {
  EXPECT_THROW(roc_curve({0.1, 0.2}, {1, 1}), Error);
  EXPECT_THROW(roc_curve({0.1, 0.2}, {0, 0}), Error);
  EXPECT_THROW(roc_curve({}, {}), Error);
}

// ---------------------------------------------------------------------------
// auc vs oracle

TEST(Auc, MatchesPairwiseOracleOnRandomInstances) {
  Rng rng(42);
  for (int rep = 0; rep < 300; ++rep) {
    const auto [scores, labels] = random_instance(rng);
    const double fast = auc(scores, labels);
    const double slow = auc_pairwise_oracle(scores, labels);
    ASSERT_NEAR(fast, slow, 1e-12) << "rep " << rep;
  }
}

TEST(Auc, RankInvariance) {
  Rng rng(43);
  const auto [scores, labels] = random_instance(rng);
  std::vector<double> warped(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) warped[i] = std::exp(3.0 * scores[i]) + 7.0;
  EXPECT_NEAR(auc(scores, labels), auc(warped, labels), 1e-12);
}

TEST(Auc, ComplementIdentity) {
  Rng rng(44);
  for (int rep = 0; rep < 50; ++rep) {
    const auto [scores, labels] = random_instance(rng, 80);
    std::vector<int> inverted(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) inverted[i] = 1 - labels[i];
    EXPECT_NEAR(auc(scores, labels) + auc(scores, inverted), 1.0, 1e-12);
  }
}

// ---------------------------------------------------------------------------
// operating point

TEST(OperatingPoint, PerfectSeparationGivesJOne) {
  const std::vector<double> scores = {0.9, 0.8, 0.2, 0.1};
  const std::vector<int> labels = {1, 1, 0, 0};
  const RocCurve c = roc_curve(scores, labels);
  const double thr = operating_point(c);
  // J = 1 at the gap; sweeping thresholds are the scores themselves
  EXPECT_DOUBLE_EQ(thr, 0.8);
}

TEST(OperatingPoint, AllTiedReturnsLowestThreshold) {
  const std::vector<double> scores = {0.4, 0.4, 0.4};
  const std::vector<int> labels = {1, 0, 1};
  const double thr = operating_point(roc_curve(scores, labels));
  EXPECT_DOUBLE_EQ(thr, 0.4);
}

TEST(OperatingPoint, MatchesExhaustiveOracle) {
  Rng rng(45);
  for (int rep = 0; rep < 300; ++rep) {
    const auto [scores, labels] = random_instance(rng, 30);
    const double fast = operating_point(roc_curve(scores, labels));
    const double slow = operating_point_oracle(scores, labels);
    ASSERT_EQ(fast, slow) << "rep " << rep;
  }
}

// ---------------------------------------------------------------------------
// confusion metrics

TEST(Confusion, PerfectPrediction) {
  const MetricsReport r = confusion_metrics({1, 0, 1, 0}, {1, 0, 1, 0});
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(r.sensitivity, 1.0);
  EXPECT_DOUBLE_EQ(r.specificity, 1.0);
  EXPECT_DOUBLE_EQ(r.mean_accuracy, 1.0);
}

TEST(Confusion, HalfRight) {
  const MetricsReport r = confusion_metrics({1, 0, 0, 1}, {1, 1, 0, 0});
  EXPECT_DOUBLE_EQ(r.sensitivity, 0.5);
  EXPECT_DOUBLE_EQ(r.specificity, 0.5);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
}

TEST(Confusion, MeanAccuracyTwoDecimalDisplay) {
  // sens 0.47 (47/100), spec 0.80 (80/100) -> mean accuracy 0.635,
  // displayed as 0.64 at two decimals
  std::vector<int> labels, preds;
  for (int i = 0; i < 100; ++i) {
    labels.push_back(1);
    preds.push_back(i < 47 ? 1 : 0);
  }
  for (int i = 0; i < 100; ++i) {
    labels.push_back(0);
    preds.push_back(i < 80 ? 0 : 1);
  }
  const MetricsReport r = confusion_metrics(preds, labels);
  EXPECT_DOUBLE_EQ(r.sensitivity, 0.47);
  EXPECT_DOUBLE_EQ(r.specificity, 0.80);
  EXPECT_DOUBLE_EQ(r.mean_accuracy, 0.635);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.2f", r.mean_accuracy);
  EXPECT_STREQ(buf, "0.64");
}

TEST(Confusion, AccuracyIdentity) {
  Rng rng(46);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = static_cast<int>(rng.uniform_int(4, 60));
    std::vector<int> labels(static_cast<size_t>(n)), preds(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      labels[static_cast<size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
      preds[static_cast<size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;
    const MetricsReport r = confusion_metrics(preds, labels);
    const double p = static_cast<double>(r.tp + r.fn), nn = static_cast<double>(r.tn + r.fp);
    EXPECT_NEAR(r.accuracy, (r.sensitivity * p + r.specificity * nn) / (p + nn), 1e-12);
  }
}

TEST(Confusion, EmptyInputRejected) {
  EXPECT_THROW(confusion_metrics({}, {}), Error);
}

// ---------------------------------------------------------------------------
// ensemble aggregation rules

TEST(Ensemble, MeanProbability) {
  EXPECT_DOUBLE_EQ(ensemble_mean_probability({0.6, 0.7, 0.8, 0.9, 1.0}), 0.8);
}

TEST(Ensemble, MajorityVote) {
  EXPECT_EQ(ensemble_majority_vote({1, 1, 0, 1, 0}), 1);
  EXPECT_EQ(ensemble_majority_vote({0, 0, 1, 0, 1}), 0);
  EXPECT_EQ(ensemble_majority_vote({1, 1, 1, 1, 1}), 1);
  EXPECT_EQ(ensemble_majority_vote({0, 0, 0, 0, 0}), 0);
}

TEST(Ensemble, FiveVotersAlwaysDecided) {
  // totality: every 5-bit vote pattern maps to 0 or 1, never undefined
  for (int pattern = 0; pattern < 32; ++pattern) {
    std::vector<int> votes;
    int ones = 0;
    for (int b = 0; b < 5; ++b) {
      votes.push_back((pattern >> b) & 1);
      ones += (pattern >> b) & 1;
    }
    EXPECT_EQ(ensemble_majority_vote(votes), ones >= 3 ? 1 : 0);
  }
}

TEST(Ensemble, WrongSizeRejected) {
  EXPECT_THROW(ensemble_mean_probability({0.5, 0.5}), Error);
  EXPECT_THROW(ensemble_majority_vote({1, 0, 1}), Error);
}

TEST(Ensemble, ThresholdVotesAllBelow) {
  // per-model thresholds 0.5, probabilities all 0.4 -> all votes 0 -> prediction 0
  std::vector<int> votes;
  for (int i = 0; i < 5; ++i) votes.push_back(0.4 >= 0.5 ? 1 : 0);
  EXPECT_EQ(ensemble_majority_vote(votes), 0);
}

// ---------------------------------------------------------------------------
// hierarchy composition

TEST(Hierarchy, DegenerateCertainGbmIdhMut) {
  BranchProbs b;
  b.p_gbm = 1.0;
  b.p_idh_lgg = 0.3;
  b.p_codel = 0.7;
  b.p_idh_gbm = 1.0;
  const auto leaf = compose_leaf_probs(b);
  EXPECT_DOUBLE_EQ(leaf.at(GliomaSubtype::IV), 1.0);
  for (GliomaSubtype s : {GliomaSubtype::I, GliomaSubtype::II, GliomaSubtype::III, GliomaSubtype::V})
    EXPECT_DOUBLE_EQ(leaf.at(s), 0.0);
}

TEST(Hierarchy, AllHalfInputs) {
  BranchProbs b;  // defaults are all 0.5
  const auto leaf = compose_leaf_probs(b);
  EXPECT_EQ(leaf.at(GliomaSubtype::I), 0.125);
  EXPECT_EQ(leaf.at(GliomaSubtype::II), 0.125);
  EXPECT_EQ(leaf.at(GliomaSubtype::III), 0.25);
  EXPECT_EQ(leaf.at(GliomaSubtype::IV), 0.25);
  EXPECT_EQ(leaf.at(GliomaSubtype::V), 0.25);
}

TEST(Hierarchy, LeafSumIsOne) {
  Rng rng(47);
  for (int rep = 0; rep < 2000; ++rep) {
    BranchProbs b;
    b.p_gbm = rng.uniform();
    b.p_idh_lgg = rng.uniform();
    b.p_codel = rng.uniform();
    b.p_idh_gbm = rng.uniform();
    const auto leaf = compose_leaf_probs(b);
    double sum = 0.0;
    for (const auto& [s, p] : leaf) sum += p;
    ASSERT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Hierarchy, OutOfRangeRejected) {
  BranchProbs b;
  b.p_gbm = 1.2;
  EXPECT_THROW(compose_leaf_probs(b), Error);
}

TEST(Hierarchy, VoteRoutingTotalAndCorrect) {
  // every combination of four binary votes maps to exactly one subtype
  for (int gbm : {0, 1})
    for (int idh_lgg : {0, 1})
      for (int codel : {0, 1})
        for (int idh_gbm : {0, 1}) {
          BranchVotes v{gbm, idh_lgg, codel, idh_gbm};
          const GliomaSubtype s = route_votes(v);
          if (gbm) EXPECT_EQ(s, idh_gbm ? GliomaSubtype::IV : GliomaSubtype::V);
          else if (!idh_lgg) EXPECT_EQ(s, GliomaSubtype::III);
          else EXPECT_EQ(s, codel ? GliomaSubtype::I : GliomaSubtype::II);
        }
}

TEST(Hierarchy, PrunedBranchesIgnored) {
  // changing the IDH-in-GBM vote cannot change an LGG-routed prediction
  BranchVotes v{0, 1, 0, 0};
  const GliomaSubtype base = route_votes(v);
  v.idh_gbm = 1;
  EXPECT_EQ(route_votes(v), base);
  // and changing LGG-side votes cannot change a GBM-routed prediction
  BranchVotes w{1, 0, 0, 1};
  const GliomaSubtype base2 = route_votes(w);
  w.idh_lgg = 1;
  w.codel = 1;
  EXPECT_EQ(route_votes(w), base2);
}

TEST(Hierarchy, RoutingExamples) {
  EXPECT_EQ(route_votes({1, 0, 0, 1}), GliomaSubtype::IV);
  EXPECT_EQ(route_votes({0, 1, 0, 0}), GliomaSubtype::II);
  EXPECT_EQ(route_votes({0, 0, 1, 1}), GliomaSubtype::III);
  EXPECT_EQ(route_votes({0, 1, 1, 0}), GliomaSubtype::I);
  EXPECT_EQ(route_votes({1, 1, 1, 0}), GliomaSubtype::V);
}

// ---------------------------------------------------------------------------
// roc table io + plotting

TEST(RocTable, RoundTrip) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "gliotype_roctable";
  fs::create_directories(dir);
  Rng rng(48);
  const auto [scores, labels] = random_instance(rng, 40);
  const RocCurve c = roc_curve(scores, labels);
  write_roc_table(c, dir / "roc.tsv");
  const auto points = read_roc_table(dir / "roc.tsv");
  ASSERT_EQ(points.size(), c.points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    EXPECT_NEAR(points[i].fpr, c.points[i].fpr, 1e-9);
    EXPECT_NEAR(points[i].tpr, c.points[i].tpr, 1e-9);
  }
}

TEST(RocTable, MissingTprColumnRejected) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "gliotype_roctable_bad";
  fs::create_directories(dir);
  std::ofstream f(dir / "bad.tsv");
  f << "fpr\tvalue\n0\t0\n1\t1\n";
  f.close();
  EXPECT_THROW(read_roc_table(dir / "bad.tsv"), Error);
}

TEST(Plot, WritesPanelsAndRejectsEmpty) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "gliotype_plot";
  fs::create_directories(dir);
  RocPanel panel;
  panel.title = "GBM vs. LGG";
  panel.curves.push_back({"DCNN", {{0, 0, 1.0}, {0.2, 0.9, 0.6}, {1, 1, 0.0}}});
  plot_roc_panels({panel}, dir / "one.svg");
  std::ifstream f(dir / "one.svg");
  std::string svg((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  EXPECT_NE(svg.find("false positive rates"), std::string::npos);
  EXPECT_NE(svg.find("true positive rates"), std::string::npos);
  EXPECT_NE(svg.find("polyline"), std::string::npos);

  // four panels: 2x2 grid (two columns of panels)
  std::vector<RocPanel> four(4, panel);
  plot_roc_panels(four, dir / "four.svg");
  EXPECT_THROW(plot_roc_panels({}, dir / "none.svg"), Error);
  RocPanel empty;
  empty.title = "empty";
  EXPECT_THROW(plot_roc_panels({empty}, dir / "bad.svg"), Error);
}
