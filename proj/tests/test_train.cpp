#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "glio/rng.hpp"
#include "glio/train.hpp"

using namespace glio;

// ---------------------------------------------------------------------------
// configuration defaults

TEST(TrainConfig, DefaultsMatchPublishedValues) {
  const TrainConfig cfg;
  EXPECT_EQ(cfg.batch_size, 32);
  EXPECT_DOUBLE_EQ(cfg.weight_decay, 0.0005);
  EXPECT_DOUBLE_EQ(cfg.initial_lr, 0.0005);
  EXPECT_DOUBLE_EQ(cfg.lr_decay_base, 0.97);
  EXPECT_EQ(cfg.folds, 5);
  EXPECT_DOUBLE_EQ(cfg.stop_auc_threshold, 0.99);
  EXPECT_EQ(cfg.stop_patience_epochs, 10);
  EXPECT_EQ(cfg.max_epochs, 200);
}

// ---------------------------------------------------------------------------
// learning-rate schedule

TEST(LrSchedule, QuotedValues) {
  EXPECT_DOUBLE_EQ(lr_at_epoch(0), 0.0005);
  EXPECT_NEAR(lr_at_epoch(1), 0.000485, 1e-12);
  EXPECT_NEAR(lr_at_epoch(10), 3.6871e-4, 1e-8);
}

TEST(LrSchedule, ClosedFormOverRange) {
  for (int ep = 0; ep <= 300; ++ep)
    ASSERT_NEAR(lr_at_epoch(ep), 0.0005 * std::pow(0.97, ep), 1e-12);
}

TEST(LrSchedule, NegativeEpochRejected) { EXPECT_THROW(lr_at_epoch(-1), Error); }

// ---------------------------------------------------------------------------
// rebalancing

namespace {

std::vector<int> labels_with_counts(int n_pos, int n_neg) {
  std::vector<int> v;
  for (int i = 0; i < n_pos; ++i) v.push_back(1);
  for (int i = 0; i < n_neg; ++i) v.push_back(0);
  return v;
}

std::pair<int64_t, int64_t> multiset_counts(const std::vector<size_t>& idx,
                                            const std::vector<int>& labels) {
  int64_t pos = 0, neg = 0;
  for (size_t i : idx) (labels[i] == 1 ? pos : neg)++;
  return {pos, neg};
}

}  // namespace

TEST(Rebalance, TrainingCountsSixtyVsTwoSeventyFive) {
  // factor round(275/60) = 5: minority 60 becomes 300
  const auto labels = labels_with_counts(60, 275);
  const auto idx = rebalance_oversample(labels);
  const auto [pos, neg] = multiset_counts(idx, labels);
  EXPECT_EQ(pos, 300);
  EXPECT_EQ(neg, 275);
}

TEST(Rebalance, NearBalancedUnchanged) {
  // round(138/116) = 1: no change
  const auto labels = labels_with_counts(138, 116);
  const auto idx = rebalance_oversample(labels);
  EXPECT_EQ(idx.size(), labels.size());
  const auto [pos, neg] = multiset_counts(idx, labels);
  EXPECT_EQ(pos, 138);
  EXPECT_EQ(neg, 116);
}

TEST(Rebalance, EqualCountsIdentity) {
  const auto labels = labels_with_counts(40, 40);
  const auto idx = rebalance_oversample(labels);
  std::vector<size_t> expect(labels.size());
  std::iota(expect.begin(), expect.end(), 0);
  EXPECT_EQ(idx, expect);
}

TEST(Rebalance, EmptyClassRejected) {
  EXPECT_THROW(rebalance_oversample(labels_with_counts(10, 0)), Error);
  EXPECT_THROW(rebalance_oversample(labels_with_counts(0, 10)), Error);
}

TEST(Rebalance, PostRatioWithinBounds) {
  // property: for ratios <= 20, the rebalanced ratio lies in [2/3, 3/2]
  Rng rng(9);
  for (int rep = 0; rep < 500; ++rep) {
    const int n_min = static_cast<int>(rng.uniform_int(1, 400));
    const int64_t max_maj = std::min<int64_t>(8000, static_cast<int64_t>(n_min) * 20);
    const int n_maj = static_cast<int>(rng.uniform_int(n_min, max_maj));
    const bool pos_minor = rng.bernoulli(0.5);
    const auto labels =
        pos_minor ? labels_with_counts(n_min, n_maj) : labels_with_counts(n_maj, n_min);
    const auto idx = rebalance_oversample(labels);
    const auto [pos, neg] = multiset_counts(idx, labels);
    const double ratio = static_cast<double>(std::max(pos, neg)) / static_cast<double>(std::min(pos, neg));
    ASSERT_LE(ratio, 1.5) << n_min << " vs " << n_maj;
    ASSERT_GE(ratio, 2.0 / 3.0);
  }
}

// ---------------------------------------------------------------------------
// folds

namespace {

std::vector<std::string> make_ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("id" + std::to_string(i));
  return ids;
}

}  // namespace

TEST(Folds, TenIdsFiveFoldsOfTwo) {
  const auto folds = make_folds(make_ids(10), 5, 1);
  ASSERT_EQ(folds.size(), 5u);
  for (const auto& f : folds) EXPECT_EQ(f.size(), 2u);
}

TEST(Folds, TwentyThreeIdsSizes) {
  const auto folds = make_folds(make_ids(23), 5, 2);
  std::multiset<size_t> sizes;
  for (const auto& f : folds) sizes.insert(f.size());
  EXPECT_EQ(sizes, (std::multiset<size_t>{5, 5, 5, 4, 4}));
}

TEST(Folds, PartitionProperty) {
  Rng rng(10);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = static_cast<int>(rng.uniform_int(5, 200));
    const int k = 5;
    const auto ids = make_ids(n);
    const auto folds = make_folds(ids, k, rng.next_u64());
    std::set<std::string> seen;
    size_t total = 0, max_size = 0, min_size = SIZE_MAX;
    for (const auto& f : folds) {
      total += f.size();
      max_size = std::max(max_size, f.size());
      min_size = std::min(min_size, f.size());
      for (const auto& id : f) ASSERT_TRUE(seen.insert(id).second) << "duplicate " << id;
    }
    ASSERT_EQ(total, ids.size());
    ASSERT_LE(max_size - min_size, 1u);
  }
}

TEST(Folds, DeterministicUnderSeed) {
  const auto a = make_folds(make_ids(37), 5, 77);
  const auto b = make_folds(make_ids(37), 5, 77);
  EXPECT_EQ(a, b);
  const auto c = make_folds(make_ids(37), 5, 78);
  EXPECT_NE(a, c);
}

TEST(Folds, FewerCasesThanFoldsRejected) {
  EXPECT_THROW(make_folds(make_ids(4), 5, 1), Error);
}

// ---------------------------------------------------------------------------
// stopping rule (injected histories)

TEST(StopRule, CrossingPlusPatience) {
  std::vector<double> h(40, 0.5);
  h[7] = 0.995;  // first crossing at epoch 7
  EXPECT_EQ(stop_epoch_from_history(h, 0.99, 10, 200), 17);
}

TEST(StopRule, NeverCrossingHitsCap) {
  const std::vector<double> h(300, 0.95);
  EXPECT_EQ(stop_epoch_from_history(h, 0.99, 10, 200), 199);
}

TEST(StopRule, CapBindsAfterLateCrossing) {
  std::vector<double> h(300, 0.5);
  h[195] = 0.999;
  EXPECT_EQ(stop_epoch_from_history(h, 0.99, 10, 200), 199);
}

TEST(StopRule, ThresholdIsStrict) {
  std::vector<double> h(40, 0.5);
  h[3] = 0.99;   // not strictly above
  h[5] = 0.991;  // crossing
  EXPECT_EQ(stop_epoch_from_history(h, 0.99, 10, 200), 15);
}

// ---------------------------------------------------------------------------
// train_fold / train_task on a tiny in-memory dataset

namespace {

// Tiny synthetic task dataset: label-dependent intensity contrast inside an
// ellipsoid lesion, one volume set per case.
TaskDataset tiny_dataset(int n_pos, int n_neg, uint64_t seed) {
  TaskDataset ds;
  ds.task = ClassificationTask::GradeGbmVsLgg;
  Rng rng(seed);
  const int n = n_pos + n_neg;
  for (int i = 0; i < n; ++i) {
    const int label = i < n_pos ? 1 : 0;
    Geometry g;
    g.dims = {24, 24, 7};
    g.spacing = {1, 1, 5};
    TaskCase c;
    c.id = "case" + std::to_string(i);
    c.label = label;
    c.t1w = Volume(g);
    c.t1ce = Volume(g);
    c.t2w = Volume(g);
    c.mask = MaskVolume(g);
    const double cx = rng.uniform(8.0, 15.0), cy = rng.uniform(8.0, 15.0), cz = 3.0;
    const double ax = rng.uniform(4.0, 6.0), ay = rng.uniform(4.0, 6.0), az = 1.6;
    const double contrast = label == 1 ? 2.5 : 0.5;
    for (int64_t z = 0; z < g.dims[2]; ++z)
      for (int64_t y = 0; y < g.dims[1]; ++y)
        for (int64_t x = 0; x < g.dims[0]; ++x) {
          const double rx = (x - cx) / ax, ry = (y - cy) / ay, rz = (z - cz) / az;
          const bool inside = rx * rx + ry * ry + rz * rz <= 1.0;
          c.mask.at(x, y, z) = inside ? 1 : 0;
          const double noise = rng.normal(0.0, 0.2);
          c.t1w.at(x, y, z) = static_cast<float>(noise + (inside ? contrast : 0.0));
          c.t1ce.at(x, y, z) = static_cast<float>(rng.normal(0.0, 0.2) + (inside ? contrast : 0.0));
          c.t2w.at(x, y, z) = static_cast<float>(rng.normal(0.0, 0.2) + (inside ? contrast : 0.0));
        }
    ds.cases.push_back(std::move(c));
  }
  return ds;
}

TrainConfig fast_cfg(int max_epochs = 3, uint64_t seed = 5) {
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_epochs = max_epochs;
  cfg.seed = seed;
  return cfg;
}

ModelConfig stub_model() {
  ModelConfig m;
  m.backbone.arch = BackboneArch::stub;
  return m;
}

}  // namespace

TEST(TrainFold, ValidationUntouchedByRebalance) {
  TaskDataset ds = tiny_dataset(6, 14, 1);
  const auto plans = glio::detail::plan_folds(ds, fast_cfg(), 3);
  const auto stacks = build_eval_stack_cache(ds, fast_cfg());
  // pick a fold whose validation side carries both classes
  size_t fold = plans.size();
  for (size_t f = 0; f < plans.size(); ++f) {
    int pos = 0, neg = 0;
    for (size_t i : plans[f].val_indices) (ds.cases[i].label == 1 ? pos : neg)++;
    if (pos > 0 && neg > 0) {
      fold = f;
      break;
    }
  }
  ASSERT_LT(fold, plans.size());
  const FoldResult fr =
      train_fold(ds, stacks, plans[fold], static_cast<int>(fold), stub_model(), fast_cfg(2));
  EXPECT_EQ(fr.n_val_cases, plans[fold].val_indices.size());
  EXPECT_EQ(fr.n_train_cases, plans[fold].train_indices.size());
  // oversampling expanded the training multiset but not the validation fold
  EXPECT_GT(fr.n_train_multiset, fr.n_train_cases);
  EXPECT_EQ(fr.val_auc_history.size(), fr.train_auc_history.size());
}

TEST(TrainFold, SelectsArgmaxValidationEpoch) {
  TaskDataset ds = tiny_dataset(6, 10, 2);
  const auto plans = glio::detail::plan_folds(ds, fast_cfg(), 4);
  const auto stacks = build_eval_stack_cache(ds, fast_cfg());
  const FoldResult fr = train_fold(ds, stacks, plans[1], 1, stub_model(), fast_cfg(4));
  const auto it = std::max_element(fr.val_auc_history.begin(), fr.val_auc_history.end());
  EXPECT_EQ(fr.chosen_epoch, static_cast<int>(std::distance(fr.val_auc_history.begin(), it)));
  EXPECT_DOUBLE_EQ(fr.validation_auc, *it);
  EXPECT_DOUBLE_EQ(fr.checkpoint.validation_auc, *it);
  EXPECT_GE(fr.operating_threshold, 0.0);
  EXPECT_LE(fr.operating_threshold, 1.0);
}

TEST(TrainFold, SingleClassValidationRejected) {
  TaskDataset ds = tiny_dataset(2, 10, 3);
  TrainConfig cfg = fast_cfg(2);
  const auto stacks = build_eval_stack_cache(ds, cfg);
  // force a validation fold with only negatives
  glio::detail::FoldPlan plan;
  for (size_t i = 0; i < ds.cases.size(); ++i)
    (ds.cases[i].label == 0 && plan.val_indices.size() < 3 ? plan.val_indices : plan.train_indices)
        .push_back(i);
  EXPECT_THROW(train_fold(ds, stacks, plan, 0, stub_model(), cfg), Error);
}

TEST(TrainTask, DeterministicAcrossRunsAndJobs) {
  TaskDataset ds = tiny_dataset(10, 10, 4);
  TrainConfig cfg = fast_cfg(2, 11);
  while (!folds_well_posed(ds, cfg)) ++cfg.seed;  // deterministic seed choice
  const TaskTrainResult a = train_task(ds, stub_model(), cfg);
  const TaskTrainResult b = train_task(ds, stub_model(), cfg);
  ASSERT_EQ(a.folds.size(), 5u);
  for (size_t f = 0; f < 5; ++f) {
    EXPECT_EQ(a.folds[f].val_auc_history, b.folds[f].val_auc_history);
    EXPECT_EQ(a.folds[f].train_auc_history, b.folds[f].train_auc_history);
    EXPECT_DOUBLE_EQ(a.folds[f].validation_auc, b.folds[f].validation_auc);
  }
  // parallel fold execution yields the identical result
  TrainConfig par = cfg;
  par.jobs = 3;
  const TaskTrainResult c = train_task(ds, stub_model(), par);
  for (size_t f = 0; f < 5; ++f) {
    EXPECT_EQ(a.folds[f].val_auc_history, c.folds[f].val_auc_history);
    EXPECT_DOUBLE_EQ(a.folds[f].operating_threshold, c.folds[f].operating_threshold);
  }
}

TEST(TrainTask, CohortTooSmallRejected) {
  TaskDataset ds = tiny_dataset(2, 2, 5);
  EXPECT_THROW(train_task(ds, stub_model(), fast_cfg(1)), Error);
}

TEST(TrainTask, LearnsSeparableTinyProblem) {
  TaskDataset ds = tiny_dataset(10, 10, 6);
  TrainConfig cfg = fast_cfg(6, 13);
  while (!folds_well_posed(ds, cfg)) ++cfg.seed;
  const TaskTrainResult r = train_task(ds, stub_model(), cfg);
  double mean_val_auc = 0.0;
  for (const auto& fr : r.folds) mean_val_auc += fr.validation_auc;
  mean_val_auc /= 5.0;
  EXPECT_GT(mean_val_auc, 0.8);
}
