#pragma once

// Training orchestration: class rebalancing by integer oversampling, 5-fold
// cross-validation, Adam with the exponential epoch schedule, AUC-based
// stopping (10 epochs after training AUC first exceeds 0.99, capped) and
// best-validation-AUC model selection with a per-fold operating threshold.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "glio/checkpoint.hpp"
#include "glio/error.hpp"
#include "glio/manifest.hpp"
#include "glio/metrics.hpp"
#include "glio/model.hpp"
#include "glio/nifti.hpp"
#include "glio/nn.hpp"
#include "glio/optim.hpp"
#include "glio/rng.hpp"
#include "glio/roi.hpp"
#include "glio/subtype.hpp"

namespace glio {

struct TrainConfig {
  int batch_size = 32;
  double weight_decay = 0.0005;
  double initial_lr = 0.0005;
  double lr_decay_base = 0.97;
  int folds = 5;
  double stop_auc_threshold = 0.99;
  int stop_patience_epochs = 10;
  int max_epochs = 200;
  uint64_t seed = 0;
  double margin_fraction = 0.1;  // ROI context margin per side
  int slice_step = 2;            // every-other-slice input scheme
  AugmentConfig augment;
  int jobs = 1;  // folds trained concurrently

  void validate() const {
    if (batch_size < 1) throw_usage("train: batch_size must be >= 1");
    if (folds < 2) throw_usage("train: need at least 2 folds");
    if (max_epochs < 1) throw_usage("train: max_epochs must be >= 1");
    if (stop_patience_epochs < 0) throw_usage("train: negative stop patience");
    if (!(initial_lr > 0.0) || !(lr_decay_base > 0.0))
      throw_usage("train: learning-rate schedule values must be positive");
    if (slice_step < 1) throw_usage("train: slice_step must be >= 1");
    if (jobs < 1) throw_usage("train: jobs must be >= 1");
    augment.validate();
  }
};

// lr(Ep) = initial_lr * decay_base^Ep, Ep = 0-based epoch number.
inline double lr_at_epoch(int epoch, const TrainConfig& cfg = {}) {
  if (epoch < 0) throw_usage("lr_at_epoch: negative epoch");
  return cfg.initial_lr * std::pow(cfg.lr_decay_base, static_cast<double>(epoch));
}

// Expands training indices so the minority class appears
// k = max(1, round(N_major/N_minor)) times. Majority indices are unchanged;
// validation and test sets are never rebalanced.
inline std::vector<size_t> rebalance_oversample(const std::vector<int>& labels) {
  int64_t n_pos = 0, n_neg = 0;
  for (int l : labels) {
    check_data(l == 0 || l == 1, "rebalance: labels must be 0/1");
    (l == 1 ? n_pos : n_neg)++;
  }
  if (n_pos == 0 || n_neg == 0)
    throw_data("rebalance: one class has zero instances");
  const int minority = n_pos < n_neg ? 1 : 0;
  const int64_t n_min = std::min(n_pos, n_neg), n_maj = std::max(n_pos, n_neg);
  const int64_t k = std::max<int64_t>(
      1, std::llround(static_cast<double>(n_maj) / static_cast<double>(n_min)));
  std::vector<size_t> out;
  out.reserve(labels.size() + static_cast<size_t>((k - 1) * n_min));
  for (size_t i = 0; i < labels.size(); ++i) {
    const int64_t reps = labels[i] == minority ? k : 1;
    for (int64_t r = 0; r < reps; ++r) out.push_back(i);
  }
  return out;
}

// Random partition into k folds with sizes differing by at most one.
inline std::vector<std::vector<std::string>> make_folds(const std::vector<std::string>& ids, int k,
                                                        uint64_t seed) {
  check_data(k >= 1, "make_folds: k must be >= 1");
  if (static_cast<int>(ids.size()) < k)
    throw_data("make_folds: fewer cases (" + std::to_string(ids.size()) + ") than folds (" +
               std::to_string(k) + ")");
  std::vector<std::string> shuffled = ids;
  Rng rng = Rng::derive(seed, {0xF01D5ULL});
  for (size_t i = shuffled.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i) - 1));
    std::swap(shuffled[i - 1], shuffled[j]);
  }
  std::vector<std::vector<std::string>> folds(static_cast<size_t>(k));
  for (size_t i = 0; i < shuffled.size(); ++i)
    folds[i % static_cast<size_t>(k)].push_back(shuffled[i]);
  return folds;
}

// Last epoch index to run given a training-AUC history: ten epochs after the
// first crossing of the threshold, capped by max_epochs. Pure function of the
// history, exposed for direct verification with injected histories.
inline int stop_epoch_from_history(const std::vector<double>& train_auc_history, double threshold,
                                   int patience, int max_epochs) {
  const int cap = max_epochs - 1;
  for (size_t i = 0; i < train_auc_history.size(); ++i)
    if (train_auc_history[i] > threshold)
      return std::min(static_cast<int>(i) + patience, cap);
  return cap;
}

// One case of a task dataset, fully loaded.
struct TaskCase {
  std::string id;
  Volume t1w, t1ce, t2w;
  MaskVolume mask;
  int label = 0;  // 1 positive, 0 negative
};

struct TaskDataset {
  ClassificationTask task = ClassificationTask::GradeGbmVsLgg;
  std::vector<TaskCase> cases;

  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(cases.size());
    for (const auto& c : cases) out.push_back(c.label);
    return out;
  }
  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(cases.size());
    for (const auto& c : cases) out.push_back(c.id);
    return out;
  }
};

// Loads every record of the given split whose subtype routes into the task's
// cohort (not_in_cohort records are dropped).
inline TaskDataset load_task_dataset(const DatasetManifest& m, ClassificationTask task, Split split) {
  TaskDataset ds;
  ds.task = task;
  for (const auto& rec : m.records) {
    if (!rec.split.has_value())
      throw_data("dataset: record '" + rec.id + "' has no train/test split assignment");
    if (*rec.split != split) continue;
    const BinaryLabel lbl = derive_binary_label(rec.subtype, task);
    if (lbl == BinaryLabel::not_in_cohort) continue;
    TaskCase c;
    c.id = rec.id;
    c.t1w = read_nifti_volume(m.volume_path(rec, Modality::T1w));
    c.t1ce = read_nifti_volume(m.volume_path(rec, Modality::T1ce));
    c.t2w = read_nifti_volume(m.volume_path(rec, Modality::T2w));
    c.mask = read_nifti_mask(m.mask_path(rec));
    c.label = lbl == BinaryLabel::positive ? 1 : 0;
    ds.cases.push_back(std::move(c));
  }
  return ds;
}

// Deterministic evaluation stacks, built once per dataset and shared by all
// folds (the evaluation path never augments).
inline std::vector<Stack25D> build_eval_stack_cache(const TaskDataset& ds, const TrainConfig& cfg) {
  std::vector<Stack25D> out;
  out.reserve(ds.cases.size());
  for (const auto& c : ds.cases) {
    Stack25D st = build_eval_stack(c.t1w, c.t1ce, c.t2w, c.mask, cfg.margin_fraction, cfg.slice_step);
    st.patient_id = c.id;
    out.push_back(std::move(st));
  }
  return out;
}

// Batched inference scores over the given case indices (eval mode).
inline std::vector<double> eval_scores(SubtypingNet& net, const std::vector<Stack25D>& stacks,
                                       const std::vector<size_t>& indices, int batch_size) {
  std::vector<double> scores(indices.size(), 0.0);
  const int64_t hw = kStackSize;
  for (size_t start = 0; start < indices.size(); start += static_cast<size_t>(batch_size)) {
    const size_t b = std::min(indices.size() - start, static_cast<size_t>(batch_size));
    Tensor batch({static_cast<int64_t>(b), kStackSlices, kStackChannels, hw, hw});
    const int64_t stride = static_cast<int64_t>(kStackSlices) * kStackChannels * hw * hw;
    for (size_t i = 0; i < b; ++i)
      std::copy_n(stacks[indices[start + i]].data.data(), stride, batch.data() + static_cast<int64_t>(i) * stride);
    const std::vector<float> logits = net.forward_batch(batch, /*training=*/false);
    for (size_t i = 0; i < b; ++i) {
      const double p = nn::sigmoid(logits[i]);
      scores[start + i] = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
    }
  }
  return scores;
}

struct FoldResult {
  int fold = 0;
  Checkpoint checkpoint;
  RocCurve validation_roc;      // at the selected epoch
  double validation_auc = 0.0;
  double operating_threshold = 0.5;
  std::vector<double> train_auc_history;
  std::vector<double> val_auc_history;
  int first_crossing_epoch = -1;  // -1: training AUC never crossed the threshold
  int stop_epoch = 0;             // last epoch index run
  int chosen_epoch = 0;           // epoch of the selected checkpoint
  size_t n_train_cases = 0;
  size_t n_train_multiset = 0;
  size_t n_val_cases = 0;
};

struct TaskTrainResult {
  ClassificationTask task = ClassificationTask::GradeGbmVsLgg;
  std::vector<FoldResult> folds;
};

namespace detail {

struct FoldPlan {
  std::vector<size_t> train_indices;
  std::vector<size_t> val_indices;
};

inline std::vector<FoldPlan> plan_folds(const TaskDataset& ds, const TrainConfig& cfg,
                                        uint64_t fold_seed) {
  const std::vector<std::string> ids = ds.ids();
  std::map<std::string, size_t> index_of;
  for (size_t i = 0; i < ids.size(); ++i) index_of[ids[i]] = i;
  const auto folds = make_folds(ids, cfg.folds, fold_seed);
  std::vector<FoldPlan> plans(folds.size());
  for (size_t f = 0; f < folds.size(); ++f) {
    for (const auto& id : folds[f]) plans[f].val_indices.push_back(index_of[id]);
    for (size_t g = 0; g < folds.size(); ++g) {
      if (g == f) continue;
      for (const auto& id : folds[g]) plans[f].train_indices.push_back(index_of[id]);
    }
    std::sort(plans[f].train_indices.begin(), plans[f].train_indices.end());
    std::sort(plans[f].val_indices.begin(), plans[f].val_indices.end());
  }
  return plans;
}

}  // namespace detail

// True when every fold of the partition implied by cfg.seed carries both
// classes on both sides. Cheap metadata check; useful for choosing seeds on
// small cohorts before committing to a training run.
inline bool folds_well_posed(const TaskDataset& ds, const TrainConfig& cfg) {
  if (static_cast<int>(ds.cases.size()) < cfg.folds) return false;
  const uint64_t fold_seed =
      Rng::derive(cfg.seed, {static_cast<uint64_t>(ds.task), 0xF01DULL}).next_u64();
  for (const auto& plan : detail::plan_folds(ds, cfg, fold_seed)) {
    int vp = 0, vn = 0, tp = 0, tn = 0;
    for (size_t i : plan.val_indices) (ds.cases[i].label == 1 ? vp : vn)++;
    for (size_t i : plan.train_indices) (ds.cases[i].label == 1 ? tp : tn)++;
    if (vp == 0 || vn == 0 || tp == 0 || tn == 0) return false;
  }
  return true;
}

// Trains one fold. The validation fold is untouched: no rebalancing, no
// augmentation, deterministic stacks.
inline FoldResult train_fold(const TaskDataset& ds, const std::vector<Stack25D>& eval_stacks,
                             const detail::FoldPlan& plan, int fold_index,
                             const ModelConfig& model_cfg_in, const TrainConfig& cfg,
                             const std::string& config_hash = "") {
  cfg.validate();
  check_data(!plan.train_indices.empty() && !plan.val_indices.empty(),
             "train_fold: empty train or validation fold");

  // Per-fold labels and rebalanced multiset (training side only).
  std::vector<int> train_labels;
  for (size_t i : plan.train_indices) train_labels.push_back(ds.cases[i].label);
  std::vector<size_t> multiset_local;
  try {
    multiset_local = rebalance_oversample(train_labels);
  } catch (const Error& e) {
    throw_data("train_fold " + std::to_string(fold_index) + ": " + e.what());
  }
  std::vector<size_t> multiset;  // dataset indices
  multiset.reserve(multiset_local.size());
  for (size_t mi : multiset_local) multiset.push_back(plan.train_indices[mi]);

  {
    int val_pos = 0, val_neg = 0;
    for (size_t i : plan.val_indices) (ds.cases[i].label == 1 ? val_pos : val_neg)++;
    if (val_pos == 0 || val_neg == 0)
      throw_data("train_fold " + std::to_string(fold_index) +
                 ": validation fold is single-class; choose another seed or more data");
  }

  const uint64_t task_id = static_cast<uint64_t>(ds.task);
  ModelConfig model_cfg = model_cfg_in;
  model_cfg.init_seed = Rng::derive(cfg.seed, {task_id, static_cast<uint64_t>(fold_index), 0}).next_u64();
  SubtypingNet net(model_cfg);
  Adam opt(net.parameters(), cfg.weight_decay);
  Rng epoch_rng = Rng::derive(cfg.seed, {task_id, static_cast<uint64_t>(fold_index), 1});

  FoldResult res;
  res.fold = fold_index;
  res.n_train_cases = plan.train_indices.size();
  res.n_train_multiset = multiset.size();
  res.n_val_cases = plan.val_indices.size();

  std::vector<int> val_labels;
  for (size_t i : plan.val_indices) val_labels.push_back(ds.cases[i].label);
  std::vector<int> multiset_labels;
  for (size_t i : multiset) multiset_labels.push_back(ds.cases[i].label);

  TensorContainer best_state;
  RocCurve best_roc;
  double best_val_auc = -1.0;
  double best_threshold = 0.5;
  int best_epoch = 0;
  int first_crossing = -1;

  const int64_t hw = kStackSize;
  const int64_t stack_stride = static_cast<int64_t>(kStackSlices) * kStackChannels * hw * hw;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = lr_at_epoch(epoch, cfg);

    // Shuffled pass over the rebalanced multiset.
    std::vector<size_t> order = multiset;
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(epoch_rng.uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }

    try {
      for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
        const size_t b = std::min(order.size() - start, static_cast<size_t>(cfg.batch_size));
        Tensor batch({static_cast<int64_t>(b), kStackSlices, kStackChannels, hw, hw});
        std::vector<float> batch_labels(b);
        for (size_t i = 0; i < b; ++i) {
          const size_t ci = order[start + i];
          const TaskCase& c = ds.cases[ci];
          if (cfg.augment.enabled) {
            Stack25D st = augment(c.t1w, c.t1ce, c.t2w, c.mask, cfg.margin_fraction, cfg.augment,
                                  epoch_rng, cfg.slice_step);
            std::copy_n(st.data.data(), stack_stride, batch.data() + static_cast<int64_t>(i) * stack_stride);
          } else {
            std::copy_n(eval_stacks[ci].data.data(), stack_stride,
                        batch.data() + static_cast<int64_t>(i) * stack_stride);
          }
          batch_labels[i] = static_cast<float>(c.label);
        }
        const std::vector<float> logits = net.forward_batch(batch, /*training=*/true);
        std::vector<float> dlogits;
        nn::bce_with_logits(logits, batch_labels, &dlogits);
        net.zero_grad();
        net.backward(dlogits);
        opt.step(lr);
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::training)
        throw_training("fold " + std::to_string(fold_index) + " diverged at epoch " +
                       std::to_string(epoch) + ": " + e.what());
      throw;
    }

    // Epoch-end metrics: training AUC over the full rebalanced multiset,
    // validation AUC over the untouched fold, both on deterministic stacks.
    const std::vector<double> train_scores = eval_scores(net, eval_stacks, multiset, cfg.batch_size);
    const double train_auc = auc(train_scores, multiset_labels);
    const std::vector<double> val_scores = eval_scores(net, eval_stacks, plan.val_indices, cfg.batch_size);
    const RocCurve val_roc = roc_curve(val_scores, val_labels);
    res.train_auc_history.push_back(train_auc);
    res.val_auc_history.push_back(val_roc.auc);

    if (val_roc.auc > best_val_auc) {
      best_val_auc = val_roc.auc;
      best_state = net.state();
      best_roc = val_roc;
      best_threshold = operating_point(val_roc);
      best_epoch = epoch;
    }
    if (first_crossing < 0 && train_auc > cfg.stop_auc_threshold) first_crossing = epoch;

    const int last_epoch =
        first_crossing >= 0
            ? std::min(first_crossing + cfg.stop_patience_epochs, cfg.max_epochs - 1)
            : cfg.max_epochs - 1;
    res.stop_epoch = epoch;
    if (epoch >= last_epoch) break;
  }

  res.first_crossing_epoch = first_crossing;
  res.chosen_epoch = best_epoch;
  res.validation_auc = best_val_auc;
  res.validation_roc = best_roc;
  res.operating_threshold = best_threshold;

  net.load_state(best_state);
  res.checkpoint = make_checkpoint(net, ds.task, fold_index, best_epoch, best_val_auc,
                                   best_threshold, config_hash);
  return res;
}

// Full task training: fold planning plus one train_fold per fold. Folds are
// independent; with cfg.jobs > 1 they run on separate threads and produce
// results identical to the serial schedule.
inline TaskTrainResult train_task(const TaskDataset& ds, const ModelConfig& model_cfg,
                                  const TrainConfig& cfg, const std::string& config_hash = "") {
  cfg.validate();
  if (static_cast<int>(ds.cases.size()) < cfg.folds)
    throw_data("train_task " + task_name(ds.task) + ": cohort of " +
               std::to_string(ds.cases.size()) + " cases is too small for " +
               std::to_string(cfg.folds) + " folds");

  const uint64_t fold_seed = Rng::derive(cfg.seed, {static_cast<uint64_t>(ds.task), 0xF01DULL}).next_u64();
  const auto plans = detail::plan_folds(ds, cfg, fold_seed);
  const std::vector<Stack25D> eval_stacks = build_eval_stack_cache(ds, cfg);

  TaskTrainResult out;
  out.task = ds.task;
  out.folds.resize(plans.size());

  if (cfg.jobs <= 1) {
    for (size_t f = 0; f < plans.size(); ++f)
      out.folds[f] = train_fold(ds, eval_stacks, plans[f], static_cast<int>(f), model_cfg, cfg,
                                config_hash);
    return out;
  }

  std::vector<std::exception_ptr> errors(plans.size());
  std::vector<std::thread> workers;
  std::atomic<size_t> next{0};
  const size_t n_workers = std::min<size_t>(static_cast<size_t>(cfg.jobs), plans.size());
  for (size_t w = 0; w < n_workers; ++w) {
    workers.emplace_back([&]() {
      for (size_t f = next.fetch_add(1); f < plans.size(); f = next.fetch_add(1)) {
        try {
          out.folds[f] = train_fold(ds, eval_stacks, plans[f], static_cast<int>(f), model_cfg, cfg,
                                    config_hash);
        } catch (...) {
          errors[f] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace glio
