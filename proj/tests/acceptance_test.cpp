// Acceptance suite: one check per release criterion, each printing a PASS or
// FAIL line. Exits nonzero if any criterion fails. The end-to-end checks run
// the real CLI in-process on a synthetic cohort.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "glio/cli.hpp"
#include "glio/hierarchy.hpp"
#include "glio/manifest.hpp"
#include "glio/metrics.hpp"
#include "glio/model.hpp"
#include "glio/preprocess.hpp"
#include "glio/resample.hpp"
#include "glio/rigid.hpp"
#include "glio/rng.hpp"
#include "glio/subtype.hpp"
#include "glio/train.hpp"

using namespace glio;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

#define CHECK_THAT(cond, what)                                      \
  do {                                                              \
    if (!(cond)) {                                                  \
      std::ostringstream oss_;                                      \
      oss_ << what;                                                 \
      throw std::runtime_error(oss_.str());                         \
    }                                                               \
  } while (0)

void criterion(int number, const std::string& name, const std::function<void()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[PASS] criterion %d: %s (%.1fs)\n", number, name.c_str(), secs);
  } catch (const std::exception& e) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[FAIL] criterion %d: %s (%.1fs)\n       %s\n", number, name.c_str(), secs,
                e.what());
    ++g_failures;
  }
  std::fflush(stdout);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

int cli(const std::vector<std::string>& args) { return glio::cli::run_command(args); }

// ---------------------------------------------------------------------------
// criterion 1: metric oracles

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

double operating_point_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::set<double> uniq(scores.begin(), scores.end());
  int64_t tot_pos = 0, tot_neg = 0;
  for (int l : labels) (l == 1 ? tot_pos : tot_neg)++;
  double best_j = -2.0, best_tpr = -1.0, best_thr = 0.0;
  for (double thr : uniq) {
    int64_t tp = 0, fp = 0;
    for (size_t i = 0; i < scores.size(); ++i)
      if (scores[i] >= thr) (labels[i] == 1 ? tp : fp)++;
    const double tpr = static_cast<double>(tp) / static_cast<double>(tot_pos);
    const double fpr = static_cast<double>(fp) / static_cast<double>(tot_neg);
    const double j = tpr - fpr;
    if (j > best_j || (j == best_j && (tpr > best_tpr || (tpr == best_tpr && thr < best_thr)))) {
      best_j = j;
      best_tpr = tpr;
      best_thr = thr;
    }
  }
  return best_thr;
}

void criterion_metric_oracles() {
  Rng rng(10001);
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = static_cast<int>(rng.uniform_int(4, 200));
    std::vector<double> scores(static_cast<size_t>(n));
    std::vector<int> labels(static_cast<size_t>(n));
    const bool ties = rng.bernoulli(0.5);
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      scores[static_cast<size_t>(i)] = ties ? std::round(rng.uniform() * 10.0) / 10.0 : rng.uniform();
      labels[static_cast<size_t>(i)] = rng.bernoulli(0.4) ? 1 : 0;
      pos += labels[static_cast<size_t>(i)];
    }
    if (pos == 0) labels[0] = 1;
    if (pos == n) labels[0] = 0;

    const double fast = auc(scores, labels);
    const double slow = auc_pairwise_oracle(scores, labels);
    CHECK_THAT(std::abs(fast - slow) <= 1e-12,
               "AUC mismatch at rep " << rep << ": " << fast << " vs " << slow);
  }
  Rng rng2(10002);
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = static_cast<int>(rng2.uniform_int(4, 60));
    std::vector<double> scores(static_cast<size_t>(n));
    std::vector<int> labels(static_cast<size_t>(n));
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      scores[static_cast<size_t>(i)] = std::round(rng2.uniform() * 8.0) / 8.0;
      labels[static_cast<size_t>(i)] = rng2.bernoulli(0.5) ? 1 : 0;
      pos += labels[static_cast<size_t>(i)];
    }
    if (pos == 0) labels[0] = 1;
    if (pos == n) labels[0] = 0;
    const double fast = operating_point(roc_curve(scores, labels));
    const double slow = operating_point_oracle(scores, labels);
    CHECK_THAT(fast == slow,
               "operating point mismatch at rep " << rep << ": " << fast << " vs " << slow);
  }
}

// ---------------------------------------------------------------------------
// criterion 2: Table-1 truth table

void criterion_truth_table() {
  using S = GliomaSubtype;
  using T = ClassificationTask;
  using L = BinaryLabel;
  const std::map<std::pair<S, T>, L> expected = {
      {{S::I, T::GradeGbmVsLgg}, L::negative},    {{S::I, T::IdhInLgg}, L::positive},
      {{S::I, T::CodelInIdhMutLgg}, L::positive}, {{S::I, T::IdhInGbm}, L::not_in_cohort},
      {{S::II, T::GradeGbmVsLgg}, L::negative},   {{S::II, T::IdhInLgg}, L::positive},
      {{S::II, T::CodelInIdhMutLgg}, L::negative},{{S::II, T::IdhInGbm}, L::not_in_cohort},
      {{S::III, T::GradeGbmVsLgg}, L::negative},  {{S::III, T::IdhInLgg}, L::negative},
      {{S::III, T::CodelInIdhMutLgg}, L::not_in_cohort}, {{S::III, T::IdhInGbm}, L::not_in_cohort},
      {{S::IV, T::GradeGbmVsLgg}, L::positive},   {{S::IV, T::IdhInLgg}, L::not_in_cohort},
      {{S::IV, T::CodelInIdhMutLgg}, L::not_in_cohort}, {{S::IV, T::IdhInGbm}, L::positive},
      {{S::V, T::GradeGbmVsLgg}, L::positive},    {{S::V, T::IdhInLgg}, L::not_in_cohort},
      {{S::V, T::CodelInIdhMutLgg}, L::not_in_cohort}, {{S::V, T::IdhInGbm}, L::negative},
  };
  CHECK_THAT(expected.size() == 20, "truth table must have 20 entries");
  for (const auto& [key, want] : expected)
    CHECK_THAT(derive_binary_label(key.first, key.second) == want,
               "mismatch for " << subtype_name(key.first) << "/" << task_name(key.second));
}

// ---------------------------------------------------------------------------
// criterion 3: architecture invariants in backbone-stub mode

Tensor random_stack8(Rng& rng) {
  Tensor t({kStackSlices, kStackChannels, 8, 8});
  for (float& v : t.vec()) v = static_cast<float>(rng.normal());
  return t;
}

Tensor permute_slices(const Tensor& stack, const std::array<int, 3>& perm) {
  Tensor out(stack.shape());
  const int64_t plane = stack.numel() / kStackSlices;
  for (int s = 0; s < 3; ++s)
    std::copy_n(stack.data() + perm[static_cast<size_t>(s)] * plane, plane, out.data() + s * plane);
  return out;
}

void criterion_architecture() {
  ModelConfig cfg;
  cfg.backbone.arch = BackboneArch::stub;
  cfg.init_seed = 12345;
  SubtypingNet net(cfg);
  Rng rng(777);

  // slice-permutation invariance of forward to <= 1e-6
  for (int rep = 0; rep < 10; ++rep) {
    const Tensor stack = random_stack8(rng);
    const double p0 = net.predict_tensor(stack);
    for (const std::array<int, 3>& perm :
         {std::array<int, 3>{1, 0, 2}, {2, 1, 0}, {2, 0, 1}, {0, 2, 1}, {1, 2, 0}}) {
      const double p = net.predict_tensor(permute_slices(stack, perm));
      CHECK_THAT(std::abs(p - p0) <= 1e-6, "permutation changed output by " << std::abs(p - p0));
    }
  }

  // max(x,x,x) = x duplication identity: a triplicated slice equals the
  // single-slice value computed from its feature vector through the head
  const Tensor stack = random_stack8(rng);
  const Tensor dup = permute_slices(stack, {1, 1, 1});
  const double p_dup = net.predict_tensor(dup);
  Tensor slice1({kStackChannels, 8, 8});
  std::copy_n(stack.data() + stack.numel() / 3, stack.numel() / 3, slice1.data());
  const std::vector<float> feats = net.backbone_features(slice1);
  float z = 0.0f;
  for (auto* p : net.parameters()) {
    if (p->name == "head.bias") z += p->value[0];
    if (p->name == "head.weight")
      for (size_t i = 0; i < feats.size(); ++i) z += p->value[static_cast<int64_t>(i)] * feats[i];
  }
  CHECK_THAT(std::abs(p_dup - nn::sigmoid(z)) <= 1e-6,
             "duplication identity violated: " << p_dup << " vs " << nn::sigmoid(z));

  // head gradient vs central finite differences, <= 1e-3 relative
  Rng brng(778);
  Tensor batch({3, kStackSlices, kStackChannels, 8, 8});
  for (float& v : batch.vec()) v = static_cast<float>(brng.normal());
  const std::vector<float> labels = {1.0f, 0.0f, 1.0f};
  auto loss_of = [&]() {
    const std::vector<float> logits = net.forward_batch(batch, false);
    return nn::bce_with_logits(logits, labels);
  };
  const std::vector<float> logits = net.forward_batch(batch, false);
  std::vector<float> dlogits;
  nn::bce_with_logits(logits, labels, &dlogits);
  net.zero_grad();
  net.backward(dlogits);
  Rng dir_rng(779);
  for (auto* p : net.parameters()) {
    if (p->name.rfind("head.", 0) != 0) continue;
    std::vector<float> dir(static_cast<size_t>(p->value.numel()));
    double dot = 0.0;
    for (size_t i = 0; i < dir.size(); ++i) {
      dir[i] = static_cast<float>(dir_rng.normal());
      dot += static_cast<double>(dir[i]) * p->grad[static_cast<int64_t>(i)];
    }
    const double eps = 1e-3;
    const std::vector<float> orig = p->value.vec();
    for (size_t i = 0; i < dir.size(); ++i)
      p->value[static_cast<int64_t>(i)] = static_cast<float>(orig[i] + eps * dir[i]);
    const double lp = loss_of();
    for (size_t i = 0; i < dir.size(); ++i)
      p->value[static_cast<int64_t>(i)] = static_cast<float>(orig[i] - eps * dir[i]);
    const double lm = loss_of();
    p->value.vec() = orig;
    const double fd = (lp - lm) / (2.0 * eps);
    const double rel = std::abs(dot - fd) / std::max({std::abs(fd), std::abs(dot), 1e-9});
    CHECK_THAT(rel <= 1e-3, p->name << " gradient relative error " << rel);
  }
}

// ---------------------------------------------------------------------------
// criterion 4: training machinery

void criterion_training_machinery() {
  // stopping rule on injected histories
  {
    std::vector<double> h(40, 0.5);
    h[7] = 0.995;
    CHECK_THAT(stop_epoch_from_history(h, 0.99, 10, 200) == 17, "stop = crossing + 10");
    std::vector<double> never(300, 0.98);
    CHECK_THAT(stop_epoch_from_history(never, 0.99, 10, 200) == 199, "cap at max_epochs");
    std::vector<double> late(300, 0.5);
    late[195] = 0.999;
    CHECK_THAT(stop_epoch_from_history(late, 0.99, 10, 200) == 199, "cap binds late crossing");
  }
  // lr schedule to 1e-12 over [0, 300]
  for (int ep = 0; ep <= 300; ++ep) {
    const double expect = 0.0005 * std::pow(0.97, static_cast<double>(ep));
    CHECK_THAT(std::abs(lr_at_epoch(ep) - expect) <= 1e-12, "lr mismatch at epoch " << ep);
  }
  // rebalancing on the published training counts 60 vs 275: factor 5
  {
    std::vector<int> labels;
    for (int i = 0; i < 60; ++i) labels.push_back(1);
    for (int i = 0; i < 275; ++i) labels.push_back(0);
    const auto idx = rebalance_oversample(labels);
    int64_t pos = 0, neg = 0;
    for (size_t i : idx) (labels[i] == 1 ? pos : neg)++;
    CHECK_THAT(pos == 300 && neg == 275, "expected 300/275, got " << pos << "/" << neg);
  }
  // fold partition properties over random cohort sizes
  Rng rng(10004);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = static_cast<int>(rng.uniform_int(5, 400));
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("c" + std::to_string(i));
    const auto folds = make_folds(ids, 5, rng.next_u64());
    std::set<std::string> seen;
    size_t total = 0, lo = SIZE_MAX, hi = 0;
    for (const auto& f : folds) {
      total += f.size();
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
      for (const auto& id : f)
        CHECK_THAT(seen.insert(id).second, "duplicate id across folds");
    }
    CHECK_THAT(total == ids.size(), "folds must cover all ids");
    CHECK_THAT(hi - lo <= 1, "fold sizes must differ by at most 1");
  }
}

// ---------------------------------------------------------------------------
// criterion 5: composition identity

void criterion_composition() {
  Rng rng(10005);
  for (int rep = 0; rep < 100000; ++rep) {
    BranchProbs b;
    b.p_gbm = rng.uniform();
    b.p_idh_lgg = rng.uniform();
    b.p_codel = rng.uniform();
    b.p_idh_gbm = rng.uniform();
    const auto leaf = compose_leaf_probs(b);
    double sum = 0.0;
    for (const auto& [s, p] : leaf) sum += p;
    CHECK_THAT(std::abs(sum - 1.0) <= 1e-9, "leaf sum " << sum << " at rep " << rep);
  }
  BranchProbs half;  // all 0.5
  const auto leaf = compose_leaf_probs(half);
  CHECK_THAT(leaf.at(GliomaSubtype::I) == 0.125 && leaf.at(GliomaSubtype::II) == 0.125 &&
                 leaf.at(GliomaSubtype::III) == 0.25 && leaf.at(GliomaSubtype::IV) == 0.25 &&
                 leaf.at(GliomaSubtype::V) == 0.25,
             "all-0.5 case must be exactly (0.125, 0.125, 0.25, 0.25, 0.25)");
}

// ---------------------------------------------------------------------------
// criterion 6: preprocessing

Volume blob(std::array<int64_t, 3> dims, std::array<double, 3> spacing) {
  Geometry g;
  g.dims = dims;
  g.spacing = spacing;
  Volume v(g);
  const double cx[3] = {dims[0] * 0.3, dims[0] * 0.62, dims[0] * 0.5};
  const double cy[3] = {dims[1] * 0.4, dims[1] * 0.55, dims[1] * 0.72};
  const double amp[3] = {3.0, 2.0, 1.5};
  const double sig[3] = {dims[0] * 0.10, dims[0] * 0.16, dims[0] * 0.07};
  for (int64_t k = 0; k < dims[2]; ++k)
    for (int64_t j = 0; j < dims[1]; ++j)
      for (int64_t i = 0; i < dims[0]; ++i) {
        double val = 1.0 + 0.1 * static_cast<double>(k);
        for (int b = 0; b < 3; ++b) {
          const double dx = (static_cast<double>(i) - cx[b]) / sig[b];
          const double dy = (static_cast<double>(j) - cy[b]) / sig[b];
          val += amp[b] * std::exp(-0.5 * (dx * dx + dy * dy));
        }
        v.at(i, j, k) = static_cast<float>(val);
      }
  return v;
}

void criterion_preprocessing() {
  // normalize: mean 0 +- 1e-4, std 1 +- 1e-4
  {
    Rng rng(10006);
    Geometry g;
    g.dims = {32, 32, 8};
    g.spacing = {1, 1, 5};
    Volume v(g);
    for (float& x : v.data) x = static_cast<float>(rng.normal(7.0, 3.0));
    const Volume n = normalize_intensity(v);
    double s = 0, ss = 0;
    for (float x : n.data) {
      s += x;
      ss += static_cast<double>(x) * x;
    }
    const double cnt = static_cast<double>(n.data.size());
    const double mean = s / cnt;
    const double stdev = std::sqrt(ss / cnt - mean * mean);
    CHECK_THAT(std::abs(mean) <= 1e-4, "normalized mean " << mean);
    CHECK_THAT(std::abs(stdev - 1.0) <= 1e-4, "normalized std " << stdev);
  }
  // resample: exact target spacing and dims
  {
    const Volume v = blob({128, 64, 4}, {0.68, 0.68, 5.0});
    const Volume r = resample_volume(v, {0.34, 0.34, 5.0});
    CHECK_THAT(r.geom.spacing[0] == 0.34 && r.geom.spacing[1] == 0.34 && r.geom.spacing[2] == 5.0,
               "resampled spacing must equal the target exactly");
    CHECK_THAT(r.geom.dims[0] == 256 && r.geom.dims[1] == 128 && r.geom.dims[2] == 4,
               "resampled dims must be round(n * s_in / s_out)");
  }
  // registration: (3,4,0)-voxel shift recovered within 1 voxel, 5 deg within 1 deg
  {
    const Volume fixed = blob({48, 48, 8}, {1, 1, 5});
    RigidTransform shift;
    shift.center_mm = fixed.geom.center_mm();
    shift.translation_mm = {3.0, 4.0, 0.0};
    const Volume moving = apply_transform(fixed, shift);
    const RigidTransform rec = register_rigid(moving, fixed);
    CHECK_THAT(std::abs(rec.translation_mm[0] + 3.0) <= 1.0, "x shift " << rec.translation_mm[0]);
    CHECK_THAT(std::abs(rec.translation_mm[1] + 4.0) <= 1.0, "y shift " << rec.translation_mm[1]);
    CHECK_THAT(std::abs(rec.translation_mm[2]) <= 5.0, "z shift " << rec.translation_mm[2]);

    RigidTransform rot;
    rot.center_mm = fixed.geom.center_mm();
    rot.rotation_deg = 5.0;
    const Volume rotated = apply_transform(fixed, rot);
    const RigidTransform rec2 = register_rigid(rotated, fixed);
    CHECK_THAT(std::abs(rec2.rotation_deg + 5.0) <= 1.0, "rotation " << rec2.rotation_deg);
  }
}

// ---------------------------------------------------------------------------
// criteria 7 and 8: end-to-end synthetic runs

struct TaskMeta {
  std::vector<int> labels_train, labels_test;
};

TaskMeta task_meta(const std::vector<PatientRecord>& records,
                   const std::map<std::string, Split>& split, ClassificationTask task) {
  TaskMeta m;
  for (const auto& r : records) {
    const BinaryLabel l = derive_binary_label(r.subtype, task);
    if (l == BinaryLabel::not_in_cohort) continue;
    const int y = l == BinaryLabel::positive ? 1 : 0;
    (split.at(r.id) == Split::test ? m.labels_test : m.labels_train).push_back(y);
  }
  return m;
}

bool split_workable(const std::vector<PatientRecord>& records,
                    const std::map<std::string, Split>& split) {
  for (ClassificationTask t : kAllTasks) {
    const TaskMeta m = task_meta(records, split, t);
    int tp = 0, tn = 0, sp = 0, sn = 0;
    for (int y : m.labels_train) (y ? tp : tn)++;
    for (int y : m.labels_test) (y ? sp : sn)++;
    if (tp < 3 || tn < 3 || sp < 1 || sn < 1) return false;
    if (m.labels_train.size() < 10) return false;
  }
  return true;
}

// Metadata-only dataset for fold-seed scanning (no volumes loaded).
TaskDataset metadata_dataset(const DatasetManifest& m, ClassificationTask task) {
  TaskDataset ds;
  ds.task = task;
  for (const auto& r : m.records) {
    if (*r.split != Split::train) continue;
    const BinaryLabel l = derive_binary_label(r.subtype, task);
    if (l == BinaryLabel::not_in_cohort) continue;
    TaskCase c;
    c.id = r.id;
    c.label = l == BinaryLabel::positive ? 1 : 0;
    ds.cases.push_back(std::move(c));
  }
  return ds;
}

struct E2ePlan {
  uint64_t split_seed = 1;
  std::map<ClassificationTask, uint64_t> train_seed;
};

E2ePlan plan_e2e(const fs::path& raw_manifest, const fs::path& split_manifest) {
  DatasetManifest raw = load_manifest(raw_manifest, ManifestValidation::structure_only);
  E2ePlan plan;
  for (;; ++plan.split_seed) {
    const auto split = random_split(raw.records, 0.2, plan.split_seed);
    if (split_workable(raw.records, split)) break;
    CHECK_THAT(plan.split_seed < 10000, "no workable split seed found");
  }
  CHECK_THAT(cli({"split", "--manifest", raw_manifest.string(), "--out", split_manifest.string(),
                  "--seed", std::to_string(plan.split_seed)}) == 0,
             "split command failed");
  DatasetManifest sm = load_manifest(split_manifest, ManifestValidation::structure_only);
  for (ClassificationTask t : kAllTasks) {
    TaskDataset meta = metadata_dataset(sm, t);
    TrainConfig probe;
    probe.seed = 1;
    while (!folds_well_posed(meta, probe)) {
      ++probe.seed;
      CHECK_THAT(probe.seed < 10000, "no workable train seed for " << task_name(t));
    }
    plan.train_seed[t] = probe.seed;
  }
  return plan;
}

void criterion_end_to_end() {
  const fs::path root = fs::temp_directory_path() / "gliotype_acceptance_e2e";
  fs::remove_all(root);
  fs::create_directories(root);

  CHECK_THAT(cli({"synth", "--n", "200", "--seed", "2024", "--out", (root / "raw").string()}) == 0,
             "synth failed");
  const E2ePlan plan = plan_e2e(root / "raw" / "manifest.jsonl", root / "raw" / "manifest_split.jsonl");
  CHECK_THAT(cli({"preprocess", "--manifest", (root / "raw" / "manifest_split.jsonl").string(),
                  "--out-dir", (root / "prep").string(), "--spacing", "0.7,0.7,5",
                  "--registration", "bypass"}) == 0,
             "preprocess failed");

  const std::map<ClassificationTask, double> min_auc = {
      {ClassificationTask::GradeGbmVsLgg, 0.90},
      {ClassificationTask::IdhInLgg, 0.90},
      {ClassificationTask::CodelInIdhMutLgg, 0.90},
      {ClassificationTask::IdhInGbm, 0.70},
  };
  for (ClassificationTask t : kAllTasks) {
    const std::string name = task_name(t);
    CHECK_THAT(cli({"train", "--task", name, "--manifest", (root / "prep" / "manifest.jsonl").string(),
                    "--out-dir", (root / "runs").string(), "--seed",
                    std::to_string(plan.train_seed.at(t)), "--arch", "stub", "--max-epochs",
                    "18"}) == 0,
               "train failed for " << name);
    CHECK_THAT(cli({"evaluate", "--task", name, "--ensembles", (root / "runs").string(),
                    "--manifest", (root / "prep" / "manifest.jsonl").string(), "--split", "test",
                    "--out-dir", (root / ("eval_" + name)).string()}) == 0,
               "evaluate failed for " << name);
    const auto rep = nlohmann::json::parse(slurp(root / ("eval_" + name) / "metrics_report.json"));
    const double test_auc = rep["auc"].get<double>();
    std::printf("       %-8s test AUC %.3f (threshold %.2f)\n", name.c_str(), test_auc,
                min_auc.at(t));
    std::fflush(stdout);
    CHECK_THAT(test_auc >= min_auc.at(t),
               name << " test AUC " << test_auc << " below " << min_auc.at(t));
  }
}

void criterion_determinism() {
  const fs::path root = fs::temp_directory_path() / "gliotype_acceptance_det";
  fs::remove_all(root);
  fs::create_directories(root);

  auto full_run = [&](const fs::path& dir) {
    fs::create_directories(dir);
    CHECK_THAT(cli({"synth", "--n", "60", "--seed", "5", "--out", (dir / "raw").string()}) == 0,
               "synth failed");
    DatasetManifest raw = load_manifest(dir / "raw" / "manifest.jsonl",
                                        ManifestValidation::structure_only);
    uint64_t split_seed = 1;
    for (;; ++split_seed) {
      const auto split = random_split(raw.records, 0.2, split_seed);
      int sp = 0, sn = 0;
      for (const auto& r : raw.records) {
        if (split.at(r.id) != Split::test) continue;
        const BinaryLabel l = derive_binary_label(r.subtype, ClassificationTask::GradeGbmVsLgg);
        (l == BinaryLabel::positive ? sp : sn)++;
      }
      if (sp >= 1 && sn >= 1) break;
    }
    CHECK_THAT(cli({"split", "--manifest", (dir / "raw" / "manifest.jsonl").string(), "--out",
                    (dir / "raw" / "manifest_split.jsonl").string(), "--seed",
                    std::to_string(split_seed)}) == 0,
               "split failed");
    CHECK_THAT(cli({"preprocess", "--manifest", (dir / "raw" / "manifest_split.jsonl").string(),
                    "--out-dir", (dir / "prep").string(), "--spacing", "0.7,0.7,5",
                    "--registration", "bypass"}) == 0,
               "preprocess failed");
    DatasetManifest prep = load_manifest(dir / "prep" / "manifest.jsonl",
                                         ManifestValidation::structure_only);
    TaskDataset meta = metadata_dataset(prep, ClassificationTask::GradeGbmVsLgg);
    TrainConfig probe;
    probe.seed = 1;
    while (!folds_well_posed(meta, probe)) ++probe.seed;
    CHECK_THAT(cli({"train", "--task", "grade", "--manifest", (dir / "prep" / "manifest.jsonl").string(),
                    "--out-dir", (dir / "runs").string(), "--seed", std::to_string(probe.seed),
                    "--arch", "stub", "--max-epochs", "4"}) == 0,
               "train failed");
    CHECK_THAT(cli({"evaluate", "--task", "grade", "--ensembles", (dir / "runs").string(),
                    "--manifest", (dir / "prep" / "manifest.jsonl").string(), "--split", "test",
                    "--out-dir", (dir / "eval").string()}) == 0,
               "evaluate failed");
  };

  full_run(root / "a");
  full_run(root / "b");

  for (const char* rel : {"eval/metrics_report.json", "eval/roc_table.tsv", "eval/predictions.tsv",
                          "runs/grade/run_report.json"}) {
    const std::string a = slurp(root / "a" / rel);
    const std::string b = slurp(root / "b" / rel);
    CHECK_THAT(!a.empty(), rel << " missing or empty");
    CHECK_THAT(a == b, rel << " differs between identically seeded runs");
  }
}

}  // namespace

int main() {
  std::printf("acceptance suite (synthetic desk-scale checks)\n");
  criterion(1, "trapezoidal AUC equals pairwise oracle; operating point matches exhaustive scan",
            criterion_metric_oracles);
  criterion(2, "binary label derivation matches the 5x4 truth table exhaustively",
            criterion_truth_table);
  criterion(3, "stub-mode architecture invariants (permutation, duplication, head gradients)",
            criterion_architecture);
  criterion(4, "stopping rule, lr schedule, oversampling factor, fold partition properties",
            criterion_training_machinery);
  criterion(5, "leaf probabilities sum to 1 (1e5 draws); all-0.5 case exact",
            criterion_composition);
  criterion(6, "normalization, resampling geometry, rigid-shift and rotation recovery",
            criterion_preprocessing);
  criterion(7, "end-to-end synthetic run: four tasks trained and evaluated above thresholds",
            criterion_end_to_end);
  criterion(8, "identically seeded pipelines produce byte-identical reports",
            criterion_determinism);

  if (g_failures == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
  return 1;
}
