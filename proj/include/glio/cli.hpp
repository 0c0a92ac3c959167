#pragma once

// Operator CLI: synth, split, preprocess, train, evaluate, predict, plot-roc.
// Exit codes: 0 success, 2 usage error, 3 data/validation error, 4 training
// failure (1 for unexpected internal errors). Every artifact-writing command
// takes a lock on its output directory and leaves a provenance sidecar.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "glio/ensemble.hpp"
#include "glio/error.hpp"
#include "glio/hierarchy.hpp"
#include "glio/manifest.hpp"
#include "glio/metrics.hpp"
#include "glio/preprocess.hpp"
#include "glio/provenance.hpp"
#include "glio/roi.hpp"
#include "glio/subtype.hpp"
#include "glio/svgplot.hpp"
#include "glio/synth.hpp"
#include "glio/train.hpp"
#include "glio/version.hpp"

namespace glio::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Run configuration file: strict JSON schema, flags override file values.

struct RunConfig {
  uint64_t seed = 0;
  PreprocessConfig preprocess;
  TrainConfig train;
  ModelConfig model;

  json to_json() const {
    json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["seed"] = seed;
    j["preprocess"] = {{"spacing", preprocess.target_spacing},
                       {"registration", registration_mode_name(preprocess.registration)}};
    j["stack"] = {{"margin_fraction", train.margin_fraction}, {"slice_step", train.slice_step}};
    j["augment"] = {{"enabled", train.augment.enabled},
                    {"random_center_slice", train.augment.random_center_slice},
                    {"max_translation_fraction", train.augment.max_translation_fraction},
                    {"scale_range", train.augment.scale_range},
                    {"rotation_range_degrees", train.augment.rotation_range_degrees},
                    {"intensity_scale_range", train.augment.intensity_scale_range},
                    {"mirror_probability", train.augment.mirror_probability}};
    j["train"] = {{"batch_size", train.batch_size},
                  {"weight_decay", train.weight_decay},
                  {"initial_lr", train.initial_lr},
                  {"lr_decay_base", train.lr_decay_base},
                  {"folds", train.folds},
                  {"stop_auc_threshold", train.stop_auc_threshold},
                  {"stop_patience_epochs", train.stop_patience_epochs},
                  {"max_epochs", train.max_epochs},
                  {"jobs", train.jobs}};
    j["model"] = {{"arch", backbone_arch_name(model.backbone.arch)},
                  {"pooling", model.backbone.pooling == nn::GlobalPoolKind::max ? "max" : "average"},
                  {"init", model.backbone.init == PretrainedInit::natural_image_corpus
                               ? "natural_image_corpus"
                               : "random"},
                  {"pretrained_weights", model.backbone.pretrained_weights_path}};
    return j;
  }
};

namespace detail {

inline void check_keys(const json& j, const std::vector<std::string>& allowed,
                       const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw_usage("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j[key].get<T>();
}

}  // namespace detail

inline RunConfig load_run_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw_usage("config: file not found: " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw_usage("config: invalid JSON in " + path.string() + ": " + e.what());
  }

  RunConfig cfg;
  detail::check_keys(j, {"schema_version", "seed", "preprocess", "stack", "augment", "train", "model"},
                     "top level");
  if (j.contains("schema_version") && j["schema_version"].get<int>() != kConfigSchemaVersion)
    throw_usage("config: unsupported schema_version");
  detail::maybe(j, "seed", cfg.seed);

  if (j.contains("preprocess")) {
    const json& p = j["preprocess"];
    detail::check_keys(p, {"spacing", "registration"}, "preprocess");
    detail::maybe(p, "spacing", cfg.preprocess.target_spacing);
    if (p.contains("registration"))
      cfg.preprocess.registration = parse_registration_mode(p["registration"].get<std::string>());
  }
  if (j.contains("stack")) {
    const json& s = j["stack"];
    detail::check_keys(s, {"margin_fraction", "slice_step"}, "stack");
    detail::maybe(s, "margin_fraction", cfg.train.margin_fraction);
    detail::maybe(s, "slice_step", cfg.train.slice_step);
  }
  if (j.contains("augment")) {
    const json& a = j["augment"];
    detail::check_keys(a,
                       {"enabled", "random_center_slice", "max_translation_fraction", "scale_range",
                        "rotation_range_degrees", "intensity_scale_range", "mirror_probability"},
                       "augment");
    detail::maybe(a, "enabled", cfg.train.augment.enabled);
    detail::maybe(a, "random_center_slice", cfg.train.augment.random_center_slice);
    detail::maybe(a, "max_translation_fraction", cfg.train.augment.max_translation_fraction);
    detail::maybe(a, "scale_range", cfg.train.augment.scale_range);
    detail::maybe(a, "rotation_range_degrees", cfg.train.augment.rotation_range_degrees);
    detail::maybe(a, "intensity_scale_range", cfg.train.augment.intensity_scale_range);
    detail::maybe(a, "mirror_probability", cfg.train.augment.mirror_probability);
    try {
      cfg.train.augment.validate_strict();
    } catch (const Error& e) {
      throw_usage(std::string("config: ") + e.what());
    }
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    detail::check_keys(t,
                       {"batch_size", "weight_decay", "initial_lr", "lr_decay_base", "folds",
                        "stop_auc_threshold", "stop_patience_epochs", "max_epochs", "jobs"},
                       "train");
    detail::maybe(t, "batch_size", cfg.train.batch_size);
    detail::maybe(t, "weight_decay", cfg.train.weight_decay);
    detail::maybe(t, "initial_lr", cfg.train.initial_lr);
    detail::maybe(t, "lr_decay_base", cfg.train.lr_decay_base);
    detail::maybe(t, "folds", cfg.train.folds);
    detail::maybe(t, "stop_auc_threshold", cfg.train.stop_auc_threshold);
    detail::maybe(t, "stop_patience_epochs", cfg.train.stop_patience_epochs);
    detail::maybe(t, "max_epochs", cfg.train.max_epochs);
    detail::maybe(t, "jobs", cfg.train.jobs);
  }
  if (j.contains("model")) {
    const json& m = j["model"];
    detail::check_keys(m, {"arch", "pooling", "init", "pretrained_weights"}, "model");
    if (m.contains("arch")) cfg.model.backbone.arch = parse_backbone_arch(m["arch"].get<std::string>());
    if (m.contains("pooling")) {
      const std::string p = m["pooling"].get<std::string>();
      if (p != "average" && p != "max") throw_usage("config: pooling must be average|max");
      cfg.model.backbone.pooling = p == "max" ? nn::GlobalPoolKind::max : nn::GlobalPoolKind::average;
    }
    if (m.contains("init")) {
      const std::string v = m["init"].get<std::string>();
      if (v == "random") cfg.model.backbone.init = PretrainedInit::random;
      else if (v == "natural_image_corpus") cfg.model.backbone.init = PretrainedInit::natural_image_corpus;
      else throw_usage("config: init must be random|natural_image_corpus");
    }
    detail::maybe(m, "pretrained_weights", cfg.model.backbone.pretrained_weights_path);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Helpers shared by subcommands.

namespace detail {

inline std::array<double, 3> parse_triple(const std::string& s, const char* what) {
  std::array<double, 3> v{};
  if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &v[0], &v[1], &v[2]) != 3)
    throw_usage(std::string(what) + ": expected three comma-separated values, got '" + s + "'");
  return v;
}

inline std::array<int64_t, 3> parse_dims(const std::string& s, const char* what) {
  long long a, b, c;
  if (std::sscanf(s.c_str(), "%lld,%lld,%lld", &a, &b, &c) != 3)
    throw_usage(std::string(what) + ": expected three comma-separated integers, got '" + s + "'");
  return {a, b, c};
}

inline void require_preprocessed(const DatasetManifest& m, const char* who) {
  if (m.stage != "preprocessed")
    throw_data(std::string(who) + ": manifest stage is '" + m.stage +
               "'; run the preprocess command first");
}

// Manifest paths are relative to the manifest file; rewriting it elsewhere
// re-anchors them.
inline void rebase_manifest(DatasetManifest& m, const fs::path& new_dir) {
  if (fs::weakly_canonical(new_dir) == fs::weakly_canonical(m.base_dir)) return;
  for (auto& r : m.records) {
    for (Modality mod : kAllModalities) {
      const fs::path abs = fs::weakly_canonical(m.resolve(r.volume_paths[mod]));
      r.volume_paths[mod] = fs::relative(abs, new_dir).string();
    }
    const fs::path abs = fs::weakly_canonical(m.resolve(r.mask_path));
    r.mask_path = fs::relative(abs, new_dir).string();
  }
  m.base_dir = new_dir;
}

inline fs::path ensemble_dir_for(const fs::path& base, ClassificationTask task) {
  const fs::path with_task = base / task_name(task);
  return fs::exists(with_task / "fold0.ckpt") ? with_task : base;
}

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Grayscale PGM dump of a stack as a 3x3 grid (rows: slices, cols: T1w,
// T1CE, T2w), intensity min-max scaled per stack.
inline void write_stack_pgm(const Stack25D& st, const fs::path& path) {
  const int tile = kStackSize;
  const int w = tile * kStackChannels, h = tile * kStackSlices;
  float lo = st.data[0], hi = st.data[0];
  for (int64_t i = 0; i < st.data.numel(); ++i) {
    lo = std::min(lo, st.data[i]);
    hi = std::max(hi, st.data[i]);
  }
  const float scale = hi > lo ? 255.0f / (hi - lo) : 0.0f;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw_data("dump-stacks: cannot write " + path.string());
  f << "P5\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(w));
  for (int s = 0; s < kStackSlices; ++s)
    for (int r = 0; r < tile; ++r) {
      for (int ch = 0; ch < kStackChannels; ++ch) {
        const float* plane = st.data.data() + (static_cast<int64_t>(s) * kStackChannels + ch) * tile * tile;
        for (int c = 0; c < tile; ++c)
          row[static_cast<size_t>(ch * tile + c)] =
              static_cast<unsigned char>((plane[r * tile + c] - lo) * scale);
      }
      f.write(reinterpret_cast<const char*>(row.data()), w);
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommand implementations.

inline int cmd_synth(const SynthConfig& cfg, const fs::path& out_dir) {
  DirLock lock(out_dir);
  generate_synthetic_cohort(cfg, out_dir);
  json prov_cfg;
  prov_cfg["n"] = cfg.n;
  prov_cfg["seed"] = cfg.seed;
  prov_cfg["dims"] = cfg.dims;
  prov_cfg["spacing"] = cfg.spacing;
  write_provenance(out_dir, "synth", prov_cfg, cfg.seed);
  std::cout << "synth: wrote " << cfg.n << " patients to " << out_dir.string() << "\n";
  return 0;
}

inline int cmd_split(const fs::path& manifest_path, const fs::path& out_path, double test_prob,
                     uint64_t seed) {
  DatasetManifest m = load_manifest(manifest_path);
  const auto split = random_split(m.records, test_prob, seed);
  apply_split(m, split);
  const fs::path out_dir = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
  fs::create_directories(out_dir);
  detail::rebase_manifest(m, out_dir);
  save_manifest(m, out_path);

  int n_train = 0, n_test = 0;
  for (const auto& r : m.records) (r.split == Split::test ? n_test : n_train)++;
  json prov_cfg;
  prov_cfg["test_probability"] = test_prob;
  prov_cfg["seed"] = seed;
  prov_cfg["realized_counts"] = {{"train", n_train}, {"test", n_test}};
  write_file_provenance(out_path, "split", prov_cfg, seed);
  std::cout << "split: " << n_train << " train / " << n_test << " test -> " << out_path.string()
            << "\n";
  return 0;
}

inline int cmd_preprocess(const fs::path& manifest_path, const fs::path& out_dir,
                          const PreprocessConfig& cfg, const RunConfig& run_cfg) {
  cfg.validate();
  DatasetManifest in = load_manifest(manifest_path);
  DirLock lock(out_dir);
  preprocess_cohort(in, cfg, out_dir);
  json cfg_json = run_cfg.to_json();
  write_provenance(out_dir, "preprocess", cfg_json, run_cfg.seed);
  std::cout << "preprocess: " << in.records.size() << " patients -> " << out_dir.string() << "\n";
  return 0;
}

inline ordered_json fold_report_json(const FoldResult& fr) {
  ordered_json j;
  j["fold"] = fr.fold;
  j["epochs_run"] = fr.stop_epoch + 1;
  j["stop_epoch"] = fr.stop_epoch;
  j["first_crossing_epoch"] = fr.first_crossing_epoch;
  j["chosen_epoch"] = fr.chosen_epoch;
  j["validation_auc"] = fr.validation_auc;
  j["operating_threshold"] = fr.operating_threshold;
  j["n_train_cases"] = fr.n_train_cases;
  j["n_train_multiset"] = fr.n_train_multiset;
  j["n_val_cases"] = fr.n_val_cases;
  j["train_auc_history"] = fr.train_auc_history;
  j["val_auc_history"] = fr.val_auc_history;
  return j;
}

inline int cmd_train(ClassificationTask task, const fs::path& manifest_path, const fs::path& out_dir,
                     const RunConfig& run_cfg) {
  DatasetManifest m = load_manifest(manifest_path);
  detail::require_preprocessed(m, "train");

  const json cfg_json = run_cfg.to_json();
  const std::string hash = config_hash(cfg_json);

  TaskDataset ds = load_task_dataset(m, task, Split::train);
  DirLock lock(out_dir);
  const fs::path task_dir = out_dir / task_name(task);
  fs::create_directories(task_dir);

  TaskTrainResult result = train_task(ds, run_cfg.model, run_cfg.train, hash);

  ordered_json report;
  report["task"] = task_name(task);
  report["positive_class"] = task_positive_class(task);
  report["seed"] = run_cfg.train.seed;
  report["config_hash"] = hash;
  report["n_cohort_cases"] = ds.cases.size();
  report["folds"] = ordered_json::array();
  for (const auto& fr : result.folds) {
    save_checkpoint(fr.checkpoint, task_dir / ("fold" + std::to_string(fr.fold) + ".ckpt"));
    report["folds"].push_back(fold_report_json(fr));
  }
  {
    std::ofstream f(task_dir / "run_report.json", std::ios::trunc);
    f << report.dump(2) << "\n";
  }
  write_provenance(task_dir, "train", cfg_json, run_cfg.train.seed);

  std::cout << "train " << task_name(task) << ": 5 checkpoints -> " << task_dir.string() << "\n";
  for (const auto& fr : result.folds)
    std::cout << "  fold " << fr.fold << ": val AUC " << detail::fmt2(fr.validation_auc)
              << " (epoch " << fr.chosen_epoch << ", stopped after epoch " << fr.stop_epoch << ")\n";
  return 0;
}

inline int cmd_evaluate(ClassificationTask task, const fs::path& ensembles, const fs::path& manifest_path,
                        Split split, fs::path out_dir, const RunConfig& run_cfg,
                        const std::string& dump_stacks_dir) {
  DatasetManifest m = load_manifest(manifest_path);
  detail::require_preprocessed(m, "evaluate");
  const fs::path ens_dir = detail::ensemble_dir_for(ensembles, task);
  TaskEnsemble ensemble = load_task_ensemble(ens_dir, task);

  TaskDataset ds = load_task_dataset(m, task, split);
  if (ds.cases.empty()) throw_data("evaluate: no cases of task cohort in split " + split_name(split));

  if (out_dir.empty()) out_dir = ens_dir / ("evaluate-" + split_name(split));
  DirLock lock(out_dir);

  std::vector<double> scores;
  std::vector<int> votes, labels;
  std::vector<std::string> ids;
  std::optional<fs::path> dump_dir;
  if (!dump_stacks_dir.empty()) {
    dump_dir = fs::path(dump_stacks_dir);
    fs::create_directories(*dump_dir);
  }
  for (const auto& c : ds.cases) {
    Stack25D st = build_eval_stack(c.t1w, c.t1ce, c.t2w, c.mask, run_cfg.train.margin_fraction,
                                   run_cfg.train.slice_step);
    st.patient_id = c.id;
    if (dump_dir) detail::write_stack_pgm(st, *dump_dir / (c.id + ".pgm"));
    const EnsemblePrediction pred = ensemble.predict(st);
    scores.push_back(pred.probability);
    votes.push_back(pred.prediction);
    labels.push_back(c.label);
    ids.push_back(c.id);
  }

  const RocCurve roc = roc_curve(scores, labels);
  MetricsReport rep = confusion_metrics(votes, labels);
  rep.auc = roc.auc;

  ordered_json j;
  j["task"] = task_name(task);
  j["description"] = task_description(task);
  j["positive_class"] = task_positive_class(task);
  j["split"] = split_name(split);
  j["n_cases"] = ds.cases.size();
  j["auc"] = rep.auc;
  j["accuracy"] = rep.accuracy;
  j["sensitivity"] = rep.sensitivity;
  j["specificity"] = rep.specificity;
  j["mean_accuracy"] = rep.mean_accuracy;
  j["counts"] = {{"tp", rep.tp}, {"fp", rep.fp}, {"tn", rep.tn}, {"fn", rep.fn}};
  j["display"] = {{"auc", detail::fmt2(rep.auc)},
                  {"accuracy", detail::fmt2(rep.accuracy)},
                  {"sensitivity", detail::fmt2(rep.sensitivity)},
                  {"specificity", detail::fmt2(rep.specificity)},
                  {"mean_accuracy", detail::fmt2(rep.mean_accuracy)}};
  {
    std::ofstream f(out_dir / "metrics_report.json", std::ios::trunc);
    f << j.dump(2) << "\n";
  }
  write_roc_table(roc, out_dir / "roc_table.tsv");
  {
    std::ofstream f(out_dir / "predictions.tsv", std::ios::trunc);
    f << "id\tlabel\tprobability\tprediction\n";
    char buf[160];
    for (size_t i = 0; i < ids.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s\t%d\t%.12g\t%d\n", ids[i].c_str(), labels[i], scores[i],
                    votes[i]);
      f << buf;
    }
  }
  RocPanel panel;
  panel.title = task_description(task);
  panel.curves.push_back({"DCNN", roc.points});
  plot_roc_panels({panel}, out_dir / ("roc_" + task_name(task) + ".svg"));
  write_provenance(out_dir, "evaluate", run_cfg.to_json(), run_cfg.seed);

  std::cout << "evaluate " << task_name(task) << " [" << split_name(split) << ", n=" << ds.cases.size()
            << "]\n";
  std::cout << "  AUC | Accuracy | Sensitivity | Specificity | Mean Accuracy\n";
  std::cout << "  " << detail::fmt2(rep.auc) << " | " << detail::fmt2(rep.accuracy) << " | "
            << detail::fmt2(rep.sensitivity) << " | " << detail::fmt2(rep.specificity) << " | "
            << detail::fmt2(rep.mean_accuracy) << "\n";
  return 0;
}

inline int cmd_predict(const fs::path& ensembles_dir, const fs::path& manifest_path,
                       const std::string& patient_id, const std::string& t1w_path,
                       const std::string& t1ce_path, const std::string& t2w_path,
                       const std::string& mask_path, const fs::path& out_file,
                       const RunConfig& run_cfg) {
  Volume t1w, t1ce, t2w;
  MaskVolume mask;
  std::string id = patient_id;
  if (!patient_id.empty()) {
    if (manifest_path.empty()) throw_usage("predict: --patient requires --manifest");
    DatasetManifest m = load_manifest(manifest_path);
    detail::require_preprocessed(m, "predict");
    const PatientRecord* rec = m.find(patient_id);
    if (rec == nullptr) throw_data("predict: patient '" + patient_id + "' not in manifest");
    t1w = read_nifti_volume(m.volume_path(*rec, Modality::T1w));
    t1ce = read_nifti_volume(m.volume_path(*rec, Modality::T1ce));
    t2w = read_nifti_volume(m.volume_path(*rec, Modality::T2w));
    mask = read_nifti_mask(m.mask_path(*rec));
  } else {
    if (t1w_path.empty() || t1ce_path.empty() || t2w_path.empty() || mask_path.empty())
      throw_usage("predict: need either --patient with --manifest, or all of --t1w --t1ce --t2w --mask");
    t1w = read_nifti_volume(t1w_path);
    t1ce = read_nifti_volume(t1ce_path);
    t2w = read_nifti_volume(t2w_path);
    mask = read_nifti_mask(mask_path);
    id = fs::path(t2w_path).stem().string();
  }

  // One deterministic stack shared by all four ensembles.
  Stack25D st = build_eval_stack(t1w, t1ce, t2w, mask, run_cfg.train.margin_fraction,
                                 run_cfg.train.slice_step);
  st.patient_id = id;

  BranchProbs probs;
  BranchVotes votes;
  for (ClassificationTask task : kAllTasks) {
    const fs::path dir = detail::ensemble_dir_for(ensembles_dir, task);
    if (!fs::exists(dir / "fold0.ckpt"))
      throw_data("predict: missing ensemble for task " + task_name(task) + " under " +
                 ensembles_dir.string());
    TaskEnsemble ens = load_task_ensemble(dir, task);
    const EnsemblePrediction p = ens.predict(st);
    switch (task) {
      case ClassificationTask::GradeGbmVsLgg: probs.p_gbm = p.probability; votes.gbm = p.prediction; break;
      case ClassificationTask::IdhInLgg: probs.p_idh_lgg = p.probability; votes.idh_lgg = p.prediction; break;
      case ClassificationTask::CodelInIdhMutLgg: probs.p_codel = p.probability; votes.codel = p.prediction; break;
      case ClassificationTask::IdhInGbm: probs.p_idh_gbm = p.probability; votes.idh_gbm = p.prediction; break;
    }
  }
  const SubtypePrediction pred = compose_prediction(probs, votes);

  ordered_json j;
  j["patient"] = id;
  j["hard_subtype"] = subtype_name(pred.hard_subtype);
  ordered_json leaf;
  for (GliomaSubtype s : kAllSubtypes) leaf[subtype_name(s)] = pred.leaf_probs.at(s);
  j["leaf_probs"] = leaf;
  j["branch_probs"] = {{"gbm", probs.p_gbm},
                       {"idh_lgg", probs.p_idh_lgg},
                       {"codel", probs.p_codel},
                       {"idh_gbm", probs.p_idh_gbm}};
  j["branch_votes"] = {{"gbm", votes.gbm},
                       {"idh_lgg", votes.idh_lgg},
                       {"codel", votes.codel},
                       {"idh_gbm", votes.idh_gbm}};
  std::cout << j.dump(2) << "\n";
  if (!out_file.empty()) {
    std::ofstream f(out_file, std::ios::trunc);
    f << j.dump(2) << "\n";
    write_file_provenance(out_file, "predict", run_cfg.to_json(), run_cfg.seed);
  }
  return 0;
}

inline int cmd_plot_roc(const std::vector<std::string>& table_args,
                        const std::vector<std::string>& titles, const fs::path& out_path) {
  if (table_args.empty()) throw_usage("plot-roc: at least one --table required");
  std::vector<RocPanel> panels;
  for (size_t i = 0; i < table_args.size(); ++i) {
    RocPanel panel;
    panel.title = i < titles.size() ? titles[i] : "";
    std::string arg = table_args[i];
    size_t start = 0;
    while (start <= arg.size()) {
      const size_t comma = arg.find(',', start);
      const std::string file = arg.substr(start, comma == std::string::npos ? std::string::npos
                                                                            : comma - start);
      if (!file.empty()) {
        RocCurveSeries series;
        series.label = fs::path(file).stem().string();
        series.points = read_roc_table(file);
        panel.curves.push_back(std::move(series));
        if (panel.title.empty()) panel.title = fs::path(file).stem().string();
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    panels.push_back(std::move(panel));
  }
  plot_roc_panels(panels, out_path);
  json prov_cfg;
  prov_cfg["tables"] = table_args;
  prov_cfg["titles"] = titles;
  write_file_provenance(out_path, "plot-roc", prov_cfg, 0);
  std::cout << "plot-roc: wrote " << out_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

inline int run_command(const std::vector<std::string>& args) {
  CLI::App app{"Hierarchical glioma subtyping from trimodal MRI"};
  app.require_subcommand(1);

  std::string config_file;
  app.add_option("--config", config_file, "JSON run configuration (flags override file values)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic phantom cohort");
  int synth_n = 50;
  uint64_t synth_seed = 0;
  std::string synth_out, synth_grid, synth_spacing;
  synth->add_option("--n", synth_n, "Number of patients")->required();
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--grid", synth_grid, "Volume grid nx,ny,nz (default 64,64,16)");
  synth->add_option("--spacing", synth_spacing, "Voxel spacing mm x,y,z (default 0.7,0.7,5)");

  // split
  auto* split_cmd = app.add_subcommand("split", "Assign train/test split to a manifest");
  std::string split_manifest, split_out;
  double split_prob = 0.2;
  uint64_t split_seed = 0;
  split_cmd->add_option("--manifest", split_manifest, "Input manifest")->required();
  split_cmd->add_option("--out", split_out, "Output manifest path")->required();
  split_cmd->add_option("--test-prob", split_prob, "Per-case test probability (default 0.2)");
  split_cmd->add_option("--seed", split_seed, "Split seed");

  // preprocess
  auto* prep = app.add_subcommand("preprocess", "Resample, register, transfer masks, normalize");
  std::string prep_manifest, prep_out, prep_spacing, prep_reg;
  prep->add_option("--manifest", prep_manifest, "Input manifest")->required();
  prep->add_option("--out-dir", prep_out, "Output directory")->required();
  prep->add_option("--spacing", prep_spacing, "Target spacing mm x,y,z (default 0.34,0.34,5)");
  prep->add_option("--registration", prep_reg, "in_plane_rigid|bypass (default in_plane_rigid)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the five-fold ensemble for one task");
  std::string train_task_name, train_manifest, train_out, train_arch, train_weights;
  uint64_t train_seed = 0;
  bool train_seed_set = false;
  int train_max_epochs = -1, train_jobs = -1;
  train_cmd->add_option("--task", train_task_name, "grade|idh-lgg|1p19q|idh-gbm")->required();
  train_cmd->add_option("--manifest", train_manifest, "Preprocessed manifest")->required();
  train_cmd->add_option("--out-dir", train_out, "Output directory")->required();
  train_cmd->add_option("--seed", train_seed, "Training seed")->each([&](const std::string&) {
    train_seed_set = true;
  });
  train_cmd->add_option("--arch", train_arch, "Backbone: resnet18|stub (default resnet18)");
  train_cmd->add_option("--max-epochs", train_max_epochs, "Epoch cap override");
  train_cmd->add_option("--jobs", train_jobs, "Folds trained in parallel");
  train_cmd->add_option("--pretrained-weights", train_weights,
                        "Backbone weights artifact (enables pretrained init)");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a trained ensemble on a split");
  std::string eval_task_name, eval_ensembles, eval_manifest, eval_split = "test", eval_out,
              eval_dump;
  eval_cmd->add_option("--task", eval_task_name, "grade|idh-lgg|1p19q|idh-gbm")->required();
  eval_cmd->add_option("--ensembles", eval_ensembles, "Trained ensemble directory")->required();
  eval_cmd->add_option("--manifest", eval_manifest, "Preprocessed manifest")->required();
  eval_cmd->add_option("--split", eval_split, "train|test (default test)");
  eval_cmd->add_option("--out-dir", eval_out, "Report directory (default <ensembles>/evaluate-<split>)");
  eval_cmd->add_option("--dump-stacks", eval_dump, "Dump network input stacks as PGM grids");

  // predict
  auto* pred_cmd = app.add_subcommand("predict", "Hierarchical five-subtype prediction for one patient");
  std::string pred_ensembles, pred_manifest, pred_patient, pred_t1w, pred_t1ce, pred_t2w, pred_mask,
      pred_out;
  pred_cmd->add_option("--ensembles-dir", pred_ensembles, "Directory with the four task ensembles")
      ->required();
  pred_cmd->add_option("--manifest", pred_manifest, "Preprocessed manifest (with --patient)");
  pred_cmd->add_option("--patient", pred_patient, "Patient id from the manifest");
  pred_cmd->add_option("--t1w", pred_t1w, "T1w volume path");
  pred_cmd->add_option("--t1ce", pred_t1ce, "T1CE volume path");
  pred_cmd->add_option("--t2w", pred_t2w, "T2w volume path");
  pred_cmd->add_option("--mask", pred_mask, "Tumor mask path");
  pred_cmd->add_option("--out", pred_out, "Also write the prediction JSON here");

  // plot-roc
  auto* plot_cmd = app.add_subcommand("plot-roc", "Render ROC tables as an SVG figure");
  std::vector<std::string> plot_tables, plot_titles;
  std::string plot_out;
  plot_cmd->add_option("--table", plot_tables,
                       "ROC table (repeat per panel; comma-join files to overlay)")
      ->required();
  plot_cmd->add_option("--title", plot_titles, "Panel title (repeat per panel)");
  plot_cmd->add_option("--out", plot_out, "Output SVG path")->required();

  std::vector<std::string> argv_storage = args;
  std::vector<char*> argv;
  argv.push_back(const_cast<char*>("gliotype"));
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());

    RunConfig run_cfg;
    if (!config_file.empty()) run_cfg = load_run_config(config_file);

    if (*synth) {
      SynthConfig cfg;
      cfg.n = synth_n;
      cfg.seed = synth_seed;
      if (!synth_grid.empty()) cfg.dims = detail::parse_dims(synth_grid, "--grid");
      if (!synth_spacing.empty()) cfg.spacing = detail::parse_triple(synth_spacing, "--spacing");
      return cmd_synth(cfg, synth_out);
    }
    if (*split_cmd) return cmd_split(split_manifest, split_out, split_prob, split_seed);
    if (*prep) {
      PreprocessConfig cfg = run_cfg.preprocess;
      if (!prep_spacing.empty()) cfg.target_spacing = detail::parse_triple(prep_spacing, "--spacing");
      if (!prep_reg.empty()) cfg.registration = parse_registration_mode(prep_reg);
      return cmd_preprocess(prep_manifest, prep_out, cfg, run_cfg);
    }
    if (*train_cmd) {
      if (train_seed_set) {
        run_cfg.seed = train_seed;
        run_cfg.train.seed = train_seed;
      } else {
        run_cfg.train.seed = run_cfg.seed;
      }
      if (!train_arch.empty()) run_cfg.model.backbone.arch = parse_backbone_arch(train_arch);
      if (train_max_epochs > 0) run_cfg.train.max_epochs = train_max_epochs;
      if (train_jobs > 0) run_cfg.train.jobs = train_jobs;
      if (!train_weights.empty()) {
        run_cfg.model.backbone.init = PretrainedInit::natural_image_corpus;
        run_cfg.model.backbone.pretrained_weights_path = train_weights;
      }
      return cmd_train(parse_task(train_task_name), train_manifest, train_out, run_cfg);
    }
    if (*eval_cmd) {
      return cmd_evaluate(parse_task(eval_task_name), eval_ensembles, eval_manifest,
                          parse_split(eval_split), eval_out, run_cfg, eval_dump);
    }
    if (*pred_cmd) {
      return cmd_predict(pred_ensembles, pred_manifest, pred_patient, pred_t1w, pred_t1ce, pred_t2w,
                         pred_mask, pred_out, run_cfg);
    }
    if (*plot_cmd) return cmd_plot_roc(plot_tables, plot_titles, plot_out);
    throw_usage("no subcommand given");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::usage: return 2;
      case ErrorKind::data: return 3;
      case ErrorKind::training: return 4;
      case ErrorKind::internal: return 1;
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace glio::cli
