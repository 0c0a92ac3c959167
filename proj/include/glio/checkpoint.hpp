#pragma once

// Model checkpoints: the tensor container plus a metadata block identifying
// the task, fold, selected epoch, validation AUC and the fold's operating
// threshold. Round-trips are bit-exact.

#include <filesystem>
#include <memory>
#include <string>

#include "glio/error.hpp"
#include "glio/model.hpp"
#include "glio/params_io.hpp"
#include "glio/subtype.hpp"
#include "glio/version.hpp"

namespace glio {

struct Checkpoint {
  ModelConfig model_cfg;
  TensorContainer state;  // parameters + batch-norm buffers
  ClassificationTask task = ClassificationTask::GradeGbmVsLgg;
  int fold = 0;
  int epoch = 0;  // selected (best validation AUC) epoch, 0-based
  double validation_auc = 0.0;
  double operating_threshold = 0.5;
  std::string config_hash;

  void validate() const {
    check_data(operating_threshold >= 0.0 && operating_threshold <= 1.0,
               "checkpoint: operating threshold outside [0,1]");
  }
};

inline Checkpoint make_checkpoint(SubtypingNet& net, ClassificationTask task, int fold, int epoch,
                                  double val_auc, double threshold, const std::string& config_hash) {
  Checkpoint c;
  c.model_cfg = net.config();
  c.state = net.state();
  c.task = task;
  c.fold = fold;
  c.epoch = epoch;
  c.validation_auc = val_auc;
  c.operating_threshold = threshold;
  c.config_hash = config_hash;
  c.validate();
  return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  c.validate();
  TensorContainer out = c.state;
  nlohmann::json meta;
  meta["kind"] = "glioma-subtyping-checkpoint";
  meta["schema_version"] = kCheckpointSchemaVersion;
  meta["arch"] = backbone_arch_name(c.model_cfg.backbone.arch);
  meta["pooling"] = c.model_cfg.backbone.pooling == nn::GlobalPoolKind::average ? "average" : "max";
  meta["task"] = task_name(c.task);
  meta["fold"] = c.fold;
  meta["epoch"] = c.epoch;
  meta["validation_auc"] = c.validation_auc;
  meta["operating_threshold"] = c.operating_threshold;
  meta["config_hash"] = c.config_hash;
  out.meta = meta;
  write_tensor_container(path, out);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  TensorContainer c = read_tensor_container(path);
  if (!c.meta.contains("kind") || c.meta["kind"] != "glioma-subtyping-checkpoint")
    throw_data("checkpoint: not a checkpoint file: " + path.string());
  const int schema = c.meta.value("schema_version", -1);
  if (schema != kCheckpointSchemaVersion)
    throw_data("checkpoint: unsupported schema_version " + std::to_string(schema) + ": " +
               path.string());
  Checkpoint out;
  out.model_cfg.backbone.arch = parse_backbone_arch(c.meta["arch"].get<std::string>());
  out.model_cfg.backbone.pooling = c.meta["pooling"] == "max" ? nn::GlobalPoolKind::max
                                                              : nn::GlobalPoolKind::average;
  out.task = parse_task(c.meta["task"].get<std::string>());
  out.fold = c.meta["fold"].get<int>();
  out.epoch = c.meta["epoch"].get<int>();
  out.validation_auc = c.meta["validation_auc"].get<double>();
  out.operating_threshold = c.meta["operating_threshold"].get<double>();
  out.config_hash = c.meta.value("config_hash", "");
  out.state = std::move(c);
  out.validate();
  return out;
}

// Reconstructs a ready-to-run network from a checkpoint.
inline std::unique_ptr<SubtypingNet> restore_model(const Checkpoint& c) {
  auto net = std::make_unique<SubtypingNet>(c.model_cfg);
  net->load_state(c.state);
  return net;
}

}  // namespace glio
