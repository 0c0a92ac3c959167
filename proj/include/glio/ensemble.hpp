#pragma once

// Five-fold ensemble inference: the ensemble probability is the mean of the
// five fold-model probabilities; the hard prediction is the majority of the
// five per-fold threshold votes (five voters, so never tied).

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "glio/checkpoint.hpp"
#include "glio/error.hpp"
#include "glio/model.hpp"
#include "glio/roi.hpp"
#include "glio/subtype.hpp"

namespace glio {

struct EnsemblePrediction {
  double probability = 0.0;        // mean of the five fold probabilities
  int prediction = 0;              // majority vote
  std::vector<double> fold_probs;  // size 5
  std::vector<int> fold_votes;     // size 5
};

// A trained task ensemble loaded for inference.
class TaskEnsemble {
 public:
  TaskEnsemble(ClassificationTask task, std::vector<Checkpoint> checkpoints) : task_(task) {
    if (checkpoints.size() != 5)
      throw_data("ensemble for task " + task_name(task) + ": expected 5 checkpoints, got " +
                 std::to_string(checkpoints.size()));
    for (auto& c : checkpoints) {
      if (c.task != task)
        throw_data("ensemble: checkpoint task " + task_name(c.task) + " does not match " +
                   task_name(task));
      thresholds_.push_back(c.operating_threshold);
      models_.push_back(restore_model(c));
    }
  }

  ClassificationTask task() const { return task_; }
  const std::vector<double>& thresholds() const { return thresholds_; }

  EnsemblePrediction predict(const Stack25D& stack) const { return predict_tensor(stack.data); }

  EnsemblePrediction predict_tensor(const Tensor& stack) const {
    EnsemblePrediction out;
    int votes = 0;
    double sum = 0.0;
    for (size_t i = 0; i < models_.size(); ++i) {
      const double p = models_[i]->predict_tensor(stack);
      const int vote = p >= thresholds_[i] ? 1 : 0;
      out.fold_probs.push_back(p);
      out.fold_votes.push_back(vote);
      sum += p;
      votes += vote;
    }
    out.probability = sum / static_cast<double>(models_.size());
    out.prediction = votes >= 3 ? 1 : 0;
    return out;
  }

 private:
  ClassificationTask task_;
  std::vector<double> thresholds_;
  mutable std::vector<std::unique_ptr<SubtypingNet>> models_;
};

// Loads fold0.ckpt .. fold4.ckpt from a task directory.
inline TaskEnsemble load_task_ensemble(const std::filesystem::path& dir, ClassificationTask task) {
  std::vector<Checkpoint> cks;
  for (int fold = 0; fold < 5; ++fold) {
    const auto p = dir / ("fold" + std::to_string(fold) + ".ckpt");
    if (!std::filesystem::exists(p))
      throw_data("ensemble: missing checkpoint " + p.string());
    cks.push_back(load_checkpoint(p));
  }
  return TaskEnsemble(task, std::move(cks));
}

// Pure aggregation helpers (the ensemble rule itself, testable in isolation).
inline double ensemble_mean_probability(const std::vector<double>& probs) {
  check_data(probs.size() == 5, "ensemble: expected exactly 5 probabilities");
  double s = 0.0;
  for (double p : probs) s += p;
  return s / 5.0;
}

inline int ensemble_majority_vote(const std::vector<int>& votes) {
  check_data(votes.size() == 5, "ensemble: expected exactly 5 votes");
  int n = 0;
  for (int v : votes) n += v != 0 ? 1 : 0;
  return n >= 3 ? 1 : 0;
}

}  // namespace glio
