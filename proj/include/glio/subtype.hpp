#pragma once

#include <array>
#include <string>
#include <string_view>

#include "glio/error.hpp"

namespace glio {

// The five WHO-2016 diffuse glioma subtypes.
//   I   : LGG, IDH mutant, 1p/19q codeleted
//   II  : LGG, IDH mutant, 1p/19q non-codeleted
//   III : LGG, IDH wild-type
//   IV  : GBM, IDH mutant
//   V   : GBM, IDH wild-type
enum class GliomaSubtype { I, II, III, IV, V };

inline constexpr std::array<GliomaSubtype, 5> kAllSubtypes = {
    GliomaSubtype::I, GliomaSubtype::II, GliomaSubtype::III, GliomaSubtype::IV, GliomaSubtype::V};

struct SubtypeTraits {
  bool is_gbm;
  bool idh_mutant;
  bool codeleted;  // meaningful only for IDH-mutant LGGs
};

inline SubtypeTraits subtype_traits(GliomaSubtype s) {
  switch (s) {
    case GliomaSubtype::I:   return {false, true, true};
    case GliomaSubtype::II:  return {false, true, false};
    case GliomaSubtype::III: return {false, false, false};
    case GliomaSubtype::IV:  return {true, true, false};
    case GliomaSubtype::V:   return {true, false, false};
  }
  throw_internal("invalid subtype enum");
}

inline std::string subtype_name(GliomaSubtype s) {
  switch (s) {
    case GliomaSubtype::I: return "I";
    case GliomaSubtype::II: return "II";
    case GliomaSubtype::III: return "III";
    case GliomaSubtype::IV: return "IV";
    case GliomaSubtype::V: return "V";
  }
  throw_internal("invalid subtype enum");
}

inline GliomaSubtype parse_subtype(std::string_view s) {
  if (s == "I") return GliomaSubtype::I;
  if (s == "II") return GliomaSubtype::II;
  if (s == "III") return GliomaSubtype::III;
  if (s == "IV") return GliomaSubtype::IV;
  if (s == "V") return GliomaSubtype::V;
  throw_data("unknown glioma subtype '" + std::string(s) + "' (expected I..V)");
}

// The four binary tasks of the three-level subtyping hierarchy.
enum class ClassificationTask {
  GradeGbmVsLgg,     // top level: GBM (positive) vs LGG
  IdhInLgg,          // middle level, LGG branch: IDH mutant (positive) vs wild-type
  CodelInIdhMutLgg,  // bottom level: 1p/19q codeleted (positive) vs non-codeleted
  IdhInGbm,          // middle level, GBM branch: IDH mutant (positive) vs wild-type
};

inline constexpr std::array<ClassificationTask, 4> kAllTasks = {
    ClassificationTask::GradeGbmVsLgg, ClassificationTask::IdhInLgg,
    ClassificationTask::CodelInIdhMutLgg, ClassificationTask::IdhInGbm};

inline std::string task_name(ClassificationTask t) {
  switch (t) {
    case ClassificationTask::GradeGbmVsLgg: return "grade";
    case ClassificationTask::IdhInLgg: return "idh-lgg";
    case ClassificationTask::CodelInIdhMutLgg: return "1p19q";
    case ClassificationTask::IdhInGbm: return "idh-gbm";
  }
  throw_internal("invalid task enum");
}

inline std::string task_positive_class(ClassificationTask t) {
  switch (t) {
    case ClassificationTask::GradeGbmVsLgg: return "GBM";
    case ClassificationTask::IdhInLgg: return "IDH mut";
    case ClassificationTask::CodelInIdhMutLgg: return "1p/19q codel";
    case ClassificationTask::IdhInGbm: return "IDH mut";
  }
  throw_internal("invalid task enum");
}

inline std::string task_description(ClassificationTask t) {
  switch (t) {
    case ClassificationTask::GradeGbmVsLgg: return "GBM vs. LGG";
    case ClassificationTask::IdhInLgg: return "IDH mut vs. wt in LGGs";
    case ClassificationTask::CodelInIdhMutLgg: return "1p/19q codel vs. noncodel in IDH mut LGGs";
    case ClassificationTask::IdhInGbm: return "IDH mut vs. wt in GBMs";
  }
  throw_internal("invalid task enum");
}

inline ClassificationTask parse_task(std::string_view s) {
  if (s == "grade") return ClassificationTask::GradeGbmVsLgg;
  if (s == "idh-lgg") return ClassificationTask::IdhInLgg;
  if (s == "1p19q") return ClassificationTask::CodelInIdhMutLgg;
  if (s == "idh-gbm") return ClassificationTask::IdhInGbm;
  throw_usage("unknown task '" + std::string(s) + "' (expected grade|idh-lgg|1p19q|idh-gbm)");
}

enum class BinaryLabel { negative, positive, not_in_cohort };

// Routes a subtype through the hierarchy to the task's binary label.
// `not_in_cohort` means the patient sits outside the task's parent node
// (e.g. any GBM for the 1p/19q task) and is excluded from that task.
inline BinaryLabel derive_binary_label(GliomaSubtype s, ClassificationTask t) {
  const SubtypeTraits tr = subtype_traits(s);
  switch (t) {
    case ClassificationTask::GradeGbmVsLgg:
      return tr.is_gbm ? BinaryLabel::positive : BinaryLabel::negative;
    case ClassificationTask::IdhInLgg:
      if (tr.is_gbm) return BinaryLabel::not_in_cohort;
      return tr.idh_mutant ? BinaryLabel::positive : BinaryLabel::negative;
    case ClassificationTask::CodelInIdhMutLgg:
      if (tr.is_gbm || !tr.idh_mutant) return BinaryLabel::not_in_cohort;
      return tr.codeleted ? BinaryLabel::positive : BinaryLabel::negative;
    case ClassificationTask::IdhInGbm:
      if (!tr.is_gbm) return BinaryLabel::not_in_cohort;
      return tr.idh_mutant ? BinaryLabel::positive : BinaryLabel::negative;
  }
  throw_internal("invalid task enum");
}

}  // namespace glio
