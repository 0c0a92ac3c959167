#pragma once

// Composition of the four binary task outputs into a five-subtype prediction.
// The hard subtype follows the vote routing of the hierarchy (top level
// first, then the branch-specific tasks); the five leaf probabilities are
// path products of the branch probabilities and always sum to one.

#include <array>
#include <map>

#include "glio/error.hpp"
#include "glio/subtype.hpp"

namespace glio {

struct BranchProbs {
  double p_gbm = 0.5;      // grade task: P(GBM)
  double p_idh_lgg = 0.5;  // IDH task within LGGs: P(IDH mutant)
  double p_codel = 0.5;    // 1p/19q task within IDH-mutant LGGs: P(codeleted)
  double p_idh_gbm = 0.5;  // IDH task within GBMs: P(IDH mutant)
};

struct BranchVotes {
  int gbm = 0;
  int idh_lgg = 0;
  int codel = 0;
  int idh_gbm = 0;
};

struct SubtypePrediction {
  std::map<GliomaSubtype, double> leaf_probs;
  GliomaSubtype hard_subtype = GliomaSubtype::I;
  BranchProbs branch_probs;
  BranchVotes branch_votes;
};

// Leaf probabilities as path products:
//   P(I)   = (1-p_gbm) * p_idh_lgg * p_codel
//   P(II)  = (1-p_gbm) * p_idh_lgg * (1-p_codel)
//   P(III) = (1-p_gbm) * (1-p_idh_lgg)
//   P(IV)  = p_gbm * p_idh_gbm
//   P(V)   = p_gbm * (1-p_idh_gbm)
inline std::map<GliomaSubtype, double> compose_leaf_probs(const BranchProbs& b) {
  for (double p : {b.p_gbm, b.p_idh_lgg, b.p_codel, b.p_idh_gbm})
    check_data(p >= 0.0 && p <= 1.0, "compose_leaf_probs: probability outside [0,1]");
  std::map<GliomaSubtype, double> out;
  out[GliomaSubtype::I] = (1.0 - b.p_gbm) * b.p_idh_lgg * b.p_codel;
  out[GliomaSubtype::II] = (1.0 - b.p_gbm) * b.p_idh_lgg * (1.0 - b.p_codel);
  out[GliomaSubtype::III] = (1.0 - b.p_gbm) * (1.0 - b.p_idh_lgg);
  out[GliomaSubtype::IV] = b.p_gbm * b.p_idh_gbm;
  out[GliomaSubtype::V] = b.p_gbm * (1.0 - b.p_idh_gbm);
  return out;
}

// Vote routing through the hierarchy. Votes on pruned branches are ignored:
// an LGG-routed case is decided by idh_lgg (and codel when mutant) alone.
inline GliomaSubtype route_votes(const BranchVotes& v) {
  if (v.gbm != 0) return v.idh_gbm != 0 ? GliomaSubtype::IV : GliomaSubtype::V;
  if (v.idh_lgg == 0) return GliomaSubtype::III;
  return v.codel != 0 ? GliomaSubtype::I : GliomaSubtype::II;
}

inline SubtypePrediction compose_prediction(const BranchProbs& probs, const BranchVotes& votes) {
  SubtypePrediction out;
  out.branch_probs = probs;
  out.branch_votes = votes;
  out.leaf_probs = compose_leaf_probs(probs);
  out.hard_subtype = route_votes(votes);
  return out;
}

// Argmax over composed leaf probabilities; analysis alternative to vote
// routing (lowest subtype wins ties, for determinism).
inline GliomaSubtype argmax_subtype(const std::map<GliomaSubtype, double>& leaf_probs) {
  GliomaSubtype best = GliomaSubtype::I;
  double bv = -1.0;
  for (GliomaSubtype s : kAllSubtypes) {
    const double v = leaf_probs.at(s);
    if (v > bv) {
      bv = v;
      best = s;
    }
  }
  return best;
}

}  // namespace glio
