#pragma once

// Preprocessing pipeline, fixed stage order:
//   resample -> register -> mask transfer -> normalize
// T1w and T1CE are registered onto the T2w grid; the tumor mask (delineated
// on T2w) then applies to all three modalities. Bias-field correction is
// deliberately not a stage.

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "glio/error.hpp"
#include "glio/manifest.hpp"
#include "glio/nifti.hpp"
#include "glio/resample.hpp"
#include "glio/rigid.hpp"
#include "glio/volume.hpp"

namespace glio {

enum class RegistrationMode { in_plane_rigid, bypass };

inline std::string registration_mode_name(RegistrationMode m) {
  return m == RegistrationMode::in_plane_rigid ? "in_plane_rigid" : "bypass";
}
inline RegistrationMode parse_registration_mode(std::string_view s) {
  if (s == "in_plane_rigid") return RegistrationMode::in_plane_rigid;
  if (s == "bypass") return RegistrationMode::bypass;
  throw_usage("unknown registration mode '" + std::string(s) + "'");
}

struct PreprocessConfig {
  std::array<double, 3> target_spacing{0.34, 0.34, 5.0};
  RegistrationMode registration = RegistrationMode::in_plane_rigid;
  RegistrationConfig registration_cfg;

  void validate() const {
    for (double s : target_spacing)
      if (!(s > 0.0)) throw_usage("preprocess: target spacing must be positive");
  }
};

inline const std::vector<std::string>& preprocess_stage_names() {
  static const std::vector<std::string> kStages = {"resample", "register", "mask_transfer", "normalize"};
  return kStages;
}

// Zero-mean / unit-variance over the whole volume (population statistics).
inline Volume normalize_intensity(const Volume& v) {
  validate_volume(v, "normalize_intensity input");
  double s = 0.0;
  for (float x : v.data) s += x;
  const double n = static_cast<double>(v.data.size());
  const double mean = s / n;
  double ss = 0.0;
  for (float x : v.data) {
    const double d = static_cast<double>(x) - mean;
    ss += d * d;
  }
  const double stdev = std::sqrt(ss / n);
  if (stdev <= 1e-12 * std::max(1.0, std::abs(mean)))
    throw_data("normalize_intensity: constant volume (zero variance)");
  Volume out = v;
  const double inv = 1.0 / stdev;
  for (float& x : out.data) x = static_cast<float>((static_cast<double>(x) - mean) * inv);
  return out;
}

struct PreprocessedPatient {
  Volume t1w, t1ce, t2w;
  MaskVolume mask;
  RigidTransform t1w_transform, t1ce_transform;
  double t1w_ncc = 1.0, t1ce_ncc = 1.0;  // informational
};

// Runs the full stage chain for one patient, in memory.
inline PreprocessedPatient preprocess_patient(const Volume& t1w_in, const Volume& t1ce_in,
                                              const Volume& t2w_in, const MaskVolume& mask_in,
                                              const PreprocessConfig& cfg) {
  cfg.validate();
  check_data(mask_in.geom.same_grid(t2w_in.geom),
             "preprocess: tumor mask grid does not match the T2w grid");

  PreprocessedPatient out;
  // Stage 1: resample everything to the target spacing.
  out.t2w = resample_volume(t2w_in, cfg.target_spacing);
  out.mask = resample_mask(mask_in, cfg.target_spacing);
  Volume t1w = resample_volume(t1w_in, cfg.target_spacing);
  Volume t1ce = resample_volume(t1ce_in, cfg.target_spacing);

  // Stage 2: rigid registration of T1w/T1CE onto T2w, then pull both onto
  // the T2w grid so all modalities share one voxel lattice.
  if (cfg.registration == RegistrationMode::in_plane_rigid) {
    out.t1w_transform = register_rigid(t1w, out.t2w, cfg.registration_cfg);
    out.t1ce_transform = register_rigid(t1ce, out.t2w, cfg.registration_cfg);
    out.t1w = resample_onto(t1w, out.t2w.geom, out.t1w_transform);
    out.t1ce = resample_onto(t1ce, out.t2w.geom, out.t1ce_transform);
  } else {
    check_data(t1w.geom.same_grid(out.t2w.geom) && t1ce.geom.same_grid(out.t2w.geom),
               "preprocess: registration bypass requires pre-aligned grids");
    out.t1w_transform = RigidTransform::identity();
    out.t1ce_transform = RigidTransform::identity();
    out.t1w = std::move(t1w);
    out.t1ce = std::move(t1ce);
  }

  // Stage 3: mask transfer. The mask lives on the T2w grid, which after the
  // previous stage is the common grid of all three modalities.
  validate_mask(out.mask, "preprocess: resampled mask");

  // Stage 4: intensity normalization per modality volume.
  out.t1w = normalize_intensity(out.t1w);
  out.t1ce = normalize_intensity(out.t1ce);
  out.t2w = normalize_intensity(out.t2w);
  return out;
}

inline nlohmann::ordered_json transform_to_json(const RigidTransform& t) {
  nlohmann::ordered_json j;
  j["rotation_deg"] = t.rotation_deg;
  j["translation_mm"] = t.translation_mm;
  j["center_mm"] = t.center_mm;
  return j;
}

// Preprocesses every manifest record into out_dir/<id>/ and writes the
// updated manifest plus a per-patient transform sidecar.
inline DatasetManifest preprocess_cohort(const DatasetManifest& in, const PreprocessConfig& cfg,
                                         const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  DatasetManifest out;
  out.stage = "preprocessed";
  out.base_dir = out_dir;

  for (const auto& rec : in.records) {
    Volume t1w = read_nifti_volume(in.volume_path(rec, Modality::T1w));
    Volume t1ce = read_nifti_volume(in.volume_path(rec, Modality::T1ce));
    Volume t2w = read_nifti_volume(in.volume_path(rec, Modality::T2w));
    MaskVolume mask = read_nifti_mask(in.mask_path(rec));
    PreprocessedPatient pp = preprocess_patient(t1w, t1ce, t2w, mask, cfg);

    const fs::path pdir = out_dir / rec.id;
    fs::create_directories(pdir);
    write_nifti(pdir / "t1w.nii", pp.t1w);
    write_nifti(pdir / "t1ce.nii", pp.t1ce);
    write_nifti(pdir / "t2w.nii", pp.t2w);
    write_nifti(pdir / "mask.nii", pp.mask);

    nlohmann::ordered_json sidecar;
    sidecar["stages"] = preprocess_stage_names();
    sidecar["target_spacing"] = cfg.target_spacing;
    sidecar["registration"] = registration_mode_name(cfg.registration);
    sidecar["t1w_to_t2w"] = transform_to_json(pp.t1w_transform);
    sidecar["t1ce_to_t2w"] = transform_to_json(pp.t1ce_transform);
    std::ofstream sf(pdir / "preprocess.json");
    sf << sidecar.dump(2) << "\n";

    PatientRecord nr = rec;
    nr.volume_paths[Modality::T1w] = rec.id + "/t1w.nii";
    nr.volume_paths[Modality::T1ce] = rec.id + "/t1ce.nii";
    nr.volume_paths[Modality::T2w] = rec.id + "/t2w.nii";
    nr.mask_path = rec.id + "/mask.nii";
    out.records.push_back(std::move(nr));
  }
  save_manifest(out, out_dir / "manifest.jsonl");
  return out;
}

}  // namespace glio
