#pragma once

// Synthetic phantom cohort. Each patient gets three modality volumes
// containing one ellipsoidal lesion over a textured background, plus the
// matching binary mask. Lesion appearance encodes the subtype through three
// radiological-style cues, so every task in the hierarchy is learnable:
//   grade  -> T1CE rim enhancement (strong for GBM)
//   IDH    -> T2w lesion contrast (high for IDH mutant)
//   1p/19q -> T1w lesion contrast (high for codeleted)
// Volumes are bit-identical for a fixed (n, seed): each patient draws from an
// independent rng stream derived from (seed, index).

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "glio/error.hpp"
#include "glio/manifest.hpp"
#include "glio/nifti.hpp"
#include "glio/rng.hpp"
#include "glio/subtype.hpp"
#include "glio/volume.hpp"

namespace glio {

struct SynthConfig {
  int n = 50;
  uint64_t seed = 0;
  std::array<int64_t, 3> dims{64, 64, 16};
  std::array<double, 3> spacing{0.7, 0.7, 5.0};  // anisotropic, mm

  void validate() const {
    if (n < 10) throw_usage("synth: need at least 10 patients");
    for (int64_t d : dims)
      if (d < 16) throw_usage("synth: grid dims must be >= 16");
    for (double s : spacing)
      if (!(s > 0.0)) throw_usage("synth: spacing must be positive");
  }
};

// Training-set subtype proportions the generator reproduces in expectation:
// (138, 116, 191, 60, 275) / 780 for subtypes I..V.
inline const std::array<double, 5>& synth_subtype_marginals() {
  static const std::array<double, 5> kProbs = {138.0 / 780.0, 116.0 / 780.0, 191.0 / 780.0,
                                               60.0 / 780.0, 275.0 / 780.0};
  return kProbs;
}

inline GliomaSubtype sample_subtype(Rng& rng) {
  const auto& p = synth_subtype_marginals();
  double u = rng.uniform();
  double acc = 0.0;
  for (size_t i = 0; i < 5; ++i) {
    acc += p[i];
    if (u < acc) return kAllSubtypes[i];
  }
  return GliomaSubtype::V;
}

// Per-patient generator draws; persisted for inspection and tests.
struct SynthPatientParams {
  GliomaSubtype subtype;
  std::array<double, 3> center_vox;
  std::array<double, 3> semi_axes_vox;  // ax, ay, az
  double t1w_contrast;
  double t1ce_rim;
  double t2w_contrast;
  int age;
  Sex sex;
};

namespace detail {

inline double truncated_normal(Rng& rng, double mean, double stdev, double nsigma = 2.5) {
  double v;
  do {
    v = rng.normal();
  } while (std::abs(v) > nsigma);
  return mean + stdev * v;
}

inline SynthPatientParams draw_patient_params(Rng& rng, const SynthConfig& cfg) {
  SynthPatientParams p{};
  p.subtype = sample_subtype(rng);
  const SubtypeTraits tr = subtype_traits(p.subtype);

  const double nx = static_cast<double>(cfg.dims[0]);
  const double ny = static_cast<double>(cfg.dims[1]);
  const double nz = static_cast<double>(cfg.dims[2]);

  // In-plane size scales with the grid; GBMs trend larger.
  const double unit = nx / 64.0;
  double ax = tr.is_gbm ? rng.uniform(10.0, 15.0) * unit : rng.uniform(7.0, 11.0) * unit;
  double ay = ax * rng.uniform(0.7, 1.0);
  double az = rng.uniform(2.2, 4.0);
  p.semi_axes_vox = {ax, ay, az};

  const double mx = ax + 3.0, my = ay + 3.0, mz = az + 1.0;
  p.center_vox = {rng.uniform(mx, nx - 1.0 - mx), rng.uniform(my, ny - 1.0 - my),
                  rng.uniform(mz, nz - 1.0 - mz)};

  p.t1ce_rim = tr.is_gbm ? truncated_normal(rng, 2.2, 0.30) : truncated_normal(rng, 0.35, 0.15);
  p.t2w_contrast = tr.idh_mutant ? truncated_normal(rng, 2.2, 0.30) : truncated_normal(rng, 0.9, 0.20);
  if (!tr.is_gbm && tr.idh_mutant) {
    p.t1w_contrast = tr.codeleted ? truncated_normal(rng, 1.8, 0.25) : truncated_normal(rng, 0.6, 0.20);
  } else {
    p.t1w_contrast = truncated_normal(rng, 1.0, 0.35);
  }

  p.age = static_cast<int>(std::clamp(std::llround(rng.normal(47.0, 14.0)), 18ll, 88ll));
  p.sex = rng.bernoulli(445.0 / 780.0) ? Sex::male : Sex::female;
  return p;
}

struct SynthVolumes {
  Volume t1w, t1ce, t2w;
  MaskVolume mask;
};

inline SynthVolumes render_patient(Rng& rng, const SynthConfig& cfg, const SynthPatientParams& p) {
  Geometry g;
  g.dims = cfg.dims;
  g.spacing = cfg.spacing;
  SynthVolumes out{Volume(g), Volume(g), Volume(g), MaskVolume(g)};

  const double nx = static_cast<double>(g.dims[0]);
  const double ny = static_cast<double>(g.dims[1]);
  const double bx = 0.5 * (nx - 1.0), by = 0.5 * (ny - 1.0);
  const double brain_rx = 0.46 * nx, brain_ry = 0.46 * ny;

  const double base[3] = {4.0, 4.5, 5.0};  // t1w, t1ce, t2w
  const double noise_sigma = 0.35;
  const double lesion_texture_sigma = 0.30;

  for (int64_t k = 0; k < g.dims[2]; ++k)
    for (int64_t j = 0; j < g.dims[1]; ++j)
      for (int64_t i = 0; i < g.dims[0]; ++i) {
        const double x = static_cast<double>(i), y = static_cast<double>(j), z = static_cast<double>(k);
        const double bd = ((x - bx) / brain_rx) * ((x - bx) / brain_rx) +
                          ((y - by) / brain_ry) * ((y - by) / brain_ry);
        // Soft head outline plus an in-plane ramp; gives registration texture.
        const double brain = (bd <= 1.0) ? 2.0 * (1.0 - 0.5 * bd) : 0.0;
        const double ramp = 0.3 * (x / nx) + 0.2 * (y / ny);

        const double rx = (x - p.center_vox[0]) / p.semi_axes_vox[0];
        const double ry = (y - p.center_vox[1]) / p.semi_axes_vox[1];
        const double rz = (z - p.center_vox[2]) / p.semi_axes_vox[2];
        const double rho2 = rx * rx + ry * ry + rz * rz;
        const bool inside = rho2 <= 1.0;
        const bool rim = inside && rho2 > 0.49;  // normalized radius in (0.7, 1]

        out.mask.at(i, j, k) = inside ? 1 : 0;

        double t1w = base[0] + brain + ramp + rng.normal(0.0, noise_sigma);
        double t1ce = base[1] + brain + ramp + rng.normal(0.0, noise_sigma);
        double t2w = base[2] + brain + ramp + rng.normal(0.0, noise_sigma);
        if (inside) {
          t1w += p.t1w_contrast;
          t1ce += 0.3 + (rim ? p.t1ce_rim : 0.0);
          t2w += p.t2w_contrast + rng.normal(0.0, lesion_texture_sigma);
        }
        out.t1w.at(i, j, k) = static_cast<float>(t1w);
        out.t1ce.at(i, j, k) = static_cast<float>(t1ce);
        out.t2w.at(i, j, k) = static_cast<float>(t2w);
      }
  return out;
}

}  // namespace detail

inline nlohmann::ordered_json synth_params_to_json(const std::string& id, const SynthPatientParams& p) {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["subtype"] = subtype_name(p.subtype);
  j["center_vox"] = p.center_vox;
  j["semi_axes_vox"] = p.semi_axes_vox;
  j["t1w_contrast"] = p.t1w_contrast;
  j["t1ce_rim"] = p.t1ce_rim;
  j["t2w_contrast"] = p.t2w_contrast;
  return j;
}

// Generates the cohort under out_dir and returns the manifest
// (also written to out_dir/manifest.jsonl).
inline DatasetManifest generate_synthetic_cohort(const SynthConfig& cfg,
                                                 const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  cfg.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw_data("synth: cannot create output directory " + out_dir.string());

  DatasetManifest manifest;
  manifest.stage = "raw";
  manifest.base_dir = out_dir;

  std::ofstream params_file(out_dir / "synth_params.jsonl");
  if (!params_file) throw_data("synth: output directory not writable: " + out_dir.string());

  for (int i = 0; i < cfg.n; ++i) {
    Rng rng = Rng::derive(cfg.seed, {0x5EEDULL, static_cast<uint64_t>(i)});
    const SynthPatientParams p = detail::draw_patient_params(rng, cfg);
    const detail::SynthVolumes vols = detail::render_patient(rng, cfg, p);

    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "case-%05d", i);
    const std::string id(idbuf);
    const fs::path pdir = out_dir / id;
    fs::create_directories(pdir);
    write_nifti(pdir / "t1w.nii", vols.t1w);
    write_nifti(pdir / "t1ce.nii", vols.t1ce);
    write_nifti(pdir / "t2w.nii", vols.t2w);
    write_nifti(pdir / "mask.nii", vols.mask);
    params_file << synth_params_to_json(id, p).dump() << "\n";

    PatientRecord r;
    r.id = id;
    r.volume_paths[Modality::T1w] = id + "/t1w.nii";
    r.volume_paths[Modality::T1ce] = id + "/t1ce.nii";
    r.volume_paths[Modality::T2w] = id + "/t2w.nii";
    r.mask_path = id + "/mask.nii";
    r.subtype = p.subtype;
    r.age = p.age;
    r.sex = p.sex;
    manifest.records.push_back(std::move(r));
  }
  save_manifest(manifest, out_dir / "manifest.jsonl");
  return manifest;
}

}  // namespace glio
