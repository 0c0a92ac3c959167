#pragma once

// In-plane rigid registration: rotation about the z axis plus a 3-D
// translation, recovered by maximizing normalized cross-correlation over a
// coarse-to-fine parameter grid. Same-session axial MRI does not warrant a
// full 6-DOF optimizer.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "glio/error.hpp"
#include "glio/resample.hpp"
#include "glio/volume.hpp"

namespace glio {

// Maps moving-space physical points into fixed space:
//   T(p) = Rz(rotation) * (p - center) + center + translation
struct RigidTransform {
  double rotation_deg = 0.0;
  std::array<double, 3> translation_mm{0.0, 0.0, 0.0};
  std::array<double, 3> center_mm{0.0, 0.0, 0.0};

  static RigidTransform identity() { return {}; }

  bool is_identity(double tol = 1e-12) const {
    return std::abs(rotation_deg) <= tol && std::abs(translation_mm[0]) <= tol &&
           std::abs(translation_mm[1]) <= tol && std::abs(translation_mm[2]) <= tol;
  }

  std::array<double, 3> apply(const std::array<double, 3>& p) const {
    const double th = rotation_deg * (3.14159265358979323846 / 180.0);
    const double c = std::cos(th), s = std::sin(th);
    const double dx = p[0] - center_mm[0], dy = p[1] - center_mm[1];
    return {c * dx - s * dy + center_mm[0] + translation_mm[0],
            s * dx + c * dy + center_mm[1] + translation_mm[1],
            p[2] + translation_mm[2]};
  }

  RigidTransform inverse() const {
    const double th = rotation_deg * (3.14159265358979323846 / 180.0);
    const double c = std::cos(th), s = std::sin(th);
    RigidTransform inv;
    inv.rotation_deg = normalize_angle(-rotation_deg);
    inv.center_mm = center_mm;
    // t_inv = -R^T t (rotation acts in-plane only)
    inv.translation_mm = {-(c * translation_mm[0] + s * translation_mm[1]),
                          -(-s * translation_mm[0] + c * translation_mm[1]),
                          -translation_mm[2]};
    return inv;
  }

  static double normalize_angle(double deg) {
    while (deg >= 180.0) deg -= 360.0;
    while (deg < -180.0) deg += 360.0;
    return deg;
  }
};

namespace detail {

inline bool nearly_integral(double v, double tol = 1e-9) {
  return std::abs(v - std::llround(v)) <= tol;
}

// Pulls `src` content through T onto the given output grid.
// Cubic interpolation; exact voxel copy when the mapping lands on the lattice.
inline Volume warp_volume_onto(const Volume& src, const Geometry& out_geom, const RigidTransform& t) {
  Volume out(out_geom);
  const RigidTransform inv = t.inverse();
  for (int64_t k = 0; k < out_geom.dims[2]; ++k)
    for (int64_t j = 0; j < out_geom.dims[1]; ++j)
      for (int64_t i = 0; i < out_geom.dims[0]; ++i) {
        auto p = out_geom.to_physical(static_cast<double>(i), static_cast<double>(j), static_cast<double>(k));
        auto idx = src.geom.to_index(inv.apply(p));
        out.at(i, j, k) = static_cast<float>(interp::sample_cubic(src, idx[0], idx[1], idx[2]));
      }
  return out;
}

inline MaskVolume warp_mask_onto(const MaskVolume& src, const Geometry& out_geom, const RigidTransform& t) {
  MaskVolume out(out_geom);
  const RigidTransform inv = t.inverse();
  for (int64_t k = 0; k < out_geom.dims[2]; ++k)
    for (int64_t j = 0; j < out_geom.dims[1]; ++j)
      for (int64_t i = 0; i < out_geom.dims[0]; ++i) {
        auto p = out_geom.to_physical(static_cast<double>(i), static_cast<double>(j), static_cast<double>(k));
        auto idx = src.geom.to_index(inv.apply(p));
        out.at(i, j, k) = interp::sample_nearest(src, idx[0], idx[1], idx[2]);
      }
  return out;
}

}  // namespace detail

// Warps content by t on the volume's own grid. apply_transform(x, identity) == x.
inline Volume apply_transform(const Volume& v, const RigidTransform& t) {
  if (t.is_identity()) return v;
  return detail::warp_volume_onto(v, v.geom, t);
}

inline MaskVolume apply_transform(const MaskVolume& m, const RigidTransform& t) {
  if (t.is_identity()) return m;
  return detail::warp_mask_onto(m, m.geom, t);
}

// Resamples `moving` through t onto the fixed grid (registration output step).
inline Volume resample_onto(const Volume& moving, const Geometry& fixed_geom, const RigidTransform& t) {
  return detail::warp_volume_onto(moving, fixed_geom, t);
}

struct RegistrationConfig {
  double rotation_range_deg = 15.0;
  double rotation_coarse_step_deg = 5.0;
  double translation_range_mm = 12.0;      // in-plane
  double translation_range_z_mm = 7.5;     // through-plane
  int refinement_levels = 4;               // step halvings after the coarse sweep
  int64_t max_samples = 40000;             // NCC sample budget per evaluation
};

namespace detail {

struct NccSampler {
  const Volume* fixed;
  const Volume* moving;
  int64_t stride;

  // NCC between fixed and moving pulled through T onto the fixed grid.
  // Returns -inf when the overlap is too small to trust.
  double operator()(const RigidTransform& t) const {
    const RigidTransform inv = t.inverse();
    const Geometry& fg = fixed->geom;
    double sf = 0, sm = 0, sff = 0, smm = 0, sfm = 0;
    int64_t n = 0, considered = 0;
    for (int64_t k = 0; k < fg.dims[2]; ++k)
      for (int64_t j = 0; j < fg.dims[1]; ++j)
        for (int64_t i = (k * fg.dims[1] + j) % stride; i < fg.dims[0]; i += stride) {
          ++considered;
          auto p = fg.to_physical(static_cast<double>(i), static_cast<double>(j), static_cast<double>(k));
          auto idx = moving->geom.to_index(inv.apply(p));
          if (idx[0] < 0 || idx[0] > static_cast<double>(moving->nx() - 1) || idx[1] < 0 ||
              idx[1] > static_cast<double>(moving->ny() - 1) || idx[2] < 0 ||
              idx[2] > static_cast<double>(moving->nz() - 1))
            continue;
          const double fv = fixed->at(i, j, k);
          const double mv = interp::sample_linear(*moving, idx[0], idx[1], idx[2]);
          sf += fv; sm += mv; sff += fv * fv; smm += mv * mv; sfm += fv * mv;
          ++n;
        }
    if (considered == 0 || n < considered / 3 || n < 16)
      return -std::numeric_limits<double>::infinity();
    const double nd = static_cast<double>(n);
    const double cov = sfm - sf * sm / nd;
    const double var_f = sff - sf * sf / nd;
    const double var_m = smm - sm * sm / nd;
    if (var_f <= 1e-12 || var_m <= 1e-12) return -std::numeric_limits<double>::infinity();
    return cov / std::sqrt(var_f * var_m);
  }
};

inline Volume downsample_inplane(const Volume& v) {
  Geometry g;
  g.dims = {std::max<int64_t>(1, v.nx() / 2), std::max<int64_t>(1, v.ny() / 2), v.nz()};
  g.spacing = {v.geom.spacing[0] * 2.0, v.geom.spacing[1] * 2.0, v.geom.spacing[2]};
  // Keep voxel centers aligned: first 2x2 block center sits half a fine voxel
  // past the fine origin.
  g.origin = {v.geom.origin[0] + 0.5 * v.geom.spacing[0], v.geom.origin[1] + 0.5 * v.geom.spacing[1],
              v.geom.origin[2]};
  Volume out(g);
  for (int64_t k = 0; k < g.dims[2]; ++k)
    for (int64_t j = 0; j < g.dims[1]; ++j)
      for (int64_t i = 0; i < g.dims[0]; ++i) {
        const int64_t x = 2 * i, y = 2 * j;
        const float a = v.at(x, y, k);
        const float b = v.at(std::min(x + 1, v.nx() - 1), y, k);
        const float c = v.at(x, std::min(y + 1, v.ny() - 1), k);
        const float d = v.at(std::min(x + 1, v.nx() - 1), std::min(y + 1, v.ny() - 1), k);
        out.at(i, j, k) = 0.25f * (a + b + c + d);
      }
  return out;
}

inline double volume_stddev(const Volume& v) {
  double s = 0, ss = 0;
  for (float x : v.data) { s += x; ss += static_cast<double>(x) * x; }
  const double n = static_cast<double>(v.data.size());
  return std::sqrt(std::max(0.0, ss / n - (s / n) * (s / n)));
}

}  // namespace detail

// Finds the in-plane rigid transform aligning `moving` to `fixed` by NCC grid
// search, coarse-to-fine. Both inputs are expected at the same spacing
// (pipeline order: resample first). Constant images cannot be registered.
inline RigidTransform register_rigid(const Volume& moving, const Volume& fixed,
                                     const RegistrationConfig& cfg = {}) {
  if (detail::volume_stddev(fixed) <= 1e-10 || detail::volume_stddev(moving) <= 1e-10)
    throw_data("register_rigid: correlation plateau (constant image)");

  // In-plane pyramid down to roughly 32 voxels across.
  std::vector<Volume> fixed_pyr{fixed}, moving_pyr{moving};
  while (fixed_pyr.back().nx() > 48 && fixed_pyr.back().ny() > 48 && fixed_pyr.size() < 4) {
    fixed_pyr.push_back(detail::downsample_inplane(fixed_pyr.back()));
    moving_pyr.push_back(detail::downsample_inplane(moving_pyr.back()));
  }

  RigidTransform best = RigidTransform::identity();
  best.center_mm = fixed.geom.center_mm();

  double rot_step = cfg.rotation_coarse_step_deg;
  double trans_step = std::max(2.0 * fixed_pyr.back().geom.spacing[0], cfg.translation_range_mm / 4.0);
  double z_step = fixed.geom.spacing[2];
  bool coarse = true;

  for (size_t level = fixed_pyr.size(); level-- > 0;) {
    const Volume& f = fixed_pyr[level];
    const Volume& m = moving_pyr[level];
    int64_t stride = std::max<int64_t>(1, f.geom.voxel_count() / 40000);
    detail::NccSampler ncc{&f, &m, stride};

    // Grid points are centre + k*step with integer k, so the incumbent (and
    // exact zero on the coarse sweep) is always a candidate.
    auto sweep = [&](const RigidTransform& centre, double rs, int n_rot, double ts, int n_trans,
                     double zs, int n_z) {
      double best_score = -std::numeric_limits<double>::infinity();
      RigidTransform best_local = best;
      for (int kr = -n_rot; kr <= n_rot; ++kr)
        for (int kx = -n_trans; kx <= n_trans; ++kx)
          for (int ky = -n_trans; ky <= n_trans; ++ky)
            for (int kz = -n_z; kz <= n_z; ++kz) {
              RigidTransform t;
              t.center_mm = best.center_mm;
              t.rotation_deg = centre.rotation_deg + kr * rs;
              t.translation_mm = {centre.translation_mm[0] + kx * ts,
                                  centre.translation_mm[1] + ky * ts,
                                  centre.translation_mm[2] + kz * zs};
              double score = ncc(t);
              if (score > best_score) { best_score = score; best_local = t; }
            }
      if (!std::isfinite(best_score))
        throw_data("register_rigid: no usable overlap between volumes");
      best = best_local;
    };

    if (coarse) {
      sweep(RigidTransform{0.0, {0.0, 0.0, 0.0}, best.center_mm}, rot_step,
            static_cast<int>(cfg.rotation_range_deg / rot_step),
            trans_step, static_cast<int>(cfg.translation_range_mm / trans_step),
            z_step, static_cast<int>(cfg.translation_range_z_mm / z_step));
      coarse = false;
    }
    // Local refinements around the incumbent, halving steps each pass.
    int passes = (level == 0) ? cfg.refinement_levels : 2;
    for (int pass = 0; pass < passes; ++pass) {
      rot_step = std::max(rot_step * 0.5, 0.05);
      trans_step = std::max(trans_step * 0.5, 0.05 * f.geom.spacing[0]);
      z_step = std::max(z_step * 0.5, 0.05 * f.geom.spacing[2]);
      sweep(best, rot_step, 2, trans_step, 2, z_step, 2);
    }
  }
  best.rotation_deg = RigidTransform::normalize_angle(best.rotation_deg);
  // Snap to exact identity when the residual is below numeric noise, so
  // pre-aligned inputs round-trip bit-exactly.
  if (std::abs(best.rotation_deg) < 1e-6 && std::abs(best.translation_mm[0]) < 1e-6 &&
      std::abs(best.translation_mm[1]) < 1e-6 && std::abs(best.translation_mm[2]) < 1e-6)
    return RigidTransform{0.0, {0.0, 0.0, 0.0}, best.center_mm};
  return best;
}

}  // namespace glio
