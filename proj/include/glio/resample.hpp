#pragma once

// Grid resampling to a target spacing. Intensities use Keys cubic convolution
// (a = -0.5), masks use nearest-neighbor; both clamp to the volume edge.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "glio/error.hpp"
#include "glio/volume.hpp"

namespace glio {

namespace interp {

// Keys cubic convolution kernel, a = -0.5. Interpolating (w(0)=1, w(±1)=0),
// exact for polynomials up to degree 2.
inline double cubic_weight(double t) {
  t = std::abs(t);
  if (t < 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
  if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
  return 0.0;
}

inline int64_t clamp_index(int64_t i, int64_t n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

// Cubic sample of a volume at a fractional voxel index, clamp-to-edge.
inline double sample_cubic(const Volume& v, double x, double y, double z) {
  const int64_t nx = v.nx(), ny = v.ny(), nz = v.nz();
  const int64_t x0 = static_cast<int64_t>(std::floor(x));
  const int64_t y0 = static_cast<int64_t>(std::floor(y));
  const int64_t z0 = static_cast<int64_t>(std::floor(z));
  double wx[4], wy[4], wz[4];
  int64_t ix[4], iy[4], iz[4];
  for (int k = 0; k < 4; ++k) {
    ix[k] = clamp_index(x0 - 1 + k, nx);
    iy[k] = clamp_index(y0 - 1 + k, ny);
    iz[k] = clamp_index(z0 - 1 + k, nz);
    wx[k] = cubic_weight(x - static_cast<double>(x0 - 1 + k));
    wy[k] = cubic_weight(y - static_cast<double>(y0 - 1 + k));
    wz[k] = cubic_weight(z - static_cast<double>(z0 - 1 + k));
  }
  double acc = 0.0;
  for (int c = 0; c < 4; ++c) {
    double accy = 0.0;
    for (int b = 0; b < 4; ++b) {
      double accx = 0.0;
      for (int a = 0; a < 4; ++a) accx += wx[a] * v.at(ix[a], iy[b], iz[c]);
      accy += wy[b] * accx;
    }
    acc += wz[c] * accy;
  }
  return acc;
}

inline double sample_linear(const Volume& v, double x, double y, double z) {
  const int64_t nx = v.nx(), ny = v.ny(), nz = v.nz();
  int64_t x0 = static_cast<int64_t>(std::floor(x));
  int64_t y0 = static_cast<int64_t>(std::floor(y));
  int64_t z0 = static_cast<int64_t>(std::floor(z));
  double fx = x - static_cast<double>(x0), fy = y - static_cast<double>(y0), fz = z - static_cast<double>(z0);
  int64_t x1 = clamp_index(x0 + 1, nx), y1 = clamp_index(y0 + 1, ny), z1 = clamp_index(z0 + 1, nz);
  x0 = clamp_index(x0, nx); y0 = clamp_index(y0, ny); z0 = clamp_index(z0, nz);
  double c00 = v.at(x0, y0, z0) * (1 - fx) + v.at(x1, y0, z0) * fx;
  double c10 = v.at(x0, y1, z0) * (1 - fx) + v.at(x1, y1, z0) * fx;
  double c01 = v.at(x0, y0, z1) * (1 - fx) + v.at(x1, y0, z1) * fx;
  double c11 = v.at(x0, y1, z1) * (1 - fx) + v.at(x1, y1, z1) * fx;
  double c0 = c00 * (1 - fy) + c10 * fy;
  double c1 = c01 * (1 - fy) + c11 * fy;
  return c0 * (1 - fz) + c1 * fz;
}

inline uint8_t sample_nearest(const MaskVolume& m, double x, double y, double z) {
  int64_t ix = clamp_index(static_cast<int64_t>(std::llround(x)), m.nx());
  int64_t iy = clamp_index(static_cast<int64_t>(std::llround(y)), m.ny());
  int64_t iz = clamp_index(static_cast<int64_t>(std::llround(z)), m.nz());
  return m.at(ix, iy, iz);
}

}  // namespace interp

namespace detail {

inline std::array<int64_t, 3> resampled_dims(const Geometry& g, const std::array<double, 3>& target) {
  std::array<int64_t, 3> out{};
  for (int a = 0; a < 3; ++a) {
    double n = static_cast<double>(g.dims[a]) * g.spacing[a] / target[a];
    out[a] = std::max<int64_t>(1, static_cast<int64_t>(std::llround(n)));
  }
  return out;
}

inline bool spacing_equal(const Geometry& g, const std::array<double, 3>& target) {
  for (int a = 0; a < 3; ++a)
    if (std::abs(g.spacing[a] - target[a]) > 1e-9) return false;
  return true;
}

inline void check_resample_input(const Geometry& g, const std::array<double, 3>& target,
                                 const std::string& what) {
  for (int a = 0; a < 3; ++a) {
    check_data(target[a] > 0.0, what + ": target spacing must be positive");
    check_data(g.dims[a] >= 2, what + ": degenerate single-voxel axis");
  }
}

}  // namespace detail

// Resamples intensities onto the target spacing with cubic interpolation.
// Output dims per axis: round(in_dim * in_spacing / target_spacing).
inline Volume resample_volume(const Volume& v, const std::array<double, 3>& target_spacing) {
  detail::check_resample_input(v.geom, target_spacing, "resample_volume");
  if (detail::spacing_equal(v.geom, target_spacing)) return v;  // identity
  Geometry g;
  g.dims = detail::resampled_dims(v.geom, target_spacing);
  g.spacing = target_spacing;
  g.origin = v.geom.origin;
  Volume out(g);
  const double rx = target_spacing[0] / v.geom.spacing[0];
  const double ry = target_spacing[1] / v.geom.spacing[1];
  const double rz = target_spacing[2] / v.geom.spacing[2];
  for (int64_t k = 0; k < g.dims[2]; ++k)
    for (int64_t j = 0; j < g.dims[1]; ++j)
      for (int64_t i = 0; i < g.dims[0]; ++i)
        out.at(i, j, k) = static_cast<float>(interp::sample_cubic(
            v, static_cast<double>(i) * rx, static_cast<double>(j) * ry, static_cast<double>(k) * rz));
  return out;
}

// Nearest-neighbor mask resample; output stays strictly binary.
inline MaskVolume resample_mask(const MaskVolume& m, const std::array<double, 3>& target_spacing) {
  detail::check_resample_input(m.geom, target_spacing, "resample_mask");
  if (detail::spacing_equal(m.geom, target_spacing)) return m;
  Geometry g;
  g.dims = detail::resampled_dims(m.geom, target_spacing);
  g.spacing = target_spacing;
  g.origin = m.geom.origin;
  MaskVolume out(g);
  const double rx = target_spacing[0] / m.geom.spacing[0];
  const double ry = target_spacing[1] / m.geom.spacing[1];
  const double rz = target_spacing[2] / m.geom.spacing[2];
  for (int64_t k = 0; k < g.dims[2]; ++k)
    for (int64_t j = 0; j < g.dims[1]; ++j)
      for (int64_t i = 0; i < g.dims[0]; ++i)
        out.at(i, j, k) = interp::sample_nearest(m, static_cast<double>(i) * rx,
                                                 static_cast<double>(j) * ry,
                                                 static_cast<double>(k) * rz);
  return out;
}

}  // namespace glio
