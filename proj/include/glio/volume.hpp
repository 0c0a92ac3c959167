#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "glio/error.hpp"

namespace glio {

// Voxel grid geometry. Axis-aligned placement: the center of voxel (i,j,k)
// sits at origin + (i*sx, j*sy, k*sz) in physical millimetres.
struct Geometry {
  std::array<int64_t, 3> dims{0, 0, 0};       // nx, ny, nz
  std::array<double, 3> spacing{1.0, 1.0, 1.0};  // mm per voxel
  std::array<double, 3> origin{0.0, 0.0, 0.0};   // mm

  int64_t nx() const { return dims[0]; }
  int64_t ny() const { return dims[1]; }
  int64_t nz() const { return dims[2]; }
  int64_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }

  bool same_grid(const Geometry& o, double spacing_tol = 1e-6, double origin_tol = 1e-3) const {
    if (dims != o.dims) return false;
    for (int a = 0; a < 3; ++a) {
      if (std::abs(spacing[a] - o.spacing[a]) > spacing_tol) return false;
      if (std::abs(origin[a] - o.origin[a]) > origin_tol) return false;
    }
    return true;
  }

  // Physical position of a (possibly fractional) voxel index.
  std::array<double, 3> to_physical(double ix, double iy, double iz) const {
    return {origin[0] + ix * spacing[0], origin[1] + iy * spacing[1], origin[2] + iz * spacing[2]};
  }
  std::array<double, 3> to_index(const std::array<double, 3>& p) const {
    return {(p[0] - origin[0]) / spacing[0], (p[1] - origin[1]) / spacing[1],
            (p[2] - origin[2]) / spacing[2]};
  }
  std::array<double, 3> center_mm() const {
    return to_physical(0.5 * static_cast<double>(dims[0] - 1), 0.5 * static_cast<double>(dims[1] - 1),
                       0.5 * static_cast<double>(dims[2] - 1));
  }
};

// 3-D scalar volume, x fastest: data[ix + nx*(iy + ny*iz)].
template <typename T>
struct VolumeT {
  Geometry geom;
  std::vector<T> data;

  VolumeT() = default;
  explicit VolumeT(const Geometry& g) : geom(g), data(static_cast<size_t>(g.voxel_count()), T{}) {}

  T& at(int64_t x, int64_t y, int64_t z) {
    return data[static_cast<size_t>(x + geom.dims[0] * (y + geom.dims[1] * z))];
  }
  T at(int64_t x, int64_t y, int64_t z) const {
    return data[static_cast<size_t>(x + geom.dims[0] * (y + geom.dims[1] * z))];
  }

  int64_t nx() const { return geom.dims[0]; }
  int64_t ny() const { return geom.dims[1]; }
  int64_t nz() const { return geom.dims[2]; }
};

using Volume = VolumeT<float>;
using MaskVolume = VolumeT<uint8_t>;

inline void validate_volume(const Volume& v, const std::string& what = "volume") {
  check_data(v.geom.voxel_count() > 0, what + ": empty voxel grid");
  check_data(static_cast<int64_t>(v.data.size()) == v.geom.voxel_count(),
             what + ": voxel buffer size mismatch");
  for (int a = 0; a < 3; ++a)
    check_data(v.geom.spacing[a] > 0.0, what + ": non-positive spacing");
  for (float x : v.data)
    check_data(std::isfinite(x), what + ": non-finite intensity");
}

// Tumor masks are strictly binary and never empty.
inline void validate_mask(const MaskVolume& m, const std::string& what = "mask") {
  check_data(m.geom.voxel_count() > 0, what + ": empty voxel grid");
  check_data(static_cast<int64_t>(m.data.size()) == m.geom.voxel_count(),
             what + ": voxel buffer size mismatch");
  for (int a = 0; a < 3; ++a)
    check_data(m.geom.spacing[a] > 0.0, what + ": non-positive spacing");
  bool any = false;
  for (uint8_t v : m.data) {
    check_data(v == 0 || v == 1, what + ": non-binary voxel value");
    any = any || v != 0;
  }
  check_data(any, what + ": no tumor voxels");
}

inline int64_t mask_voxel_count(const MaskVolume& m) {
  int64_t n = 0;
  for (uint8_t v : m.data) n += v;
  return n;
}

}  // namespace glio
