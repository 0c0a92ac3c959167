#pragma once

// Minimal NIfTI-1 (.nii) I/O. Covers what this pipeline needs: single-file
// volumes, axis-aligned orientation, float32/uint8 payloads on write and the
// common scalar datatypes on read. Spacing (pixdim) is honored everywhere.
// Not supported: .nii.gz, big-endian files, oblique orientation matrices.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "glio/error.hpp"
#include "glio/volume.hpp"

namespace glio {

namespace nifti {

#pragma pack(push, 1)
struct Header {
  int32_t sizeof_hdr;      // 348
  char data_type[10];
  char db_name[18];
  int32_t extents;
  int16_t session_error;
  char regular;
  char dim_info;
  int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  int16_t intent_code;
  int16_t datatype;
  int16_t bitpix;
  int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration;
  float toffset;
  int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  int16_t qform_code;
  int16_t sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Header) == 348, "nifti header must be 348 bytes");

enum Datatype : int16_t {
  kUint8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
  kInt8 = 256,
  kUint16 = 512,
};

inline Header make_header(const Geometry& g, int16_t datatype, int16_t bitpix) {
  Header h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = 3;
  h.dim[1] = static_cast<int16_t>(g.dims[0]);
  h.dim[2] = static_cast<int16_t>(g.dims[1]);
  h.dim[3] = static_cast<int16_t>(g.dims[2]);
  for (int i = 4; i < 8; ++i) h.dim[i] = 1;
  h.datatype = datatype;
  h.bitpix = bitpix;
  h.pixdim[0] = 1.0f;
  h.pixdim[1] = static_cast<float>(g.spacing[0]);
  h.pixdim[2] = static_cast<float>(g.spacing[1]);
  h.pixdim[3] = static_cast<float>(g.spacing[2]);
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.xyzt_units = 2;  // millimetres
  h.sform_code = 1;
  h.srow_x[0] = static_cast<float>(g.spacing[0]);
  h.srow_x[3] = static_cast<float>(g.origin[0]);
  h.srow_y[1] = static_cast<float>(g.spacing[1]);
  h.srow_y[3] = static_cast<float>(g.origin[1]);
  h.srow_z[2] = static_cast<float>(g.spacing[2]);
  h.srow_z[3] = static_cast<float>(g.origin[2]);
  std::memcpy(h.magic, "n+1", 4);
  return h;
}

template <typename T>
void write_payload(std::ofstream& f, const std::vector<T>& data) {
  f.write(reinterpret_cast<const char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(T)));
}

inline Header read_and_check_header(std::ifstream& f, const std::string& path) {
  Header h{};
  f.read(reinterpret_cast<char*>(&h), sizeof(h));
  if (!f) throw_data("nifti: short read of header: " + path);
  if (h.sizeof_hdr != 348) {
    // 1543569408 is 348 byte-swapped: a big-endian file.
    if (h.sizeof_hdr == 1543569408) throw_data("nifti: big-endian file unsupported: " + path);
    throw_data("nifti: not a NIfTI-1 file: " + path);
  }
  if (std::strncmp(h.magic, "n+1", 3) != 0) throw_data("nifti: missing n+1 magic: " + path);
  int nd = h.dim[0];
  if (nd < 3 || nd > 4) throw_data("nifti: unsupported dimensionality: " + path);
  if (nd == 4 && h.dim[4] > 1) throw_data("nifti: multi-frame volumes unsupported: " + path);
  for (int a = 1; a <= 3; ++a) {
    if (h.dim[a] <= 0) throw_data("nifti: non-positive dim: " + path);
    if (h.pixdim[a] <= 0.0f) throw_data("nifti: non-positive pixdim (spacing): " + path);
  }
  return h;
}

inline Geometry geometry_from_header(const Header& h, const std::string& path) {
  Geometry g;
  g.dims = {h.dim[1], h.dim[2], h.dim[3]};
  g.spacing = {h.pixdim[1], h.pixdim[2], h.pixdim[3]};
  g.origin = {0.0, 0.0, 0.0};
  if (h.sform_code > 0) {
    // Only axis-aligned, positively oriented matrices are accepted; spacing
    // from the srow diagonal must agree with pixdim.
    const float* rows[3] = {h.srow_x, h.srow_y, h.srow_z};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        float v = rows[r][c];
        if (r == c) {
          if (v <= 0.0f || std::abs(v - h.pixdim[r + 1]) > 1e-3f * std::max(1.0f, h.pixdim[r + 1]))
            throw_data("nifti: sform diagonal disagrees with pixdim: " + path);
        } else if (std::abs(v) > 1e-5f) {
          throw_data("nifti: oblique orientation unsupported: " + path);
        }
      }
    }
    g.origin = {rows[0][3], rows[1][3], rows[2][3]};
  } else if (h.qform_code > 0) {
    if (std::abs(h.quatern_b) > 1e-6f || std::abs(h.quatern_c) > 1e-6f ||
        std::abs(h.quatern_d) > 1e-6f)
      throw_data("nifti: rotated qform unsupported: " + path);
    g.origin = {h.qoffset_x, h.qoffset_y, h.qoffset_z};
  }
  return g;
}

template <typename Src>
void convert_payload(std::ifstream& f, int64_t n, float slope, float inter, std::vector<float>& out,
                     const std::string& path) {
  std::vector<Src> raw(static_cast<size_t>(n));
  f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * sizeof(Src)));
  if (!f) throw_data("nifti: short read of voxel data: " + path);
  out.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    out[static_cast<size_t>(i)] = slope * static_cast<float>(raw[static_cast<size_t>(i)]) + inter;
}

}  // namespace nifti

inline void write_nifti(const std::filesystem::path& path, const Volume& v) {
  nifti::Header h = nifti::make_header(v.geom, nifti::kFloat32, 32);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw_data("nifti: cannot open for write: " + path.string());
  f.write(reinterpret_cast<const char*>(&h), sizeof(h));
  const char ext[4] = {0, 0, 0, 0};
  f.write(ext, 4);
  nifti::write_payload(f, v.data);
  if (!f) throw_data("nifti: write failed: " + path.string());
}

inline void write_nifti(const std::filesystem::path& path, const MaskVolume& m) {
  nifti::Header h = nifti::make_header(m.geom, nifti::kUint8, 8);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw_data("nifti: cannot open for write: " + path.string());
  f.write(reinterpret_cast<const char*>(&h), sizeof(h));
  const char ext[4] = {0, 0, 0, 0};
  f.write(ext, 4);
  nifti::write_payload(f, m.data);
  if (!f) throw_data("nifti: write failed: " + path.string());
}

// Header-only sanity probe used by manifest validation.
inline Geometry read_nifti_geometry(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw_data("nifti: cannot open: " + path.string());
  nifti::Header h = nifti::read_and_check_header(f, path.string());
  return nifti::geometry_from_header(h, path.string());
}

inline Volume read_nifti_volume(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw_data("nifti: cannot open: " + path.string());
  nifti::Header h = nifti::read_and_check_header(f, path.string());
  Volume v;
  v.geom = nifti::geometry_from_header(h, path.string());
  int64_t n = v.geom.voxel_count();
  float slope = (h.scl_slope == 0.0f) ? 1.0f : h.scl_slope;
  float inter = (h.scl_slope == 0.0f) ? 0.0f : h.scl_inter;
  f.seekg(static_cast<std::streamoff>(h.vox_offset), std::ios::beg);
  switch (h.datatype) {
    case nifti::kUint8:   nifti::convert_payload<uint8_t>(f, n, slope, inter, v.data, path.string()); break;
    case nifti::kInt8:    nifti::convert_payload<int8_t>(f, n, slope, inter, v.data, path.string()); break;
    case nifti::kInt16:   nifti::convert_payload<int16_t>(f, n, slope, inter, v.data, path.string()); break;
    case nifti::kUint16:  nifti::convert_payload<uint16_t>(f, n, slope, inter, v.data, path.string()); break;
    case nifti::kInt32:   nifti::convert_payload<int32_t>(f, n, slope, inter, v.data, path.string()); break;
    case nifti::kFloat32: nifti::convert_payload<float>(f, n, slope, inter, v.data, path.string()); break;
    case nifti::kFloat64: nifti::convert_payload<double>(f, n, slope, inter, v.data, path.string()); break;
    default:
      throw_data("nifti: unsupported datatype " + std::to_string(h.datatype) + ": " + path.string());
  }
  validate_volume(v, "nifti volume " + path.string());
  return v;
}

// Masks are binarized on read: any nonzero voxel becomes 1. Keeps the binary
// invariant for files that encode multiple label values.
inline MaskVolume read_nifti_mask(const std::filesystem::path& path) {
  Volume v = read_nifti_volume(path);
  MaskVolume m;
  m.geom = v.geom;
  m.data.resize(v.data.size());
  for (size_t i = 0; i < v.data.size(); ++i) m.data[i] = v.data[i] != 0.0f ? 1 : 0;
  validate_mask(m, "nifti mask " + path.string());
  return m;
}

}  // namespace glio
