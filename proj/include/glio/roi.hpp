#pragma once

// 2.5D network input construction: pick the max-tumor-area slice n, take
// slices (n-2, n, n+2), crop one rectangle covering the tumor on all three,
// resize to 224x224 with the three modalities as channels. Training-time
// augmentation jitters the center slice, the crop geometry, handedness and
// intensity; validation/test stacks are built by the deterministic path only.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "glio/error.hpp"
#include "glio/resample.hpp"
#include "glio/rng.hpp"
#include "glio/tensor.hpp"
#include "glio/volume.hpp"

namespace glio {

inline constexpr int kStackSize = 224;  // output spatial resolution
inline constexpr int kStackSlices = 3;
inline constexpr int kStackChannels = 3;  // T1w, T1CE, T2w

// In-plane voxel counts of the tumor per slice.
inline std::vector<int64_t> tumor_area_per_slice(const MaskVolume& mask) {
  check_data(mask_voxel_count(mask) > 0, "tumor_area_per_slice: empty mask");
  std::vector<int64_t> areas(static_cast<size_t>(mask.nz()), 0);
  for (int64_t k = 0; k < mask.nz(); ++k) {
    int64_t a = 0;
    for (int64_t j = 0; j < mask.ny(); ++j)
      for (int64_t i = 0; i < mask.nx(); ++i) a += mask.at(i, j, k);
    areas[static_cast<size_t>(k)] = a;
  }
  return areas;
}

enum class SelectionMode { deterministic_max_area, random_top3 };

struct SliceSelection {
  int center = 0;
  std::array<int, 3> triplet{0, 0, 0};  // (n-step, n, n+step) after clamping
  SelectionMode mode = SelectionMode::deterministic_max_area;
};

// Every-other-slice is the primary scheme; consecutive slices are available
// as a configuration option.
inline SliceSelection select_slices(const std::vector<int64_t>& areas, SelectionMode mode,
                                    Rng* rng = nullptr, int slice_step = 2) {
  const int n_slices = static_cast<int>(areas.size());
  check_data(n_slices > 0, "select_slices: empty area vector");

  std::vector<int> candidates;  // slice indices with tumor, ordered by (area desc, index asc)
  for (int i = 0; i < n_slices; ++i)
    if (areas[static_cast<size_t>(i)] > 0) candidates.push_back(i);
  check_data(!candidates.empty(), "select_slices: empty mask");
  std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    return areas[static_cast<size_t>(a)] > areas[static_cast<size_t>(b)];
  });

  SliceSelection sel;
  sel.mode = mode;
  if (mode == SelectionMode::deterministic_max_area) {
    sel.center = candidates.front();
  } else {
    if (rng == nullptr) throw_internal("select_slices: random mode requires an rng");
    const size_t top = std::min<size_t>(3, candidates.size());
    sel.center = candidates[static_cast<size_t>(rng->uniform_int(0, static_cast<int64_t>(top) - 1))];
  }
  auto clamp_slice = [&](int i) { return std::clamp(i, 0, n_slices - 1); };
  sel.triplet = {clamp_slice(sel.center - slice_step), clamp_slice(sel.center),
                 clamp_slice(sel.center + slice_step)};
  return sel;
}

inline SliceSelection select_slices(const MaskVolume& mask, SelectionMode mode, Rng* rng = nullptr,
                                    int slice_step = 2) {
  return select_slices(tumor_area_per_slice(mask), mode, rng, slice_step);
}

// In-plane rectangle, inclusive voxel bounds. rows = y axis, cols = x axis.
struct RoiRect {
  int64_t row_min = 0, row_max = 0, col_min = 0, col_max = 0;
  double margin_fraction = 0.0;

  int64_t height() const { return row_max - row_min + 1; }
  int64_t width() const { return col_max - col_min + 1; }
  bool contains(int64_t row, int64_t col) const {
    return row >= row_min && row <= row_max && col >= col_min && col <= col_max;
  }
};

// Union of the tumor's in-plane bounding boxes over the three selected
// slices, expanded by margin_fraction per side and clipped to the image.
inline RoiRect compute_roi(const MaskVolume& mask, const SliceSelection& sel, double margin_fraction) {
  check_data(margin_fraction >= 0.0, "compute_roi: negative margin");
  int64_t rmin = mask.ny(), rmax = -1, cmin = mask.nx(), cmax = -1;
  for (int s : sel.triplet) {
    check_data(s >= 0 && s < static_cast<int>(mask.nz()), "compute_roi: slice out of bounds");
    for (int64_t j = 0; j < mask.ny(); ++j)
      for (int64_t i = 0; i < mask.nx(); ++i)
        if (mask.at(i, j, s)) {
          rmin = std::min(rmin, j);
          rmax = std::max(rmax, j);
          cmin = std::min(cmin, i);
          cmax = std::max(cmax, i);
        }
  }
  check_data(rmax >= 0, "compute_roi: mask empty on all three selected slices");
  RoiRect r;
  r.margin_fraction = margin_fraction;
  const int64_t mr = std::llround(margin_fraction * static_cast<double>(rmax - rmin + 1));
  const int64_t mc = std::llround(margin_fraction * static_cast<double>(cmax - cmin + 1));
  r.row_min = std::max<int64_t>(0, rmin - mr);
  r.row_max = std::min<int64_t>(mask.ny() - 1, rmax + mr);
  r.col_min = std::max<int64_t>(0, cmin - mc);
  r.col_max = std::min<int64_t>(mask.nx() - 1, cmax + mc);
  return r;
}

// The network input: 3 slices x 3 channels x 224 x 224, with provenance.
struct Stack25D {
  Tensor data;  // shape {3, 3, 224, 224}, channel order T1w, T1CE, T2w
  std::string patient_id;
  std::array<int, 3> slices{0, 0, 0};
  RoiRect roi;
};

struct AugmentConfig {
  bool enabled = true;
  bool random_center_slice = true;  // center drawn from the top-3 area slices
  double max_translation_fraction = 0.1;
  std::array<double, 2> scale_range{0.9, 1.1};
  double rotation_range_degrees = 10.0;
  std::array<double, 2> intensity_scale_range{0.9, 1.1};
  double mirror_probability = 0.5;

  // Well-formedness; collapsed ranges (e.g. a fixed gain) are allowed so
  // single-factor behavior stays testable.
  void validate() const {
    check_data(max_translation_fraction >= 0.0, "augment: negative translation fraction");
    check_data(scale_range[0] <= scale_range[1], "augment: inverted scale range");
    check_data(rotation_range_degrees >= 0.0, "augment: negative rotation range");
    check_data(intensity_scale_range[0] <= intensity_scale_range[1],
               "augment: inverted intensity range");
    check_data(mirror_probability >= 0.0 && mirror_probability <= 1.0,
               "augment: mirror probability outside [0,1]");
  }

  // Production configs must keep the identity inside every jitter range.
  void validate_strict() const {
    validate();
    check_data(scale_range[0] <= 1.0 && 1.0 <= scale_range[1], "augment: scale range must contain 1");
    check_data(intensity_scale_range[0] <= 1.0 && 1.0 <= intensity_scale_range[1],
               "augment: intensity range must contain 1");
  }

  static AugmentConfig disabled() {
    AugmentConfig c;
    c.enabled = false;
    return c;
  }
};

namespace detail {

// Bilinear in-plane sample with clamp-to-edge, at fixed slice z.
inline float sample_plane(const Volume& v, double row, double col, int64_t z) {
  const int64_t ny = v.ny(), nx = v.nx();
  int64_t r0 = static_cast<int64_t>(std::floor(row));
  int64_t c0 = static_cast<int64_t>(std::floor(col));
  const double fr = row - static_cast<double>(r0);
  const double fc = col - static_cast<double>(c0);
  const int64_t r1 = interp::clamp_index(r0 + 1, ny), c1 = interp::clamp_index(c0 + 1, nx);
  r0 = interp::clamp_index(r0, ny);
  c0 = interp::clamp_index(c0, nx);
  const double top = v.at(c0, r0, z) * (1 - fc) + v.at(c1, r0, z) * fc;
  const double bot = v.at(c0, r1, z) * (1 - fc) + v.at(c1, r1, z) * fc;
  return static_cast<float>(top * (1 - fr) + bot * fr);
}

struct WarpParams {
  double rotation_deg = 0.0;
  double scale = 1.0;
  double translate_rows = 0.0;  // source pixels
  double translate_cols = 0.0;
  bool mirror = false;
  double gain = 1.0;

  bool is_identity() const {
    return rotation_deg == 0.0 && scale == 1.0 && translate_rows == 0.0 && translate_cols == 0.0 &&
           !mirror && gain == 1.0;
  }
};

inline void render_stack_plane(const Volume& v, int64_t z, const RoiRect& roi, const WarpParams& wp,
                               float* out /* kStackSize*kStackSize */) {
  const double sr = static_cast<double>(roi.height()) / kStackSize;
  const double sc = static_cast<double>(roi.width()) / kStackSize;
  const double cr = 0.5 * static_cast<double>(roi.row_min + roi.row_max);
  const double cc = 0.5 * static_cast<double>(roi.col_min + roi.col_max);
  // Mirroring flips the output column only, so it composes bit-exactly with
  // the plain crop; the center arithmetic runs only under true geometric
  // jitter to keep the identity path an exact passthrough.
  const bool geo_identity = wp.rotation_deg == 0.0 && wp.scale == 1.0 &&
                            wp.translate_rows == 0.0 && wp.translate_cols == 0.0;
  const double th = wp.rotation_deg * (3.14159265358979323846 / 180.0);
  const double cos_t = std::cos(th), sin_t = std::sin(th);

  for (int r = 0; r < kStackSize; ++r) {
    for (int c = 0; c < kStackSize; ++c) {
      const int oc = wp.mirror ? (kStackSize - 1 - c) : c;
      // Half-pixel-centered crop mapping; exact passthrough when the rect is
      // already 224x224.
      const double base_row = static_cast<double>(roi.row_min) + (r + 0.5) * sr - 0.5;
      const double base_col = static_cast<double>(roi.col_min) + (c + 0.5) * sc - 0.5;
      double src_row = base_row, src_col = base_col;
      if (!geo_identity) {
        const double dr = (base_row - cr) * wp.scale;
        const double dc = (base_col - cc) * wp.scale;
        src_row = cr + sin_t * dc + cos_t * dr + wp.translate_rows;
        src_col = cc + cos_t * dc - sin_t * dr + wp.translate_cols;
      }
      const float val = sample_plane(v, src_row, src_col, z);
      out[r * kStackSize + oc] = static_cast<float>(wp.gain) * val;
    }
  }
}

inline Stack25D build_stack(const Volume& t1w, const Volume& t1ce, const Volume& t2w,
                            const SliceSelection& sel, const RoiRect& roi, const WarpParams& wp) {
  check_data(t1w.geom.same_grid(t1ce.geom) && t1w.geom.same_grid(t2w.geom),
             "extract_stack: modality grids do not match");
  Stack25D st;
  st.slices = sel.triplet;
  st.roi = roi;
  st.data = Tensor({kStackSlices, kStackChannels, kStackSize, kStackSize});
  const Volume* channels[kStackChannels] = {&t1w, &t1ce, &t2w};
  const int64_t plane = static_cast<int64_t>(kStackSize) * kStackSize;
  for (int s = 0; s < kStackSlices; ++s) {
    const int64_t z = sel.triplet[static_cast<size_t>(s)];
    check_data(z >= 0 && z < t1w.nz(), "extract_stack: slice index out of bounds");
    for (int ch = 0; ch < kStackChannels; ++ch) {
      float* out = st.data.data() + (static_cast<int64_t>(s) * kStackChannels + ch) * plane;
      render_stack_plane(*channels[ch], z, roi, wp, out);
    }
  }
  return st;
}

}  // namespace detail

// Deterministic crop/resize of the selected slices. No augmentation.
inline Stack25D extract_stack(const Volume& t1w, const Volume& t1ce, const Volume& t2w,
                              const SliceSelection& sel, const RoiRect& roi) {
  return detail::build_stack(t1w, t1ce, t2w, sel, roi, detail::WarpParams{});
}

// Deterministic evaluation-path stack: max-area slice selection, tumor ROI,
// plain crop/resize. Takes no rng by construction.
inline Stack25D build_eval_stack(const Volume& t1w, const Volume& t1ce, const Volume& t2w,
                                 const MaskVolume& mask, double margin_fraction, int slice_step = 2) {
  const SliceSelection sel = select_slices(mask, SelectionMode::deterministic_max_area, nullptr, slice_step);
  const RoiRect roi = compute_roi(mask, sel, margin_fraction);
  return extract_stack(t1w, t1ce, t2w, sel, roi);
}

// Training-path stack with random center slice, crop jitter, mirroring and
// intensity scaling. Identity-collapsed config reproduces extract_stack
// bit-for-bit.
inline Stack25D augment(const Volume& t1w, const Volume& t1ce, const Volume& t2w,
                        const MaskVolume& mask, double margin_fraction, const AugmentConfig& cfg,
                        Rng& rng, int slice_step = 2) {
  check_data(cfg.enabled, "augment: called with disabled config");
  cfg.validate();
  const SliceSelection sel =
      select_slices(mask, cfg.random_center_slice ? SelectionMode::random_top3
                                                  : SelectionMode::deterministic_max_area,
                    &rng, slice_step);
  const RoiRect roi = compute_roi(mask, sel, margin_fraction);

  detail::WarpParams wp;
  wp.rotation_deg = rng.uniform(-cfg.rotation_range_degrees, cfg.rotation_range_degrees);
  wp.scale = rng.uniform(cfg.scale_range[0], cfg.scale_range[1]);
  wp.translate_rows = rng.uniform(-cfg.max_translation_fraction, cfg.max_translation_fraction) *
                      static_cast<double>(roi.height());
  wp.translate_cols = rng.uniform(-cfg.max_translation_fraction, cfg.max_translation_fraction) *
                      static_cast<double>(roi.width());
  wp.mirror = rng.bernoulli(cfg.mirror_probability);
  wp.gain = rng.uniform(cfg.intensity_scale_range[0], cfg.intensity_scale_range[1]);
  return detail::build_stack(t1w, t1ce, t2w, sel, roi, wp);
}

}  // namespace glio
