#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "clar/rng.hpp"

namespace clar {

// One CSI channel: a finite real-valued series.
using Sequence = std::vector<double>;

// Length-preserving high/low frequency split with exact reconstruction:
// high[i] + low[i] == x[i].
struct WaveletBands {
  Sequence high;
  Sequence low;
};

// Single-level undecimated Haar split with averaging convention and periodic
// boundary: low[i] = (x[i] + x[i+1 mod L]) / 2, high[i] = (x[i] - x[i+1 mod L]) / 2.
WaveletBands haar_analysis(const Sequence& x);

// Classic DTW with absolute-difference local cost and no window constraint.
double dtw_distance(const Sequence& a, const Sequence& b);

// Monotone index alignment from (0,0) to (n-1,m-1); each step advances i, j,
// or both by exactly 1.
struct WarpingPath {
  std::vector<std::pair<int, int>> pairs;

  double cost(const Sequence& a, const Sequence& b) const;
};

// Optimal path for dtw_distance. Ties prefer the diagonal predecessor, then
// the i-predecessor, so paths are deterministic.
WarpingPath dtw_path(const Sequence& a, const Sequence& b);

// Merge b into a's timeline: average the two series along their warping path,
// then linearly resample the merged series back to len(a).
Sequence warp_aggregate(const Sequence& a, const Sequence& b);

// All length-H windows with step 1; window k covers [k, k+H).
std::vector<Sequence> sliding_windows(const Sequence& x, int window_len);

Sequence linear_resample(const Sequence& x, std::size_t target_len);

// Contiguous crop of round(crop_fraction*L) samples starting at
// round(offset_fraction*(L-crop_len)), resampled to target_len.
Sequence crop_resize(const Sequence& x, double crop_fraction, double offset_fraction,
                     std::size_t target_len);

struct CropRange {
  double lo = 0.6;
  double hi = 0.9;
};

// Concrete crop location in source coordinates; kept alongside the resized
// view so downstream weighting can map the view back onto its parent.
struct CropWindow {
  std::size_t start = 0;
  std::size_t len = 0;
};

// Crop length fraction drawn uniformly from range, offset uniform in [0,1).
CropWindow draw_crop_window(std::size_t seq_len, const CropRange& range, Rng& rng);

Sequence extract_resize(const Sequence& x, const CropWindow& w, std::size_t target_len);

// crop_resize with fractions drawn uniformly from the configured range.
Sequence random_crop_resize(const Sequence& x, const CropRange& range, std::size_t target_len,
                            Rng& rng);

}  // namespace clar
