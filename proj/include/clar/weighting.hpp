#pragma once

#include <cstddef>
#include <vector>

#include "clar/rng.hpp"
#include "clar/signal.hpp"

namespace clar {

// Per-window mean DTW distance to the static templates, plus the derived
// activity threshold (mean of the scores).
struct ResponseMap {
  std::vector<double> scores;
  double sigma_s = 0.0;
};

// Tunables for the adaptive weighting stage. window_len == 0 derives H from
// the sequence length (L/8, floor 4). floor == 0 keeps the formula exact;
// a positive floor guards batches whose crops are entirely activity-free.
struct WeightingConfig {
  int window_len = 0;
  int templates = 5;
  double alpha = 0.5;
  double floor = 0.0;
};

int derive_window_len(std::size_t seq_len);

// K distinct length-H windows drawn uniformly from the activity-free pool
// (pool item with replacement, (item, position) pairs without).
std::vector<Sequence> select_templates(const std::vector<Sequence>& static_pool, int k, int h,
                                       Rng& rng);

// scores[l] = mean_k dtw_distance(window_l, template_k) over step-1 windows.
ResponseMap response_map(const Sequence& x, const std::vector<Sequence>& templates, int h);

// (fraction of windows with score strictly above the threshold)^alpha.
double sample_weight(const ResponseMap& map, double alpha);

double pair_weight(double w_i, double w_j);

// Restriction of a parent sample's response map to the windows fully inside
// a crop, keeping the parent's activity threshold. A crop's own score mean
// cannot separate activity from pause (roughly half of any crop's windows
// sit above their own mean); the threshold learned on the full sample can.
ResponseMap crop_map(const ResponseMap& parent, int h, const CropWindow& crop);

}  // namespace clar
