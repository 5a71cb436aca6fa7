#include "clar/signal.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace clar {

WaveletBands haar_analysis(const Sequence& x) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("haar_analysis: need at least 2 samples");
  WaveletBands bands;
  bands.high.resize(n);
  bands.low.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = x[i];
    const double b = x[(i + 1) % n];
    bands.low[i] = (a + b) / 2.0;
    bands.high[i] = (a - b) / 2.0;
  }
  return bands;
}

double dtw_distance(const Sequence& a, const Sequence& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("dtw_distance: empty input");
  const std::size_t n = a.size(), m = b.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = inf;
    const double ai = a[i - 1];
    for (std::size_t j = 1; j <= m; ++j) {
      const double cost = std::abs(ai - b[j - 1]);
      const double best = std::min(prev[j - 1], std::min(prev[j], cur[j - 1]));
      cur[j] = cost + best;
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double WarpingPath::cost(const Sequence& a, const Sequence& b) const {
  double s = 0.0;
  for (const auto& [i, j] : pairs) s += std::abs(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(j)]);
  return s;
}

WarpingPath dtw_path(const Sequence& a, const Sequence& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("dtw_path: empty input");
  const std::size_t n = a.size(), m = b.size();
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<double> dp((n + 1) * (m + 1), inf);
  auto at = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };
  dp[at(0, 0)] = 0.0;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const double cost = std::abs(a[i - 1] - b[j - 1]);
      const double best =
          std::min(dp[at(i - 1, j - 1)], std::min(dp[at(i - 1, j)], dp[at(i, j - 1)]));
      dp[at(i, j)] = cost + best;
    }

  WarpingPath path;
  path.pairs.reserve(n + m);
  std::size_t i = n, j = m;
  while (i > 0 && j > 0) {
    path.pairs.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1));
    if (i == 1 && j == 1) break;
    const double dg = dp[at(i - 1, j - 1)];
    const double up = dp[at(i - 1, j)];
    const double lf = dp[at(i, j - 1)];
    if (dg <= up && dg <= lf) {
      --i;
      --j;
    } else if (up <= lf) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(path.pairs.begin(), path.pairs.end());
  return path;
}

Sequence warp_aggregate(const Sequence& a, const Sequence& b) {
  const WarpingPath path = dtw_path(a, b);
  Sequence merged(path.pairs.size());
  for (std::size_t k = 0; k < path.pairs.size(); ++k) {
    const auto& [i, j] = path.pairs[k];
    merged[k] = (a[static_cast<std::size_t>(i)] + b[static_cast<std::size_t>(j)]) / 2.0;
  }
  return linear_resample(merged, a.size());
}

std::vector<Sequence> sliding_windows(const Sequence& x, int window_len) {
  if (window_len < 1 || static_cast<std::size_t>(window_len) > x.size())
    throw std::invalid_argument("sliding_windows: window " + std::to_string(window_len) +
                                " invalid for length " + std::to_string(x.size()));
  const std::size_t h = static_cast<std::size_t>(window_len);
  std::vector<Sequence> out;
  out.reserve(x.size() - h + 1);
  for (std::size_t k = 0; k + h <= x.size(); ++k) out.emplace_back(x.begin() + k, x.begin() + k + h);
  return out;
}

Sequence linear_resample(const Sequence& x, std::size_t target_len) {
  if (x.empty()) throw std::invalid_argument("linear_resample: empty input");
  if (target_len == 0) throw std::invalid_argument("linear_resample: zero target length");
  if (x.size() == target_len) return x;
  Sequence out(target_len);
  if (x.size() == 1 || target_len == 1) {
    // A single-point source tiles; a single-point target takes the first sample.
    std::fill(out.begin(), out.end(), x[0]);
    return out;
  }
  const double scale = static_cast<double>(x.size() - 1) / static_cast<double>(target_len - 1);
  for (std::size_t q = 0; q < target_len; ++q) {
    const double pos = static_cast<double>(q) * scale;
    const std::size_t lo = std::min(static_cast<std::size_t>(pos), x.size() - 2);
    const double frac = pos - static_cast<double>(lo);
    out[q] = x[lo] * (1.0 - frac) + x[lo + 1] * frac;
  }
  return out;
}

namespace {

CropWindow make_crop_window(std::size_t n, double crop_fraction, double offset_fraction) {
  if (crop_fraction <= 0.0 || crop_fraction > 1.0)
    throw std::invalid_argument("crop_resize: crop_fraction must lie in (0,1]");
  if (offset_fraction < 0.0 || offset_fraction >= 1.0)
    throw std::invalid_argument("crop_resize: offset_fraction must lie in [0,1)");
  CropWindow w;
  w.len = static_cast<std::size_t>(std::llround(crop_fraction * static_cast<double>(n)));
  if (w.len < 2)
    throw std::invalid_argument("crop_resize: degenerate crop of " + std::to_string(w.len) +
                                " samples");
  w.start =
      static_cast<std::size_t>(std::llround(offset_fraction * static_cast<double>(n - w.len)));
  return w;
}

}  // namespace

Sequence extract_resize(const Sequence& x, const CropWindow& w, std::size_t target_len) {
  if (w.len < 2 || w.start + w.len > x.size())
    throw std::invalid_argument("extract_resize: crop window outside the sequence");
  Sequence crop(x.begin() + static_cast<long>(w.start),
                x.begin() + static_cast<long>(w.start + w.len));
  return linear_resample(crop, target_len);
}

Sequence crop_resize(const Sequence& x, double crop_fraction, double offset_fraction,
                     std::size_t target_len) {
  return extract_resize(x, make_crop_window(x.size(), crop_fraction, offset_fraction), target_len);
}

CropWindow draw_crop_window(std::size_t seq_len, const CropRange& range, Rng& rng) {
  const double cf = rng.uniform(range.lo, range.hi);
  double of = rng.uniform();
  if (of >= 1.0) of = 0.0;
  return make_crop_window(seq_len, cf, of);
}

Sequence random_crop_resize(const Sequence& x, const CropRange& range, std::size_t target_len,
                            Rng& rng) {
  return extract_resize(x, draw_crop_window(x.size(), range, rng), target_len);
}

}  // namespace clar
