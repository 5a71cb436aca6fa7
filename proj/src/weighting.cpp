#include "clar/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <utility>

namespace clar {

int derive_window_len(std::size_t seq_len) {
  const int h = static_cast<int>(std::llround(static_cast<double>(seq_len) / 8.0));
  return std::max(4, h);
}

std::vector<Sequence> select_templates(const std::vector<Sequence>& static_pool, int k, int h,
                                       Rng& rng) {
  if (k < 1) throw std::invalid_argument("need at least one template");
  if (h < 1) throw std::invalid_argument("template window must be non-empty");
  if (static_pool.empty()) throw std::invalid_argument("empty static pool");
  std::size_t total_windows = 0;
  for (const Sequence& s : static_pool) {
    if (s.size() < static_cast<std::size_t>(h)) {
      throw std::invalid_argument("static pool item shorter than the template window");
    }
    total_windows += s.size() - static_cast<std::size_t>(h) + 1;
  }
  if (total_windows < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("static pool has fewer distinct windows than requested templates");
  }
  std::set<std::pair<int, int>> used;
  std::vector<Sequence> out;
  out.reserve(static_cast<std::size_t>(k));
  while (out.size() < static_cast<std::size_t>(k)) {
    const int item = rng.uniform_int(0, static_cast<int>(static_pool.size()) - 1);
    const Sequence& s = static_pool[static_cast<std::size_t>(item)];
    const int start = rng.uniform_int(0, static_cast<int>(s.size()) - h);
    if (!used.insert({item, start}).second) continue;
    out.emplace_back(s.begin() + start, s.begin() + start + h);
  }
  return out;
}

ResponseMap response_map(const Sequence& x, const std::vector<Sequence>& templates, int h) {
  if (templates.empty()) throw std::invalid_argument("no templates");
  for (const Sequence& t : templates) {
    if (t.size() != static_cast<std::size_t>(h)) {
      throw std::invalid_argument("template length != window length");
    }
  }
  const std::vector<Sequence> windows = sliding_windows(x, h);  // checks len(x) >= h
  ResponseMap map;
  map.scores.reserve(windows.size());
  for (const Sequence& w : windows) {
    double acc = 0.0;
    for (const Sequence& t : templates) acc += dtw_distance(w, t);
    map.scores.push_back(acc / static_cast<double>(templates.size()));
  }
  map.sigma_s = std::accumulate(map.scores.begin(), map.scores.end(), 0.0) /
                static_cast<double>(map.scores.size());
  return map;
}

double sample_weight(const ResponseMap& map, double alpha) {
  if (map.scores.empty()) throw std::invalid_argument("empty response map");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  std::size_t above = 0;
  for (double s : map.scores) {
    if (s > map.sigma_s) ++above;
  }
  const double frac = static_cast<double>(above) / static_cast<double>(map.scores.size());
  return std::pow(frac, alpha);
}

double pair_weight(double w_i, double w_j) {
  if (w_i < 0.0 || w_i > 1.0 || w_j < 0.0 || w_j > 1.0) {
    throw std::invalid_argument("sample weights must lie in [0, 1]");
  }
  return w_i + w_j;
}

ResponseMap crop_map(const ResponseMap& parent, int h, const CropWindow& crop) {
  if (h < 1) throw std::invalid_argument("window length must be positive");
  if (crop.len < static_cast<std::size_t>(h)) {
    throw std::invalid_argument("crop shorter than the response window");
  }
  const std::size_t first = crop.start;
  const std::size_t last = crop.start + crop.len - static_cast<std::size_t>(h);  // inclusive
  if (last >= parent.scores.size()) {
    throw std::invalid_argument("crop window outside the parent response map");
  }
  ResponseMap out;
  out.scores.assign(parent.scores.begin() + static_cast<long>(first),
                    parent.scores.begin() + static_cast<long>(last + 1));
  out.sigma_s = parent.sigma_s;
  return out;
}

}  // namespace clar
