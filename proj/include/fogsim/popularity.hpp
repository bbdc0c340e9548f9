#pragma once

// Synthetic popularity and mobility sources: clamped random walks in [0,1],
// Zipf rank distributions, sliding-window supervised datasets for the
// forecasters, and reflected 2-D mobility walks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "fogsim/errors.hpp"
#include "fogsim/rng.hpp"
#include "fogsim/scenario.hpp"

namespace fogsim {

struct PopularitySeries {
  int slots = 0;     // T
  int contents = 0;  // F
  std::vector<double> values;  // row-major [t * contents + f], each in [0,1]

  double at(int t, int f) const { return values[static_cast<std::size_t>(t) * contents + f]; }

  std::vector<double> column(int t) const {
    const auto* row = values.data() + static_cast<std::size_t>(t) * contents;
    return std::vector<double>(row, row + contents);
  }

  // Single-content view as a plain vector, for windowing.
  std::vector<double> content_series(int f) const {
    std::vector<double> out(slots);
    for (int t = 0; t < slots; ++t) out[t] = at(t, f);
    return out;
  }
};

// Generic walk driver: step(t, f) supplies the increment applied between
// slot t and t+1. Tests force deterministic steps through this hook.
template <class StepFn>
PopularitySeries random_walk_series_with(int slots, int contents,
                                         const std::vector<double>& initial, StepFn&& step) {
  if (slots < 1) throw ParamError("random_walk_series: slots must be >= 1");
  if (contents < 1) throw ParamError("random_walk_series: contents must be >= 1");
  if (static_cast<int>(initial.size()) != contents)
    throw ParamError("random_walk_series: initial values must match content count");
  for (double v : initial)
    if (v < 0.0 || v > 1.0) throw ParamError("random_walk_series: x0 must lie in [0,1]");

  PopularitySeries s;
  s.slots = slots;
  s.contents = contents;
  s.values.resize(static_cast<std::size_t>(slots) * contents);
  for (int f = 0; f < contents; ++f) s.values[f] = initial[f];
  for (int t = 1; t < slots; ++t) {
    for (int f = 0; f < contents; ++f) {
      const double prev = s.values[static_cast<std::size_t>(t - 1) * contents + f];
      s.values[static_cast<std::size_t>(t) * contents + f] =
          std::clamp(prev + step(t - 1, f), 0.0, 1.0);
    }
  }
  return s;
}

inline PopularitySeries random_walk_series(int slots, int contents, double step_bound,
                                           const std::vector<double>& initial,
                                           std::uint64_t seed) {
  if (step_bound <= 0) throw ParamError("random_walk_series: step_bound must be > 0");
  Rng rng(seed);
  return random_walk_series_with(slots, contents, initial,
                                 [&](int, int) { return rng.uniform(-step_bound, step_bound); });
}

inline PopularitySeries random_walk_series(int slots, int contents, double step_bound, double x0,
                                           std::uint64_t seed) {
  return random_walk_series(slots, contents, step_bound, std::vector<double>(contents, x0), seed);
}

// p_f = f^-s / H(F,s), ranks 1..F in content-id order. s=0 is uniform.
inline std::vector<double> zipf_distribution(int contents, double exponent) {
  if (contents < 1) throw ParamError("zipf_distribution: contents must be >= 1");
  if (exponent < 0) throw ParamError("zipf_distribution: exponent must be >= 0");
  std::vector<double> p(contents);
  double norm = 0.0;
  for (int f = 0; f < contents; ++f) {
    p[f] = std::pow(static_cast<double>(f + 1), -exponent);
    norm += p[f];
  }
  for (double& v : p) v /= norm;
  return p;
}

struct WindowedPair {
  std::vector<double> input;  // W consecutive values
  double label = 0.0;         // the value one slot past the window
  int start_slot = 0;
};

struct WindowedDataset {
  int window = 0;
  std::vector<WindowedPair> pairs;  // shuffled
  int split_index = 0;              // pairs [0, split_index) train, rest test
};

// Pairs in natural order: pair t = (slots [t, t+W), slot t+W).
inline std::vector<WindowedPair> window_pairs(const std::vector<double>& series, int window) {
  const int T = static_cast<int>(series.size());
  if (window < 1) throw DatasetError("window_dataset: window must be >= 1");
  if (T <= window) throw DatasetError("window_dataset: series no longer than window");
  std::vector<WindowedPair> pairs;
  pairs.reserve(T - window);
  for (int t = 0; t + window < T; ++t) {
    WindowedPair p;
    p.input.assign(series.begin() + t, series.begin() + t + window);
    p.label = series[t + window];
    p.start_slot = t;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

// T-W pairs, seeded Fisher-Yates shuffle, 70/30 split with the train count
// floored.
inline WindowedDataset window_dataset(const std::vector<double>& series, int window,
                                      std::uint64_t shuffle_seed) {
  WindowedDataset ds;
  ds.window = window;
  ds.pairs = window_pairs(series, window);
  Rng rng(shuffle_seed);
  for (int i = static_cast<int>(ds.pairs.size()) - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(ds.pairs[i], ds.pairs[j]);
  }
  ds.split_index = static_cast<int>(std::floor(0.7 * static_cast<double>(ds.pairs.size())));
  return ds;
}

inline WindowedDataset window_dataset(const PopularitySeries& series, int content, int window,
                                      std::uint64_t shuffle_seed) {
  return window_dataset(series.content_series(content), window, shuffle_seed);
}

// --- mobility ---------------------------------------------------------

struct MobilitySeries {
  int ue_count = 0;
  int slots = 0;
  double region_radius_m = 0.0;
  std::vector<Position> positions;  // [ue * slots + t]

  const Position& at(int ue, int t) const {
    return positions[static_cast<std::size_t>(ue) * slots + t];
  }

  // Per-axis map of [-R, R] onto [0,1] for forecaster consumption.
  double normalize(double coord) const { return (coord + region_radius_m) / (2.0 * region_radius_m); }
  double denormalize(double unit) const { return unit * 2.0 * region_radius_m - region_radius_m; }

  std::vector<double> axis_series(int ue, int axis) const {
    std::vector<double> out(slots);
    for (int t = 0; t < slots; ++t)
      out[t] = normalize(axis == 0 ? at(ue, t).x : at(ue, t).y);
    return out;
  }
};

// Gaussian 2-D walk reflected at the circular region boundary.
inline MobilitySeries mobility_series(int ue_count, int slots, double region_diameter_m,
                                      double step_sigma_m, std::uint64_t seed) {
  if (ue_count < 1) throw ParamError("mobility_series: ue_count must be >= 1");
  if (slots < 1) throw ParamError("mobility_series: slots must be >= 1");
  if (step_sigma_m < 0) throw ParamError("mobility_series: step sigma must be >= 0");

  const double radius = region_diameter_m / 2.0;
  MobilitySeries m;
  m.ue_count = ue_count;
  m.slots = slots;
  m.region_radius_m = radius;
  m.positions.resize(static_cast<std::size_t>(ue_count) * slots);

  Rng rng(seed);
  for (int u = 0; u < ue_count; ++u) {
    const double r = radius * std::sqrt(rng.next_double());
    const double theta = 2.0 * M_PI * rng.next_double();
    Position pos{r * std::cos(theta), r * std::sin(theta)};
    m.positions[static_cast<std::size_t>(u) * slots] = pos;
    for (int t = 1; t < slots; ++t) {
      pos.x += step_sigma_m == 0.0 ? 0.0 : rng.normal(0.0, step_sigma_m);
      pos.y += step_sigma_m == 0.0 ? 0.0 : rng.normal(0.0, step_sigma_m);
      const double d = std::hypot(pos.x, pos.y);
      if (d > radius) {  // fold the overshoot back inside
        const double folded = std::clamp(2.0 * radius - d, 0.0, radius);
        pos.x *= folded / d;
        pos.y *= folded / d;
      }
      m.positions[static_cast<std::size_t>(u) * slots + t] = pos;
    }
  }
  return m;
}

// Normalizes a non-negative popularity column into a request distribution;
// an all-zero column degenerates to uniform.
inline std::vector<double> normalize_column(const std::vector<double>& column) {
  std::vector<double> p(column.size());
  double sum = 0.0;
  for (double v : column) sum += std::max(v, 0.0);
  if (sum <= 0.0) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
    return p;
  }
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::max(column[i], 0.0) / sum;
  return p;
}

}  // namespace fogsim
