#pragma once

// Minimal dense row-major matrix for the hand-rolled networks. Nothing here
// is tuned beyond keeping the inner loops allocation-free.

#include <cstddef>
#include <vector>

#include "fogsim/rng.hpp"

namespace fogsim {

using Vec = std::vector<double>;

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

  void zero() { std::fill(a.begin(), a.end(), 0.0); }

  std::size_t size() const { return a.size(); }
};

// y += M x
inline void mat_vec_add(const Mat& m, const Vec& x, Vec& y) {
  for (int r = 0; r < m.rows; ++r) {
    const double* row = m.a.data() + static_cast<std::size_t>(r) * m.cols;
    double acc = 0.0;
    for (int c = 0; c < m.cols; ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

// y += M^T x  (x has m.rows entries, y has m.cols)
inline void mat_t_vec_add(const Mat& m, const Vec& x, Vec& y) {
  for (int r = 0; r < m.rows; ++r) {
    const double* row = m.a.data() + static_cast<std::size_t>(r) * m.cols;
    const double xr = x[r];
    for (int c = 0; c < m.cols; ++c) y[c] += row[c] * xr;
  }
}

// G += u v^T
inline void outer_add(Mat& g, const Vec& u, const Vec& v) {
  for (int r = 0; r < g.rows; ++r) {
    double* row = g.a.data() + static_cast<std::size_t>(r) * g.cols;
    const double ur = u[r];
    for (int c = 0; c < g.cols; ++c) row[c] += ur * v[c];
  }
}

// Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
inline void init_uniform_fan_in(Mat& m, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& w : m.a) w = rng.uniform(-bound, bound);
}

}  // namespace fogsim
