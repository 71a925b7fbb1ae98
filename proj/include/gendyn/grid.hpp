#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace gendyn {

/// n log-spaced points on [lo, hi], optionally prefixed with an exact zero.
inline std::vector<double> log_spaced(double lo, double hi, int n,
                                      bool include_zero = true) {
  if (!(lo > 0) || !(hi > lo) || n < 2)
    throw std::invalid_argument("log_spaced: need 0 < lo < hi and n >= 2");
  std::vector<double> out;
  if (include_zero) out.push_back(0.0);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i)
    out.push_back(std::exp(llo + (lhi - llo) * i / (n - 1)));
  return out;
}

/// Piecewise-linear interpolation of (xs, ys) onto x; clamps outside the range.
inline double interp_linear(const std::vector<double>& xs,
                            const std::vector<double>& ys, double x) {
  if (xs.empty() || xs.size() != ys.size())
    throw std::invalid_argument("interp_linear: bad inputs");
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin());
  const double f = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + f * (ys[i] - ys[i - 1]);
}

inline std::vector<double> interp_linear(const std::vector<double>& xs,
                                         const std::vector<double>& ys,
                                         const std::vector<double>& grid) {
  std::vector<double> out;
  out.reserve(grid.size());
  for (double x : grid) out.push_back(interp_linear(xs, ys, x));
  return out;
}

}  // namespace gendyn
