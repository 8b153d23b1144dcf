#pragma once

#include <cmath>
#include <vector>

#include "lossprior/errors.hpp"

namespace lossprior {

inline std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw ContractError("linspace: need at least one node");
  std::vector<double> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    out[static_cast<size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  }
  return out;
}

inline std::vector<double> logspace(double lo, double hi, int n) {
  if (n < 1) throw ContractError("logspace: need at least one node");
  if (!(lo > 0.0) || !(hi > lo)) throw ContractError("logspace: requires 0 < lo < hi");
  std::vector<double> out(static_cast<size_t>(n));
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i) {
    out[static_cast<size_t>(i)] = n == 1 ? lo : std::exp(llo + (lhi - llo) * i / (n - 1));
  }
  return out;
}

/// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("fit_slope: need matched n >= 2");
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace lossprior
