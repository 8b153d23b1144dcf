#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "lossprior/errors.hpp"

namespace lossprior {

struct QuadratureRule {
  std::vector<double> nodes;    // on (-1, 1)
  std::vector<double> weights;
};

/// Gauss-Legendre nodes/weights on (-1, 1) by Newton iteration on P_n.
inline QuadratureRule gauss_legendre_rule(int n) {
  QuadratureRule rule;
  rule.nodes.resize(static_cast<size_t>(n));
  rule.weights.resize(static_cast<size_t>(n));
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-based initial guess for the i-th root.
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    rule.nodes[static_cast<size_t>(i)] = -z;
    rule.nodes[static_cast<size_t>(n - 1 - i)] = z;
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[static_cast<size_t>(i)] = w;
    rule.weights[static_cast<size_t>(n - 1 - i)] = w;
  }
  return rule;
}

inline const QuadratureRule& cached_gauss_legendre(int n) {
  static std::mutex mutex;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_legendre_rule(n)).first;
  return it->second;
}

struct QuadratureResult {
  double value = 0.0;
  double residual = 0.0;  // accumulated error estimate
  long evaluations = 0;
};

struct QuadratureOptions {
  double abs_tol = 1e-10;
  int points = 20;           // Gauss-Legendre points per segment
  int max_segments = 200000;
};

namespace detail {

template <class F>
double gl_segment(const F& f, double a, double b, const QuadratureRule& rule, long& evals) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  evals += static_cast<long>(rule.nodes.size());
  return half * sum;
}

}  // namespace detail

/// Adaptive Gauss-Legendre on (a, b): each segment estimate is compared with
/// the sum over its two halves; segments are split until the discrepancy fits
/// within a length-proportional share of the absolute tolerance.
template <class F>
QuadratureResult integrate_adaptive(const F& f, double a, double b,
                                    const QuadratureOptions& opts = {}) {
  if (!(a < b)) throw ContractError("integrate_adaptive: requires a < b");
  const QuadratureRule& rule = cached_gauss_legendre(opts.points);

  struct Segment {
    double a, b, estimate;
  };
  QuadratureResult result;
  std::vector<Segment> stack;
  // Seed with several segments so localized integrands are not missed by a
  // single coarse pass over the whole interval.
  const int initial = 8;
  for (int i = 0; i < initial; ++i) {
    const double sa = a + (b - a) * i / initial;
    const double sb = a + (b - a) * (i + 1) / initial;
    stack.push_back({sa, sb, detail::gl_segment(f, sa, sb, rule, result.evaluations)});
  }
  const double total_length = b - a;
  int segments_used = initial;

  while (!stack.empty()) {
    const Segment seg = stack.back();
    stack.pop_back();
    const double mid = 0.5 * (seg.a + seg.b);
    const double left = detail::gl_segment(f, seg.a, mid, rule, result.evaluations);
    const double right = detail::gl_segment(f, mid, seg.b, rule, result.evaluations);
    const double refined = left + right;
    const double err = std::abs(refined - seg.estimate);
    const double local_tol = opts.abs_tol * (seg.b - seg.a) / total_length;
    if (err <= local_tol || (seg.b - seg.a) < 1e-14 * total_length) {
      result.value += refined;
      result.residual += err;
      continue;
    }
    segments_used += 2;
    if (segments_used > opts.max_segments) {
      throw NumericsError("integrate_adaptive: segment budget exhausted", err);
    }
    stack.push_back({seg.a, mid, left});
    stack.push_back({mid, seg.b, right});
  }
  return result;
}

/// Integral over the whole real line via x = t/(1-t^2), t in (-1, 1).
template <class F>
QuadratureResult integrate_real_line(const F& f, const QuadratureOptions& opts = {}) {
  auto g = [&f](double t) {
    const double one_minus_t2 = 1.0 - t * t;
    const double x = t / one_minus_t2;
    const double jac = (1.0 + t * t) / (one_minus_t2 * one_minus_t2);
    return f(x) * jac;
  };
  return integrate_adaptive(g, -1.0 + 1e-12, 1.0 - 1e-12, opts);
}

/// Integral over (0, inf) via x = t/(1-t), t in (0, 1).
template <class F>
QuadratureResult integrate_positive_reals(const F& f, const QuadratureOptions& opts = {}) {
  auto g = [&f](double t) {
    const double one_minus_t = 1.0 - t;
    const double x = t / one_minus_t;
    const double jac = 1.0 / (one_minus_t * one_minus_t);
    return f(x) * jac;
  };
  return integrate_adaptive(g, 1e-14, 1.0 - 1e-12, opts);
}

/// Integral over the plane by nesting two adaptive passes; the inner pass
/// runs at a tighter tolerance so its error does not pollute the outer one.
template <class F2>
QuadratureResult integrate_real_plane(const F2& f, const QuadratureOptions& opts = {}) {
  QuadratureOptions inner_opts = opts;
  inner_opts.abs_tol = opts.abs_tol * 1e-2;
  long inner_evals = 0;
  auto outer = [&](double x) {
    auto inner = [&](double y) { return f(x, y); };
    QuadratureResult r = integrate_real_line(inner, inner_opts);
    inner_evals += r.evaluations;
    return r.value;
  };
  QuadratureResult result = integrate_real_line(outer, opts);
  result.evaluations = inner_evals;
  return result;
}

}  // namespace lossprior
