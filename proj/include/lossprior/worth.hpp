#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lossprior/errors.hpp"
#include "lossprior/fisher.hpp"
#include "lossprior/geometry.hpp"
#include "lossprior/model.hpp"
#include "lossprior/rng.hpp"
#include "lossprior/spd.hpp"

namespace lossprior {

enum class WorthMethod { exact, asymptotic, oracle };

inline const char* worth_method_name(WorthMethod m) {
  switch (m) {
    case WorthMethod::exact: return "exact";
    case WorthMethod::asymptotic: return "asymptotic";
    case WorthMethod::oracle: return "oracle";
  }
  return "?";
}

/// The delta-worth u_delta(theta) with method metadata. For exact/oracle the
/// minimizing offset h (with h' A h = delta^2 when boundary_only) is kept
/// alongside its unit direction.
struct WorthEstimate {
  double value = 0.0;
  WorthMethod method = WorthMethod::exact;
  double delta = 0.0;
  Eigen::VectorXd argmin_direction;  // unit vector in parameter space
  Eigen::VectorXd argmin_offset;     // the minimizing h itself
  std::optional<double> convergence_ratio;  // exact / asymptotic
  bool boundary_only = true;
};

struct WorthOptions {
  int max_iterations = 500;
  double gradient_tol = 1e-10;
  double fd_step = 1e-6;  // on the unit sphere; corresponds to 1e-6 * delta in h
  std::uint64_t start_seed = 20240601;
  std::vector<double> audit_radius_factors = {1.5, 2.0, 3.0};
  int audit_directions = 8;
};

namespace detail {

struct SphereResult {
  Eigen::VectorXd v;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Projected gradient descent on the unit sphere with Armijo backtracking.
/// Gradients come from central differences; convergence is declared on the
/// tangential gradient norm.
template <class F>
SphereResult sphere_minimize(const F& objective, Eigen::VectorXd start,
                             const WorthOptions& opts) {
  SphereResult res;
  res.v = start.normalized();
  res.value = objective(res.v);
  const int d = static_cast<int>(res.v.size());
  double alpha = 1.0;
  int floor_hits = 0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    res.iterations = it;
    Eigen::VectorXd grad(d);
    for (int i = 0; i < d; ++i) {
      Eigen::VectorXd e = res.v;
      e[i] += opts.fd_step;
      const double plus = objective(e.normalized());
      e[i] = res.v[i] - opts.fd_step;
      const double minus = objective(e.normalized());
      grad[i] = (plus - minus) / (2.0 * opts.fd_step);
    }
    const Eigen::VectorXd tangent = grad - grad.dot(res.v) * res.v;
    const double gnorm = tangent.norm();
    if (gnorm < opts.gradient_tol) {
      res.converged = true;
      return res;
    }
    double step = alpha;
    bool accepted = false;
    const double before = res.value;
    for (int bt = 0; bt < 60; ++bt) {
      const Eigen::VectorXd trial = (res.v - step * tangent).normalized();
      const double trial_value = objective(trial);
      if (trial_value <= res.value - 1e-4 * step * gnorm * gnorm) {
        res.v = trial;
        res.value = trial_value;
        alpha = std::min(2.0 * step, 1e2);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (accepted) {
      // Improvements indistinguishable from evaluation noise mean the
      // objective resolution is exhausted.
      if (before - res.value < 1e-14 * (1.0 + std::abs(res.value))) {
        if (++floor_hits >= 3) {
          res.converged = true;
          return res;
        }
      } else {
        floor_hits = 0;
      }
    }
    if (!accepted) {
      // No improving step exists at any scale: the finite-difference noise
      // floor has been reached, which is as converged as the objective
      // resolution allows.
      res.converged = true;
      return res;
    }
  }
  return res;
}

}  // namespace detail

namespace detail {

/// The boundary sphere {theta + h : h' A h = delta^2} must sit inside the
/// evaluation domain. The per-coordinate extremes of the ellipsoid are
/// theta_i +/- delta * sqrt((A^{-1})_ii) and are attained on the boundary,
/// so the box test is exact for product domains.
inline void require_boundary_in_domain(const Model& model, const ParamPoint& theta,
                                       const Eigen::MatrixXd& a_inv, double delta) {
  const Domain& dom = model.domain();
  for (int i = 0; i < theta.dim(); ++i) {
    const double extent = delta * std::sqrt(a_inv(i, i));
    const Interval& iv = dom.interval(i);
    const double lo = theta[i] - extent;
    const double hi = theta[i] + extent;
    const bool lo_ok = !std::isfinite(iv.lo) || (lo > iv.lo && lo - iv.lo >= kDomainMargin);
    const bool hi_ok = !std::isfinite(iv.hi) || (hi < iv.hi && iv.hi - hi >= kDomainMargin);
    if (!lo_ok || !hi_ok) {
      throw DomainError("delta-worth: exclusion boundary leaves the domain in coordinate " +
                        std::to_string(i) + " (extent " + std::to_string(extent) + " at " +
                        theta.str() + ")");
    }
  }
}

}  // namespace detail

/// Asymptotic worth 0.5 delta^2 lambda_min(A^{-1/2} I A^{-1/2}).
inline WorthEstimate delta_worth_asymptotic(const SpdMatrix& fisher, const SpdMatrix& geometry,
                                            double delta) {
  if (!(delta > 0.0)) throw ContractError("delta_worth_asymptotic: delta must be positive");
  if (fisher.dim() != geometry.dim()) {
    throw ShapeError("delta_worth_asymptotic: dimension mismatch");
  }
  WorthEstimate est;
  est.method = WorthMethod::asymptotic;
  est.delta = delta;
  est.value = 0.5 * delta * delta * min_eigenvalue(whiten(fisher, geometry));
  return est;
}

/// Exact delta-worth: minimize g(h) = KL(theta, theta + h) over the
/// exclusion boundary via the substitution h = delta A^{-1/2} v, ||v|| = 1.
/// Multi-start refinement is seeded at +/- the minimum eigenvector of the
/// whitened matrix plus 2d random unit starts; a coarse sample of the
/// ellipsoid exterior guards finite-delta use, flipping boundary_only when
/// the exterior wins.
inline WorthEstimate delta_worth_exact(const Model& model, const ParamPoint& theta,
                                       const ExclusionGeometry& geometry, double delta,
                                       const WorthOptions& opts = {}) {
  if (!(delta > 0.0)) throw ContractError("delta_worth_exact: delta must be positive");
  model.require_evaluation_point(theta);
  const int d = theta.dim();

  const SpdMatrix a = geometry.evaluate(theta);
  if (a.dim() != d) throw ShapeError("delta_worth_exact: geometry dimension mismatch");
  const SpdMatrix a_inv_sqrt = inv_sqrt_spd(a);
  const Eigen::MatrixXd a_inv = a_inv_sqrt.mat() * a_inv_sqrt.mat();
  detail::require_boundary_in_domain(model, theta, a_inv, delta);

  const SpdMatrix fisher = fisher_information(model, theta);
  const EigenPair floor_pair = min_eigenpair(whiten(fisher, a));

  auto objective = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd h = delta * (a_inv_sqrt.mat() * v);
    return kl_divergence(model, theta, theta.shifted(h));
  };

  Eigen::VectorXd best_v;
  double best_value = std::numeric_limits<double>::infinity();
  bool any_converged = false;

  if (d == 1) {
    // S^0 has two points; enumerate them.
    for (double sign : {1.0, -1.0}) {
      Eigen::VectorXd v(1);
      v[0] = sign;
      const double value = objective(v);
      if (value < best_value) {
        best_value = value;
        best_v = v;
      }
    }
    any_converged = true;
  } else {
    std::vector<Eigen::VectorXd> starts;
    starts.push_back(floor_pair.vector);
    starts.push_back(-floor_pair.vector);
    Rng rng(opts.start_seed);
    for (int k = 0; k < 2 * d; ++k) starts.push_back(rng.unit_sphere(d));
    for (const auto& start : starts) {
      const detail::SphereResult run = detail::sphere_minimize(objective, start, opts);
      any_converged = any_converged || run.converged;
      if (run.value < best_value) {
        best_value = run.value;
        best_v = run.v;
      }
    }
    if (!any_converged) {
      throw NumericsError("delta_worth_exact: no start met the gradient tolerance "
                          "(best value " + std::to_string(best_value) + ")",
                          std::nullopt, best_value);
    }
  }

  WorthEstimate est;
  est.method = WorthMethod::exact;
  est.delta = delta;
  est.value = best_value;
  est.argmin_offset = delta * (a_inv_sqrt.mat() * best_v);
  est.boundary_only = true;

  // Exterior audit: the boundary carries the infimum only asymptotically.
  Rng audit_rng(opts.start_seed ^ 0x5bd1e995u);
  std::vector<Eigen::VectorXd> audit_dirs = {floor_pair.vector, -floor_pair.vector, best_v};
  for (int k = 0; k < opts.audit_directions; ++k) audit_dirs.push_back(audit_rng.unit_sphere(d));
  for (double factor : opts.audit_radius_factors) {
    for (const auto& u : audit_dirs) {
      const Eigen::VectorXd h = (factor * delta) * (a_inv_sqrt.mat() * u);
      const ParamPoint candidate = theta.shifted(h);
      if (!model.domain().contains_with_margin(candidate, kDomainMargin)) continue;
      const double value = kl_divergence(model, theta, candidate);
      if (value < est.value) {
        est.value = value;
        est.argmin_offset = h;
        est.boundary_only = false;
      }
    }
  }

  est.argmin_direction = est.argmin_offset.normalized();
  const double asymptotic = 0.5 * delta * delta * floor_pair.value;
  if (asymptotic > 0.0) est.convergence_ratio = est.value / asymptotic;
  return est;
}

/// Brute-force boundary oracle: the minimum of g over n_points seeded
/// uniform-on-sphere directions mapped through delta A^{-1/2}. Upper-bounds
/// the exact infimum; non-increasing in n_points for a fixed seed. In d = 1
/// the two boundary points are enumerated outright.
inline WorthEstimate delta_worth_oracle(const Model& model, const ParamPoint& theta,
                                        const ExclusionGeometry& geometry, double delta,
                                        long n_points, std::uint64_t seed) {
  if (!(delta > 0.0)) throw ContractError("delta_worth_oracle: delta must be positive");
  if (n_points < 100) throw ContractError("delta_worth_oracle: n_points must be >= 100");
  model.require_evaluation_point(theta);
  const int d = theta.dim();

  const SpdMatrix a = geometry.evaluate(theta);
  const SpdMatrix a_inv_sqrt = inv_sqrt_spd(a);
  const Eigen::MatrixXd a_inv = a_inv_sqrt.mat() * a_inv_sqrt.mat();
  detail::require_boundary_in_domain(model, theta, a_inv, delta);

  auto evaluate = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd h = delta * (a_inv_sqrt.mat() * v);
    return kl_divergence(model, theta, theta.shifted(h));
  };

  Eigen::VectorXd best_v;
  double best_value = std::numeric_limits<double>::infinity();
  if (d == 1) {
    for (double sign : {1.0, -1.0}) {
      Eigen::VectorXd v(1);
      v[0] = sign;
      const double value = evaluate(v);
      if (value < best_value) {
        best_value = value;
        best_v = v;
      }
    }
  } else {
    Rng rng(seed);
    for (long k = 0; k < n_points; ++k) {
      const Eigen::VectorXd v = rng.unit_sphere(d);
      const double value = evaluate(v);
      if (value < best_value) {
        best_value = value;
        best_v = v;
      }
    }
  }

  WorthEstimate est;
  est.method = WorthMethod::oracle;
  est.delta = delta;
  est.value = best_value;
  est.argmin_offset = delta * (a_inv_sqrt.mat() * best_v);
  est.argmin_direction = est.argmin_offset.normalized();
  return est;
}

struct SweepRow {
  double delta = 0.0;
  double exact = 0.0;
  double asymptotic = 0.0;
  double ratio = 0.0;  // exact / asymptotic
};

/// Per-delta comparison of the exact worth against the min-eigenvalue
/// formula; the ratio tends to 1 as delta -> 0.
inline std::vector<SweepRow> convergence_sweep(const Model& model, const ParamPoint& theta,
                                               const ExclusionGeometry& geometry,
                                               const std::vector<double>& deltas,
                                               const WorthOptions& opts = {}) {
  if (deltas.empty()) return {};
  for (size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0)) throw ContractError("convergence_sweep: deltas must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1])) {
      throw ContractError("convergence_sweep: deltas must be strictly decreasing");
    }
  }
  const SpdMatrix fisher = fisher_information(model, theta);
  const SpdMatrix a = geometry.evaluate(theta);
  std::vector<SweepRow> rows;
  rows.reserve(deltas.size());
  for (double delta : deltas) {
    SweepRow row;
    row.delta = delta;
    row.exact = delta_worth_exact(model, theta, geometry, delta, opts).value;
    row.asymptotic = delta_worth_asymptotic(fisher, a, delta).value;
    row.ratio = row.exact / row.asymptotic;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace lossprior
