#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>

#include "lossprior/errors.hpp"
#include "lossprior/model.hpp"
#include "lossprior/param.hpp"
#include "lossprior/spd.hpp"

namespace lossprior {

namespace detail {

/// Central finite-difference Hessian of g at 0, with g(0) = 0 assumed.
/// Cross terms are computed once per pair, so the result is symmetric by
/// construction.
inline Eigen::MatrixXd fd_hessian_at_zero(const std::function<double(const Eigen::VectorXd&)>& g,
                                          const Eigen::VectorXd& steps) {
  const int d = static_cast<int>(steps.size());
  Eigen::MatrixXd hess(d, d);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < d; ++i) {
    h.setZero();
    h[i] = steps[i];
    const double plus = g(h);
    h[i] = -steps[i];
    const double minus = g(h);
    hess(i, i) = (plus + minus) / (steps[i] * steps[i]);
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      h.setZero();
      h[i] = steps[i];
      h[j] = steps[j];
      const double pp = g(h);
      h[j] = -steps[j];
      const double pm = g(h);
      h[i] = -steps[i];
      const double mm = g(h);
      h[j] = steps[j];
      const double mp = g(h);
      hess(i, j) = hess(j, i) = (pp - pm - mp + mm) / (4.0 * steps[i] * steps[j]);
    }
  }
  return hess;
}

inline Eigen::VectorXd fd_steps(const ParamPoint& theta, double step) {
  Eigen::VectorXd steps(theta.dim());
  for (int i = 0; i < theta.dim(); ++i) steps[i] = step * std::max(1.0, std::abs(theta[i]));
  return steps;
}

}  // namespace detail

/// Pure finite-difference Hessian of g(h) = KL(theta, theta + h) at h = 0
/// with the given per-coordinate base step (scaled by max(1, |theta_i|)).
/// No SPD projection; this is the oracle used to validate analytic Fisher
/// matrices.
inline SpdMatrix fisher_numeric(const Model& model, const ParamPoint& theta, double step) {
  if (!(step > 0.0)) throw ContractError("fisher_numeric: step must be positive");
  model.require_evaluation_point(theta);
  const Eigen::VectorXd steps = detail::fd_steps(theta, step);
  for (int i = 0; i < theta.dim(); ++i) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(theta.dim());
    h[i] = steps[i];
    model.require_evaluation_point(theta.shifted(h));
    h[i] = -steps[i];
    model.require_evaluation_point(theta.shifted(h));
  }
  auto g = [&](const Eigen::VectorXd& h) { return kl_divergence(model, theta, theta.shifted(h)); };
  return SpdMatrix(detail::fd_hessian_at_zero(g, steps));
}

/// Fisher information I(theta): the analytic matrix when the model carries
/// one, otherwise the symmetrized finite-difference Hessian of the KL at
/// step 1e-4, with a thin spectral shift tolerated for rounding-level
/// indefiniteness (lambda_min in (-1e-10, 0]) and a NumericsError beyond it.
inline SpdMatrix fisher_information(const Model& model, const ParamPoint& theta) {
  model.require_evaluation_point(theta);
  if (model.has_analytic_fisher()) return model.analytic_fisher(theta);

  const SpdMatrix raw = fisher_numeric(model, theta, 1e-4);
  const Eigen::VectorXd evals = eigenvalues_sorted(raw);
  const double lambda_min = evals(0);
  if (lambda_min > 0.0) return raw;
  if (lambda_min <= -1e-10) {
    throw NumericsError("fisher_information: finite-difference Hessian is indefinite "
                        "(lambda_min = " + std::to_string(lambda_min) + ")",
                        lambda_min);
  }
  const double shift = 1e-12 - lambda_min;
  Eigen::MatrixXd projected = raw.mat();
  projected.diagonal().array() += shift;
  return SpdMatrix(std::move(projected));
}

/// KL(theta, theta + h) - 0.5 h' I(theta) h: the remainder of the quadratic
/// expansion, o(||h||^2) under the regularity assumptions.
inline double expansion_residual(const Model& model, const ParamPoint& theta,
                                 const Eigen::VectorXd& h) {
  if (h.size() != theta.dim()) throw ShapeError("expansion_residual: h dimension mismatch");
  if (h.isZero(0.0)) return 0.0;
  const double kl = kl_divergence(model, theta, theta.shifted(h));
  const SpdMatrix info = fisher_information(model, theta);
  return kl - 0.5 * h.dot(info.mat() * h);
}

}  // namespace lossprior
