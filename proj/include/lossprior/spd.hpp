#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>

#include "lossprior/errors.hpp"

namespace lossprior {

/// Symmetric matrix intended to be positive definite. Construction enforces
/// squareness, finiteness, and symmetry (to 1e-12 relative), then stores the
/// symmetrized copy. Definiteness is enforced by the operations that need it.
class SpdMatrix {
 public:
  explicit SpdMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 1) {
      throw ShapeError("SpdMatrix: matrix must be square with dim >= 1");
    }
    if (!m_.allFinite()) throw ShapeError("SpdMatrix: entries must be finite");
    const double scale = m_.cwiseAbs().maxCoeff();
    const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(scale, 1.0)) {
      throw ShapeError("SpdMatrix: matrix is asymmetric beyond tolerance (max dev " +
                       std::to_string(asym) + ")");
    }
    m_ = 0.5 * (m_ + m_.transpose().eval());
  }

  static SpdMatrix identity(int dim) {
    return SpdMatrix(Eigen::MatrixXd::Identity(dim, dim));
  }

  static SpdMatrix diagonal(const Eigen::VectorXd& d) {
    return SpdMatrix(Eigen::MatrixXd(d.asDiagonal()));
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Eigen::MatrixXd m_;
};

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;
};

namespace detail {

inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> decompose(const SpdMatrix& m,
                                                                const char* caller) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.mat());
  if (solver.info() != Eigen::Success) {
    throw NumericsError(std::string(caller) + ": eigendecomposition failed");
  }
  return solver;
}

}  // namespace detail

/// Smallest eigenvalue together with its unit eigenvector.
inline EigenPair min_eigenpair(const SpdMatrix& m) {
  auto solver = detail::decompose(m, "min_eigenpair");
  return {solver.eigenvalues()(0), solver.eigenvectors().col(0)};
}

inline double min_eigenvalue(const SpdMatrix& m) { return min_eigenpair(m).value; }

inline Eigen::VectorXd eigenvalues_sorted(const SpdMatrix& m) {
  return detail::decompose(m, "eigenvalues_sorted").eigenvalues();
}

/// Unique SPD square root via spectral decomposition.
inline SpdMatrix sqrt_spd(const SpdMatrix& m) {
  auto solver = detail::decompose(m, "sqrt_spd");
  if (solver.eigenvalues()(0) <= 0.0) {
    throw NumericsError("sqrt_spd: input is not positive definite (lambda_min = " +
                        std::to_string(solver.eigenvalues()(0)) + ")");
  }
  const Eigen::VectorXd roots = solver.eigenvalues().cwiseSqrt();
  return SpdMatrix(solver.eigenvectors() * roots.asDiagonal() *
                   solver.eigenvectors().transpose());
}

/// Inverse SPD square root from one spectral decomposition (no separate
/// inversion pass).
inline SpdMatrix inv_sqrt_spd(const SpdMatrix& m) {
  auto solver = detail::decompose(m, "inv_sqrt_spd");
  if (solver.eigenvalues()(0) <= 0.0) {
    throw NumericsError("inv_sqrt_spd: input is not positive definite (lambda_min = " +
                        std::to_string(solver.eigenvalues()(0)) + ")");
  }
  const Eigen::VectorXd inv_roots = solver.eigenvalues().cwiseSqrt().cwiseInverse();
  return SpdMatrix(solver.eigenvectors() * inv_roots.asDiagonal() *
                   solver.eigenvectors().transpose());
}

inline SpdMatrix inverse_spd(const SpdMatrix& m) {
  auto solver = detail::decompose(m, "inverse_spd");
  if (solver.eigenvalues()(0) <= 0.0) {
    throw NumericsError("inverse_spd: input is not positive definite");
  }
  const Eigen::VectorXd inv = solver.eigenvalues().cwiseInverse();
  return SpdMatrix(solver.eigenvectors() * inv.asDiagonal() *
                   solver.eigenvectors().transpose());
}

/// Fisher information relative to the exclusion geometry:
/// whiten(I, A) = A^{-1/2} I A^{-1/2}.
inline SpdMatrix whiten(const SpdMatrix& fisher, const SpdMatrix& geometry) {
  if (fisher.dim() != geometry.dim()) {
    throw ShapeError("whiten: dimension mismatch (" + std::to_string(fisher.dim()) + " vs " +
                     std::to_string(geometry.dim()) + ")");
  }
  const SpdMatrix s = inv_sqrt_spd(geometry);
  Eigen::MatrixXd w = s.mat() * fisher.mat() * s.mat();
  return SpdMatrix(0.5 * (w + w.transpose().eval()));
}

}  // namespace lossprior
