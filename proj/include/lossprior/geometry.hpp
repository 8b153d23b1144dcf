#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <utility>

#include "lossprior/errors.hpp"
#include "lossprior/fisher.hpp"
#include "lossprior/model.hpp"
#include "lossprior/param.hpp"
#include "lossprior/spd.hpp"

namespace lossprior {

enum class GeometryKind {
  euclidean,
  fisher_isotropic,
  block,
  fisher_units,
  design_based,
  data_dependent,
};

inline const char* geometry_kind_name(GeometryKind kind) {
  switch (kind) {
    case GeometryKind::euclidean: return "euclidean";
    case GeometryKind::fisher_isotropic: return "fisher_isotropic";
    case GeometryKind::block: return "block";
    case GeometryKind::fisher_units: return "fisher_units";
    case GeometryKind::design_based: return "design_based";
    case GeometryKind::data_dependent: return "data_dependent";
  }
  return "?";
}

/// A rule theta -> A(theta) shaping the exclusion ellipsoid
/// {theta + h : h' A(theta) h <= delta^2}. Evaluators are pure.
class ExclusionGeometry {
 public:
  ExclusionGeometry(GeometryKind kind, std::string descriptor,
                    std::function<SpdMatrix(const ParamPoint&)> evaluator,
                    bool violates_likelihood_principle = false)
      : kind_(kind),
        descriptor_(std::move(descriptor)),
        evaluator_(std::move(evaluator)),
        violates_lp_(violates_likelihood_principle) {}

  GeometryKind kind() const { return kind_; }
  const std::string& descriptor() const { return descriptor_; }

  /// Whether priors built through this geometry depend on realised data
  /// (the flag is stamped onto every downstream output).
  bool violates_likelihood_principle() const { return violates_lp_; }

  SpdMatrix evaluate(const ParamPoint& theta) const { return evaluator_(theta); }

 private:
  GeometryKind kind_;
  std::string descriptor_;
  std::function<SpdMatrix(const ParamPoint&)> evaluator_;
  bool violates_lp_;
};

/// A(theta) = identity.
inline ExclusionGeometry make_euclidean(int dim) {
  return ExclusionGeometry(GeometryKind::euclidean, "euclidean",
                           [dim](const ParamPoint& theta) {
                             if (theta.dim() != dim) {
                               throw ShapeError("euclidean geometry: dimension mismatch");
                             }
                             return SpdMatrix::identity(dim);
                           });
}

/// A(theta) = I(theta): isotropic exclusion in the Fisher geometry.
inline ExclusionGeometry make_fisher_isotropic(const Model& model) {
  return ExclusionGeometry(GeometryKind::fisher_isotropic, "fisher_isotropic",
                           [model](const ParamPoint& theta) {
                             return fisher_information(model, theta);
                           });
}

/// A = diag(weights): block geometry separating interest and nuisance
/// directions.
inline ExclusionGeometry make_block(const Eigen::VectorXd& weights) {
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      throw ContractError("block geometry: weights must be positive and finite");
    }
  }
  std::ostringstream desc;
  desc << "block(";
  for (Eigen::Index i = 0; i < weights.size(); ++i) desc << (i ? "," : "") << weights[i];
  desc << ")";
  const int dim = static_cast<int>(weights.size());
  return ExclusionGeometry(GeometryKind::block, desc.str(),
                           [weights, dim](const ParamPoint& theta) {
                             if (theta.dim() != dim) {
                               throw ShapeError("block geometry: dimension mismatch");
                             }
                             return SpdMatrix::diagonal(weights);
                           });
}

/// A(theta) = I(theta)^{1/2} B I(theta)^{1/2} with a constant SPD B given
/// in Fisher units.
inline ExclusionGeometry make_fisher_units(const Model& model, const SpdMatrix& b) {
  if (b.dim() != model.dim()) throw ShapeError("fisher_units geometry: B dimension mismatch");
  return ExclusionGeometry(
      GeometryKind::fisher_units, "fisher_units", [model, b](const ParamPoint& theta) {
        const SpdMatrix root = sqrt_spd(fisher_information(model, theta));
        Eigen::MatrixXd a = root.mat() * b.mat() * root.mat();
        return SpdMatrix(0.5 * (a + a.transpose().eval()));
      });
}

/// A = X'X: constant in beta, depends only on the design.
inline ExclusionGeometry make_design_based(const Eigen::MatrixXd& design) {
  const SpdMatrix gram((design.transpose() * design).eval());
  const int dim = gram.dim();
  return ExclusionGeometry(GeometryKind::design_based, "design_based",
                           [gram, dim](const ParamPoint& theta) {
                             if (theta.dim() != dim) {
                               throw ShapeError("design_based geometry: dimension mismatch");
                             }
                             return gram;
                           });
}

/// A = X' W(beta_hat) X: depends on an estimate from realised data, so every
/// downstream output is stamped with violates_likelihood_principle.
inline ExclusionGeometry make_data_dependent(const Eigen::MatrixXd& design,
                                             const ParamPoint& beta_hat) {
  if (beta_hat.dim() != design.cols()) {
    throw ShapeError("data_dependent geometry: beta_hat dimension mismatch");
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(design.cols(), design.cols());
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const double p = detail::sigmoid(design.row(i).dot(beta_hat.coords()));
    a += p * (1.0 - p) * design.row(i).transpose() * design.row(i);
  }
  const SpdMatrix fixed(std::move(a));
  const int dim = fixed.dim();
  std::ostringstream desc;
  desc << "data_dependent(beta_hat=" << beta_hat.str() << ")";
  return ExclusionGeometry(
      GeometryKind::data_dependent, desc.str(),
      [fixed, dim](const ParamPoint& theta) {
        if (theta.dim() != dim) {
          throw ShapeError("data_dependent geometry: dimension mismatch");
        }
        return fixed;
      },
      /*violates_likelihood_principle=*/true);
}

/// Jacobian of a smooth one-to-one reparametrization phi(theta).
struct Jacobian {
  Eigen::MatrixXd entries;

  explicit Jacobian(Eigen::MatrixXd j) : entries(std::move(j)) {
    if (entries.rows() != entries.cols() || entries.rows() < 1) {
      throw ShapeError("Jacobian: matrix must be square");
    }
    if (!entries.allFinite()) throw ShapeError("Jacobian: entries must be finite");
  }

  double det() const { return entries.determinant(); }
};

/// (0,2)-tensor transformation of an exclusion geometry (or any metric-like
/// matrix): A_phi = J^{-T} A J^{-1}.
inline SpdMatrix transform_geometry(const SpdMatrix& a, const Jacobian& jac) {
  if (jac.entries.rows() != a.dim()) throw ShapeError("transform_geometry: dimension mismatch");
  const double det = jac.det();
  if (!(std::abs(det) > 1e-12)) {
    throw NumericsError("transform_geometry: Jacobian is singular (|det| = " +
                        std::to_string(std::abs(det)) + ")");
  }
  const Eigen::MatrixXd inv = jac.entries.inverse();
  Eigen::MatrixXd out = inv.transpose() * a.mat() * inv;
  return SpdMatrix(0.5 * (out + out.transpose().eval()));
}

}  // namespace lossprior
