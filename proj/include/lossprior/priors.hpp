#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lossprior/errors.hpp"
#include "lossprior/fisher.hpp"
#include "lossprior/geometry.hpp"
#include "lossprior/model.hpp"
#include "lossprior/spd.hpp"
#include "lossprior/worth.hpp"

namespace lossprior {

/// Density value matched to an inferential loss u >= 0: exp(u) - 1, in the
/// numerically stable form for small u.
inline double loss_prior_density(double u) {
  if (!(u >= 0.0)) throw ContractError("loss_prior_density: worth must be nonnegative");
  return std::expm1(u);
}

/// Asymptotic loss-based prior value: the smallest eigenvalue of the Fisher
/// information relative to the exclusion geometry.
inline double min_eig_prior(const Model& model, const ExclusionGeometry& geometry,
                            const ParamPoint& theta) {
  const SpdMatrix fisher = fisher_information(model, theta);
  return min_eigenvalue(whiten(fisher, geometry.evaluate(theta)));
}

/// Volume-based aggregation of local curvature: sqrt(det I(theta)).
inline double jeffreys_prior(const Model& model, const ParamPoint& theta) {
  const SpdMatrix fisher = fisher_information(model, theta);
  return std::sqrt(fisher.mat().determinant());
}

// ---------------------------------------------------------------------------
// Discrete baseline
// ---------------------------------------------------------------------------

struct DiscreteEntry {
  std::string label;
  Model model;
  ParamPoint theta;
};

struct DiscretePrior {
  std::vector<std::string> labels;
  std::vector<double> worths;      // u_j = min_{k != j} KL(f_j || f_k)
  std::vector<double> raw_masses;  // exp(u_j) - 1
  std::vector<double> masses;      // normalized
};

/// Discrete loss-based prior over a finite family of fixed models:
/// mass_j proportional to exp(u_j) - 1 with u_j the smallest KL from model j
/// to any alternative.
inline DiscretePrior discrete_loss_prior(const std::vector<DiscreteEntry>& entries,
                                         const QuadratureOptions& opts = {}) {
  const size_t n = entries.size();
  if (n < 2) throw ContractError("discrete_loss_prior: needs at least 2 models");
  DiscretePrior out;
  out.labels.reserve(n);
  for (const auto& e : entries) out.labels.push_back(e.label);
  out.worths.assign(n, std::numeric_limits<double>::infinity());
  for (size_t j = 0; j < n; ++j) {
    for (size_t k = 0; k < n; ++k) {
      if (k == j) continue;
      const double kl =
          cross_kl(entries[j].model, entries[j].theta, entries[k].model, entries[k].theta, opts);
      if (!std::isfinite(kl)) {
        throw ContractError("discrete_loss_prior: KL(" + entries[j].label + " || " +
                            entries[k].label + ") is not finite");
      }
      out.worths[j] = std::min(out.worths[j], kl);
    }
    if (!(out.worths[j] > 0.0)) {
      throw ContractError("discrete_loss_prior: zero worth for '" + entries[j].label +
                          "' (duplicate models give a degenerate normalization)");
    }
  }
  double total = 0.0;
  out.raw_masses.resize(n);
  for (size_t j = 0; j < n; ++j) {
    out.raw_masses[j] = std::expm1(out.worths[j]);
    total += out.raw_masses[j];
  }
  out.masses.resize(n);
  for (size_t j = 0; j < n; ++j) out.masses[j] = out.raw_masses[j] / total;
  return out;
}

// ---------------------------------------------------------------------------
// Prior grids
// ---------------------------------------------------------------------------

enum class PriorKind { finite_delta, min_eig, jeffreys, discrete };

inline const char* prior_kind_name(PriorKind kind) {
  switch (kind) {
    case PriorKind::finite_delta: return "finite_delta";
    case PriorKind::min_eig: return "min_eig";
    case PriorKind::jeffreys: return "jeffreys";
    case PriorKind::discrete: return "discrete";
  }
  return "?";
}

struct GridMetadata {
  std::string model;
  std::string geometry;
  std::optional<double> delta;
  bool violates_likelihood_principle = false;
  std::vector<std::string> axis_names;
  std::vector<std::string> labels;  // discrete kind only
};

/// Prior density evaluated over a rectangular tensor-product grid. Values
/// are stored row-major with the first axis slowest.
class PriorGrid {
 public:
  PriorGrid(std::vector<std::vector<double>> axes, std::vector<double> values, PriorKind kind,
            GridMetadata metadata, bool normalized = false)
      : axes_(std::move(axes)),
        values_(std::move(values)),
        kind_(kind),
        metadata_(std::move(metadata)),
        normalized_(normalized) {
    size_t expected = 1;
    for (const auto& axis : axes_) expected *= axis.size();
    if (axes_.empty() || expected != values_.size()) {
      throw ShapeError("PriorGrid: axes/value count mismatch");
    }
    for (double v : values_) {
      if (!std::isfinite(v) || v < 0.0) {
        throw ContractError("PriorGrid: values must be finite and nonnegative");
      }
    }
  }

  const std::vector<std::vector<double>>& axes() const { return axes_; }
  const std::vector<double>& values() const { return values_; }
  PriorKind kind() const { return kind_; }
  const GridMetadata& metadata() const { return metadata_; }
  bool normalized() const { return normalized_; }
  size_t size() const { return values_.size(); }
  int rank() const { return static_cast<int>(axes_.size()); }

  /// Coordinates of the flat-index node.
  std::vector<double> node(size_t flat) const {
    std::vector<double> coords(axes_.size());
    for (int i = rank() - 1; i >= 0; --i) {
      const size_t n = axes_[static_cast<size_t>(i)].size();
      coords[static_cast<size_t>(i)] = axes_[static_cast<size_t>(i)][flat % n];
      flat /= n;
    }
    return coords;
  }

  /// Trapezoidal weights for one axis (weight 1 for singleton axes).
  static std::vector<double> trapezoid_weights(const std::vector<double>& axis) {
    const size_t n = axis.size();
    std::vector<double> w(n, 1.0);
    if (n < 2) return w;
    w[0] = 0.5 * (axis[1] - axis[0]);
    w[n - 1] = 0.5 * (axis[n - 1] - axis[n - 2]);
    for (size_t i = 1; i + 1 < n; ++i) w[i] = 0.5 * (axis[i + 1] - axis[i - 1]);
    return w;
  }

  /// Product trapezoid weight of the flat-index cell.
  double cell_weight(size_t flat) const {
    double weight = 1.0;
    for (int i = rank() - 1; i >= 0; --i) {
      const auto& axis = axes_[static_cast<size_t>(i)];
      const auto w = trapezoid_weights(axis);
      weight *= w[flat % axis.size()];
      flat /= axis.size();
    }
    return weight;
  }

  double total_mass() const {
    double total = 0.0;
    for (size_t i = 0; i < values_.size(); ++i) total += values_[i] * cell_weight(i);
    return total;
  }

  /// In-place normalization by trapezoidal cell volumes.
  void normalize() {
    const double total = total_mass();
    if (!(total > 0.0)) {
      throw ContractError("PriorGrid::normalize: total mass is not positive");
    }
    for (double& v : values_) v /= total;
    normalized_ = true;
  }

  double normalization_residual() const { return std::abs(total_mass() - 1.0); }

 private:
  std::vector<std::vector<double>> axes_;
  std::vector<double> values_;
  PriorKind kind_;
  GridMetadata metadata_;
  bool normalized_;
};

struct GridOptions {
  std::optional<double> delta;  // finite_delta kind
  bool normalize = false;
  WorthOptions worth;
};

/// Evaluate the chosen prior kind over a rectangular grid of in-domain
/// nodes. Errors from per-node evaluation are re-raised with the failing
/// node identified.
inline PriorGrid evaluate_prior_grid(const Model& model, const ExclusionGeometry& geometry,
                                     PriorKind kind, std::vector<std::vector<double>> axes,
                                     const GridOptions& options = {}) {
  if (kind == PriorKind::discrete) {
    throw ContractError("evaluate_prior_grid: use discrete_loss_prior for the discrete kind");
  }
  if (static_cast<int>(axes.size()) != model.dim()) {
    throw ShapeError("evaluate_prior_grid: need one axis per model coordinate");
  }
  size_t total = 1;
  for (const auto& axis : axes) {
    if (axis.empty()) throw ContractError("evaluate_prior_grid: empty axis");
    for (size_t i = 1; i < axis.size(); ++i) {
      if (!(axis[i] > axis[i - 1])) {
        throw ContractError("evaluate_prior_grid: axes must be strictly increasing");
      }
    }
    total *= axis.size();
  }
  if (kind == PriorKind::finite_delta && !options.delta) {
    throw ContractError("evaluate_prior_grid: finite_delta requires options.delta");
  }

  std::vector<double> values;
  values.reserve(total);
  for (size_t flat = 0; flat < total; ++flat) {
    Eigen::VectorXd coords(model.dim());
    {
      size_t rem = flat;
      for (int i = model.dim() - 1; i >= 0; --i) {
        const auto& axis = axes[static_cast<size_t>(i)];
        coords[i] = axis[rem % axis.size()];
        rem /= axis.size();
      }
    }
    const ParamPoint theta(coords);
    try {
      switch (kind) {
        case PriorKind::finite_delta: {
          const WorthEstimate worth =
              delta_worth_exact(model, theta, geometry, *options.delta, options.worth);
          values.push_back(loss_prior_density(worth.value));
          break;
        }
        case PriorKind::min_eig:
          values.push_back(min_eig_prior(model, geometry, theta));
          break;
        case PriorKind::jeffreys:
          values.push_back(jeffreys_prior(model, theta));
          break;
        case PriorKind::discrete:
          break;  // unreachable
      }
    } catch (const DomainError& e) {
      throw DomainError("grid node " + theta.str() + ": " + e.what());
    } catch (const NumericsError& e) {
      throw NumericsError("grid node " + theta.str() + ": " + e.what(), e.residual(),
                          e.best_value());
    }
  }

  GridMetadata meta;
  meta.model = model.name();
  meta.geometry = geometry.descriptor();
  meta.delta = kind == PriorKind::finite_delta ? options.delta : std::nullopt;
  meta.violates_likelihood_principle = geometry.violates_likelihood_principle();
  meta.axis_names = model.coord_names();
  PriorGrid grid(std::move(axes), std::move(values), kind, std::move(meta));
  if (options.normalize) grid.normalize();
  return grid;
}

/// Package a discrete prior as a single-axis grid (index axis, labelled
/// metadata) so it shares the serialization path.
inline PriorGrid discrete_prior_grid(const DiscretePrior& prior) {
  std::vector<double> axis(prior.masses.size());
  for (size_t i = 0; i < axis.size(); ++i) axis[i] = static_cast<double>(i);
  GridMetadata meta;
  meta.model = "discrete";
  meta.geometry = "n/a";
  meta.labels = prior.labels;
  meta.axis_names = {"index"};
  return PriorGrid({axis}, prior.masses, PriorKind::discrete, std::move(meta),
                   /*normalized=*/true);
}

}  // namespace lossprior
