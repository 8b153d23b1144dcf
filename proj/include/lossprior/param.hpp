#pragma once

#include <Eigen/Core>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lossprior/errors.hpp"

namespace lossprior {

/// Evaluation margin from any open domain boundary. KL/Fisher/worth
/// evaluations require points at least this far from the boundary;
/// sampling only requires strict membership.
inline constexpr double kDomainMargin = 1e-8;

/// A point in a continuous parameter space, d >= 1, all coordinates finite.
class ParamPoint {
 public:
  explicit ParamPoint(Eigen::VectorXd coords) : coords_(std::move(coords)) {
    if (coords_.size() < 1) throw ContractError("ParamPoint: dimension must be >= 1");
    for (Eigen::Index i = 0; i < coords_.size(); ++i) {
      if (!std::isfinite(coords_[i])) {
        throw ContractError("ParamPoint: coordinate " + std::to_string(i) + " is not finite");
      }
    }
  }

  ParamPoint(std::initializer_list<double> values)
      : ParamPoint(Eigen::Map<const Eigen::VectorXd>(values.begin(),
                                                     static_cast<Eigen::Index>(values.size()))) {}

  int dim() const { return static_cast<int>(coords_.size()); }
  double operator[](int i) const { return coords_[i]; }
  const Eigen::VectorXd& coords() const { return coords_; }

  ParamPoint shifted(const Eigen::VectorXd& h) const {
    if (h.size() != coords_.size()) throw ShapeError("ParamPoint::shifted: dimension mismatch");
    return ParamPoint(coords_ + h);
  }

  std::string str() const {
    std::ostringstream os;
    os << "(";
    for (int i = 0; i < dim(); ++i) os << (i ? ", " : "") << coords_[i];
    os << ")";
    return os.str();
  }

 private:
  Eigen::VectorXd coords_;
};

/// Open interval, possibly unbounded on either side.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

/// Product of open per-coordinate intervals.
class Domain {
 public:
  explicit Domain(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
    if (intervals_.empty()) throw ContractError("Domain: dimension must be >= 1");
    for (const auto& iv : intervals_) {
      if (!(iv.lo < iv.hi)) throw ContractError("Domain: empty interval");
    }
  }

  static Domain unbounded(int dim) {
    return Domain(std::vector<Interval>(static_cast<size_t>(dim), Interval{}));
  }

  int dim() const { return static_cast<int>(intervals_.size()); }
  const Interval& interval(int i) const { return intervals_[static_cast<size_t>(i)]; }

  bool contains(const ParamPoint& p) const { return contains_with_margin(p, 0.0); }

  bool contains_with_margin(const ParamPoint& p, double margin = kDomainMargin) const {
    if (p.dim() != dim()) return false;
    for (int i = 0; i < dim(); ++i) {
      const auto& iv = intervals_[static_cast<size_t>(i)];
      const double x = p[i];
      if (!(x > iv.lo && x < iv.hi)) return false;
      if (std::isfinite(iv.lo) && x - iv.lo < margin) return false;
      if (std::isfinite(iv.hi) && iv.hi - x < margin) return false;
    }
    return true;
  }

 private:
  std::vector<Interval> intervals_;
};

}  // namespace lossprior
