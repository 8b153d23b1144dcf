#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>

namespace lossprior {

/// Deterministic random primitives. All stochastic paths in the toolkit
/// draw through these, so identical seeds reproduce identical streams on
/// any platform (mt19937_64 plus fully specified transforms).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() {
    // 53-bit mantissa in [0, 1).
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Box-Muller; consumes exactly two uniforms per draw.
  double standard_normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Eigen::VectorXd normal_vector(int dim) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = standard_normal();
    return v;
  }

  Eigen::VectorXd unit_sphere(int dim) {
    while (true) {
      Eigen::VectorXd v = normal_vector(dim);
      const double norm = v.norm();
      if (norm > 1e-12) return v / norm;
    }
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lossprior
