#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lossprior/quadrature.hpp"

using namespace lossprior;

TEST_CASE("Gauss-Legendre rule integrates high-degree polynomials exactly") {
  const QuadratureRule rule = gauss_legendre_rule(20);
  double weight_sum = 0.0;
  for (double w : rule.weights) weight_sum += w;
  CHECK(std::abs(weight_sum - 2.0) < 1e-14);

  // n-point Gauss-Legendre is exact through degree 2n - 1.
  double integral = 0.0;
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    integral += rule.weights[i] * std::pow(rule.nodes[i], 38);
  }
  CHECK(std::abs(integral - 2.0 / 39.0) < 1e-14);
}

TEST_CASE("adaptive quadrature on bounded intervals") {
  auto f = [](double x) { return std::exp(-x); };
  const QuadratureResult r = integrate_adaptive(f, 0.0, 10.0);
  CHECK(std::abs(r.value - (1.0 - std::exp(-10.0))) < 1e-10);
}

TEST_CASE("real-line transform integrates Gaussian moments") {
  auto density = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); };
  CHECK(std::abs(integrate_real_line(density).value - 1.0) < 1e-9);
  auto second_moment = [&](double x) { return x * x * density(x); };
  CHECK(std::abs(integrate_real_line(second_moment).value - 1.0) < 1e-9);
}

TEST_CASE("positive-reals transform integrates exponential density") {
  auto density = [](double x) { return std::exp(-x); };
  CHECK(std::abs(integrate_positive_reals(density).value - 1.0) < 1e-9);
}

TEST_CASE("plane transform integrates a correlated Gaussian") {
  const double rho = 0.5;
  auto density = [rho](double x, double y) {
    const double det = 1.0 - rho * rho;
    const double quad = x * x - 2.0 * rho * x * y + y * y;
    return std::exp(-0.5 * quad / det) / (2.0 * M_PI * std::sqrt(det));
  };
  CHECK(std::abs(integrate_real_plane(density).value - 1.0) < 1e-8);
}

TEST_CASE("segment budget exhaustion raises NumericsError with a residual") {
  auto spike = [](double x) { return 1.0 / std::sqrt(std::abs(x) + 1e-14); };
  QuadratureOptions opts;
  opts.max_segments = 40;
  CHECK_THROWS_AS(integrate_adaptive(spike, -1.0, 1.0, opts), NumericsError);
  try {
    integrate_adaptive(spike, -1.0, 1.0, opts);
  } catch (const NumericsError& e) {
    REQUIRE(e.residual().has_value());
    CHECK(*e.residual() > 0.0);
  }
}
