#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "lossprior/priors.hpp"
#include "lossprior/worth.hpp"
#include "test_support.hpp"

using namespace lossprior;

namespace {

Model two_dim_normal() { return make_normal_independent({1.0, 0.25}); }

// Independent brute force: minimize KL over a deterministic uniform grid of
// boundary angles (d = 2 only), bypassing the optimizer and the sampler.
double angle_grid_oracle(const Model& model, const ParamPoint& theta,
                         const ExclusionGeometry& geometry, double delta, int n) {
  const SpdMatrix a_inv_sqrt = inv_sqrt_spd(geometry.evaluate(theta));
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    const double angle = 2.0 * M_PI * k / n;
    Eigen::VectorXd v(2);
    v << std::cos(angle), std::sin(angle);
    const Eigen::VectorXd h = delta * (a_inv_sqrt.mat() * v);
    best = std::min(best, kl_divergence(model, theta, theta.shifted(h)));
  }
  return best;
}

}  // namespace

TEST_CASE("1D exact worth: Gaussian shift at delta = 0.1") {
  const Model m = make_normal_mean();
  const WorthEstimate est =
      delta_worth_exact(m, ParamPoint{0.0}, make_euclidean(1), 0.1);
  CHECK(est.value == Catch::Approx(0.005).margin(1e-16));
  CHECK(est.method == WorthMethod::exact);
  CHECK(est.boundary_only);
  // The reported minimizer sits on the exclusion boundary.
  const double constraint = est.argmin_offset.dot(est.argmin_offset);
  CHECK(constraint == Catch::Approx(0.01).epsilon(1e-10));
}

TEST_CASE("2D exact worth against an angle-grid brute force") {
  const Model m = two_dim_normal();
  const ExclusionGeometry euclid = make_euclidean(2);
  const WorthEstimate est = delta_worth_exact(m, ParamPoint{0.0, 0.0}, euclid, 0.1);
  CHECK(est.value == Catch::Approx(0.005).margin(1e-12));
  // The weak direction is the first axis (variance 1 beats variance 1/4).
  CHECK(std::abs(est.argmin_direction[0]) == Catch::Approx(1.0).margin(1e-5));
  CHECK(std::abs(est.argmin_direction[1]) < 1e-5);

  const double brute = angle_grid_oracle(m, ParamPoint{0.0, 0.0}, euclid, 0.1, 10000);
  CHECK(est.value <= brute + 1e-12);
  CHECK(std::abs(est.value - brute) < 1e-6);
}

TEST_CASE("worth vanishes as delta -> 0") {
  const std::vector<std::pair<Model, ParamPoint>> cases = {
      {make_bernoulli(), ParamPoint{0.5}},
      {make_poisson(), ParamPoint{3.0}},
      {two_dim_normal(), ParamPoint{0.0, 0.0}},
  };
  for (const auto& [model, theta] : cases) {
    const ExclusionGeometry geom = make_euclidean(model.dim());
    const double tiny = delta_worth_exact(model, theta, geom, 1e-6).value;
    INFO(model.name());
    CHECK(tiny < 1e-9);
    CHECK(tiny >= 0.0);
  }
}

TEST_CASE("exact/oracle minimizers satisfy the boundary constraint") {
  Eigen::VectorXd w(2);
  w << 1.0, 7.0;
  const std::vector<std::pair<Model, ExclusionGeometry>> cases = {
      {make_normal_mu_var(), make_block(w)},
      {two_dim_normal(), make_euclidean(2)},
      {make_normal_mu_sigma(), make_fisher_isotropic(make_normal_mu_sigma())},
  };
  const ParamPoint theta{0.0, 1.0};
  for (const auto& [model, geom] : cases) {
    for (double delta : {0.05, 0.01}) {
      const SpdMatrix a = geom.evaluate(theta);
      const WorthEstimate exact = delta_worth_exact(model, theta, geom, delta);
      const double c_exact = exact.argmin_offset.dot(a.mat() * exact.argmin_offset);
      INFO(model.name() << " " << geom.descriptor() << " delta " << delta);
      CHECK(std::abs(c_exact - delta * delta) <= 1e-10 * delta * delta);

      const WorthEstimate oracle = delta_worth_oracle(model, theta, geom, delta, 200, 5);
      const double c_oracle = oracle.argmin_offset.dot(a.mat() * oracle.argmin_offset);
      CHECK(std::abs(c_oracle - delta * delta) <= 1e-10 * delta * delta);
    }
  }
}

TEST_CASE("oracle enumerates the 1D boundary and upper-bounds the exact worth") {
  const Model m = make_normal_mean();
  const ExclusionGeometry euclid = make_euclidean(1);
  const WorthEstimate oracle = delta_worth_oracle(m, ParamPoint{0.0}, euclid, 0.1, 100, 1);
  CHECK(std::abs(oracle.value - 0.005) < 1e-12);
  CHECK_THROWS_AS(delta_worth_oracle(m, ParamPoint{0.0}, euclid, 0.1, 99, 1), ContractError);

  const Model m2 = two_dim_normal();
  const ExclusionGeometry euclid2 = make_euclidean(2);
  const WorthEstimate o2 = delta_worth_oracle(m2, ParamPoint{0.0, 0.0}, euclid2, 0.1, 10000, 3);
  CHECK(std::abs(o2.value - 0.005) < 1e-6);

  // Sandwich plus monotone refinement under nested seeds.
  const WorthEstimate exact = delta_worth_exact(m2, ParamPoint{0.0, 0.0}, euclid2, 0.1);
  CHECK(o2.value >= exact.value - 1e-9);
  const double coarse = delta_worth_oracle(m2, ParamPoint{0.0, 0.0}, euclid2, 0.1, 100, 3).value;
  const double mid = delta_worth_oracle(m2, ParamPoint{0.0, 0.0}, euclid2, 0.1, 1000, 3).value;
  CHECK(coarse >= mid);
  CHECK(mid >= o2.value);
}

TEST_CASE("worth is monotone non-decreasing in delta") {
  const std::vector<std::pair<Model, ParamPoint>> cases = {
      {make_bernoulli(), ParamPoint{0.45}},
      {make_normal_mu_var(), ParamPoint{0.0, 1.0}},
      {make_bivariate_normal_corr(), ParamPoint{0.2}},
  };
  for (const auto& [model, theta] : cases) {
    const ExclusionGeometry geom = make_euclidean(model.dim());
    double previous = 0.0;
    for (double delta : {0.01, 0.02, 0.05, 0.1, 0.2}) {
      const double value = delta_worth_exact(model, theta, geom, delta).value;
      INFO(model.name() << " delta " << delta);
      CHECK(value >= previous - 1e-12);
      previous = value;
    }
  }
}

TEST_CASE("1D worth matches half I(theta) delta^2 (small delta)") {
  const std::vector<std::pair<Model, ParamPoint>> cases = {
      {make_normal_mean(), ParamPoint{0.0}},
      {make_bernoulli(), ParamPoint{0.5}},
      {make_poisson(), ParamPoint{3.0}},
  };
  for (const auto& [model, theta] : cases) {
    const double info = fisher_information(model, theta)(0, 0);
    const double delta = 1e-2;
    const double exact = delta_worth_exact(model, theta, make_euclidean(1), delta).value;
    const double quadratic_law = 0.5 * info * delta * delta;
    INFO(model.name());
    CHECK(std::abs(exact / quadratic_law - 1.0) < 0.02);
  }
}

TEST_CASE("asymptotic worth: fixed values and exact scaling") {
  Eigen::MatrixXd one(1, 1);
  one << 1.0;
  const SpdMatrix i1(one), a1(one);
  CHECK(delta_worth_asymptotic(i1, a1, 0.1).value == Catch::Approx(0.005).margin(1e-18));

  Eigen::VectorXd id(2), ad(2);
  id << 1.0, 0.5;
  ad << 1.0, 4.0;
  const SpdMatrix i2 = SpdMatrix::diagonal(id), a2 = SpdMatrix::diagonal(ad);
  CHECK(delta_worth_asymptotic(i2, a2, 0.1).value == Catch::Approx(6.25e-4).margin(1e-18));

  // Power-of-two rescaling is exact in floating point.
  const double base = delta_worth_asymptotic(i2, a2, 0.013).value;
  CHECK(delta_worth_asymptotic(i2, a2, 2.0 * 0.013).value == 4.0 * base);

  CHECK_THROWS_AS(delta_worth_asymptotic(i2, a1, 0.1), ShapeError);
  CHECK_THROWS_AS(delta_worth_asymptotic(i2, a2, 0.0), ContractError);
}

TEST_CASE("convergence sweep contracts") {
  const Model m = make_normal_mean();
  const ExclusionGeometry geom = make_euclidean(1);
  CHECK(convergence_sweep(m, ParamPoint{0.0}, geom, {}).empty());
  CHECK_THROWS_AS(convergence_sweep(m, ParamPoint{0.0}, geom, {0.01, 0.1}), ContractError);
  CHECK_THROWS_AS(convergence_sweep(m, ParamPoint{0.0}, geom, {0.1, -0.01}), ContractError);

  const auto rows = convergence_sweep(m, ParamPoint{0.0}, geom, {0.1, 0.01});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].ratio == Catch::Approx(1.0).margin(1e-12));
  CHECK(rows[1].ratio == Catch::Approx(1.0).margin(1e-12));

  const auto bern =
      convergence_sweep(make_bernoulli(), ParamPoint{0.5}, geom, {0.1, 0.01, 0.001});
  REQUIRE(bern.size() == 3);
  CHECK(std::abs(bern.back().ratio - 1.0) < 0.01);
}

TEST_CASE("asymptotic worth ratio nears 1 at delta = 1e-3 across built-ins") {
  const std::vector<std::pair<Model, ParamPoint>> cases = {
      {make_normal_mu_var(), ParamPoint{0.0, 1.0}},
      {make_normal_mu_prec(), ParamPoint{0.0, 1.0}},
      {make_normal_mu_sigma(), ParamPoint{0.0, 1.0}},
      {make_bernoulli(), ParamPoint{0.4}},
      {make_poisson(), ParamPoint{2.0}},
      {make_bivariate_normal_corr(), ParamPoint{0.3}},
      {make_logistic_regression(default_logistic_design(6, 2, 777)), ParamPoint{0.3, -0.2}},
  };
  for (const auto& [model, theta] : cases) {
    const ExclusionGeometry geom = make_euclidean(model.dim());
    const auto rows = convergence_sweep(model, theta, geom, {1e-2, 1e-3});
    INFO(model.name());
    CHECK(std::abs(rows.back().ratio - 1.0) < 0.01);
  }
}

TEST_CASE("boundary leaving the domain raises DomainError, never clips") {
  CHECK_THROWS_AS(
      delta_worth_exact(make_bernoulli(), ParamPoint{0.05}, make_euclidean(1), 0.1),
      DomainError);
  CHECK_THROWS_AS(
      delta_worth_oracle(make_bernoulli(), ParamPoint{0.05}, make_euclidean(1), 0.1, 100, 1),
      DomainError);
}

TEST_CASE("exterior audit keeps the boundary minimum for convex losses") {
  // For these models KL grows with the exclusion radius, so the boundary
  // value should stand and stay flagged boundary_only.
  const WorthEstimate est =
      delta_worth_exact(make_normal_mu_var(), ParamPoint{0.0, 1.0}, make_euclidean(2), 0.2);
  CHECK(est.boundary_only);
  CHECK(est.convergence_ratio.has_value());
}

namespace {

// Synthetic d = 1 model whose loss dips below the boundary value outside the
// exclusion region: g(h) = 0.5 h^2 (0.1 + 0.9 cos^2(pi h / 0.2)), so the
// radius-0.1 shell is much cheaper than the radius-0.05 boundary.
Model rippled_loss_model() {
  Model::Spec spec;
  spec.name = "rippled_loss";
  spec.coord_names = {"x"};
  spec.domain = Domain::unbounded(1);
  spec.observation_space = ObservationSpace::real_line;
  spec.closed_form_kl = [](const ParamPoint& a, const ParamPoint& b) {
    const double h = b[0] - a[0];
    const double c = std::cos(M_PI * h / 0.2);
    return 0.5 * h * h * (0.1 + 0.9 * c * c);
  };
  spec.analytic_fisher = [](const ParamPoint&) {
    return SpdMatrix(Eigen::MatrixXd::Identity(1, 1));
  };
  spec.log_density = [](const ParamPoint&, const Observation&) { return 0.0; };
  spec.draw = [](const ParamPoint&, Rng&) { return Observation::Zero(1).eval(); };
  return Model(std::move(spec));
}

}  // namespace

TEST_CASE("exterior audit reports a cheaper off-boundary alternative") {
  const Model m = rippled_loss_model();
  const double delta = 0.05;
  const WorthEstimate est = delta_worth_exact(m, ParamPoint{0.0}, make_euclidean(1), delta);
  const double boundary_value = m.closed_form_kl(ParamPoint{0.0}, ParamPoint{delta});
  CHECK_FALSE(est.boundary_only);
  CHECK(est.value < boundary_value);
  // The winning offset sits outside the exclusion region.
  CHECK(std::abs(est.argmin_offset[0]) > delta);
}

TEST_CASE("3D worth: optimizer matches the oracle and the asymptotic law") {
  const Model m = make_normal_independent({1.0, 0.25, 4.0});
  Eigen::VectorXd w(3);
  w << 1.0, 2.0, 0.5;
  const ExclusionGeometry block = make_block(w);
  const ParamPoint theta{0.1, -0.2, 0.3};
  const double delta = 0.05;

  // Exactly quadratic KL: the worth equals the min-eigenvalue formula.
  const WorthEstimate exact = delta_worth_exact(m, theta, block, delta);
  const double asym =
      delta_worth_asymptotic(fisher_information(m, theta), block.evaluate(theta), delta).value;
  CHECK(exact.value == Catch::Approx(asym).epsilon(1e-10));

  const WorthEstimate oracle = delta_worth_oracle(m, theta, block, delta, 20000, 9);
  CHECK(oracle.value >= exact.value - 1e-12);
  CHECK(std::abs(oracle.value - exact.value) < 1e-5);
}

TEST_CASE("identical inputs and seeds reproduce identical estimates") {
  const Model m = two_dim_normal();
  Eigen::VectorXd w(2);
  w << 1.0, 3.0;
  const ExclusionGeometry block = make_block(w);
  const ParamPoint theta{0.2, -0.4};

  const WorthEstimate a = delta_worth_exact(m, theta, block, 0.03);
  const WorthEstimate b = delta_worth_exact(m, theta, block, 0.03);
  CHECK(a.value == b.value);
  CHECK(a.argmin_offset == b.argmin_offset);

  const WorthEstimate oa = delta_worth_oracle(m, theta, block, 0.03, 500, 17);
  const WorthEstimate ob = delta_worth_oracle(m, theta, block, 0.03, 500, 17);
  CHECK(oa.value == ob.value);
  CHECK(oa.argmin_offset == ob.argmin_offset);
}
