#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "lossprior/fisher.hpp"
#include "lossprior/model.hpp"
#include "test_support.hpp"

using namespace lossprior;
using lossprior::testing::rel_diff;

namespace {

struct ModelFixture {
  Model model;
  Eigen::VectorXd lo;  // per-coordinate sampling range for test points
  Eigen::VectorXd hi;
};

Eigen::VectorXd vec(std::initializer_list<double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.begin(), static_cast<Eigen::Index>(v.size()));
}

std::vector<ModelFixture> fixtures() {
  std::vector<ModelFixture> out;
  out.push_back({make_normal_mean(), vec({-2.0}), vec({2.0})});
  out.push_back({make_normal_mu_var(), vec({-2.0, 0.4}), vec({2.0, 3.0})});
  out.push_back({make_normal_mu_prec(), vec({-2.0, 0.4}), vec({2.0, 3.0})});
  out.push_back({make_normal_mu_sigma(), vec({-2.0, 0.5}), vec({2.0, 2.5})});
  out.push_back({make_bernoulli(), vec({0.15}), vec({0.85})});
  out.push_back({make_poisson(), vec({0.5}), vec({6.0})});
  out.push_back({make_logistic_regression(default_logistic_design(6, 2, 777)),
                 vec({-1.5, -1.5}), vec({1.5, 1.5})});
  out.push_back({make_bivariate_normal_corr(), vec({-0.85}), vec({0.85})});
  return out;
}

ParamPoint random_point(const ModelFixture& fx, Rng& rng) {
  Eigen::VectorXd coords(fx.lo.size());
  for (Eigen::Index i = 0; i < coords.size(); ++i) {
    coords[i] = fx.lo[i] + (fx.hi[i] - fx.lo[i]) * rng.uniform01();
  }
  return ParamPoint(coords);
}

}  // namespace

TEST_CASE("Gaussian shift KL identity") {
  const Model m = make_normal_mean();
  CHECK(kl_divergence(m, ParamPoint{0.0}, ParamPoint{1.0}) == Catch::Approx(0.5).margin(1e-15));

  // Monte Carlo cross-check of the closed form.
  const MonteCarloKl mc = kl_monte_carlo(m, ParamPoint{0.0}, ParamPoint{1.0}, 1000000, 99);
  CHECK(std::abs(mc.estimate - 0.5) < 5e-3);
  CHECK(mc.seed == 99);
}

TEST_CASE("KL is zero at identical parameters") {
  Rng rng(11);
  for (const auto& fx : fixtures()) {
    const ParamPoint theta = random_point(fx, rng);
    CHECK(kl_divergence(fx.model, theta, theta) == 0.0);
  }
}

TEST_CASE("Bernoulli KL against the direct two-term sum") {
  const Model m = make_bernoulli();
  const double expected = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  CHECK(kl_divergence(m, ParamPoint{0.5}, ParamPoint{0.25}) ==
        Catch::Approx(expected).margin(1e-15));
  CHECK(expected == Catch::Approx(0.143841).margin(5e-7));
}

TEST_CASE("Poisson KL closed form") {
  const Model m = make_poisson();
  CHECK(kl_divergence(m, ParamPoint{1.0}, ParamPoint{2.0}) ==
        Catch::Approx(1.0 - std::log(2.0)).margin(1e-15));
}

TEST_CASE("closed-form KL agrees with the numeric path on 20 pairs per model") {
  for (const auto& fx : fixtures()) {
    Rng rng(1000 + fx.model.dim());
    double worst = 0.0;
    for (int pair = 0; pair < 20; ++pair) {
      const ParamPoint a = random_point(fx, rng);
      const ParamPoint b = random_point(fx, rng);
      const double closed = kl_divergence(fx.model, a, b);
      const double numeric = kl_numeric(fx.model, a, b);
      worst = std::max(worst, std::abs(closed - numeric));
    }
    INFO(fx.model.name());
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("KL nonnegativity with equality only at identical points") {
  Rng rng(12);
  for (const auto& fx : fixtures()) {
    for (int trial = 0; trial < 40; ++trial) {
      const ParamPoint a = random_point(fx, rng);
      const ParamPoint b = random_point(fx, rng);
      const double kl = kl_divergence(fx.model, a, b);
      CHECK(kl >= 0.0);
      if ((a.coords() - b.coords()).norm() > 1e-3) {
        INFO(fx.model.name());
        CHECK(kl > 0.0);
      }
    }
  }
}

TEST_CASE("KL is locally quadratic: residual ratio drops by at least 5x") {
  Rng rng(13);
  for (const auto& fx : fixtures()) {
    for (int trial = 0; trial < 2; ++trial) {
      // Stay central so that h-balls remain inside the sampling box.
      Eigen::VectorXd coords = 0.5 * (fx.lo + fx.hi);
      if (trial == 1) coords += 0.1 * (fx.hi - fx.lo).cwiseProduct(rng.normal_vector(fx.model.dim()).cwiseMin(1.0).cwiseMax(-1.0));
      const ParamPoint theta(coords);
      const Eigen::VectorXd direction = rng.unit_sphere(fx.model.dim());
      auto ratio = [&](double scale) {
        const Eigen::VectorXd h = scale * direction;
        return std::abs(expansion_residual(fx.model, theta, h)) / (scale * scale);
      };
      INFO(fx.model.name());
      // Exactly quadratic families leave both ratios at rounding noise
      // (~1e-15); below 1e-12 the residual counts as numerically zero.
      CHECK(ratio(1e-3) <= std::max(ratio(1e-2) / 5.0, 1e-12));
    }
  }
}

TEST_CASE("sampling is deterministic under a fixed seed") {
  const Model m = make_normal_mean();
  const auto first = sample(m, ParamPoint{0.0}, 3, 7);
  const auto second = sample(m, ParamPoint{0.0}, 3, 7);
  REQUIRE(first.size() == 3);
  for (size_t i = 0; i < first.size(); ++i) CHECK(first[i] == second[i]);
}

TEST_CASE("sampler moments: Bernoulli and Poisson means") {
  const auto bern = sample(make_bernoulli(), ParamPoint{0.5}, 1000000, 1);
  double mean = 0.0;
  for (const auto& x : bern) mean += x[0];
  mean /= static_cast<double>(bern.size());
  CHECK(std::abs(mean - 0.5) < 0.002);

  const auto pois = sample(make_poisson(), ParamPoint{3.0}, 1000000, 1);
  mean = 0.0;
  for (const auto& x : pois) mean += x[0];
  mean /= static_cast<double>(pois.size());
  CHECK(std::abs(mean - 3.0) < 0.01);
}

TEST_CASE("sampling needs strict membership only; evaluation needs the margin") {
  const Model m = make_bernoulli();
  CHECK_NOTHROW(sample(m, ParamPoint{1e-9}, 1, 5));
  CHECK_THROWS_AS(sample(m, ParamPoint{-0.1}, 1, 5), DomainError);
  CHECK_THROWS_AS(kl_divergence(m, ParamPoint{1e-9}, ParamPoint{0.5}), DomainError);

  const Model nv = make_normal_mu_var();
  CHECK_THROWS_AS(kl_divergence(nv, ParamPoint{0.0, -1.0}, ParamPoint{0.0, 1.0}), DomainError);
}

TEST_CASE("densities are normalized over their observation spaces") {
  Rng rng(14);
  for (const auto& fx : fixtures()) {
    const ParamPoint theta = random_point(fx, rng);
    INFO(fx.model.name());
    CHECK(std::abs(density_normalization(fx.model, theta) - 1.0) < 1e-6);
  }
}

TEST_CASE("cross-family KL falls back to quadrature") {
  // Same family routes through the closed form.
  CHECK(cross_kl(make_poisson(), ParamPoint{1.0}, make_poisson(), ParamPoint{2.0}) ==
        Catch::Approx(1.0 - std::log(2.0)).margin(1e-14));

  // Distinct families over the same observation space go numeric.
  const double kl = cross_kl(make_normal_mean(), ParamPoint{0.0}, make_normal_mu_var(),
                             ParamPoint{0.0, 2.0});
  const double expected = 0.5 * (std::log(2.0) + 0.5 - 1.0);  // N(0,1) vs N(0,2)
  CHECK(kl == Catch::Approx(expected).margin(1e-8));

  CHECK_THROWS_AS(cross_kl(make_poisson(), ParamPoint{1.0}, make_normal_mean(), ParamPoint{0.0}),
                  ContractError);

  // Same family name but different designs must not reuse one closed form.
  const Model logit_a = make_logistic_regression(default_logistic_design(4, 2, 1));
  const Model logit_b = make_logistic_regression(default_logistic_design(4, 2, 2));
  const ParamPoint beta{0.3, -0.2};
  const double cross = cross_kl(logit_a, beta, logit_b, beta);
  CHECK(cross > 0.0);  // distinct designs give distinct outcome laws
  CHECK(cross_kl(logit_a, beta, logit_a, beta) == 0.0);
}

namespace {

// Copy of the shift model without its closed form, to exercise dispatch.
Model shift_model_with_mode(KlMode mode) {
  const Model base = make_normal_mean();
  Model::Spec spec;
  spec.name = "shift_numeric";
  spec.coord_names = base.coord_names();
  spec.domain = base.domain();
  spec.observation_space = base.observation_space();
  spec.kl_mode = mode;
  spec.log_density = [base](const ParamPoint& t, const Observation& x) {
    return base.log_density(t, x);
  };
  spec.draw = [base](const ParamPoint& t, Rng& rng) { return base.draw(t, rng); };
  spec.mc_draws = 400000;
  spec.mc_seed = 11;
  return Model(std::move(spec));
}

}  // namespace

TEST_CASE("KL mode dispatch without a closed form") {
  const Model quad = shift_model_with_mode(KlMode::quadrature);
  CHECK(kl_divergence(quad, ParamPoint{0.0}, ParamPoint{1.0}) ==
        Catch::Approx(0.5).margin(1e-9));

  const Model mc = shift_model_with_mode(KlMode::monte_carlo);
  CHECK(kl_divergence(mc, ParamPoint{0.0}, ParamPoint{1.0}) ==
        Catch::Approx(0.5).margin(0.01));

  CHECK_THROWS_AS(shift_model_with_mode(KlMode::closed_form), ContractError);
}

TEST_CASE("model lookup by name") {
  CHECK(model_by_name("poisson").name() == "poisson");
  CHECK(model_by_name("normal_independent:1,0.25").dim() == 2);
  CHECK_THROWS_AS(model_by_name("no_such_model"), ContractError);
  CHECK_THROWS_AS(model_by_name("logistic_regression"), ContractError);
}
