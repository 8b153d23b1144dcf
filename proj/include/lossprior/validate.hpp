#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lossprior/axes.hpp"
#include "lossprior/io.hpp"
#include "lossprior/scenarios.hpp"

namespace lossprior {

struct ValidationOptions {
  std::uint64_t seed = 96111;
  bool inject_fisher_fault = false;  // test fixture: wrong analytic Fisher constant
};

struct ValidationCheck {
  std::string suite;
  std::string name;
  CheckStatus status = CheckStatus::pass;
  std::map<std::string, double> values;
  std::string message;
};

struct ValidationReport {
  json config = json::object();
  std::vector<ValidationCheck> checks;

  bool passed() const {
    for (const auto& c : checks) {
      if (c.status == CheckStatus::fail) return false;
    }
    return true;
  }

  json to_json() const {
    json list = json::array();
    for (const auto& c : checks) {
      json values = json::object();
      for (const auto& [key, value] : c.values) values[key] = value;
      json entry{{"suite", c.suite},
                 {"name", c.name},
                 {"status", check_status_name(c.status)},
                 {"values", values}};
      if (!c.message.empty()) entry["message"] = c.message;
      list.push_back(entry);
    }
    return json{{"config", config}, {"checks", list}, {"passed", passed()}};
  }

  std::string summary() const {
    std::map<std::string, std::array<int, 3>> per_suite;  // pass, fail, discrepancy
    for (const auto& c : checks) {
      auto& counts = per_suite[c.suite];
      if (c.status == CheckStatus::pass) ++counts[0];
      if (c.status == CheckStatus::fail) ++counts[1];
      if (c.status == CheckStatus::paper_discrepancy) ++counts[2];
    }
    std::ostringstream out;
    for (const auto& [suite, counts] : per_suite) {
      out << suite << ": " << counts[0] << " pass, " << counts[1] << " fail, " << counts[2]
          << " paper_discrepancy\n";
    }
    for (const auto& c : checks) {
      if (c.status == CheckStatus::fail) {
        out << "FAIL " << c.suite << "/" << c.name;
        if (!c.message.empty()) out << ": " << c.message;
        out << "\n";
      }
    }
    out << (passed() ? "validation passed" : "validation FAILED") << "\n";
    return out.str();
  }
};

namespace detail {

struct ValidationFixture {
  Model model;
  std::vector<ParamPoint> points;  // interior, continuity-safe
  Eigen::VectorXd pair_lo;         // seeded-pair sampling box
  Eigen::VectorXd pair_hi;
};

inline Eigen::VectorXd fixture_vec(std::initializer_list<double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.begin(), static_cast<Eigen::Index>(v.size()));
}

/// Clone of the (mu, v) normal with a deliberately wrong analytic Fisher
/// constant; exists only so the validation suite can prove it would catch
/// such a defect.
inline Model tampered_normal_mu_var() {
  const Model base = make_normal_mu_var();
  Model::Spec spec;
  spec.name = base.name();
  spec.coord_names = base.coord_names();
  spec.domain = base.domain();
  spec.observation_space = base.observation_space();
  spec.log_density = [base](const ParamPoint& t, const Observation& x) {
    return base.log_density(t, x);
  };
  spec.closed_form_kl = [base](const ParamPoint& a, const ParamPoint& b) {
    return base.closed_form_kl(a, b);
  };
  spec.analytic_fisher = [base](const ParamPoint& t) {
    return SpdMatrix((1.5 * base.analytic_fisher(t).mat()).eval());
  };
  spec.draw = [base](const ParamPoint& t, Rng& rng) { return base.draw(t, rng); };
  return Model(std::move(spec));
}

inline std::vector<ValidationFixture> validation_fixtures() {
  const Eigen::MatrixXd design = default_logistic_design(6, 2, 777);
  std::vector<ValidationFixture> out;
  out.push_back({make_normal_mean(),
                 {ParamPoint{0.0}, ParamPoint{1.3}, ParamPoint{-2.0}},
                 fixture_vec({-2.0}), fixture_vec({2.0})});
  out.push_back({make_normal_mu_var(),
                 {ParamPoint{0.0, 1.0}, ParamPoint{0.5, 2.0}, ParamPoint{-1.0, 0.7}},
                 fixture_vec({-2.0, 0.4}), fixture_vec({2.0, 3.0})});
  out.push_back({make_normal_mu_prec(),
                 {ParamPoint{0.0, 1.0}, ParamPoint{0.5, 2.0}, ParamPoint{-1.0, 0.7}},
                 fixture_vec({-2.0, 0.4}), fixture_vec({2.0, 3.0})});
  out.push_back({make_normal_mu_sigma(),
                 {ParamPoint{0.0, 1.0}, ParamPoint{0.5, 1.5}, ParamPoint{-1.0, 0.8}},
                 fixture_vec({-2.0, 0.5}), fixture_vec({2.0, 2.5})});
  out.push_back({make_bernoulli(),
                 {ParamPoint{0.5}, ParamPoint{0.35}, ParamPoint{0.65}},
                 fixture_vec({0.15}), fixture_vec({0.85})});
  out.push_back({make_poisson(),
                 {ParamPoint{1.0}, ParamPoint{3.0}, ParamPoint{0.8}},
                 fixture_vec({0.5}), fixture_vec({6.0})});
  out.push_back({make_logistic_regression(design),
                 {ParamPoint{0.0, 0.0}, ParamPoint{0.5, -0.5}, ParamPoint{-1.0, 0.3}},
                 fixture_vec({-1.5, -1.5}), fixture_vec({1.5, 1.5})});
  out.push_back({make_bivariate_normal_corr(),
                 {ParamPoint{0.0}, ParamPoint{0.3}, ParamPoint{-0.5}},
                 fixture_vec({-0.85}), fixture_vec({0.85})});
  return out;
}

inline ParamPoint seeded_point(const ValidationFixture& fx, Rng& rng) {
  Eigen::VectorXd coords(fx.pair_lo.size());
  for (Eigen::Index i = 0; i < coords.size(); ++i) {
    coords[i] = fx.pair_lo[i] + (fx.pair_hi[i] - fx.pair_lo[i]) * rng.uniform01();
  }
  return ParamPoint(coords);
}

}  // namespace detail

/// The full invariant suite behind the `validate` command. Everything is
/// seeded; identical options produce identical reports.
inline ValidationReport run_validation(const ValidationOptions& options = {}) {
  ValidationReport report;
  report.config = json{{"seed", options.seed},
                       {"inject_fisher_fault", options.inject_fisher_fault}};
  const auto fixtures = detail::validation_fixtures();

  auto add = [&report](std::string suite, std::string name, bool ok,
                       std::map<std::string, double> values, std::string message = "") {
    report.checks.push_back({std::move(suite), std::move(name),
                             ok ? CheckStatus::pass : CheckStatus::fail, std::move(values),
                             std::move(message)});
  };

  // -------------------------------------------------------------- model_zoo
  for (const auto& fx : fixtures) {
    Rng rng(options.seed ^ 0x11u);
    double worst = 0.0;
    for (int pair = 0; pair < 20; ++pair) {
      const ParamPoint a = detail::seeded_point(fx, rng);
      const ParamPoint b = detail::seeded_point(fx, rng);
      worst = std::max(worst, std::abs(kl_divergence(fx.model, a, b) -
                                       kl_numeric(fx.model, a, b)));
    }
    add("model_zoo", "closed_vs_numeric_kl/" + fx.model.name(), worst <= 1e-6,
        {{"max_abs_difference", worst}, {"tolerance", 1e-6}});
  }
  for (const auto& fx : fixtures) {
    Rng rng(options.seed ^ 0x12u);
    double worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
      const ParamPoint theta = detail::seeded_point(fx, rng);
      worst = std::max(worst, std::abs(density_normalization(fx.model, theta) - 1.0));
    }
    add("model_zoo", "normalization/" + fx.model.name(), worst <= 1e-6,
        {{"max_abs_deviation", worst}});
  }
  for (const auto& fx : fixtures) {
    Rng rng(options.seed ^ 0x13u);
    double lowest = std::numeric_limits<double>::infinity();
    double at_identity = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
      const ParamPoint a = detail::seeded_point(fx, rng);
      const ParamPoint b = detail::seeded_point(fx, rng);
      lowest = std::min(lowest, kl_divergence(fx.model, a, b));
      at_identity = std::max(at_identity, std::abs(kl_divergence(fx.model, a, a)));
    }
    add("model_zoo", "kl_nonnegative/" + fx.model.name(),
        lowest >= 0.0 && at_identity == 0.0,
        {{"min_kl", lowest}, {"max_kl_at_identity", at_identity}});
  }
  for (const auto& fx : fixtures) {
    Rng rng(options.seed ^ 0x14u);
    bool ok = true;
    double worst_ratio = 0.0;
    for (int trial = 0; trial < 2; ++trial) {
      const ParamPoint theta(0.5 * (fx.pair_lo + fx.pair_hi));
      const Eigen::VectorXd direction = rng.unit_sphere(fx.model.dim());
      auto ratio = [&](double scale) {
        const Eigen::VectorXd h = scale * direction;
        return std::abs(expansion_residual(fx.model, theta, h)) / (scale * scale);
      };
      const double fine = ratio(1e-3);
      ok = ok && fine <= std::max(ratio(1e-2) / 5.0, 1e-12);
      worst_ratio = std::max(worst_ratio, fine);
    }
    add("model_zoo", "local_quadratic/" + fx.model.name(), ok,
        {{"residual_ratio_at_1e-3", worst_ratio}});
  }

  // ----------------------------------------------------------------- fisher
  for (const auto& fx : fixtures) {
    // The fault fixture tampers one analytic Fisher constant right here, to
    // prove this agreement check would catch such a defect.
    const bool tampered =
        options.inject_fisher_fault && fx.model.name() == "normal_mu_var";
    const Model probe = tampered ? detail::tampered_normal_mu_var() : fx.model;
    double worst_excess = -std::numeric_limits<double>::infinity();
    for (const auto& theta : fx.points) {
      const SpdMatrix analytic = fisher_information(probe, theta);
      const SpdMatrix numeric = fisher_numeric(fx.model, theta, 1e-4);
      for (int i = 0; i < analytic.dim(); ++i) {
        for (int j = 0; j < analytic.dim(); ++j) {
          const double band = std::max(1e-5, 1e-4 * std::abs(analytic(i, j)));
          worst_excess =
              std::max(worst_excess, std::abs(analytic(i, j) - numeric(i, j)) - band);
        }
      }
    }
    add("fisher", "analytic_numeric_agreement/" + fx.model.name(), worst_excess <= 0.0,
        {{"worst_band_excess", worst_excess}},
        worst_excess > 0.0 ? "analytic Fisher disagrees with the finite-difference oracle" : "");
  }
  for (const auto& fx : fixtures) {
    double lambda_min = std::numeric_limits<double>::infinity();
    for (const auto& theta : fx.points) {
      lambda_min = std::min(lambda_min, min_eigenvalue(fisher_information(fx.model, theta)));
    }
    add("fisher", "positive_definite/" + fx.model.name(), lambda_min > 0.0,
        {{"min_lambda_min", lambda_min}});
  }
  for (const auto& fx : fixtures) {
    double worst = 0.0;
    for (const auto& theta : fx.points) {
      const SpdMatrix base = fisher_information(fx.model, theta);
      for (int j = 0; j < fx.model.dim(); ++j) {
        Eigen::VectorXd h = Eigen::VectorXd::Zero(fx.model.dim());
        h[j] = 1e-4;
        const SpdMatrix moved = fisher_information(fx.model, theta.shifted(h));
        worst = std::max(worst, (moved.mat() - base.mat()).cwiseAbs().maxCoeff());
      }
    }
    add("fisher", "continuity/" + fx.model.name(), worst < 1e-3,
        {{"max_entry_change", worst}});
  }

  // --------------------------------------------------------------- geometry
  {
    Rng rng(options.seed ^ 0x21u);
    double worst_sqrt = 0.0;
    double worst_inverse = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const int d = 1 + static_cast<int>(rng.uniform01() * 4.0);
      Eigen::VectorXd evals(d);
      for (int i = 0; i < d; ++i) evals[i] = 0.5 + 1.5 * rng.uniform01();
      Eigen::MatrixXd gauss(d, d);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) gauss(i, j) = rng.standard_normal();
      }
      const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ();
      Eigen::MatrixXd m = q * evals.asDiagonal() * q.transpose();
      const SpdMatrix spd(0.5 * (m + m.transpose().eval()));
      const SpdMatrix root = sqrt_spd(spd);
      worst_sqrt = std::max(worst_sqrt,
                            (root.mat() * root.mat() - spd.mat()).norm() / spd.mat().norm());
      worst_inverse = std::max(
          worst_inverse,
          (sqrt_spd(inverse_spd(spd)).mat() - root.mat().inverse()).norm() / root.mat().norm());
    }
    add("geometry", "sqrt_reconstruction", worst_sqrt <= 1e-10,
        {{"worst_rel_error", worst_sqrt}});
    add("geometry", "inv_sqrt_consistency", worst_inverse <= 1e-9,
        {{"worst_rel_error", worst_inverse}});
  }
  {
    Rng rng(options.seed ^ 0x22u);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const int d = 2;
      Eigen::VectorXd fisher_diag(d), geom_diag(d);
      for (int i = 0; i < d; ++i) {
        fisher_diag[i] = 0.3 + 2.0 * rng.uniform01();
        geom_diag[i] = 0.3 + 2.0 * rng.uniform01();
      }
      Eigen::MatrixXd gauss(d, d);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) gauss(i, j) = rng.standard_normal();
      }
      Eigen::VectorXd scales(d);
      for (int i = 0; i < d; ++i) scales[i] = 0.5 + 1.5 * rng.uniform01();
      const Eigen::MatrixXd map =
          Eigen::MatrixXd(Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ()) *
          scales.asDiagonal();
      const Jacobian jac(map);
      const SpdMatrix fisher = SpdMatrix::diagonal(fisher_diag);
      const SpdMatrix geom = SpdMatrix::diagonal(geom_diag);
      const Eigen::VectorXd before = eigenvalues_sorted(whiten(fisher, geom));
      const Eigen::VectorXd after = eigenvalues_sorted(
          whiten(transform_geometry(fisher, jac), transform_geometry(geom, jac)));
      worst = std::max(worst, (before - after).cwiseAbs().maxCoeff());
    }
    // The (mu, v) <-> (mu, tau) reparametrization at a few matched points.
    const Model nv = make_normal_mu_var();
    const Model np = make_normal_mu_prec();
    Eigen::VectorXd weights(2);
    weights << 1.0, 3.0;
    for (double v : {0.5, 1.0, 2.0}) {
      Eigen::MatrixXd jac(2, 2);
      jac << 1.0, 0.0, 0.0, -1.0 / (v * v);
      const SpdMatrix a_v = SpdMatrix::diagonal(weights);
      const Eigen::VectorXd before =
          eigenvalues_sorted(whiten(fisher_information(nv, ParamPoint{0.0, v}), a_v));
      const Eigen::VectorXd after = eigenvalues_sorted(
          whiten(fisher_information(np, ParamPoint{0.0, 1.0 / v}),
                 transform_geometry(a_v, Jacobian(jac))));
      worst = std::max(worst, (before - after).cwiseAbs().maxCoeff());
    }
    add("geometry", "whiten_similarity_invariance", worst <= 1e-8,
        {{"max_eigenvalue_gap", worst}});
  }
  for (const auto& fx : fixtures) {
    const ExclusionGeometry iso = make_fisher_isotropic(fx.model);
    double worst = 0.0;
    for (const auto& theta : fx.points) {
      const double lambda =
          min_eigenvalue(whiten(fisher_information(fx.model, theta), iso.evaluate(theta)));
      worst = std::max(worst, std::abs(lambda - 1.0));
    }
    add("geometry", "fisher_isotropic_reduction/" + fx.model.name(), worst <= 1e-12,
        {{"max_abs_deviation_from_1", worst}});
  }

  // ------------------------------------------------------------------ worth
  {
    const Model two_dim = make_normal_independent({1.0, 0.25});
    const std::vector<std::pair<Model, ParamPoint>> configs = {
        {make_normal_mu_var(), ParamPoint{0.0, 1.0}},
        {two_dim, ParamPoint{0.0, 0.0}},
        {make_bernoulli(), ParamPoint{0.45}},
    };
    double worst_gap = -std::numeric_limits<double>::infinity();
    for (const auto& [model, theta] : configs) {
      const ExclusionGeometry geom = make_euclidean(model.dim());
      for (double delta : {0.05, 0.01}) {
        const double exact = delta_worth_exact(model, theta, geom, delta).value;
        const double oracle =
            delta_worth_oracle(model, theta, geom, delta, 400, options.seed).value;
        worst_gap = std::max(worst_gap, exact - oracle);
      }
    }
    add("worth", "exact_below_oracle", worst_gap <= 1e-9, {{"worst_exact_minus_oracle", worst_gap}});
  }
  {
    double worst_drop = 0.0;
    const std::vector<std::pair<Model, ParamPoint>> configs = {
        {make_bernoulli(), ParamPoint{0.45}},
        {make_normal_mu_var(), ParamPoint{0.0, 1.0}},
    };
    for (const auto& [model, theta] : configs) {
      const ExclusionGeometry geom = make_euclidean(model.dim());
      double previous = 0.0;
      for (double delta : {0.01, 0.02, 0.05, 0.1}) {
        const double value = delta_worth_exact(model, theta, geom, delta).value;
        worst_drop = std::max(worst_drop, previous - value);
        previous = value;
      }
    }
    add("worth", "delta_monotonicity", worst_drop <= 1e-12, {{"worst_decrease", worst_drop}});
  }
  {
    const std::vector<std::pair<Model, ParamPoint>> configs = {
        {make_normal_mean(), ParamPoint{0.0}},
        {make_bernoulli(), ParamPoint{0.5}},
        {make_poisson(), ParamPoint{3.0}},
    };
    double worst = 0.0;
    for (const auto& [model, theta] : configs) {
      const double info = fisher_information(model, theta)(0, 0);
      const double exact = delta_worth_exact(model, theta, make_euclidean(1), 1e-2).value;
      worst = std::max(worst, std::abs(exact / (0.5 * info * 1e-4) - 1.0));
    }
    add("worth", "one_dim_small_delta", worst <= 0.02, {{"worst_rel_gap", worst}});
  }
  {
    double worst = 0.0;
    for (const auto& fx : fixtures) {
      const ExclusionGeometry geom = make_euclidean(fx.model.dim());
      const auto rows = convergence_sweep(fx.model, fx.points[1], geom, {1e-3});
      worst = std::max(worst, std::abs(rows[0].ratio - 1.0));
    }
    add("worth", "asymptotic_ratio", worst <= 0.01, {{"worst_abs_ratio_gap", worst}});
  }
  {
    Eigen::VectorXd id(2), ad(2);
    id << 1.0, 0.5;
    ad << 1.0, 4.0;
    const SpdMatrix fisher = SpdMatrix::diagonal(id);
    const SpdMatrix geom = SpdMatrix::diagonal(ad);
    const double base = delta_worth_asymptotic(fisher, geom, 0.013).value;
    const double doubled = delta_worth_asymptotic(fisher, geom, 0.026).value;
    add("worth", "asymptotic_scaling", doubled == 4.0 * base,
        {{"value", base}, {"doubled", doubled}});
  }

  // ----------------------------------------------------------------- priors
  add("priors", "small_u_linearization",
      std::abs(loss_prior_density(1e-4) / 1e-4 - 1.0) <= 1e-3 &&
          std::abs(loss_prior_density(1e-8) / 1e-8 - 1.0) <= 1e-7,
      {{"gap_at_1e-4", std::abs(loss_prior_density(1e-4) / 1e-4 - 1.0)},
       {"gap_at_1e-8", std::abs(loss_prior_density(1e-8) / 1e-8 - 1.0)}});
  {
    const Model nv = make_normal_mu_var();
    const Model np = make_normal_mu_prec();
    double worst = 0.0;
    for (double v : logspace(0.25, 4.0, 11)) {
      const double lhs = jeffreys_prior(nv, ParamPoint{0.0, v});
      const double rhs = jeffreys_prior(np, ParamPoint{0.0, 1.0 / v}) / (v * v);
      worst = std::max(worst, std::abs(lhs - rhs) / lhs);
    }
    add("priors", "jeffreys_invariance", worst <= 1e-8, {{"max_rel_error", worst}});
  }
  {
    const Model nv = make_normal_mu_var();
    const Model np = make_normal_mu_prec();
    Eigen::VectorXd weights(2);
    weights << 1.0, 3.0;
    double worst = 0.0;
    for (double v : {0.5, 1.0, 2.0}) {
      Eigen::MatrixXd jac(2, 2);
      jac << 1.0, 0.0, 0.0, -1.0 / (v * v);
      const SpdMatrix a_v = SpdMatrix::diagonal(weights);
      const double lhs = min_eigenvalue(whiten(fisher_information(nv, ParamPoint{0.0, v}), a_v));
      const double rhs = min_eigenvalue(whiten(fisher_information(np, ParamPoint{0.0, 1.0 / v}),
                                               transform_geometry(a_v, Jacobian(jac))));
      worst = std::max(worst, std::abs(lhs - rhs) / lhs);
    }
    add("priors", "min_eig_invariance", worst <= 1e-8, {{"max_rel_error", worst}});
  }
  {
    const DiscretePrior prior = discrete_loss_prior({
        {"poisson(1)", make_poisson(), ParamPoint{1.0}},
        {"poisson(2)", make_poisson(), ParamPoint{2.0}},
        {"poisson(3)", make_poisson(), ParamPoint{3.0}},
    });
    double total = 0.0, smallest = std::numeric_limits<double>::infinity();
    for (double mass : prior.masses) {
      total += mass;
      smallest = std::min(smallest, mass);
    }
    add("priors", "discrete_normalization", std::abs(total - 1.0) <= 1e-12 && smallest > 0.0,
        {{"total", total}, {"min_mass", smallest}});
  }
  {
    const Model nv = make_normal_mu_var();
    Eigen::VectorXd weights(2);
    weights << 1.0, 4.0;
    double worst = 0.0;
    for (double v : {0.5, 1.0, 2.0}) {
      const double base = min_eig_prior(nv, make_block(weights), ParamPoint{0.0, v});
      const double scaled =
          min_eig_prior(nv, make_block((4.0 * weights).eval()), ParamPoint{0.0, v});
      worst = std::max(worst, std::abs(scaled - base / 4.0) / (base / 4.0));
    }
    add("priors", "geometry_scaling", worst <= 1e-13, {{"max_rel_error", worst}});
  }

  // ------------------------------------------------------------ discrepancy
  {
    const ScenarioCheck check = one_dim_exponent_check();
    report.checks.push_back({"discrepancy", "one_dim_exponent_forms", check.status, check.values,
                             check.note});
  }
  {
    const ScenarioReport d3 = run_scenario_d3(ScenarioConfig{});
    std::map<std::string, double> values;
    for (const auto& check : d3.checks) {
      if (check.status == CheckStatus::paper_discrepancy) values = check.values;
    }
    report.checks.push_back({"discrepancy", "d3_haar_exponents",
                             d3.has_discrepancy() ? CheckStatus::paper_discrepancy
                                                  : CheckStatus::fail,
                             values,
                             d3.has_discrepancy()
                                 ? "documented and computed exponents recorded side by side"
                                 : "expected discrepancy record is missing"});
  }

  return report;
}

}  // namespace lossprior
