#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lossprior/axes.hpp"
#include "lossprior/io.hpp"
#include "lossprior/priors.hpp"
#include "lossprior/worth.hpp"

namespace lossprior {

enum class CheckStatus { pass, fail, paper_discrepancy };

inline const char* check_status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::paper_discrepancy: return "paper_discrepancy";
  }
  return "?";
}

/// One verification step with its numeric evidence; no bare booleans.
struct ScenarioCheck {
  std::string description;
  CheckStatus status = CheckStatus::pass;
  std::map<std::string, double> values;
  std::string note;
};

inline json check_to_json(const ScenarioCheck& check) {
  json values = json::object();
  for (const auto& [key, value] : check.values) values[key] = value;
  json out{{"description", check.description},
           {"status", check_status_name(check.status)},
           {"values", values}};
  if (!check.note.empty()) out["note"] = check.note;
  return out;
}

struct ScenarioReport {
  std::string name;
  json config = json::object();
  std::vector<ScenarioCheck> checks;
  std::vector<std::pair<std::string, json>> artifacts;

  bool has_failure() const {
    for (const auto& c : checks) {
      if (c.status == CheckStatus::fail) return true;
    }
    return false;
  }

  bool has_discrepancy() const {
    for (const auto& c : checks) {
      if (c.status == CheckStatus::paper_discrepancy) return true;
    }
    return false;
  }

  json to_json() const {
    json checks_json = json::array();
    for (const auto& c : checks) checks_json.push_back(check_to_json(c));
    json artifacts_json = json::object();
    for (const auto& [key, value] : artifacts) artifacts_json[key] = value;
    return json{{"name", name},
                {"config", config},
                {"checks", checks_json},
                {"artifacts", artifacts_json}};
  }

  std::string summary() const {
    std::ostringstream out;
    out << name << "\n";
    for (const auto& c : checks) {
      out << "  [" << check_status_name(c.status) << "] " << c.description;
      bool first = true;
      for (const auto& [key, value] : c.values) {
        out << (first ? "  (" : ", ") << key << "=" << format_double(value);
        first = false;
      }
      if (!first) out << ")";
      if (!c.note.empty()) out << "  -- " << c.note;
      out << "\n";
    }
    return out.str();
  }
};

/// Grid bounds, seeds, and tolerances shared by the scenario suite. The
/// defaults are desk-scale and boundary-safe.
struct ScenarioConfig {
  std::vector<double> mu_axis = linspace(-1.0, 1.0, 21);
  std::vector<double> scale_axis = logspace(0.25, 4.0, 41);  // v or sigma
  std::vector<double> rho_axis = linspace(-0.99, 0.99, 99);
  std::vector<double> rho_slope_axis = linspace(0.9, 0.99, 10);
  int design_rows = 25;
  int design_cols = 2;
  std::uint64_t design_seed = 4242;
  std::vector<double> beta_axis = linspace(-2.0, 2.0, 21);
  std::vector<double> nuisance_weights = {1.0, 10.0, 100.0};
  Eigen::Vector2d beta_hat_a{0.5, -0.5};
  Eigen::Vector2d beta_hat_b{-1.0, 0.75};
  double cov_tol = 1e-8;
  double exponent_tol = 1e-3;
  double slope_tol = 0.1;
  double machine_tol = 1e-14;

  json to_json() const {
    return json{{"mu_axis", mu_axis},
                {"scale_axis", scale_axis},
                {"rho_axis", rho_axis},
                {"rho_slope_axis", rho_slope_axis},
                {"design_rows", design_rows},
                {"design_cols", design_cols},
                {"design_seed", design_seed},
                {"beta_axis", beta_axis},
                {"nuisance_weights", nuisance_weights},
                {"beta_hat_a", {beta_hat_a[0], beta_hat_a[1]}},
                {"beta_hat_b", {beta_hat_b[0], beta_hat_b[1]}},
                {"cov_tol", cov_tol},
                {"exponent_tol", exponent_tol},
                {"slope_tol", slope_tol},
                {"machine_tol", machine_tol}};
  }
};

namespace detail {

inline std::vector<double> log_of(const std::vector<double>& xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(std::log(x));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// D1: invariance under reparametrization
// ---------------------------------------------------------------------------

inline ScenarioReport run_scenario_d1(const ScenarioConfig& cfg) {
  ScenarioReport report;
  report.name = "D1_invariance";
  report.config = cfg.to_json();

  const Model in_v = make_normal_mu_var();
  const Model in_tau = make_normal_mu_prec();

  const PriorGrid grid_v = evaluate_prior_grid(in_v, make_euclidean(2), PriorKind::jeffreys,
                                               {cfg.mu_axis, cfg.scale_axis});
  std::vector<double> tau_axis;
  tau_axis.reserve(cfg.scale_axis.size());
  for (auto it = cfg.scale_axis.rbegin(); it != cfg.scale_axis.rend(); ++it) {
    tau_axis.push_back(1.0 / *it);
  }
  const PriorGrid grid_tau = evaluate_prior_grid(in_tau, make_euclidean(2), PriorKind::jeffreys,
                                                 {cfg.mu_axis, tau_axis});

  // Change-of-variables consistency: pi_v(mu, v) = pi_tau(mu, 1/v) / v^2.
  double worst = 0.0;
  for (double mu : cfg.mu_axis) {
    for (double v : cfg.scale_axis) {
      const double lhs = jeffreys_prior(in_v, ParamPoint{mu, v});
      const double rhs = jeffreys_prior(in_tau, ParamPoint{mu, 1.0 / v}) / (v * v);
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300));
    }
  }
  report.checks.push_back(
      {"change-of-variables consistency between (mu,v) and (mu,tau) Jeffreys surfaces",
       worst <= cfg.cov_tol ? CheckStatus::pass : CheckStatus::fail,
       {{"max_rel_error", worst}, {"tolerance", cfg.cov_tol}},
       ""});

  // Fitted exponents of the two surfaces.
  std::vector<double> log_pi_v, log_pi_tau;
  for (double v : cfg.scale_axis) {
    log_pi_v.push_back(std::log(jeffreys_prior(in_v, ParamPoint{0.0, v})));
  }
  for (double tau : tau_axis) {
    log_pi_tau.push_back(std::log(jeffreys_prior(in_tau, ParamPoint{0.0, tau})));
  }
  const double slope_v = fit_slope(detail::log_of(cfg.scale_axis), log_pi_v);
  const double slope_tau = fit_slope(detail::log_of(tau_axis), log_pi_tau);
  report.checks.push_back({"fitted variance exponent of the Jeffreys prior",
                           std::abs(slope_v - (-1.5)) <= cfg.exponent_tol ? CheckStatus::pass
                                                                          : CheckStatus::fail,
                           {{"fitted", slope_v}, {"expected", -1.5}},
                           ""});
  report.checks.push_back({"fitted precision exponent of the Jeffreys prior",
                           std::abs(slope_tau - (-0.5)) <= cfg.exponent_tol ? CheckStatus::pass
                                                                            : CheckStatus::fail,
                           {{"fitted", slope_tau}, {"expected", -0.5}},
                           ""});

  report.artifacts.emplace_back("jeffreys_mu_v", grid_to_json(grid_v));
  report.artifacts.emplace_back("jeffreys_mu_tau", grid_to_json(grid_tau));
  return report;
}

// ---------------------------------------------------------------------------
// D2: likelihood principle and data-independence
// ---------------------------------------------------------------------------

inline ScenarioReport run_scenario_d2(const ScenarioConfig& cfg) {
  ScenarioReport report;
  report.name = "D2_likelihood_principle";
  report.config = cfg.to_json();

  const Eigen::MatrixXd design =
      default_logistic_design(cfg.design_rows, cfg.design_cols, cfg.design_seed);
  const Model model = make_logistic_regression(design);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(design);
  const double condition =
      svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);

  const ParamPoint beta_a(Eigen::VectorXd(cfg.beta_hat_a));
  const ParamPoint beta_b(Eigen::VectorXd(cfg.beta_hat_b));

  // Surfaces are built through the same pipeline; only the geometry differs.
  auto surface = [&](const ExclusionGeometry& geometry) {
    return evaluate_prior_grid(model, geometry, PriorKind::min_eig,
                               {cfg.beta_axis, cfg.beta_axis});
  };

  const PriorGrid fixed_a = surface(make_design_based(design));
  const PriorGrid fixed_b = surface(make_design_based(design));
  double fixed_diff = 0.0;
  for (size_t i = 0; i < fixed_a.size(); ++i) {
    fixed_diff = std::max(fixed_diff, std::abs(fixed_a.values()[i] - fixed_b.values()[i]));
  }
  report.checks.push_back(
      {"design-based geometry X'X is independent of the estimated coefficients",
       fixed_diff == 0.0 && !fixed_a.metadata().violates_likelihood_principle
           ? CheckStatus::pass
           : CheckStatus::fail,
       {{"max_abs_difference", fixed_diff}, {"condition_number", condition}},
       "surface recomputed with both candidate estimates"});

  const PriorGrid dep_a = surface(make_data_dependent(design, beta_a));
  const PriorGrid dep_b = surface(make_data_dependent(design, beta_b));
  double dep_diff = 0.0;
  for (size_t i = 0; i < dep_a.size(); ++i) {
    dep_diff = std::max(dep_diff, std::abs(dep_a.values()[i] - dep_b.values()[i]));
  }
  const bool flags_set = dep_a.metadata().violates_likelihood_principle &&
                         dep_b.metadata().violates_likelihood_principle;
  report.checks.push_back(
      {"data-dependent geometry X'W(beta_hat)X shifts with the estimate and is flagged",
       dep_diff > 1e-6 && flags_set ? CheckStatus::pass : CheckStatus::fail,
       {{"max_abs_difference", dep_diff},
        {"flag_a", dep_a.metadata().violates_likelihood_principle ? 1.0 : 0.0},
        {"flag_b", dep_b.metadata().violates_likelihood_principle ? 1.0 : 0.0}},
       ""});

  json design_json = json::array();
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < design.cols(); ++j) row.push_back(design(i, j));
    design_json.push_back(row);
  }
  report.artifacts.emplace_back("design", design_json);
  report.artifacts.emplace_back("min_eig_design_based", grid_to_json(fixed_a));
  report.artifacts.emplace_back("min_eig_data_dependent_a", grid_to_json(dep_a));
  report.artifacts.emplace_back("min_eig_data_dependent_b", grid_to_json(dep_b));
  return report;
}

// ---------------------------------------------------------------------------
// D3: group invariance in the location-scale model
// ---------------------------------------------------------------------------

inline ScenarioReport run_scenario_d3(const ScenarioConfig& cfg) {
  ScenarioReport report;
  report.name = "D3_group_invariance";
  report.config = cfg.to_json();

  const Model model = make_normal_mu_sigma();
  const ExclusionGeometry iso = make_fisher_isotropic(model);

  std::vector<double> volume_vals, min_eig_vals;
  for (double sigma : cfg.scale_axis) {
    volume_vals.push_back(jeffreys_prior(model, ParamPoint{0.0, sigma}));
    min_eig_vals.push_back(min_eig_prior(model, iso, ParamPoint{0.0, sigma}));
  }

  // sqrt(det I(mu, sigma)) = sqrt(2) / sigma^2 for this parametrization.
  double worst_volume = 0.0;
  for (size_t i = 0; i < cfg.scale_axis.size(); ++i) {
    const double expected = std::sqrt(2.0) / (cfg.scale_axis[i] * cfg.scale_axis[i]);
    worst_volume = std::max(worst_volume, std::abs(volume_vals[i] - expected) / expected);
  }
  const double volume_slope = fit_slope(detail::log_of(cfg.scale_axis),
                                        detail::log_of(volume_vals));
  report.checks.push_back({"volume aggregation follows sqrt(2)/sigma^2",
                           worst_volume < 1e-12 ? CheckStatus::pass : CheckStatus::fail,
                           {{"max_rel_error", worst_volume}, {"fitted_exponent", volume_slope}},
                           ""});

  double worst_flat = 0.0;
  for (double value : min_eig_vals) worst_flat = std::max(worst_flat, std::abs(value - 1.0));
  report.checks.push_back(
      {"Fisher-isotropic min-eigenvalue construction is constant in sigma",
       worst_flat < 1e-12 ? CheckStatus::pass : CheckStatus::fail,
       {{"max_abs_deviation_from_1", worst_flat}},
       ""});

  // Neither computed construction reproduces the documented Haar form 1/sigma.
  report.checks.push_back(
      {"location-scale exponent comparison against the documented 1/sigma form",
       CheckStatus::paper_discrepancy,
       {{"volume_exponent", volume_slope},
        {"min_eig_exponent", fit_slope(detail::log_of(cfg.scale_axis),
                                       detail::log_of(min_eig_vals))},
        {"claimed_exponent", -1.0}},
       "computed alternatives reported side by side; none matches the claimed exponent"});

  json table = json::array();
  for (size_t i = 0; i < cfg.scale_axis.size(); ++i) {
    table.push_back(json{{"sigma", cfg.scale_axis[i]},
                         {"volume", volume_vals[i]},
                         {"min_eig", min_eig_vals[i]},
                         {"claimed", 1.0 / cfg.scale_axis[i]}});
  }
  report.artifacts.emplace_back("sigma_table", table);
  return report;
}

// ---------------------------------------------------------------------------
// D4: interest-nuisance block geometry
// ---------------------------------------------------------------------------

inline ScenarioReport run_scenario_d4(const ScenarioConfig& cfg) {
  ScenarioReport report;
  report.name = "D4_interest_nuisance";
  report.config = cfg.to_json();

  const Model model = make_normal_mu_var();
  double previous_fraction = -1.0;
  for (double c : cfg.nuisance_weights) {
    Eigen::VectorXd weights(2);
    weights << 1.0, c;
    const ExclusionGeometry block = make_block(weights);

    double worst = 0.0;
    int nuisance_nodes = 0;
    std::vector<double> profile;
    profile.reserve(cfg.scale_axis.size());
    double crossing = std::numeric_limits<double>::quiet_NaN();
    for (double v : cfg.scale_axis) {
      const double computed = min_eig_prior(model, block, ParamPoint{0.0, v});
      const double interest = 1.0 / v;
      const double nuisance = 1.0 / (2.0 * v * v * c);
      const double expected = std::min(interest, nuisance);
      worst = std::max(worst, std::abs(computed - expected) / expected);
      profile.push_back(computed);
      if (nuisance <= interest) {
        ++nuisance_nodes;
        if (std::isnan(crossing)) crossing = v;
      }
    }
    // Also sweep mu to confirm the surface is flat in the interest direction.
    for (double mu : cfg.mu_axis) {
      const double computed = min_eig_prior(model, block, ParamPoint{mu, 1.0});
      const double expected = std::min(1.0, 1.0 / (2.0 * c));
      worst = std::max(worst, std::abs(computed - expected) / expected);
    }

    const double fraction = static_cast<double>(nuisance_nodes) /
                            static_cast<double>(cfg.scale_axis.size());
    ScenarioCheck check;
    check.description = "block weight c = " + format_double(c) +
                        ": min-eig prior equals min{1/v, 1/(2v^2c)} and the nuisance branch "
                        "region does not shrink";
    check.values = {{"c", c},
                    {"max_rel_error", worst},
                    {"nuisance_fraction", fraction},
                    {"analytic_crossing", 1.0 / (2.0 * c)}};
    if (!std::isnan(crossing)) check.values["first_nuisance_node"] = crossing;
    const bool fraction_ok = fraction >= previous_fraction;
    check.status = (worst <= cfg.machine_tol && fraction_ok) ? CheckStatus::pass
                                                             : CheckStatus::fail;
    report.checks.push_back(std::move(check));
    previous_fraction = fraction;

    json profile_json = json::array();
    for (size_t i = 0; i < profile.size(); ++i) {
      profile_json.push_back(json{{"v", cfg.scale_axis[i]}, {"prior", profile[i]}});
    }
    report.artifacts.emplace_back("profile_c_" + format_double(c), profile_json);
  }

  // c = 1: the two branches cross exactly at v = 1/2.
  Eigen::VectorXd unit(2);
  unit << 1.0, 1.0;
  const double at_half = min_eig_prior(model, make_block(unit), ParamPoint{0.0, 0.5});
  report.checks.push_back({"c = 1 branches meet at v = 1/2 where both equal 2",
                           std::abs(at_half - 2.0) <= 1e-12 ? CheckStatus::pass
                                                            : CheckStatus::fail,
                           {{"value_at_half", at_half}, {"expected", 2.0}},
                           ""});
  return report;
}

// ---------------------------------------------------------------------------
// D5: stability under weak identification
// ---------------------------------------------------------------------------

inline ScenarioReport run_scenario_d5(const ScenarioConfig& cfg) {
  ScenarioReport report;
  report.name = "D5_weak_identification";
  report.config = cfg.to_json();

  const Model model = make_bivariate_normal_corr();
  const ExclusionGeometry euclid = make_euclidean(1);

  // Blow-up rate of the numerically computed information against 1 - rho^2.
  std::vector<double> log_info, log_gap;
  for (double rho : cfg.rho_slope_axis) {
    log_info.push_back(std::log(fisher_numeric(model, ParamPoint{rho}, 1e-4)(0, 0)));
    log_gap.push_back(std::log(1.0 - rho * rho));
  }
  const double slope = fit_slope(log_gap, log_info);
  report.checks.push_back({"log-log blow-up rate of the correlation information",
                           std::abs(slope - (-2.0)) <= cfg.slope_tol ? CheckStatus::pass
                                                                     : CheckStatus::fail,
                           {{"fitted_slope", slope},
                            {"expected", -2.0},
                            {"tolerance", cfg.slope_tol}},
                           ""});

  json table = json::array();
  for (double rho : cfg.rho_axis) {
    const ParamPoint point{rho};
    table.push_back(json{{"rho", rho},
                         {"information", fisher_information(model, point)(0, 0)},
                         {"min_eig_prior", min_eig_prior(model, euclid, point)},
                         {"jeffreys_prior", jeffreys_prior(model, point)}});
  }
  report.artifacts.emplace_back("rho_table", table);

  // Direction of the effect near the boundary: both computed constructions
  // place more mass where identification weakens, and the min-eig form exceeds
  // the volume form there; the documented expectation was downweighting.
  const double center = min_eig_prior(model, euclid, ParamPoint{0.0});
  const double edge = min_eig_prior(model, euclid, ParamPoint{0.99});
  const double edge_ratio = edge / center;
  const double vs_volume =
      edge / jeffreys_prior(model, ParamPoint{0.99});
  report.checks.push_back(
      {"direction of the boundary effect for the fragility construction",
       CheckStatus::paper_discrepancy,
       {{"prior_ratio_edge_vs_center", edge_ratio},
        {"min_eig_over_volume_at_edge", vs_volume},
        {"documented_direction", -1.0}},
       "computed mass grows toward |rho| = 1 instead of being downweighted"});
  return report;
}

// ---------------------------------------------------------------------------

/// Documented-exponent comparison for d = 1: the finite-delta construction
/// tracks the information itself, while the documented closed form is its
/// square root (the Jeffreys direction). Both slopes are reported; the
/// record always carries paper_discrepancy status.
inline ScenarioCheck one_dim_exponent_check() {
  const Model model = make_poisson();
  const ExclusionGeometry euclid = make_euclidean(1);
  const std::vector<double> lambda_axis = logspace(0.5, 4.0, 25);
  const double delta = 1e-3;

  std::vector<double> log_lambda, log_finite, log_min_eig, log_jeffreys;
  for (double lambda : lambda_axis) {
    const ParamPoint point{lambda};
    log_lambda.push_back(std::log(lambda));
    const double worth = delta_worth_exact(model, point, euclid, delta).value;
    log_finite.push_back(std::log(loss_prior_density(worth)));
    log_min_eig.push_back(std::log(min_eig_prior(model, euclid, point)));
    log_jeffreys.push_back(std::log(jeffreys_prior(model, point)));
  }

  ScenarioCheck check;
  check.description =
      "d = 1 exponent: finite-delta loss prior tracks I(theta), not I(theta)^{1/2}";
  check.status = CheckStatus::paper_discrepancy;
  check.values = {{"finite_delta_slope", fit_slope(log_lambda, log_finite)},
                  {"min_eig_slope", fit_slope(log_lambda, log_min_eig)},
                  {"jeffreys_slope", fit_slope(log_lambda, log_jeffreys)},
                  {"claimed_exponent", -0.5}};
  check.note = "all computed alternatives reported; the claimed d = 1 form matches the "
               "Jeffreys slope only";
  return check;
}

inline ScenarioReport run_scenario(const std::string& name, const ScenarioConfig& cfg = {}) {
  if (name == "D1" || name == "D1_invariance") return run_scenario_d1(cfg);
  if (name == "D2" || name == "D2_likelihood_principle") return run_scenario_d2(cfg);
  if (name == "D3" || name == "D3_group_invariance") return run_scenario_d3(cfg);
  if (name == "D4" || name == "D4_interest_nuisance") return run_scenario_d4(cfg);
  if (name == "D5" || name == "D5_weak_identification") return run_scenario_d5(cfg);
  throw ContractError("unknown scenario '" + name + "'");
}

inline std::vector<std::string> scenario_names() {
  return {"D1_invariance", "D2_likelihood_principle", "D3_group_invariance",
          "D4_interest_nuisance", "D5_weak_identification"};
}

}  // namespace lossprior
