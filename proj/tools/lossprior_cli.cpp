// Command-line surface for the loss-based prior toolkit: Fisher matrices,
// prior grids, delta-worth sweeps, scenario reports, the validation suite,
// and the discrete baseline. Every output file embeds its resolved run
// configuration (defaults and seeds included), so any artifact can be
// reproduced from its own header.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lossprior/lossprior.hpp"

namespace fs = std::filesystem;
using namespace lossprior;

namespace {

constexpr const char* kOutDirEnv = "LOSSPRIOR_OUT_DIR";

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw ContractError("cannot parse " + what + " from '" + text + "'");
  }
}

Eigen::VectorXd parse_vector(const std::string& text, const std::string& what) {
  const auto parts = split(text, ',');
  if (parts.empty()) throw ContractError(what + " must not be empty");
  Eigen::VectorXd out(static_cast<Eigen::Index>(parts.size()));
  for (size_t i = 0; i < parts.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = parse_number(parts[i], what);
  }
  return out;
}

// One axis: "lo:hi:n" (linear) or "log:lo:hi:n"; axes joined with ';'.
std::vector<std::vector<double>> parse_axes(const std::string& text) {
  std::vector<std::vector<double>> axes;
  for (const std::string& spec : split(text, ';')) {
    auto parts = split(spec, ':');
    bool logarithmic = false;
    if (!parts.empty() && parts[0] == "log") {
      logarithmic = true;
      parts.erase(parts.begin());
    }
    if (parts.size() != 3) {
      throw ContractError("axis '" + spec + "' must look like lo:hi:n or log:lo:hi:n");
    }
    const double lo = parse_number(parts[0], "axis lower bound");
    const double hi = parse_number(parts[1], "axis upper bound");
    const int n = static_cast<int>(parse_number(parts[2], "axis node count"));
    axes.push_back(logarithmic ? logspace(lo, hi, n) : linspace(lo, hi, n));
  }
  if (axes.empty()) throw ContractError("--axes must define at least one axis");
  return axes;
}

std::string normalized_token(std::string token) {
  for (char& c : token) {
    if (c == '-') c = '_';
  }
  return token;
}

struct GeometryRequest {
  std::string spec = "euclidean";
  std::optional<Eigen::MatrixXd> design;
  std::optional<Eigen::VectorXd> beta_hat;
};

ExclusionGeometry build_geometry(const GeometryRequest& request, const Model& model) {
  const auto parts = split(request.spec, ':');
  const std::string kind = normalized_token(parts[0]);
  if (kind == "euclidean") return make_euclidean(model.dim());
  if (kind == "fisher_isotropic") return make_fisher_isotropic(model);
  if (kind == "block") {
    if (parts.size() != 2) throw ContractError("block geometry needs weights: block:w1,w2,...");
    return make_block(parse_vector(parts[1], "block weights"));
  }
  if (kind == "fisher_units") {
    if (parts.size() != 2) {
      throw ContractError("fisher_units geometry needs a matrix: fisher_units:r1c1,r1c2;...");
    }
    const auto rows = split(parts[1], ';');
    Eigen::MatrixXd b(rows.size(), rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      const Eigen::VectorXd row = parse_vector(rows[i], "fisher_units row");
      if (row.size() != static_cast<Eigen::Index>(rows.size())) {
        throw ContractError("fisher_units matrix must be square");
      }
      b.row(static_cast<Eigen::Index>(i)) = row;
    }
    return make_fisher_units(model, SpdMatrix(b));
  }
  if (kind == "design_based") {
    if (!request.design) throw ContractError("design_based geometry requires --design");
    return make_design_based(*request.design);
  }
  if (kind == "data_dependent") {
    if (!request.design) throw ContractError("data_dependent geometry requires --design");
    if (!request.beta_hat) throw ContractError("data_dependent geometry requires --beta-hat");
    return make_data_dependent(*request.design, ParamPoint(*request.beta_hat));
  }
  throw ContractError("unknown geometry '" + request.spec + "'");
}

fs::path resolve_output(const std::string& out, const std::string& fallback) {
  fs::path path = out.empty() ? fs::path(fallback) : fs::path(out);
  if (path.is_relative()) {
    if (const char* dir = std::getenv(kOutDirEnv)) path = fs::path(dir) / path;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  return path;
}

// Shared per-command option bag. A JSON config file supplies defaults and
// explicit flags win over it.
struct CommonOptions {
  std::string config_path;
  std::string model;
  std::string theta;
  std::string geometry = "euclidean";
  std::string design_path;
  std::string beta_hat;
  std::string out;
  std::string format = "json";
};

void apply_config_defaults(const json& config, CommonOptions& opts) {
  auto fetch = [&config](const char* key, std::string& target) {
    if (config.contains(key)) {
      target = config[key].is_string() ? config[key].get<std::string>() : config[key].dump();
    }
  };
  fetch("model", opts.model);
  fetch("theta", opts.theta);
  fetch("geometry", opts.geometry);
  fetch("design", opts.design_path);
  fetch("beta_hat", opts.beta_hat);
  fetch("out", opts.out);
  fetch("format", opts.format);
}

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  const std::string text = read_text_file(path);
  json parsed = json::parse(text, nullptr, false);
  if (parsed.is_discarded()) throw ContractError("config file '" + path + "' is not valid JSON");
  return parsed;
}

struct ModelBundle {
  Model model;
  GeometryRequest geometry_request;
};

ModelBundle resolve_model(const CommonOptions& opts) {
  if (opts.model.empty()) throw ContractError("--model is required");
  std::optional<Eigen::MatrixXd> design;
  if (!opts.design_path.empty()) design = read_design_csv(opts.design_path);
  const Model model = model_by_name(opts.model, design);
  GeometryRequest request;
  request.spec = opts.geometry;
  request.design = model.design() ? model.design() : design;
  if (!opts.beta_hat.empty()) request.beta_hat = parse_vector(opts.beta_hat, "--beta-hat");
  return {model, request};
}

json common_config_json(const CommonOptions& opts) {
  json out{{"model", opts.model},
           {"geometry", opts.geometry},
           {"format", opts.format}};
  if (!opts.theta.empty()) out["theta"] = opts.theta;
  if (!opts.design_path.empty()) out["design"] = opts.design_path;
  if (!opts.beta_hat.empty()) out["beta_hat"] = opts.beta_hat;
  return out;
}

// ---------------------------------------------------------------------------

int cmd_fisher(const CommonOptions& opts) {
  const ModelBundle bundle = resolve_model(opts);
  if (opts.theta.empty()) throw ContractError("--theta is required");
  const ParamPoint theta(parse_vector(opts.theta, "--theta"));
  const SpdMatrix info = fisher_information(bundle.model, theta);
  const Eigen::VectorXd evals = eigenvalues_sorted(info);
  const double lambda_min = evals(0);
  const double lambda_max = evals(evals.size() - 1);
  const double condition = lambda_max / lambda_min;

  json config = common_config_json(opts);
  config["command"] = "fisher";
  json output = spd_to_json(info);
  output["config"] = config;
  output["lambda_min"] = lambda_min;
  output["lambda_max"] = lambda_max;
  output["condition_number"] = condition;

  const fs::path path = resolve_output(opts.out, "fisher.json");
  write_text_file(path.string(), output.dump(2) + "\n");
  std::cout << "lambda_min=" << format_double(lambda_min)
            << " lambda_max=" << format_double(lambda_max)
            << " condition=" << format_double(condition) << "\n";
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

struct PriorGridOptions {
  CommonOptions common;
  std::string kind = "min_eig";
  std::string axes;
  double delta = 0.0;
  bool normalize = false;
};

int cmd_prior_grid(const PriorGridOptions& opts) {
  const ModelBundle bundle = resolve_model(opts.common);
  const ExclusionGeometry geometry = build_geometry(bundle.geometry_request, bundle.model);
  if (opts.axes.empty()) throw ContractError("--axes is required");

  const std::string kind_token = normalized_token(opts.kind);
  PriorKind kind;
  if (kind_token == "finite_delta") {
    kind = PriorKind::finite_delta;
  } else if (kind_token == "min_eig") {
    kind = PriorKind::min_eig;
  } else if (kind_token == "jeffreys") {
    kind = PriorKind::jeffreys;
  } else {
    throw ContractError("unknown prior kind '" + opts.kind + "'");
  }

  GridOptions grid_options;
  grid_options.normalize = opts.normalize;
  if (kind == PriorKind::finite_delta) {
    if (!(opts.delta > 0.0)) throw ContractError("finite_delta needs --delta > 0");
    grid_options.delta = opts.delta;
  }
  const PriorGrid grid =
      evaluate_prior_grid(bundle.model, geometry, kind, parse_axes(opts.axes), grid_options);

  json config = common_config_json(opts.common);
  config["command"] = "prior-grid";
  config["kind"] = kind_token;
  config["axes"] = opts.axes;
  config["normalize"] = opts.normalize;
  if (kind == PriorKind::finite_delta) config["delta"] = opts.delta;

  const bool csv = opts.common.format == "csv";
  const fs::path path = resolve_output(opts.common.out, csv ? "prior_grid.csv" : "prior_grid.json");
  write_text_file(path.string(),
                  csv ? grid_to_csv(grid, config) : grid_to_json(grid, config).dump(2) + "\n");
  std::cout << "evaluated " << grid.size() << " nodes (" << prior_kind_name(grid.kind())
            << (grid.normalized() ? ", normalized" : "") << ")\n";
  if (grid.metadata().violates_likelihood_principle) {
    std::cout << "note: geometry depends on realised data (likelihood principle violated)\n";
  }
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

struct WorthOptionsCli {
  CommonOptions common;
  std::string deltas;
  long oracle_points = 10000;
  std::uint64_t seed = 1;
};

int cmd_worth(const WorthOptionsCli& opts) {
  const ModelBundle bundle = resolve_model(opts.common);
  const ExclusionGeometry geometry = build_geometry(bundle.geometry_request, bundle.model);
  if (opts.common.theta.empty()) throw ContractError("--theta is required");
  const ParamPoint theta(parse_vector(opts.common.theta, "--theta"));

  if (opts.deltas.empty()) throw ContractError("--deltas must list at least one value");
  std::vector<double> deltas;
  for (const auto& token : split(opts.deltas, ',')) {
    deltas.push_back(parse_number(token, "--deltas"));
  }
  for (size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0)) throw ContractError("--deltas must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1])) {
      throw ContractError("--deltas must be strictly decreasing");
    }
  }

  const auto sweep = convergence_sweep(bundle.model, theta, geometry, deltas);
  std::vector<WorthTableRow> rows;
  rows.reserve(sweep.size());
  for (const auto& entry : sweep) {
    WorthTableRow row;
    row.delta = entry.delta;
    row.exact = entry.exact;
    row.asymptotic = entry.asymptotic;
    row.oracle = delta_worth_oracle(bundle.model, theta, geometry, entry.delta,
                                    opts.oracle_points, opts.seed)
                     .value;
    row.ratio = entry.ratio;
    rows.push_back(row);
  }

  json config = common_config_json(opts.common);
  config["command"] = "worth";
  config["deltas"] = opts.deltas;
  config["oracle_points"] = opts.oracle_points;
  config["seed"] = opts.seed;

  const bool csv = opts.common.format == "csv";
  const fs::path path = resolve_output(opts.common.out, csv ? "worth.csv" : "worth.json");
  write_text_file(path.string(), csv ? worth_table_to_csv(rows, config)
                                     : worth_table_to_json(rows, config).dump(2) + "\n");
  std::cout << "delta exact asymptotic oracle ratio\n";
  for (const auto& row : rows) {
    std::cout << format_double(row.delta) << " " << format_double(row.exact) << " "
              << format_double(row.asymptotic) << " " << format_double(row.oracle) << " "
              << format_double(row.ratio) << "\n";
  }
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

struct ScenarioOptionsCli {
  std::string name;
  std::string out;
  json config = json::object();
};

// Scenario knobs overridable from the config file; the report echoes the
// effective values.
ScenarioConfig scenario_config_from_json(const json& config) {
  ScenarioConfig cfg;
  auto axis = [&config](const char* key, std::vector<double>& target) {
    if (config.contains(key)) target = parse_axes(config[key].get<std::string>()).at(0);
  };
  axis("mu_axis", cfg.mu_axis);
  axis("scale_axis", cfg.scale_axis);
  axis("rho_axis", cfg.rho_axis);
  axis("rho_slope_axis", cfg.rho_slope_axis);
  axis("beta_axis", cfg.beta_axis);
  if (config.contains("design_rows")) cfg.design_rows = config["design_rows"].get<int>();
  if (config.contains("design_cols")) cfg.design_cols = config["design_cols"].get<int>();
  if (config.contains("design_seed")) {
    cfg.design_seed = config["design_seed"].get<std::uint64_t>();
  }
  if (config.contains("cov_tol")) cfg.cov_tol = config["cov_tol"].get<double>();
  if (config.contains("exponent_tol")) cfg.exponent_tol = config["exponent_tol"].get<double>();
  if (config.contains("slope_tol")) cfg.slope_tol = config["slope_tol"].get<double>();
  if (config.contains("machine_tol")) cfg.machine_tol = config["machine_tol"].get<double>();
  return cfg;
}

int cmd_scenario(const ScenarioOptionsCli& opts) {
  if (opts.name.empty()) throw ContractError("--name is required (D1..D5)");
  const ScenarioReport report = run_scenario(opts.name, scenario_config_from_json(opts.config));
  json output = report.to_json();
  output["config"]["command"] = "scenario";
  output["config"]["name"] = report.name;
  const fs::path path = resolve_output(opts.out, "scenario_" + report.name + ".json");
  write_text_file(path.string(), output.dump(2) + "\n");
  std::cout << report.summary();
  std::cout << "wrote " << path.string() << "\n";
  return report.has_failure() ? 1 : 0;
}

struct ValidateOptionsCli {
  std::string out;
  std::uint64_t seed = 96111;
  bool inject_fisher_fault = false;
};

int cmd_validate(const ValidateOptionsCli& opts) {
  ValidationOptions options;
  options.seed = opts.seed;
  options.inject_fisher_fault = opts.inject_fisher_fault;
  ValidationReport report = run_validation(options);
  report.config["command"] = "validate";
  const fs::path path = resolve_output(opts.out, "validate_report.json");
  write_text_file(path.string(), report.to_json().dump(2) + "\n");
  std::cout << report.summary();
  std::cout << "wrote " << path.string() << "\n";
  return report.passed() ? 0 : 1;
}

struct DiscreteOptionsCli {
  CommonOptions common;
  std::string points;
};

int cmd_discrete_prior(const DiscreteOptionsCli& opts) {
  const ModelBundle bundle = resolve_model(opts.common);
  if (opts.points.empty()) throw ContractError("--points must list parameter values");
  std::vector<DiscreteEntry> entries;
  for (const auto& token : split(opts.points, ';')) {
    const ParamPoint theta(parse_vector(token, "--points"));
    entries.push_back({bundle.model.name() + "(" + token + ")", bundle.model, theta});
  }
  const DiscretePrior prior = discrete_loss_prior(entries);

  json config = common_config_json(opts.common);
  config["command"] = "discrete-prior";
  config["points"] = opts.points;

  json table = json::array();
  for (size_t i = 0; i < prior.labels.size(); ++i) {
    table.push_back(json{{"label", prior.labels[i]},
                         {"worth", prior.worths[i]},
                         {"raw_mass", prior.raw_masses[i]},
                         {"mass", prior.masses[i]}});
  }
  const json output{{"config", config}, {"prior", table}};

  const bool csv = opts.common.format == "csv";
  const fs::path path =
      resolve_output(opts.common.out, csv ? "discrete_prior.csv" : "discrete_prior.json");
  if (csv) {
    std::ostringstream body;
    body << "# config: " << config.dump() << "\n";
    body << "label,worth,raw_mass,mass\n";
    for (size_t i = 0; i < prior.labels.size(); ++i) {
      body << prior.labels[i] << "," << format_double(prior.worths[i]) << ","
           << format_double(prior.raw_masses[i]) << "," << format_double(prior.masses[i]) << "\n";
    }
    write_text_file(path.string(), body.str());
  } else {
    write_text_file(path.string(), output.dump(2) + "\n");
  }
  for (size_t i = 0; i < prior.labels.size(); ++i) {
    std::cout << prior.labels[i] << " worth=" << format_double(prior.worths[i])
              << " mass=" << format_double(prior.masses[i]) << "\n";
  }
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

void add_common_flags(CLI::App* cmd, CommonOptions& opts, bool with_theta = true) {
  cmd->add_option("--config", opts.config_path, "JSON config file; explicit flags win");
  cmd->add_option("--model", opts.model, "model name");
  if (with_theta) cmd->add_option("--theta", opts.theta, "parameter point, comma separated");
  cmd->add_option("--geometry", opts.geometry,
                  "exclusion geometry: euclidean | fisher_isotropic | block:w1,w2 | "
                  "fisher_units:... | design_based | data_dependent");
  cmd->add_option("--design", opts.design_path, "design matrix CSV (header row)");
  cmd->add_option("--beta-hat", opts.beta_hat, "estimate for data_dependent geometries");
  cmd->add_option("--out", opts.out, "output path (joined with $LOSSPRIOR_OUT_DIR if relative)");
  cmd->add_option("--format", opts.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
}

std::string find_config_path(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") return argv[i + 1];
  }
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"loss-based objective priors by neighbourhood exclusion"};
  app.require_subcommand(1);

  json config;
  try {
    config = load_config_file(find_config_path(argc, argv));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  CommonOptions fisher_opts;
  apply_config_defaults(config, fisher_opts);
  CLI::App* fisher_cmd = app.add_subcommand("fisher", "Fisher information at a point");
  add_common_flags(fisher_cmd, fisher_opts);

  PriorGridOptions grid_opts;
  apply_config_defaults(config, grid_opts.common);
  if (config.contains("kind")) grid_opts.kind = config["kind"].get<std::string>();
  if (config.contains("axes")) grid_opts.axes = config["axes"].get<std::string>();
  if (config.contains("delta")) grid_opts.delta = config["delta"].get<double>();
  if (config.contains("normalize")) grid_opts.normalize = config["normalize"].get<bool>();
  CLI::App* grid_cmd = app.add_subcommand("prior-grid", "evaluate a prior over a grid");
  add_common_flags(grid_cmd, grid_opts.common, /*with_theta=*/false);
  grid_cmd->add_option("--kind", grid_opts.kind, "finite_delta | min_eig | jeffreys");
  grid_cmd->add_option("--axes", grid_opts.axes, "axes, e.g. '-1:1:21;log:0.25:4:41'");
  grid_cmd->add_option("--delta", grid_opts.delta, "exclusion radius for finite_delta");
  grid_cmd->add_flag("--normalize", grid_opts.normalize, "normalize on the bounded grid");

  WorthOptionsCli worth_opts;
  apply_config_defaults(config, worth_opts.common);
  if (config.contains("deltas")) worth_opts.deltas = config["deltas"].get<std::string>();
  if (config.contains("oracle_points")) worth_opts.oracle_points = config["oracle_points"].get<long>();
  if (config.contains("seed")) worth_opts.seed = config["seed"].get<std::uint64_t>();
  CLI::App* worth_cmd = app.add_subcommand("worth", "delta-worth sweep: exact vs asymptotic vs oracle");
  add_common_flags(worth_cmd, worth_opts.common);
  worth_cmd->add_option("--deltas", worth_opts.deltas, "positive, strictly decreasing list");
  worth_cmd->add_option("--oracle-points", worth_opts.oracle_points, "boundary sample size");
  worth_cmd->add_option("--seed", worth_opts.seed, "oracle seed");

  ScenarioOptionsCli scenario_opts;
  scenario_opts.config = config;
  std::string scenario_config_path;
  if (config.contains("name")) scenario_opts.name = config["name"].get<std::string>();
  if (config.contains("out")) scenario_opts.out = config["out"].get<std::string>();
  CLI::App* scenario_cmd = app.add_subcommand("scenario", "run a named verification scenario");
  scenario_cmd->add_option("--config", scenario_config_path, "JSON config file");
  scenario_cmd->add_option("--name", scenario_opts.name, "D1..D5 or full scenario name");
  scenario_cmd->add_option("--out", scenario_opts.out, "report path");

  ValidateOptionsCli validate_opts;
  std::string validate_config_path;
  if (config.contains("seed")) validate_opts.seed = config["seed"].get<std::uint64_t>();
  if (config.contains("out")) validate_opts.out = config["out"].get<std::string>();
  CLI::App* validate_cmd = app.add_subcommand("validate", "run the full invariant suite");
  validate_cmd->add_option("--config", validate_config_path, "JSON config file");
  validate_cmd->add_option("--out", validate_opts.out, "report path");
  validate_cmd->add_option("--seed", validate_opts.seed, "suite seed");
  validate_cmd
      ->add_flag("--inject-fisher-fault", validate_opts.inject_fisher_fault,
                 "test fixture: tamper one analytic Fisher constant")
      ->group("");

  DiscreteOptionsCli discrete_opts;
  apply_config_defaults(config, discrete_opts.common);
  if (config.contains("points")) discrete_opts.points = config["points"].get<std::string>();
  CLI::App* discrete_cmd =
      app.add_subcommand("discrete-prior", "loss-based prior over a finite model list");
  add_common_flags(discrete_cmd, discrete_opts.common, /*with_theta=*/false);
  discrete_cmd->add_option("--points", discrete_opts.points,
                           "parameter points, ';' between models, ',' within");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fisher_cmd->parsed()) return cmd_fisher(fisher_opts);
    if (grid_cmd->parsed()) return cmd_prior_grid(grid_opts);
    if (worth_cmd->parsed()) return cmd_worth(worth_opts);
    if (scenario_cmd->parsed()) return cmd_scenario(scenario_opts);
    if (validate_cmd->parsed()) return cmd_validate(validate_opts);
    if (discrete_cmd->parsed()) return cmd_discrete_prior(discrete_opts);
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return 2;
  } catch (const NumericsError& e) {
    std::cerr << "numerics error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
