#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "lossprior/axes.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("lossprior_cli_test_" + std::to_string(getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string cli_binary() {
  const char* env = std::getenv("LOSSPRIOR_CLI");
  REQUIRE(env != nullptr);
  return env;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int counter = 0;
  const fs::path capture = work_dir() / ("stdout_" + std::to_string(counter++) + ".txt");
  const std::string command =
      env_prefix + "\"" + cli_binary() + "\" " + args + " > " + capture.string() + " 2>&1";
  const int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.output = slurp(capture);
  return result;
}

}  // namespace

TEST_CASE("cli: fisher writes the information matrix with spectrum summary") {
  const fs::path out = work_dir() / "fisher_nv.json";
  const RunResult run =
      run_cli("fisher --model normal_mu_var --theta 0,1 --out " + out.string());
  INFO(run.output);
  REQUIRE(run.exit_code == 0);
  const json report = json::parse(slurp(out));
  CHECK(report["d"] == 2);
  CHECK(report["entries"][0] == 1.0);
  CHECK(report["entries"][3] == 0.5);
  CHECK(report["lambda_min"] == 0.5);
  CHECK(report["condition_number"] == 2.0);
  CHECK(report["config"]["model"] == "normal_mu_var");
  CHECK(run.output.find("lambda_min=") != std::string::npos);
}

TEST_CASE("cli: fisher maps domain violations to exit 2") {
  const RunResult run = run_cli("fisher --model normal_mu_var --theta 0,-1 --out " +
                                (work_dir() / "unused.json").string());
  CHECK(run.exit_code == 2);
  CHECK(run.output.find("domain error") != std::string::npos);
}

TEST_CASE("cli: fisher on Bernoulli(0.5) has unit condition number") {
  const fs::path out = work_dir() / "fisher_bern.json";
  const RunResult run = run_cli("fisher --model bernoulli --theta 0.5 --out " + out.string());
  REQUIRE(run.exit_code == 0);
  const json report = json::parse(slurp(out));
  CHECK(report["entries"][0] == 4.0);
  CHECK(report["condition_number"] == 1.0);
}

TEST_CASE("cli: jeffreys grid CSV carries config header and the -3/2 exponent") {
  const fs::path out = work_dir() / "jeffreys.csv";
  const RunResult run = run_cli(
      "prior-grid --model normal_mu_var --kind jeffreys --axes \"-1:1:3;log:0.5:2:9\" "
      "--format csv --out " + out.string());
  INFO(run.output);
  REQUIRE(run.exit_code == 0);
  const std::string text = slurp(out);
  REQUIRE(text.rfind("# config:", 0) == 0);
  CHECK(text.find("\r") == std::string::npos);

  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);  // config comment
  std::getline(lines, line);
  CHECK(line == "mu,v,density");
  std::vector<double> log_v, log_density;
  while (std::getline(lines, line)) {
    std::stringstream row(line);
    std::string mu, v, density;
    std::getline(row, mu, ',');
    std::getline(row, v, ',');
    std::getline(row, density, ',');
    if (std::stod(mu) == -1.0) {  // one mu-slice is enough
      log_v.push_back(std::log(std::stod(v)));
      log_density.push_back(std::log(std::stod(density)));
    }
  }
  REQUIRE(log_v.size() == 9);
  CHECK(lossprior::fit_slope(log_v, log_density) == Catch::Approx(-1.5).margin(1e-3));
}

TEST_CASE("cli: min_eig grid under fisher_isotropic is a constant column") {
  const fs::path out = work_dir() / "flat.json";
  const RunResult run = run_cli(
      "prior-grid --model poisson --kind min_eig --geometry fisher_isotropic "
      "--axes \"log:0.5:4:11\" --out " + out.string());
  REQUIRE(run.exit_code == 0);
  const json report = json::parse(slurp(out));
  for (const auto& value : report["values"]) {
    CHECK(std::abs(value.get<double>() - 1.0) < 1e-12);
  }
}

TEST_CASE("cli: finite-delta and min_eig grids agree within 1% at delta = 1e-3") {
  const fs::path finite = work_dir() / "finite.json";
  const fs::path asym = work_dir() / "asym.json";
  REQUIRE(run_cli("prior-grid --model bernoulli --kind finite_delta --delta 0.001 "
                  "--axes 0.2:0.8:13 --out " + finite.string())
              .exit_code == 0);
  REQUIRE(run_cli("prior-grid --model bernoulli --kind min_eig --axes 0.2:0.8:13 --out " +
                  asym.string())
              .exit_code == 0);
  const json f = json::parse(slurp(finite));
  const json a = json::parse(slurp(asym));
  REQUIRE(f["values"].size() == a["values"].size());
  for (size_t i = 0; i < f["values"].size(); ++i) {
    const double ratio =
        f["values"][i].get<double>() / (0.5e-6 * a["values"][i].get<double>());
    CHECK(std::abs(ratio - 1.0) < 0.01);
  }
}

TEST_CASE("cli: worth sweep table") {
  const fs::path out = work_dir() / "worth.json";
  const RunResult run = run_cli(
      "worth --model normal_mean --theta 0 --deltas 0.1,0.01 --oracle-points 200 --seed 4 "
      "--out " + out.string());
  INFO(run.output);
  REQUIRE(run.exit_code == 0);
  const json report = json::parse(slurp(out));
  REQUIRE(report["rows"].size() == 2);
  for (const auto& row : report["rows"]) {
    CHECK(std::abs(row["ratio"].get<double>() - 1.0) < 1e-12);
    CHECK(std::abs(row["oracle"].get<double>() - row["exact"].get<double>()) < 1e-12);
  }
  CHECK(report["config"]["seed"] == 4);
}

TEST_CASE("cli: worth rejects empty or non-decreasing delta lists") {
  CHECK(run_cli("worth --model normal_mean --theta 0 --deltas \"\"").exit_code == 2);
  CHECK(run_cli("worth --model normal_mean --theta 0 --deltas 0.01,0.1").exit_code == 2);
}

TEST_CASE("cli: scenarios exit 0 with discrepancies reported, 2 on unknown names") {
  const fs::path d1 = work_dir() / "d1.json";
  const RunResult run_d1 = run_cli("scenario --name D1 --out " + d1.string());
  INFO(run_d1.output);
  CHECK(run_d1.exit_code == 0);
  const json d1_report = json::parse(slurp(d1));
  for (const auto& check : d1_report["checks"]) CHECK(check["status"] == "pass");

  const fs::path d3 = work_dir() / "d3.json";
  const RunResult run_d3 = run_cli("scenario --name D3 --out " + d3.string());
  CHECK(run_d3.exit_code == 0);
  const json d3_report = json::parse(slurp(d3));
  int discrepancies = 0;
  for (const auto& check : d3_report["checks"]) {
    if (check["status"] == "paper_discrepancy") ++discrepancies;
  }
  CHECK(discrepancies == 1);
  CHECK(run_d3.output.find("paper_discrepancy") != std::string::npos);

  CHECK(run_cli("scenario --name D9").exit_code == 2);
}

TEST_CASE("cli: validate passes, is byte-deterministic, and honours fault injection") {
  const fs::path r1 = work_dir() / "validate_1.json";
  const fs::path r2 = work_dir() / "validate_2.json";
  const RunResult first = run_cli("validate --out " + r1.string());
  INFO(first.output);
  REQUIRE(first.exit_code == 0);
  const RunResult second = run_cli("validate --out " + r2.string());
  REQUIRE(second.exit_code == 0);
  CHECK(slurp(r1) == slurp(r2));
  // The final "wrote <path>" line legitimately differs; everything above it
  // must be byte-identical.
  std::string log1 = first.output, log2 = second.output;
  log1.erase(log1.find("wrote "));
  log2.erase(log2.find("wrote "));
  CHECK(log1 == log2);

  const RunResult faulty = run_cli("validate --inject-fisher-fault --out " +
                                   (work_dir() / "validate_fault.json").string());
  CHECK(faulty.exit_code == 1);
  CHECK(faulty.output.find("analytic_numeric_agreement") != std::string::npos);
}

TEST_CASE("cli: discrete prior over Poisson means") {
  const fs::path out = work_dir() / "discrete.json";
  const RunResult run =
      run_cli("discrete-prior --model poisson --points \"1;2;3\" --out " + out.string());
  INFO(run.output);
  REQUIRE(run.exit_code == 0);
  const json report = json::parse(slurp(out));
  REQUIRE(report["prior"].size() == 3);
  CHECK(std::abs(report["prior"][0]["worth"].get<double>() - (1.0 - std::log(2.0))) < 1e-12);

  CHECK(run_cli("discrete-prior --model poisson --points \"2;2\"").exit_code == 2);
}

TEST_CASE("cli: config file supplies defaults and flags win") {
  const fs::path cfg = work_dir() / "config.json";
  {
    std::ofstream out(cfg);
    out << R"({"model": "normal_mu_var", "theta": "0,1"})";
  }
  const fs::path from_config = work_dir() / "from_config.json";
  const RunResult defaults =
      run_cli("fisher --config " + cfg.string() + " --out " + from_config.string());
  REQUIRE(defaults.exit_code == 0);
  CHECK(json::parse(slurp(from_config))["lambda_min"] == 0.5);

  const fs::path overridden = work_dir() / "overridden.json";
  const RunResult flags = run_cli("fisher --config " + cfg.string() + " --theta 0,2 --out " +
                                  overridden.string());
  REQUIRE(flags.exit_code == 0);
  CHECK(json::parse(slurp(overridden))["lambda_min"] == 0.125);
  CHECK(json::parse(slurp(overridden))["config"]["theta"] == "0,2");
}

TEST_CASE("cli: relative outputs land in the directory named by the environment") {
  const fs::path dir = work_dir() / "outputs";
  const RunResult run = run_cli("fisher --model normal_mean --theta 0 --out env_test.json",
                                "LOSSPRIOR_OUT_DIR=" + dir.string() + " ");
  REQUIRE(run.exit_code == 0);
  CHECK(fs::exists(dir / "env_test.json"));
}

TEST_CASE("cli: logistic regression ingests its design from CSV") {
  const fs::path design = work_dir() / "design.csv";
  {
    std::ofstream out(design);
    out << "x1,x2\n";
    out << "1.0,0.5\n0.2,-0.7\n-1.1,0.3\n0.8,0.9\n-0.4,-1.2\n0.05,0.6\n";
  }
  const fs::path fisher_out = work_dir() / "fisher_logit.json";
  const RunResult fisher = run_cli("fisher --model logistic_regression --design " +
                                   design.string() + " --theta 0.5,-0.5 --out " +
                                   fisher_out.string());
  INFO(fisher.output);
  REQUIRE(fisher.exit_code == 0);
  CHECK(json::parse(slurp(fisher_out))["d"] == 2);

  const fs::path grid_out = work_dir() / "grid_logit.json";
  const RunResult grid = run_cli(
      "prior-grid --model logistic_regression --design " + design.string() +
      " --geometry design_based --kind min_eig --axes \"-1:1:5;-1:1:5\" --out " +
      grid_out.string());
  INFO(grid.output);
  REQUIRE(grid.exit_code == 0);
  const json clean = json::parse(slurp(grid_out));
  CHECK(clean["metadata"]["violates_likelihood_principle"] == false);

  const fs::path dep_out = work_dir() / "grid_logit_dep.json";
  const RunResult dep = run_cli(
      "prior-grid --model logistic_regression --design " + design.string() +
      " --geometry data_dependent --beta-hat 0.5,-0.25 --kind min_eig "
      "--axes \"-1:1:5;-1:1:5\" --out " + dep_out.string());
  REQUIRE(dep.exit_code == 0);
  CHECK(json::parse(slurp(dep_out))["metadata"]["violates_likelihood_principle"] == true);
  CHECK(dep.output.find("likelihood principle") != std::string::npos);
}

TEST_CASE("cli: worth sweep in CSV format") {
  const fs::path out = work_dir() / "worth.csv";
  const RunResult run = run_cli(
      "worth --model bernoulli --theta 0.5 --deltas 0.1,0.01 --oracle-points 100 "
      "--format csv --out " + out.string());
  REQUIRE(run.exit_code == 0);
  const std::string text = slurp(out);
  CHECK(text.rfind("# config:", 0) == 0);
  CHECK(text.find("delta,exact,asymptotic,oracle,ratio\n") != std::string::npos);
}

TEST_CASE("cli: missing subcommand or unknown flags are usage errors") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("fisher --model normal_mean --theta 0 --no-such-flag").exit_code == 2);
  CHECK(run_cli("--help").exit_code == 0);
}
