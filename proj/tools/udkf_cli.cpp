// Scenario runner and stress benchmark for the UD filter library.
//
// Exit codes: 0 success, 1 parse/validation error, 2 numerical failure.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "udkf/scenario.hpp"
#include "udkf/selftest.hpp"
#include "udkf/stress.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

int cmd_run(const std::string& scenario_path, const std::string& out_flag) {
  udkf::ScenarioConfig cfg;
  try {
    cfg = udkf::parse_scenario(scenario_path);
  } catch (const udkf::ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  std::string out_dir = !out_flag.empty() ? out_flag
                        : !cfg.out_dir.empty() ? cfg.out_dir
                                               : "udkf_out";
  udkf::RunReport report;
  try {
    report = udkf::run_scenario(cfg);
    udkf::write_report_files(report, out_dir);
  } catch (const udkf::FilterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: cannot write output: " << e.what() << "\n";
    return kExitNumerical;
  }
  udkf::write_summary(report, std::cout);
  // Wall time goes to the console only; report files stay byte-stable
  // across reruns of the same scenario and seed.
  std::cout << "wall_seconds: " << report.wall_seconds << "\n";
  std::cout << "output_dir: " << out_dir << "\n";
  return report.error ? kExitNumerical : kExitOk;
}

int cmd_validate(const std::string& scenario_path) {
  try {
    const udkf::ScenarioConfig cfg = udkf::parse_scenario(scenario_path);
    udkf::build_system(cfg);  // resolves defaults, checks model consistency
    std::cout << "valid: " << scenario_path << " (model " << cfg.model << ", n=" << cfg.n
              << ", q=" << cfg.q << ", m=" << cfg.m << ", steps=" << cfg.steps << ")\n";
    return kExitOk;
  } catch (const udkf::FilterError& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return kExitValidation;
  }
}

int cmd_stress(int max_exp, std::size_t trials, std::uint64_t seed, std::size_t jobs,
               const std::string& out_flag) {
  std::vector<int> exponents;
  for (int e = 0; e <= max_exp; ++e) exponents.push_back(e);
  udkf::StressReport report;
  try {
    report = udkf::stress_benchmark(exponents, trials, seed, jobs);
  } catch (const udkf::ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  udkf::write_stress_report(report, std::cout);
  if (!out_flag.empty()) {
    std::filesystem::create_directories(out_flag);
    std::ofstream os(std::filesystem::path(out_flag) / "stress.txt", std::ios::binary);
    udkf::write_stress_report(report, os);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UD-factorized Kalman filter scenario runner"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "Run a scenario file and write trajectory/summary output");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides the config's 'out')");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Parse and validate a scenario file");
  validate->add_option("scenario", validate_path, "Scenario file")->required();

  int max_exp = 12;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  std::string stress_out;
  auto* stress = app.add_subcommand("stress", "Ill-conditioning benchmark: UD vs naive dense");
  stress->add_option("--max-exp", max_exp, "Largest condition exponent (runs 0..E)")
      ->check(CLI::Range(0, 14));
  stress->add_option("--trials", trials, "Trials per exponent");
  stress->add_option("--seed", seed, "Base seed (trial t uses seed + t)");
  stress->add_option("--jobs", jobs, "Parallel workers");
  stress->add_option("--out", stress_out, "Also write stress.txt under this directory");

  auto* selftest = app.add_subcommand("selftest", "Run the built-in oracle check suite");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(scenario_path, out_dir);
  if (validate->parsed()) return cmd_validate(validate_path);
  if (stress->parsed()) return cmd_stress(max_exp, trials, seed, jobs, stress_out);
  if (selftest->parsed()) return udkf::run_selftest(std::cout) ? kExitOk : kExitNumerical;
  return kExitValidation;
}
