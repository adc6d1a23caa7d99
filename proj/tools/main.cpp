#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "harnacklab/dynamics.hpp"
#include "harnacklab/experiment.hpp"
#include "harnacklab/oracles.hpp"

namespace {

using namespace harnacklab;

/// Prints the closed-form equation defects of the corrected log-Gaussian
/// family next to the uncorrected variant, which misses the equation by
/// 3/2 - ln 2 at (a=1, n=2, t=ln 2) regardless of C.
void print_variant_demo() {
  LogGaussianParams params;
  params.a = 1.0;
  params.n = 2;
  params.C = 0.0;
  std::vector<std::vector<double>> points = {{0.0, 0.0}, {0.3, -0.2}};
  double t = std::log(2.0);
  double corrected =
      pde_residual(params, GaussianForm::Corrected, points, t, 1e-3);
  double variant =
      pde_residual(params, GaussianForm::PrintedVariant, points, t, 1e-3);
  std::printf("closed-form defect (corrected): %.3e\n", corrected);
  std::printf("closed-form defect (variant):   %.6f\n", variant);
}

void apply_overrides(ExperimentConfig& config, double tol_c, double t_min) {
  if (tol_c > 0.0) config.tol_c = tol_c;
  if (t_min >= 0.0) {
    if (!(t_min < config.t_end)) {
      throw std::invalid_argument("--t-min: must be below time.t_end");
    }
    config.t_min = t_min;
  }
}

void print_outcome(const ExperimentOutcome& outcome) {
  for (const KindOutcome& ko : outcome.kinds) {
    std::printf("%s: %s worst_margin=%s at t=%s node=%zu\n", ko.kind.c_str(),
                ko.pass ? "PASS" : "FAIL",
                csv_float(ko.worst_margin).c_str(),
                csv_float(ko.worst_time).c_str(), ko.worst_index);
  }
  std::printf("overall: %s (tolerance %s)\n",
              outcome.all_pass ? "PASS" : "FAIL",
              csv_float(outcome.tolerance).c_str());
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            double tol_c, double t_min, bool variant_demo) {
  ExperimentConfig config = load_config(config_path);
  apply_overrides(config, tol_c, t_min);
  Trajectory traj = run_experiment(config);
  ExperimentOutcome outcome = evaluate_checks(traj, config);
  ArtifactPaths paths = write_artifacts(outcome, config, out_dir);
  print_outcome(outcome);
  std::printf("margins: %s\n", paths.aggregate_csv.c_str());
  std::printf("summary: %s\n", paths.summary_txt.c_str());
  if (variant_demo) print_variant_demo();
  return outcome.all_pass ? 0 : 1;
}

int cmd_verify(const std::string& config_path, const std::string& out_dir,
               double tol_c, double t_min, bool inject_fault,
               bool variant_demo) {
  ExperimentConfig config = load_config(config_path);
  apply_overrides(config, tol_c, t_min);
  Trajectory traj = run_experiment(config);
  if (inject_fault) corrupt_last_snapshot(traj);
  ExperimentOutcome outcome = evaluate_checks(traj, config);
  if (!out_dir.empty()) write_artifacts(outcome, config, out_dir);
  print_outcome(outcome);
  if (variant_demo) print_variant_demo();
  return outcome.all_pass ? 0 : 1;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir) {
  ExperimentConfig config = load_config(config_path);
  std::vector<SweepRow> rows = run_sweep(config, sweep_thread_budget());
  std::string path = write_sweep_csv(rows, out_dir);
  bool all_pass = true;
  for (const SweepRow& row : rows) all_pass = all_pass && row.pass;
  std::printf("sweep rows: %zu\n", rows.size());
  std::printf("sweep csv: %s\n", path.c_str());
  std::printf("overall: %s\n", all_pass ? "PASS" : "FAIL");
  return all_pass ? 0 : 1;
}

int cmd_report(const std::string& artifact_dir) {
  std::string table = make_report(artifact_dir);
  std::fputs(table.c_str(), stdout);
  return table.find("FAIL") == std::string::npos ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Simulation lab that verifies sharp differential Harnack bounds for "
      "nonlinear logarithmic heat flows on model geometries"};
  app.require_subcommand(1);

  std::string config_path;
  std::string artifact_dir;
  std::string out_dir = "artifacts";
  double tol_c = -1.0;
  double t_min = -1.0;
  bool inject_fault = false;
  bool variant_demo = false;

  CLI::App* run = app.add_subcommand(
      "run", "Simulate one experiment and write margin CSV artifacts");
  run->add_option("config", config_path, "JSON experiment config")->required();
  run->add_option("--out", out_dir, "artifact output directory");
  run->add_option("--tol-c", tol_c, "override check.tol_C");
  run->add_option("--t-min", t_min, "override time.t_min");
  run->add_flag("--variant-oracle", variant_demo,
                "also print the closed-form defect of the uncorrected "
                "log-Gaussian variant");

  CLI::App* verify = app.add_subcommand(
      "verify", "Run all configured checks and print pass/fail per kind");
  verify->add_option("config", config_path, "JSON experiment config")
      ->required();
  verify->add_option("--out", out_dir, "also write artifacts here");
  verify->add_option("--tol-c", tol_c, "override check.tol_C");
  verify->add_option("--t-min", t_min, "override time.t_min");
  verify->add_flag("--inject-fault", inject_fault,
                   "test mode: corrupt the last snapshot before checking");
  verify->add_flag("--variant-oracle", variant_demo,
                   "also print the closed-form defect of the uncorrected "
                   "log-Gaussian variant");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Run the config's sweep section and write sweep.csv");
  sweep->add_option("config", config_path, "JSON experiment config")
      ->required();
  sweep->add_option("--out", out_dir, "artifact output directory");

  CLI::App* report = app.add_subcommand(
      "report", "Summarize CSV artifacts in a directory as a table");
  report->add_option("dir", artifact_dir, "artifact directory")->required();

  // verify only writes artifacts when --out is given explicitly.
  bool verify_out_given = false;
  verify->callback([&]() { verify_out_given = verify->count("--out") > 0; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      return cmd_run(config_path, out_dir, tol_c, t_min, variant_demo);
    }
    if (verify->parsed()) {
      return cmd_verify(config_path, verify_out_given ? out_dir : "", tol_c,
                        t_min, inject_fault, variant_demo);
    }
    if (sweep->parsed()) return cmd_sweep(config_path, out_dir);
    if (report->parsed()) return cmd_report(artifact_dir);
  } catch (const SolverError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  } catch (const std::invalid_argument& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return 2;
  } catch (const std::domain_error& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return 2;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  }
  return 2;
}
