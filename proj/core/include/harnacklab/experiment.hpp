#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "harnacklab/dynamics.hpp"
#include "harnacklab/harnack.hpp"

namespace harnacklab {

/// One experiment, fully determined by a JSON document. Validation happens
/// before any compute; every violation is reported with its field path.
struct ExperimentConfig {
  // manifold
  GridKind grid_kind = GridKind::TorusPeriodic;
  int dim = 2;             // torus only
  int n = 64;              // points per axis / n_theta
  double side_length = 1.0;  // torus only
  double r0 = 1.0;           // sphere only

  // flow
  Equation equation = Equation::LogHeat;
  double a = 1.0;
  double epsilon = 0.0;
  MetricKind metric_kind = MetricKind::StaticTorus;

  // time
  double dt_safety = 0.25;
  double t_end = 1.0;
  double t_min = 0.01;
  int output_count = 20;

  // init
  InitParams init;

  // constrained pair
  bool constrained_enabled = false;
  double c0 = 0.5;
  double K = 0.5;
  std::uint64_t seed2 = 2;

  // checks
  std::vector<std::string> kinds;  // e.g. trace, matrix, integrated
  double tol_c = 10.0;

  // sweep (optional section)
  bool has_sweep = false;
  std::vector<double> sweep_a;
  std::vector<double> sweep_epsilon;
  std::vector<std::uint64_t> sweep_seeds;
  std::vector<int> sweep_resolutions;
  int sweep_cap = 256;
};

/// Parses and cross-validates a config document. Unknown keys anywhere are
/// hard errors. Throws std::invalid_argument with a field-path diagnostic.
ExperimentConfig parse_config(const std::string& json_text);

/// Reads the file and delegates to parse_config. Missing or unreadable
/// files throw std::invalid_argument.
ExperimentConfig load_config(const std::string& path);

ManifoldGrid make_grid(const ExperimentConfig& config);

/// FlowSpec with output times at k*t_end/output_count, k = 1..output_count
/// (the t = 0 state is never snapshotted; margin windows need t > 0).
FlowSpec make_flow_spec(const ExperimentConfig& config);

/// Runs the experiment: a pair run when constrained checks are requested,
/// a single run otherwise.
Trajectory run_experiment(const ExperimentConfig& config);

/// Test hook for the fault-injection contract: scales node 0 of the last
/// snapshot (both fields of a pair) by e^{-50}, which wrecks every margin
/// while keeping fields positive and pair ratios inside (0, 1).
void corrupt_last_snapshot(Trajectory& traj);

/// Margin rows of one verified kind, as they appear in the CSV artifact.
struct KindOutcome {
  std::string kind;  // CSV label: trace, ..., integrated_trace, ...
  std::vector<MarginRecord> records;
  double worst_margin = 0.0;
  double worst_time = 0.0;
  std::size_t worst_index = 0;
  bool pass = false;
};

struct ExperimentOutcome {
  double tolerance = 0.0;
  std::vector<KindOutcome> kinds;
  bool all_pass = false;
};

/// Runs every configured check kind against the trajectory. Integrated
/// checks draw `integrated_quadruples` seeded random (x1,t1,x2,t2) tuples
/// from the snapshot times at or after t_min.
ExperimentOutcome evaluate_checks(const Trajectory& traj,
                                  const ExperimentConfig& config);

/// Full-precision decimal (%.17g) that round-trips the double exactly.
std::string csv_float(double value);

struct ArtifactPaths {
  std::vector<std::string> kind_csvs;
  std::string aggregate_csv;
  std::string summary_txt;
};

/// Writes one CSV per kind plus margins.csv and summary.txt into out_dir
/// (created if needed). Every CSV opens with a `# generator=... seed=...`
/// comment line followed by the pinned header
/// `t,kind,min_margin,argmin_index,tolerance`.
ArtifactPaths write_artifacts(const ExperimentOutcome& outcome,
                              const ExperimentConfig& config,
                              const std::string& out_dir);

/// One sweep result row per (combo, kind).
struct SweepRow {
  double a = 0.0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  int n = 0;
  std::string kind;
  double worst_margin = 0.0;
  bool pass = false;
  double order = 0.0;  // NaN when not computable
  bool has_order = false;
};

/// Expands the sweep section into the Cartesian product of combos (missing
/// lists fall back to the base config's single value), validates every
/// combo up front, then runs them on up to max_threads worker threads.
/// Results are ordered by combo index regardless of scheduling. A ladder of
/// three or more resolutions per (a, epsilon, seed) yields an observed
/// refinement order of the worst margin via successive differences.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config,
                                int max_threads);

/// sweep.csv with header a,epsilon,seed,n,kind,worst_margin,pass,order.
std::string write_sweep_csv(const std::vector<SweepRow>& rows,
                            const std::string& out_dir);

/// Reads every CSV artifact under artifact_dir (pinned margin header or the
/// sweep header) and renders the fixed eight-row summary table: trace,
/// constrained_trace, matrix, constrained_matrix, interpolated, gradient,
/// integrated_trace, integrated_interpolated; kinds with no rows anywhere
/// are marked "not run". Throws std::invalid_argument when the directory
/// holds no readable artifacts.
std::string make_report(const std::string& artifact_dir);

/// Number of threads a sweep may use: HARNACK_LAB_THREADS when set (>= 1),
/// otherwise the hardware concurrency, at least 1.
int sweep_thread_budget();

}  // namespace harnacklab
