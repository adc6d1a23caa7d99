#include "harnacklab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "harnacklab/oracles.hpp"
#include "harnacklab/random.hpp"
#include "json.hpp"

namespace harnacklab {
namespace {

using nlohmann::json;

constexpr int kIntegratedQuadruples = 20;
constexpr double kMinTimeGap = 0.05;
constexpr const char* kMarginHeader = "t,kind,min_margin,argmin_index,tolerance";
constexpr const char* kSweepHeader =
    "a,epsilon,seed,n,kind,worst_margin,pass,order";

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument(path + ": " + what);
}

const json& member(const json& obj, const std::string& path,
                   const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing required field");
  return *it;
}

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "must be a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) known = true;
    }
    if (!known) fail(path + "." + it.key(), "unknown field");
  }
}

double as_number(const json& value, const std::string& path) {
  if (!value.is_number()) fail(path, "must be a number");
  return value.get<double>();
}

int as_int(const json& value, const std::string& path) {
  if (!value.is_number_integer()) fail(path, "must be an integer");
  return value.get<int>();
}

std::uint64_t as_seed(const json& value, const std::string& path) {
  if (!value.is_number_unsigned() && !value.is_number_integer()) {
    fail(path, "must be a nonnegative integer");
  }
  long long raw = value.get<long long>();
  if (raw < 0) fail(path, "must be a nonnegative integer");
  return static_cast<std::uint64_t>(raw);
}

std::string as_string(const json& value, const std::string& path) {
  if (!value.is_string()) fail(path, "must be a string");
  return value.get<std::string>();
}

bool as_bool(const json& value, const std::string& path) {
  if (!value.is_boolean()) fail(path, "must be a boolean");
  return value.get<bool>();
}

const std::vector<std::string> kPointwiseKinds = {
    "trace",  "constrained_trace", "matrix",
    "constrained_matrix", "interpolated", "gradient"};

bool kind_allowed(const std::string& kind, Equation eq) {
  if (kind == "integrated") {
    return eq == Equation::LogHeat || eq == Equation::LogSobolevEps;
  }
  if (eq == Equation::LogHeat) {
    return kind == "trace" || kind == "constrained_trace" ||
           kind == "matrix" || kind == "constrained_matrix";
  }
  if (eq == Equation::LogSobolevEps) return kind == "interpolated";
  return kind == "gradient";
}

bool kind_needs_pair(const std::string& kind) {
  return kind == "constrained_trace" || kind == "constrained_matrix";
}

void parse_manifold(const json& section, ExperimentConfig& config) {
  const std::string path = "manifold";
  std::string kind = as_string(member(section, path, "kind"), path + ".kind");
  if (kind == "torus") {
    reject_unknown(section, path, {"kind", "dim", "n", "side_length"});
    config.grid_kind = GridKind::TorusPeriodic;
    config.dim = section.contains("dim")
                     ? as_int(section["dim"], path + ".dim")
                     : 2;
    if (config.dim != 1 && config.dim != 2) {
      fail(path + ".dim", "must be 1 or 2");
    }
    config.n = as_int(member(section, path, "n"), path + ".n");
    config.side_length =
        section.contains("side_length")
            ? as_number(section["side_length"], path + ".side_length")
            : 1.0;
  } else if (kind == "sphere") {
    reject_unknown(section, path, {"kind", "n_theta", "r0"});
    config.grid_kind = GridKind::SphereAxisym;
    config.dim = 2;
    config.n = as_int(member(section, path, "n_theta"), path + ".n_theta");
    config.r0 = section.contains("r0")
                    ? as_number(section["r0"], path + ".r0")
                    : 1.0;
    if (!(config.r0 > 0.0)) fail(path + ".r0", "must be positive");
  } else {
    fail(path + ".kind", "must be \"torus\" or \"sphere\"");
  }
}

void parse_flow(const json& section, ExperimentConfig& config) {
  const std::string path = "flow";
  reject_unknown(section, path, {"equation", "a", "epsilon", "metric"});
  std::string eq =
      as_string(member(section, path, "equation"), path + ".equation");
  std::string metric =
      section.contains("metric")
          ? as_string(section["metric"], path + ".metric")
          : std::string();

  bool sphere = config.grid_kind == GridKind::SphereAxisym;
  if (eq == "log_heat") {
    config.equation = Equation::LogHeat;
    config.a = as_number(member(section, path, "a"), path + ".a");
    if (section.contains("epsilon")) {
      fail(path + ".epsilon", "not used by log_heat");
    }
    if (!metric.empty() && metric != "static") {
      fail(path + ".metric", "log_heat runs on a static metric");
    }
    config.metric_kind =
        sphere ? MetricKind::StaticSphere : MetricKind::StaticTorus;
  } else if (eq == "log_sobolev_eps") {
    config.equation = Equation::LogSobolevEps;
    if (section.contains("a")) fail(path + ".a", "not used by log_sobolev_eps");
    config.epsilon =
        as_number(member(section, path, "epsilon"), path + ".epsilon");
    if (!sphere) fail(path + ".equation", "log_sobolev_eps needs the sphere");
    if (metric.empty()) metric = config.epsilon == 0.0 ? "static" : "eps_ricci";
    if (metric == "eps_ricci") {
      config.metric_kind = MetricKind::EpsRicciSphere;
    } else if (metric == "static") {
      config.metric_kind = MetricKind::StaticSphere;
    } else {
      fail(path + ".metric", "must be \"eps_ricci\" or \"static\"");
    }
  } else if (eq == "log_sobolev") {
    config.equation = Equation::LogSobolev;
    if (section.contains("a")) fail(path + ".a", "not used by log_sobolev");
    if (section.contains("epsilon")) {
      fail(path + ".epsilon", "not used by log_sobolev");
    }
    if (sphere) {
      if (!metric.empty() && metric != "ricci") {
        fail(path + ".metric", "log_sobolev on the sphere runs under ricci");
      }
      config.metric_kind = MetricKind::RicciSphere;
    } else {
      if (!metric.empty() && metric != "static") {
        fail(path + ".metric", "log_sobolev on the torus is static");
      }
      config.metric_kind = MetricKind::StaticTorus;
    }
  } else {
    fail(path + ".equation",
         "must be \"log_heat\", \"log_sobolev_eps\", or \"log_sobolev\"");
  }
}

void parse_time(const json& section, ExperimentConfig& config) {
  const std::string path = "time";
  reject_unknown(section, path,
                 {"dt_safety", "t_end", "t_min", "output_count"});
  if (section.contains("dt_safety")) {
    config.dt_safety = as_number(section["dt_safety"], path + ".dt_safety");
  }
  config.t_end = as_number(member(section, path, "t_end"), path + ".t_end");
  if (section.contains("t_min")) {
    config.t_min = as_number(section["t_min"], path + ".t_min");
  }
  if (section.contains("output_count")) {
    config.output_count =
        as_int(section["output_count"], path + ".output_count");
  }
  if (config.output_count < 1) fail(path + ".output_count", "must be >= 1");
  if (!(config.t_min >= 0.0)) fail(path + ".t_min", "must be >= 0");
  if (!(config.t_min < config.t_end)) {
    fail(path + ".t_min", "must be below t_end");
  }
}

void parse_init(const json& section, ExperimentConfig& config) {
  const std::string path = "init";
  reject_unknown(section, path, {"seed", "max_freq", "amplitude", "offset"});
  if (section.contains("seed")) {
    config.init.seed = as_seed(section["seed"], path + ".seed");
  }
  if (section.contains("max_freq")) {
    config.init.max_freq = as_int(section["max_freq"], path + ".max_freq");
  }
  if (section.contains("amplitude")) {
    config.init.amplitude = as_number(section["amplitude"], path + ".amplitude");
  }
  if (section.contains("offset")) {
    config.init.offset = as_number(section["offset"], path + ".offset");
  }
  if (config.init.max_freq < 1) fail(path + ".max_freq", "must be >= 1");
  if (!(config.init.amplitude > 0.0)) {
    fail(path + ".amplitude", "must be positive");
  }
}

void parse_constrained(const json& section, ExperimentConfig& config) {
  const std::string path = "constrained";
  reject_unknown(section, path, {"enabled", "c0", "K", "seed2"});
  config.constrained_enabled =
      as_bool(member(section, path, "enabled"), path + ".enabled");
  if (section.contains("c0")) {
    config.c0 = as_number(section["c0"], path + ".c0");
  }
  if (section.contains("K")) config.K = as_number(section["K"], path + ".K");
  if (section.contains("seed2")) {
    config.seed2 = as_seed(section["seed2"], path + ".seed2");
  }
  if (config.constrained_enabled) {
    if (!(config.c0 > 0.0 && config.c0 < 1.0)) {
      fail(path + ".c0", "must lie in (0, 1)");
    }
    if (!(config.K >= 0.0)) fail(path + ".K", "must be >= 0");
  }
}

void parse_check(const json& section, ExperimentConfig& config) {
  const std::string path = "check";
  reject_unknown(section, path, {"kinds", "tol_C"});
  const json& kinds = member(section, path, "kinds");
  if (!kinds.is_array() || kinds.empty()) {
    fail(path + ".kinds", "must be a non-empty list of check names");
  }
  for (const json& entry : kinds) {
    std::string kind = as_string(entry, path + ".kinds");
    bool known = kind == "integrated" ||
                 std::find(kPointwiseKinds.begin(), kPointwiseKinds.end(),
                           kind) != kPointwiseKinds.end();
    if (!known) fail(path + ".kinds", "unknown check kind \"" + kind + "\"");
    if (std::find(config.kinds.begin(), config.kinds.end(), kind) !=
        config.kinds.end()) {
      fail(path + ".kinds", "duplicate check kind \"" + kind + "\"");
    }
    config.kinds.push_back(kind);
  }
  if (section.contains("tol_C")) {
    config.tol_c = as_number(section["tol_C"], path + ".tol_C");
  }
  if (!(config.tol_c > 0.0)) fail(path + ".tol_C", "must be positive");
}

void parse_sweep(const json& section, ExperimentConfig& config) {
  const std::string path = "sweep";
  reject_unknown(section, path, {"a", "epsilon", "seeds", "resolutions", "cap"});
  config.has_sweep = true;
  auto list_of = [&](const char* key, auto convert, auto& out) {
    if (!section.contains(key)) return;
    const json& arr = section[key];
    std::string field = path + "." + key;
    if (!arr.is_array() || arr.empty()) {
      fail(field, "must be a non-empty list");
    }
    for (const json& entry : arr) out.push_back(convert(entry, field));
  };
  list_of("a", as_number, config.sweep_a);
  list_of("epsilon", as_number, config.sweep_epsilon);
  list_of("seeds", as_seed, config.sweep_seeds);
  list_of("resolutions", as_int, config.sweep_resolutions);
  if (section.contains("cap")) {
    config.sweep_cap = as_int(section["cap"], path + ".cap");
    if (config.sweep_cap < 1) fail(path + ".cap", "must be >= 1");
  }
  if (!config.sweep_a.empty() && config.equation != Equation::LogHeat) {
    fail(path + ".a", "only log_heat sweeps over a");
  }
  if (!config.sweep_epsilon.empty() &&
      config.equation != Equation::LogSobolevEps) {
    fail(path + ".epsilon", "only log_sobolev_eps sweeps over epsilon");
  }
  for (std::size_t k = 0; k + 1 < config.sweep_resolutions.size(); ++k) {
    if (config.sweep_resolutions[k + 1] <= config.sweep_resolutions[k]) {
      fail(path + ".resolutions", "must be strictly increasing");
    }
  }
}

/// Full cross-validation: builds the grid and flow and runs the dynamic
/// validators so configs fail fast with the same messages a run would give.
void cross_validate(const ExperimentConfig& config) {
  ManifoldGrid grid = make_grid(config);
  FlowSpec spec = make_flow_spec(config);
  validate_for_run(grid, spec);
  for (const std::string& kind : config.kinds) {
    if (!kind_allowed(kind, config.equation)) {
      fail("check.kinds",
           "check \"" + kind + "\" does not apply to this flow equation");
    }
    if (kind_needs_pair(kind) && !config.constrained_enabled) {
      fail("check.kinds",
           "check \"" + kind + "\" needs constrained.enabled = true");
    }
  }
  if (config.constrained_enabled) {
    if (config.equation != Equation::LogHeat) {
      fail("constrained.enabled", "pair runs apply to log_heat only");
    }
    if (config.a < 0.0) {
      if (config.K < constraint_floor(config.c0)) {
        fail("constrained.K", "below the admissible floor for this c0");
      }
      double ric_min = curvature(grid, config.r0 * config.r0)
                           .ricci_min_eigenvalue;
      if (ric_min < -config.a * config.K) {
        fail("constrained.K",
             "geometry violates the curvature bound -a*K");
      }
    }
  }
  if (config.equation == Equation::LogSobolev &&
      !(config.init.offset > config.init.amplitude)) {
    fail("init.offset",
         "normalized runs need offset > amplitude so the field starts in "
         "(0, 1)");
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw std::invalid_argument(std::string("config parse error: ") +
                                err.what());
  }
  reject_unknown(doc, "config",
                 {"manifold", "flow", "time", "init", "constrained", "check",
                  "sweep"});
  ExperimentConfig config;
  parse_manifold(member(doc, "config", "manifold"), config);
  parse_flow(member(doc, "config", "flow"), config);
  parse_time(member(doc, "config", "time"), config);
  if (doc.contains("init")) parse_init(doc["init"], config);
  if (doc.contains("constrained")) parse_constrained(doc["constrained"], config);
  parse_check(member(doc, "config", "check"), config);
  if (doc.contains("sweep")) parse_sweep(doc["sweep"], config);
  cross_validate(config);
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::invalid_argument("config file not readable: " + path);
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

ManifoldGrid make_grid(const ExperimentConfig& config) {
  if (config.grid_kind == GridKind::SphereAxisym) {
    return build_sphere(config.n);
  }
  return build_torus(config.dim, config.n, config.side_length);
}

FlowSpec make_flow_spec(const ExperimentConfig& config) {
  FlowSpec spec;
  spec.equation = config.equation;
  spec.a = config.a;
  spec.epsilon = config.epsilon;
  switch (config.metric_kind) {
    case MetricKind::StaticTorus:
      spec.metric = MetricSchedule::static_torus();
      break;
    case MetricKind::StaticSphere:
      spec.metric = MetricSchedule::static_sphere(config.r0);
      break;
    case MetricKind::EpsRicciSphere:
      spec.metric = MetricSchedule::eps_ricci_sphere(config.r0, config.epsilon);
      break;
    case MetricKind::RicciSphere:
      spec.metric = MetricSchedule::ricci_sphere(config.r0);
      break;
  }
  spec.dt_safety = config.dt_safety;
  spec.t_end = config.t_end;
  spec.output_times.clear();
  for (int k = 1; k <= config.output_count; ++k) {
    spec.output_times.push_back(config.t_end * k / config.output_count);
  }
  return spec;
}

Trajectory run_experiment(const ExperimentConfig& config) {
  ManifoldGrid grid = make_grid(config);
  FlowSpec spec = make_flow_spec(config);
  if (config.constrained_enabled) {
    auto [phi0, psi0] = initial_pair(grid, config.init, config.seed2,
                                     config.c0);
    // The ratio minimum obeys d/dt h >= a h ln h, so the floor c0 is only
    // preserved by the flow when a < 0; for a > 0 only h < 1 is monitored.
    std::optional<double> floor;
    if (config.a < 0.0) floor = config.c0;
    return run_pair(grid, spec, phi0, psi0, floor);
  }
  ScalarField w0 = initial_field(grid, config.init);
  return run(grid, spec, w0);
}

void corrupt_last_snapshot(Trajectory& traj) {
  if (traj.snapshots.empty()) return;
  Snapshot& snap = traj.snapshots.back();
  const double scale = std::exp(-50.0);
  snap.field.values.at(0) *= scale;
  if (snap.partner.has_value()) snap.partner->values.at(0) *= scale;
}

namespace {

HarnackKind kind_from_name(const std::string& kind,
                           const ExperimentConfig& config) {
  std::optional<ConstraintParams> params;
  if (config.constrained_enabled) {
    params = ConstraintParams{config.c0, config.K};
  }
  if (kind == "trace") return HarnackKind::trace(config.a);
  if (kind == "constrained_trace") {
    return HarnackKind::constrained_trace(config.a, params);
  }
  if (kind == "matrix") return HarnackKind::matrix(config.a);
  if (kind == "constrained_matrix") {
    return HarnackKind::constrained_matrix(config.a, params);
  }
  if (kind == "interpolated") {
    return HarnackKind::interpolated_surface(config.epsilon);
  }
  if (kind == "gradient") return HarnackKind::gradient_estimate();
  throw std::invalid_argument("unknown check kind: " + kind);
}

KindOutcome integrated_outcome(const Trajectory& traj,
                               const ExperimentConfig& config,
                               double tolerance) {
  KindOutcome outcome;
  outcome.kind = config.equation == Equation::LogHeat
                     ? "integrated_trace"
                     : "integrated_interpolated";
  std::vector<double> times;
  for (const Snapshot& snap : traj.snapshots) {
    if (snap.time >= config.t_min - 1e-15) times.push_back(snap.time);
  }
  if (times.size() < 2 || times.back() - times.front() < kMinTimeGap) {
    throw std::invalid_argument(
        "integrated check: snapshot window too short for the minimum time "
        "gap");
  }
  SeededRng rng(config.init.seed + 1000003);
  outcome.pass = true;
  outcome.worst_margin = std::numeric_limits<double>::infinity();
  for (int quad = 0; quad < kIntegratedQuadruples; ++quad) {
    std::size_t x1 = static_cast<std::size_t>(
        rng.raw() % traj.grid.node_count());
    std::size_t x2 = static_cast<std::size_t>(
        rng.raw() % traj.grid.node_count());
    double t1 = 0.0, t2 = 0.0;
    bool found = false;
    for (int attempt = 0; attempt < 1000 && !found; ++attempt) {
      std::size_t i = static_cast<std::size_t>(rng.raw() % times.size());
      std::size_t j = static_cast<std::size_t>(rng.raw() % times.size());
      if (i == j) continue;
      t1 = std::min(times[i], times[j]);
      t2 = std::max(times[i], times[j]);
      found = t2 - t1 >= kMinTimeGap;
    }
    if (!found) {
      throw std::invalid_argument(
          "integrated check: could not draw times with the minimum gap");
    }
    PathCheckResult result =
        integrated_check(traj, x1, t1, x2, t2, tolerance);
    MarginRecord rec;
    rec.time = t2;
    rec.min_margin = result.rhs - result.lhs;
    rec.argmin_index = x2;
    rec.tolerance = tolerance;
    if (rec.min_margin < outcome.worst_margin) {
      outcome.worst_margin = rec.min_margin;
      outcome.worst_time = rec.time;
      outcome.worst_index = rec.argmin_index;
    }
    outcome.records.push_back(rec);
    outcome.pass = outcome.pass && result.satisfied;
  }
  return outcome;
}

}  // namespace

ExperimentOutcome evaluate_checks(const Trajectory& traj,
                                  const ExperimentConfig& config) {
  ExperimentOutcome outcome;
  outcome.tolerance = margin_tolerance(traj, config.tol_c);
  outcome.all_pass = true;
  for (const std::string& kind : config.kinds) {
    KindOutcome ko;
    if (kind == "integrated") {
      ko = integrated_outcome(traj, config, outcome.tolerance);
    } else {
      HarnackKind hk = kind_from_name(kind, config);
      VerificationReport report =
          verify(traj, hk, config.t_min, outcome.tolerance);
      ko.kind = kind_name(hk);
      ko.records = report.records;
      ko.worst_margin = report.worst_margin;
      ko.worst_time = report.worst_time;
      ko.worst_index = report.worst_index;
      ko.pass = report.overall_pass;
    }
    outcome.all_pass = outcome.all_pass && ko.pass;
    outcome.kinds.push_back(std::move(ko));
  }
  return outcome;
}

std::string csv_float(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

std::string artifact_comment(const ExperimentConfig& config) {
  std::string line = "# generator=";
  line += SeededRng::name();
  line += " seed=" + std::to_string(config.init.seed);
  if (config.constrained_enabled) {
    line += " seed2=" + std::to_string(config.seed2);
  }
  return line;
}

void write_rows(std::ofstream& out, const KindOutcome& ko) {
  for (const MarginRecord& rec : ko.records) {
    out << csv_float(rec.time) << ',' << ko.kind << ','
        << csv_float(rec.min_margin) << ',' << rec.argmin_index << ','
        << csv_float(rec.tolerance) << '\n';
  }
}

std::ofstream open_artifact(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::invalid_argument("cannot write artifact: " + path);
  }
  return out;
}

}  // namespace

ArtifactPaths write_artifacts(const ExperimentOutcome& outcome,
                              const ExperimentConfig& config,
                              const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw std::invalid_argument("cannot create output directory: " + out_dir);
  }
  ArtifactPaths paths;
  const std::string comment = artifact_comment(config);

  for (const KindOutcome& ko : outcome.kinds) {
    std::string path = out_dir + "/" + ko.kind + ".csv";
    std::ofstream out = open_artifact(path);
    out << comment << '\n' << kMarginHeader << '\n';
    write_rows(out, ko);
    paths.kind_csvs.push_back(path);
  }

  paths.aggregate_csv = out_dir + "/margins.csv";
  {
    std::ofstream out = open_artifact(paths.aggregate_csv);
    out << comment << '\n' << kMarginHeader << '\n';
    for (const KindOutcome& ko : outcome.kinds) write_rows(out, ko);
  }

  paths.summary_txt = out_dir + "/summary.txt";
  {
    std::ofstream out = open_artifact(paths.summary_txt);
    out << "tolerance: " << csv_float(outcome.tolerance) << '\n';
    for (const KindOutcome& ko : outcome.kinds) {
      out << ko.kind << ": " << (ko.pass ? "PASS" : "FAIL")
          << " worst_margin=" << csv_float(ko.worst_margin)
          << " at t=" << csv_float(ko.worst_time)
          << " node=" << ko.worst_index << '\n';
    }
    out << "overall: " << (outcome.all_pass ? "PASS" : "FAIL") << '\n';
  }
  return paths;
}

int sweep_thread_budget() {
  const char* env = std::getenv("HARNACK_LAB_THREADS");
  if (env != nullptr && *env != '\0') {
    char* end = nullptr;
    long value = std::strtol(env, &end, 10);
    if (end == nullptr || *end != '\0' || value < 1) {
      throw std::invalid_argument(
          "HARNACK_LAB_THREADS must be a positive integer");
    }
    return static_cast<int>(std::min<long>(value, 64));
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config,
                                int max_threads) {
  if (!config.has_sweep) {
    throw std::invalid_argument("sweep: config has no sweep section");
  }
  if (max_threads < 1) {
    throw std::invalid_argument("sweep: max_threads must be >= 1");
  }
  std::vector<double> a_list =
      config.sweep_a.empty() ? std::vector<double>{config.a} : config.sweep_a;
  std::vector<double> eps_list = config.sweep_epsilon.empty()
                                     ? std::vector<double>{config.epsilon}
                                     : config.sweep_epsilon;
  std::vector<std::uint64_t> seed_list =
      config.sweep_seeds.empty() ? std::vector<std::uint64_t>{config.init.seed}
                                 : config.sweep_seeds;
  std::vector<int> n_list = config.sweep_resolutions.empty()
                                ? std::vector<int>{config.n}
                                : config.sweep_resolutions;

  struct Combo {
    double a;
    double epsilon;
    std::uint64_t seed;
    int n;
  };
  std::vector<Combo> combos;
  for (double a : a_list) {
    for (double eps : eps_list) {
      for (std::uint64_t seed : seed_list) {
        for (int n : n_list) combos.push_back({a, eps, seed, n});
      }
    }
  }
  if (static_cast<int>(combos.size()) > config.sweep_cap) {
    throw std::invalid_argument(
        "sweep: combo count " + std::to_string(combos.size()) +
        " exceeds the cap " + std::to_string(config.sweep_cap));
  }

  auto combo_config = [&](const Combo& combo) {
    ExperimentConfig c = config;
    c.a = combo.a;
    c.epsilon = combo.epsilon;
    c.init.seed = combo.seed;
    c.n = combo.n;
    c.has_sweep = false;
    return c;
  };
  // Validate every combo before spending compute on any of them.
  for (const Combo& combo : combos) cross_validate(combo_config(combo));

  std::vector<ExperimentOutcome> outcomes(combos.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      std::size_t idx = next.fetch_add(1);
      if (idx >= combos.size()) return;
      try {
        ExperimentConfig c = combo_config(combos[idx]);
        Trajectory traj = run_experiment(c);
        outcomes[idx] = evaluate_checks(traj, c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  int thread_count =
      std::min<int>(max_threads, static_cast<int>(combos.size()));
  std::vector<std::thread> pool;
  for (int k = 0; k < thread_count; ++k) pool.emplace_back(worker);
  for (std::thread& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);

  std::vector<SweepRow> rows;
  for (std::size_t idx = 0; idx < combos.size(); ++idx) {
    for (const KindOutcome& ko : outcomes[idx].kinds) {
      SweepRow row;
      row.a = combos[idx].a;
      row.epsilon = combos[idx].epsilon;
      row.seed = combos[idx].seed;
      row.n = combos[idx].n;
      row.kind = ko.kind;
      row.worst_margin = ko.worst_margin;
      row.pass = ko.pass;
      row.order = std::numeric_limits<double>::quiet_NaN();
      rows.push_back(row);
    }
  }

  // Observed refinement order of the worst margin across a resolution
  // ladder, from the last three rungs: ln(|m0-m1|/|m1-m2|) / ln(n2/n1).
  if (n_list.size() >= 3) {
    for (SweepRow& row : rows) {
      std::vector<const SweepRow*> ladder;
      for (const SweepRow& other : rows) {
        if (other.a == row.a && other.epsilon == row.epsilon &&
            other.seed == row.seed && other.kind == row.kind) {
          ladder.push_back(&other);
        }
      }
      if (ladder.size() < 3) continue;
      const SweepRow* r0 = ladder[ladder.size() - 3];
      const SweepRow* r1 = ladder[ladder.size() - 2];
      const SweepRow* r2 = ladder[ladder.size() - 1];
      double d1 = std::abs(r0->worst_margin - r1->worst_margin);
      double d2 = std::abs(r1->worst_margin - r2->worst_margin);
      if (d1 > 0.0 && d2 > 0.0) {
        row.order = std::log(d1 / d2) /
                    std::log(static_cast<double>(r2->n) /
                             static_cast<double>(r1->n));
        row.has_order = true;
      }
    }
  }
  return rows;
}

std::string write_sweep_csv(const std::vector<SweepRow>& rows,
                            const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw std::invalid_argument("cannot create output directory: " + out_dir);
  }
  std::string path = out_dir + "/sweep.csv";
  std::ofstream out = open_artifact(path);
  out << "# generator=" << SeededRng::name() << '\n' << kSweepHeader << '\n';
  for (const SweepRow& row : rows) {
    out << csv_float(row.a) << ',' << csv_float(row.epsilon) << ','
        << row.seed << ',' << row.n << ',' << row.kind << ','
        << csv_float(row.worst_margin) << ',' << (row.pass ? 1 : 0) << ','
        << csv_float(row.order) << '\n';
  }
  return path;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell += ch;
    }
  }
  cells.push_back(cell);
  return cells;
}

struct KindAggregate {
  bool seen = false;
  bool pass = true;
  double worst_margin = std::numeric_limits<double>::infinity();
};

}  // namespace

std::string make_report(const std::string& artifact_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(artifact_dir)) {
    throw std::invalid_argument("report: not a directory: " + artifact_dir);
  }
  const std::vector<std::string> canonical = {
      "trace",        "constrained_trace", "matrix",
      "constrained_matrix", "interpolated",      "gradient",
      "integrated_trace",   "integrated_interpolated"};
  std::map<std::string, KindAggregate> agg;
  for (const std::string& kind : canonical) agg[kind] = KindAggregate{};

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(artifact_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  std::size_t rows_read = 0;
  for (const fs::path& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) continue;
    std::string line;
    std::string header;
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] == '#') continue;
      header = line;
      break;
    }
    bool margin_schema = header == kMarginHeader;
    bool sweep_schema = header == kSweepHeader;
    if (!margin_schema && !sweep_schema) continue;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> cells = split_csv_line(line);
      std::string kind;
      double margin = 0.0;
      bool row_pass = false;
      if (margin_schema && cells.size() == 5) {
        kind = cells[1];
        margin = std::strtod(cells[2].c_str(), nullptr);
        double tol = std::strtod(cells[4].c_str(), nullptr);
        row_pass = margin >= -tol;
      } else if (sweep_schema && cells.size() == 8) {
        kind = cells[4];
        margin = std::strtod(cells[5].c_str(), nullptr);
        row_pass = cells[6] == "1";
      } else {
        continue;
      }
      auto it = agg.find(kind);
      if (it == agg.end()) continue;
      it->second.seen = true;
      it->second.pass = it->second.pass && row_pass;
      it->second.worst_margin = std::min(it->second.worst_margin, margin);
      ++rows_read;
    }
  }
  if (rows_read == 0) {
    throw std::invalid_argument("report: no margin artifacts found in " +
                                artifact_dir);
  }

  std::ostringstream out;
  out << "check                     status    worst_margin\n";
  for (const std::string& kind : canonical) {
    const KindAggregate& entry = agg.at(kind);
    std::string status =
        entry.seen ? (entry.pass ? "pass" : "FAIL") : "not run";
    out << kind;
    for (std::size_t pad = kind.size(); pad < 26; ++pad) out << ' ';
    out << status;
    for (std::size_t pad = status.size(); pad < 10; ++pad) out << ' ';
    if (entry.seen) {
      out << csv_float(entry.worst_margin);
    } else {
      out << '-';
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace harnacklab
