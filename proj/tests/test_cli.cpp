/// @file test_cli.cpp
/// @brief End-to-end contract of the command-line tool: exit codes, artifact
/// bytes, determinism, fault injection, and the closed-form defect demo.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("harnack_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int counter;
};
int TempDir::counter = 0;

CommandResult run_cli(const std::string& args) {
  TempDir scratch;
  fs::path log = scratch.path / "out.txt";
  std::string command = std::string(HARNACK_CLI_PATH) + " " + args + " > " +
                        log.string() + " 2>&1";
  int status = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::ostringstream text;
  text << in.rdbuf();
  result.output = text.str();
  return result;
}

fs::path write_config(const fs::path& dir, const std::string& name,
                      const std::string& text) {
  fs::path p = dir / name;
  std::ofstream out(p);
  out << text;
  return p;
}

const char* kTraceConfig = R"json({
  "manifold": {"kind": "torus", "dim": 1, "n": 64, "side_length": 1.0},
  "flow": {"equation": "log_heat", "a": 1.0},
  "time": {"t_end": 0.2, "t_min": 0.01, "dt_safety": 0.25, "output_count": 4},
  "init": {"seed": 3, "max_freq": 3, "amplitude": 0.5, "offset": 0.0},
  "check": {"kinds": ["trace", "integrated"], "tol_C": 10.0}
})json";

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("help and argument errors") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("run /nonexistent/config.json").exit_code == 2);
}

TEST_CASE("run produces artifacts, passes, and is byte-deterministic") {
  TempDir dir;
  fs::path config = write_config(dir.path, "trace.json", kTraceConfig);
  fs::path out1 = dir.path / "art1";
  fs::path out2 = dir.path / "art2";

  CommandResult first =
      run_cli("run " + config.string() + " --out " + out1.string());
  CHECK(first.exit_code == 0);
  CHECK(first.output.find("overall: PASS") != std::string::npos);
  CHECK(fs::exists(out1 / "trace.csv"));
  CHECK(fs::exists(out1 / "integrated_trace.csv"));
  CHECK(fs::exists(out1 / "margins.csv"));
  CHECK(fs::exists(out1 / "summary.txt"));

  CommandResult second =
      run_cli("run " + config.string() + " --out " + out2.string());
  CHECK(second.exit_code == 0);
  for (const char* name : {"trace.csv", "integrated_trace.csv", "margins.csv",
                           "summary.txt"}) {
    CHECK(read_file(out1 / name) == read_file(out2 / name));
  }

  // The report over the artifacts is green and exits 0.
  CommandResult report = run_cli("report " + out1.string());
  CHECK(report.exit_code == 0);
  CHECK(report.output.find("trace") != std::string::npos);
  CHECK(report.output.find("not run") != std::string::npos);
}

TEST_CASE("verify exit codes: pass, injected fault, config error") {
  TempDir dir;
  fs::path config = write_config(dir.path, "trace.json", kTraceConfig);
  CHECK(run_cli("verify " + config.string()).exit_code == 0);

  CommandResult fault =
      run_cli("verify " + config.string() + " --inject-fault");
  CHECK(fault.exit_code == 1);
  CHECK(fault.output.find("FAIL") != std::string::npos);

  std::string zero_a = kTraceConfig;
  zero_a.replace(zero_a.find("\"a\": 1.0"), 8, "\"a\": 0.0");
  fs::path bad = write_config(dir.path, "zero_a.json", zero_a);
  CommandResult err = run_cli("verify " + bad.string());
  CHECK(err.exit_code == 2);
  CHECK(err.output.find("a is a nonzero real constant") != std::string::npos);
}

TEST_CASE("metric horizon violations exit 2 with a diagnostic") {
  TempDir dir;
  fs::path config = write_config(dir.path, "horizon.json", R"json({
    "manifold": {"kind": "sphere", "n_theta": 32, "r0": 1.0},
    "flow": {"equation": "log_sobolev_eps", "epsilon": 1.0, "metric": "eps_ricci"},
    "time": {"t_end": 0.6, "t_min": 0.01, "dt_safety": 0.25, "output_count": 4},
    "init": {"seed": 3, "max_freq": 3, "amplitude": 0.3, "offset": 1.0},
    "check": {"kinds": ["interpolated"], "tol_C": 10.0}
  })json");
  CommandResult res = run_cli("run " + config.string());
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("horizon") != std::string::npos);
}

TEST_CASE("sweep writes one row per combo and kind") {
  TempDir dir;
  std::string sweep_text = kTraceConfig;
  sweep_text.replace(
      sweep_text.find("\"check\": {\"kinds\": [\"trace\", \"integrated\"], "
                      "\"tol_C\": 10.0}"),
      std::string("\"check\": {\"kinds\": [\"trace\", \"integrated\"], "
                  "\"tol_C\": 10.0}")
          .size(),
      "\"check\": {\"kinds\": [\"trace\"], \"tol_C\": 10.0},\n"
      "\"sweep\": {\"a\": [-1.0, 1.0], \"seeds\": [1, 2, 3, 4, 5]}");
  fs::path config = write_config(dir.path, "sweep.json", sweep_text);
  fs::path out = dir.path / "sw";
  CommandResult res =
      run_cli("sweep " + config.string() + " --out " + out.string());
  CHECK(res.exit_code == 0);
  std::istringstream lines(read_file(out / "sweep.csv"));
  std::string line;
  int rows = 0;
  std::getline(lines, line);  // generator comment
  std::getline(lines, line);
  CHECK(line == "a,epsilon,seed,n,kind,worst_margin,pass,order");
  while (std::getline(lines, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 10);

  std::string empty_list = sweep_text;
  empty_list.replace(empty_list.find("\"seeds\": [1, 2, 3, 4, 5]"),
                     std::string("\"seeds\": [1, 2, 3, 4, 5]").size(),
                     "\"seeds\": []");
  fs::path bad = write_config(dir.path, "empty.json", empty_list);
  CHECK(run_cli("sweep " + bad.string()).exit_code == 2);
}

TEST_CASE("report on an empty directory exits 2") {
  TempDir dir;
  CHECK(run_cli("report " + dir.path.string()).exit_code == 2);
}

TEST_CASE("the closed-form defect demo contrasts the two readings") {
  TempDir dir;
  fs::path config = write_config(dir.path, "trace.json", kTraceConfig);
  CommandResult res =
      run_cli("verify " + config.string() + " --variant-oracle");
  CHECK(res.exit_code == 0);
  auto pos_c = res.output.find("closed-form defect (corrected):");
  auto pos_v = res.output.find("closed-form defect (variant):");
  REQUIRE(pos_c != std::string::npos);
  REQUIRE(pos_v != std::string::npos);
  double corrected = std::stod(
      res.output.substr(pos_c + std::string("closed-form defect (corrected):")
                                    .size()));
  double variant = std::stod(
      res.output.substr(pos_v + std::string("closed-form defect (variant):")
                                    .size()));
  CHECK(corrected <= 1e-8);
  CHECK(variant >= 0.1);
}
