// End-to-end checks of the command-line interface: exit codes, output
// schemas, and byte determinism across repeated runs and worker counts.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TRAJGAME_BIN) + " " + args +
                          " > /dev/null 2> /dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("trajgame_cli_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("solve: deterministic outputs across runs and worker counts") {
  TempDir a("solve_a"), b("solve_b"), c("solve_c");
  REQUIRE(run_cli("solve --config configs/merging.json --out " +
                  a.path.string() + " --workers 1 --seed 3") == 0);
  REQUIRE(run_cli("solve --config configs/merging.json --out " +
                  b.path.string() + " --workers 1 --seed 3") == 0);
  REQUIRE(run_cli("solve --config configs/merging.json --out " +
                  c.path.string() + " --workers 2 --seed 3") == 0);

  const std::string traj_a = slurp(a.path / "trajectories.csv");
  CHECK(traj_a == slurp(b.path / "trajectories.csv"));
  CHECK(traj_a == slurp(c.path / "trajectories.csv"));
  CHECK(slurp(a.path / "summary.json") == slurp(c.path / "summary.json"));

  // Schema of the first line.
  CHECK(traj_a.rfind("t,agent,type,p_x,p_y,theta,v,delta,a,probability\n", 0) ==
        0);
}

TEST_CASE("malformed config exits with code 2 and names the field") {
  TempDir dir("badcfg");
  const fs::path bad = dir.path / "bad.json";
  std::ofstream(bad) << R"({"scenario": "x", "horizon": 10, "dt": 0.1,
    "wheelbase": 2.0, "d_safe": 1.0, "beta": 1.0,
    "agents": [{"initial_state": [0,0,0,1], "q": [1,1,1,1], "r": [1,1]}]})";
  CHECK(run_cli("solve --config " + bad.string() + " --out " +
                dir.path.string()) == 2);

  const fs::path garbled = dir.path / "garbled.json";
  std::ofstream(garbled) << "{ not json";
  CHECK(run_cli("solve --config " + garbled.string() + " --out " +
                dir.path.string()) == 2);
}

TEST_CASE("contingency: per-hypothesis plan files") {
  TempDir dir("contingency");
  REQUIRE(run_cli("contingency --config configs/overtaking.json --out " +
                  dir.path.string() + " --workers 2") == 0);
  CHECK(fs::exists(dir.path / "trajectories.csv"));
  CHECK(fs::exists(dir.path / "plan_h0.csv"));
  CHECK(fs::exists(dir.path / "plan_h1.csv"));
  CHECK(fs::exists(dir.path / "summary.json"));
}

TEST_CASE("simulate: emits a metrics table") {
  TempDir dir("simulate");
  REQUIRE(run_cli("simulate --config configs/merging.json --out " +
                  dir.path.string() +
                  " --setting mle --conditions 2 --type-draws 1 --seed 5") == 0);
  const std::string metrics = slurp(dir.path / "metrics.csv");
  CHECK(metrics.rfind("setting,mean_dv,mean_dx,mean_delta,mean_a,"
                      "mean_min_distance,failures,runs\n",
                      0) == 0);
  CHECK(metrics.find("MLE") != std::string::npos);
}

TEST_CASE("diagnostics stream is emitted only on request") {
  TempDir dir("diag");
  REQUIRE(run_cli("solve --config configs/merging.json --out " +
                  dir.path.string() + " --json-diagnostics") == 0);
  REQUIRE(fs::exists(dir.path / "diagnostics.jsonl"));
  std::ifstream in(dir.path / "diagnostics.jsonl");
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line.find("\"potential\"") != std::string::npos);
  CHECK(line.find("\"alpha\"") != std::string::npos);
  CHECK(line.find("\"kkt_residual\"") != std::string::npos);
  CHECK(line.find("\"wall_ms\"") != std::string::npos);

  TempDir dir2("nodiag");
  REQUIRE(run_cli("solve --config configs/merging.json --out " +
                  dir2.path.string()) == 0);
  CHECK_FALSE(fs::exists(dir2.path / "diagnostics.jsonl"));
}
