#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"

#include "asyncon/cli.hpp"
#include "asyncon/io.hpp"

using namespace asyncon;
namespace fs = std::filesystem;

namespace {

const fs::path kData = ASYNCON_DATA_DIR;

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "asyncon");
  std::ostringstream out, err;
  const int status = cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST_CASE("parse_vector") {
  CHECK(cli::parse_vector("3,2,1,3,5") == std::vector<double>{3, 2, 1, 3, 5});
  CHECK(cli::parse_vector(" 1.5 , -2 ") == std::vector<double>{1.5, -2});
  CHECK_THROWS_AS(cli::parse_vector("1,,2"), Error);
  CHECK_THROWS_AS(cli::parse_vector("1,x"), Error);
}

TEST_CASE("validate") {
  cli::ExperimentConfig c;
  CHECK_THROWS_WITH(cli::validate(c, true), "--topology is required");
  c.topology = kData / "nope.csv";
  CHECK_THROWS_WITH(cli::validate(c, true), doctest::Contains("does not exist"));
  c.topology = kData / "example1.csv";
  CHECK_NOTHROW(cli::validate(c, true));
  c.samples = 0;
  CHECK_THROWS_AS(cli::validate(c, true), Error);
  c.samples = 1;
  c.ctol = 0;
  CHECK_THROWS_AS(cli::validate(c, true), Error);
}

TEST_CASE("analyze writes a report with 1-based leaders") {
  TempDir dir("asyncon_cli_analyze");
  const auto r = run_cli({"analyze", "--topology", (kData / "example2.csv").string(), "--x0", "3,2,1,3,5",
                          "--out", dir.path.string()});
  REQUIRE(r.status == 0);
  CHECK(r.out.find("leaders: 1 4") != std::string::npos);
  const auto j = read_json(dir.path / "report.json");
  for (const char* key : {"n", "leaders", "m", "has_spanning_tree", "is_m_rooted_leader_form", "rho_margin",
                          "async_reachable", "theorem1_applies", "rho_f", "mu", "fstar",
                          "predicted_sync_value", "predicted_limits", "notes"}) {
    CHECK_MESSAGE(j.contains(key), key);
  }
  CHECK(j["leaders"] == nlohmann::json::array({1, 4}));
  CHECK(j["theorem1_applies"] == true);
  CHECK(j["mu"].is_null());
  CHECK(std::abs(j["predicted_sync_value"].get<double>() - 3.0) < 1e-12);
}

TEST_CASE("simulate writes the trajectory table") {
  TempDir dir("asyncon_cli_simulate");
  const auto topo = (kData / "example1.csv").string();
  auto r = run_cli({"simulate", "--topology", topo, "--x0", "3,2,1,3,5", "--steps", "50", "--out",
                    dir.path.string()});
  REQUIRE(r.status == 0);
  CHECK(first_line(dir.path / "trajectory.csv") == "step,x1,x2,x3,x4,x5,norm");
  std::ifstream in(dir.path / "trajectory.csv");
  long lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 52);

  r = run_cli({"simulate", "--topology", topo, "--x0", "3,2,1,3,5", "--steps", "50", "--delay-kind", "uniform",
               "--tau-d", "2", "--format", "json", "--out", dir.path.string()});
  REQUIRE(r.status == 0);
  const auto j = read_json(dir.path / "trajectory.json");
  CHECK(j.contains("states"));
  CHECK(j.contains("norm"));
  CHECK(j.contains("consensus"));
  CHECK(j["states"].size() == 51);
}

TEST_CASE("montecarlo writes tables and summary") {
  TempDir dir("asyncon_cli_mc");
  const auto r = run_cli({"montecarlo", "--topology", (kData / "example1.csv").string(), "--x0", "3,2,1,3,5",
                          "--tau-d", "5", "--delay-kind", "uniform", "--seed", "7", "--samples", "5", "--steps",
                          "2000", "--out", dir.path.string()});
  REQUIRE(r.status == 0);
  CHECK(first_line(dir.path / "norms.csv") == "step,norm,sample_id");
  CHECK(first_line(dir.path / "consensus.csv") == "sample_id,seed,consensus_value,consensus_step");
  CHECK(first_line(dir.path / "sync.csv") == "step,x1,x2,x3,x4,x5,norm");
  const auto s = read_json(dir.path / "summary.json");
  for (const char* key : {"master_seed", "samples", "steps", "non_converged", "mean", "std", "min", "max"}) {
    CHECK_MESSAGE(s["ensemble"].contains(key), key);
  }
  for (const char* key : {"sync_value", "max_abs_deviation", "std", "fraction_within", "within_tol", "considered",
                          "histogram"}) {
    CHECK_MESSAGE(s["discrepancy"].contains(key), key);
  }
  CHECK(s["discrepancy"]["histogram"].contains("edges"));
  CHECK(s["discrepancy"]["histogram"].contains("counts"));
  CHECK(s["config"]["seed"] == 7);
  CHECK(s["ensemble"]["samples"] == 5);

  // The seed column is the derived per-sample seed.
  std::ifstream in(dir.path / "consensus.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(row.rfind("0," + std::to_string(sample_seed(7, 0)) + ",", 0) == 0);
}

TEST_CASE("montecarlo output is identical for any thread count") {
  TempDir a("asyncon_cli_threads_a");
  TempDir b("asyncon_cli_threads_b");
  const std::vector<std::string> common = {"montecarlo", "--topology", (kData / "example1.csv").string(),
                                           "--x0", "3,2,1,3,5", "--tau-d", "3", "--delay-kind", "shared",
                                           "--samples", "12", "--steps", "500"};
  auto args_a = common;
  args_a.insert(args_a.end(), {"--threads", "1", "--out", a.path.string()});
  auto args_b = common;
  args_b.insert(args_b.end(), {"--threads", "4", "--out", b.path.string()});
  REQUIRE(run_cli(args_a).status == 0);
  REQUIRE(run_cli(args_b).status == 0);
  for (const char* f : {"norms.csv", "consensus.csv", "sync.csv"}) CHECK(slurp(a.path / f) == slurp(b.path / f));
}

TEST_CASE("config file and flag precedence") {
  TempDir dir("asyncon_cli_config");
  const auto cfg = dir.path / "run.json";
  std::ofstream(cfg) << nlohmann::json{{"topology", (kData / "example2.csv").string()},
                                       {"x0", {3, 2, 1, 3, 5}},
                                       {"tau_d", 2},
                                       {"delay_kind", "uniform"},
                                       {"samples", 4},
                                       {"steps", 300},
                                       {"seed", 5},
                                       {"out", (dir.path / "from_config").string()}}
                            .dump();
  auto r = run_cli({"montecarlo", "--config", cfg.string()});
  REQUIRE(r.status == 0);
  CHECK(read_json(dir.path / "from_config" / "summary.json")["config"]["seed"] == 5);

  r = run_cli({"montecarlo", "--config", cfg.string(), "--seed", "9", "--out", (dir.path / "flag").string()});
  REQUIRE(r.status == 0);
  const auto s = read_json(dir.path / "flag" / "summary.json");
  CHECK(s["config"]["seed"] == 9);
  CHECK(s["config"]["tau_d"] == 2);

  std::ofstream(dir.path / "bad.json") << "{not json";
  r = run_cli({"montecarlo", "--config", (dir.path / "bad.json").string()});
  CHECK(r.status == 1);
  CHECK(r.err.find("config file") != std::string::npos);
}

TEST_CASE("ASYNCON_OUT sets the default output directory") {
  TempDir dir("asyncon_cli_env");
  ::setenv("ASYNCON_OUT", dir.path.string().c_str(), 1);
  const auto r = run_cli({"analyze", "--topology", (kData / "example1.csv").string()});
  ::unsetenv("ASYNCON_OUT");
  REQUIRE(r.status == 0);
  CHECK(fs::exists(dir.path / "report.json"));
}

TEST_CASE("errors are reported, not thrown") {
  auto r = run_cli({"analyze", "--topology", "/definitely/missing.csv"});
  CHECK(r.status == 1);
  CHECK(r.err == "error: topology file '/definitely/missing.csv' does not exist\n");

  TempDir dir("asyncon_cli_errors");
  std::ofstream(dir.path / "bad.csv") << "1,0\n0.5,-0.5\n";
  r = run_cli({"analyze", "--topology", (dir.path / "bad.csv").string(), "--out", dir.path.string()});
  CHECK(r.status == 1);
  CHECK(r.err.find("row 2, column 2") != std::string::npos);

  r = run_cli({"simulate", "--topology", (kData / "example1.csv").string(), "--x0", "1,2", "--out",
               dir.path.string()});
  CHECK(r.status == 1);
  CHECK(r.err.find("2 entries for 5 agents") != std::string::npos);

  CHECK(run_cli({"reproduce", "example3"}).status != 0);
  CHECK(run_cli({}).status != 0);
  CHECK(run_cli({"simulate", "--topology", (kData / "example1.csv").string(), "--delay-kind", "bogus"}).status != 0);
}

TEST_CASE("reproduce writes the example bundle") {
  TempDir dir("asyncon_cli_reproduce");
  const auto r = run_cli({"reproduce", "example2", "--samples", "10", "--out", dir.path.string()});
  REQUIRE(r.status == 0);
  for (const char* f : {"topology.csv", "report.json", "norms.csv", "consensus.csv", "sync.csv", "summary.json"}) {
    CHECK_MESSAGE(fs::exists(dir.path / f), f);
  }
  CHECK(load_topology_file(dir.path / "topology.csv").weights() == oracle::example2());
  const auto s = read_json(dir.path / "summary.json");
  CHECK(s["config"]["tau_d"] == 5);
  CHECK(s["config"]["seed"] == 42);
  CHECK(s["config"]["delay_kind"] == "uniform");
  CHECK(s["ensemble"]["non_converged"] == 0);
}

TEST_CASE("format_double") {
  CHECK(io::format_double(0.1) == "0.10000000000000001");
  CHECK(io::format_double(std::nan("")) == "nan");
  CHECK(std::stod(io::format_double(2.9375866851594328)) == 2.9375866851594328);
}
