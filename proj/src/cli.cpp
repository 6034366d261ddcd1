#include "asyncon/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "asyncon/analysis.hpp"
#include "asyncon/errors.hpp"
#include "asyncon/io.hpp"

namespace asyncon::cli {

namespace {

// Bit-identical to data/example1.csv and data/example2.csv.
constexpr std::string_view kExample1 =
    "0.5,0.5,0,0,0\n"
    "0.4,0.3,0,0,0.3\n"
    "0.1,0.2,0.2,0.4,0.1\n"
    "0,0,0,0.7,0.3\n"
    "0.1,0.5,0.1,0.2,0.1\n";

constexpr std::string_view kExample2 =
    "1,0,0,0,0\n"
    "0.4,0.3,0,0,0.3\n"
    "0.1,0.2,0.2,0.4,0.1\n"
    "0,0,0,1,0\n"
    "0.1,0.5,0.1,0.2,0.1\n";

constexpr std::string_view kOutEnv = "ASYNCON_OUT";

// Fixed reproduction parameters for the bundled examples.
const std::vector<double> kExampleX0 = {3, 2, 1, 3, 5};
constexpr int kExampleTauD = 5;
constexpr long kExampleSamples = 300;
constexpr long kExampleSteps = 2000;
constexpr std::uint64_t kExampleSeed = 42;

struct Flags {
  std::string config;
  std::string topology;
  std::string x0;
  int tau_d = 0;
  std::string delay_kind = "none";
  std::uint64_t seed = 0;
  long samples = 300;
  long steps = 1000;
  double ctol = kConsensusTol;
  std::string out;
  std::string format = "csv";
  unsigned threads = 1;

  CLI::Option* o_topology = nullptr;
  CLI::Option* o_x0 = nullptr;
  CLI::Option* o_tau_d = nullptr;
  CLI::Option* o_delay_kind = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_samples = nullptr;
  CLI::Option* o_steps = nullptr;
  CLI::Option* o_ctol = nullptr;
  CLI::Option* o_out = nullptr;
  CLI::Option* o_format = nullptr;
  CLI::Option* o_threads = nullptr;
};

void add_flags(CLI::App* cmd, Flags& f, bool with_topology, bool with_samples) {
  cmd->add_option("--config", f.config, "JSON file whose keys mirror the flags");
  if (with_topology) f.o_topology = cmd->add_option("--topology", f.topology, "topology file (CSV/whitespace or JSON)");
  f.o_x0 = cmd->add_option("--x0", f.x0, "initial state, comma-separated");
  f.o_tau_d = cmd->add_option("--tau-d", f.tau_d, "maximum delay")->check(CLI::NonNegativeNumber);
  f.o_delay_kind = cmd->add_option("--delay-kind", f.delay_kind, "none, uniform, fixed, shared")
                       ->check(CLI::IsMember({"none", "uniform", "fixed", "shared"}));
  f.o_seed = cmd->add_option("--seed", f.seed, "master seed");
  if (with_samples) f.o_samples = cmd->add_option("--samples", f.samples, "Monte Carlo samples");
  f.o_steps = cmd->add_option("--steps", f.steps, "iteration steps");
  f.o_ctol = cmd->add_option("--ctol", f.ctol, "consensus tolerance on max - min spread");
  f.o_out = cmd->add_option("--out", f.out, "output directory (default $ASYNCON_OUT or .)");
  f.o_format = cmd->add_option("--format", f.format, "table format")->check(CLI::IsMember({"csv", "json"}));
  f.o_threads = cmd->add_option("--threads", f.threads, "worker threads for Monte Carlo");
}

bool given(const CLI::Option* o) { return o != nullptr && o->count() > 0; }

// Flags override the config file, which overrides `base`.
ExperimentConfig resolve(const Flags& f, ExperimentConfig base) {
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw Error("cannot open config file '" + f.config + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error("config file '" + f.config + "': " + e.what());
    }
    try {
      if (j.contains("topology")) base.topology = j["topology"].get<std::string>();
      if (j.contains("x0")) base.x0 = j["x0"].get<std::vector<double>>();
      if (j.contains("tau_d")) base.tau_d = j["tau_d"].get<int>();
      if (j.contains("delay_kind")) base.delay_kind = parse_delay_kind(j["delay_kind"].get<std::string>());
      if (j.contains("seed")) base.seed = j["seed"].get<std::uint64_t>();
      if (j.contains("samples")) base.samples = j["samples"].get<long>();
      if (j.contains("steps")) base.steps = j["steps"].get<long>();
      if (j.contains("ctol")) base.ctol = j["ctol"].get<double>();
      if (j.contains("out")) base.out = j["out"].get<std::string>();
      if (j.contains("format")) base.format = j["format"].get<std::string>();
      if (j.contains("threads")) base.threads = j["threads"].get<unsigned>();
    } catch (const nlohmann::json::exception& e) {
      throw Error("config file '" + f.config + "': " + e.what());
    }
  } else if (const char* env = std::getenv(kOutEnv.data()); env != nullptr && *env != '\0') {
    base.out = env;
  }
  if (given(f.o_topology)) base.topology = f.topology;
  if (given(f.o_x0)) base.x0 = parse_vector(f.x0);
  if (given(f.o_tau_d)) base.tau_d = f.tau_d;
  if (given(f.o_delay_kind)) base.delay_kind = parse_delay_kind(f.delay_kind);
  if (given(f.o_seed)) base.seed = f.seed;
  if (given(f.o_samples)) base.samples = f.samples;
  if (given(f.o_steps)) base.steps = f.steps;
  if (given(f.o_ctol)) base.ctol = f.ctol;
  if (given(f.o_out)) base.out = f.out;
  if (given(f.o_format)) base.format = f.format;
  if (given(f.o_threads)) base.threads = f.threads;
  return base;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

void prepare_out(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

VectorXd initial_state(const ExperimentConfig& c, Index n) {
  if (!c.x0) throw Error("--x0 is required");
  if (static_cast<Index>(c.x0->size()) != n) {
    throw Error("--x0 has " + std::to_string(c.x0->size()) + " entries for " + std::to_string(n) + " agents");
  }
  return Eigen::Map<const VectorXd>(c.x0->data(), n);
}

void print_summary(std::ostream& out, const ConvergenceReport& r) {
  out << "agents: " << r.n << "\nleaders:";
  if (r.leaders.empty()) out << " none";
  for (Index l : r.leaders) out << ' ' << (l + 1);
  out << "\nspanning tree: " << (r.has_spanning_tree ? "yes" : "no")
      << "\nm-rooted leader form: " << (r.is_m_rooted_leader_form ? "yes" : "no")
      << "\nrho(|F - F*|): " << io::format_double(r.rho_margin)
      << (r.async_reachable ? " (< 1, asynchronous consensus reachable)" : " (not < 1)")
      << "\nasync value equals sync value regardless of delays: "
      << (r.theorem1_applies ? "guaranteed" : "not guaranteed") << '\n';
  if (r.mu) {
    out << "mu:";
    for (Index i = 0; i < r.mu->mu.size(); ++i) out << ' ' << io::format_double(r.mu->mu(i));
    out << '\n';
  }
  if (r.predicted_sync_value) out << "predicted sync value: " << io::format_double(*r.predicted_sync_value) << '\n';
  for (const auto& note : r.notes) out << "note: " << note << '\n';
}

DelayModel delay_model(const ExperimentConfig& c) { return DelayModel{c.delay_kind, c.tau_d, c.seed, {}}; }

void write_table(const ExperimentConfig& c, const std::string& stem,
                 const std::function<void(std::ostream&)>& csv, const std::function<nlohmann::json()>& json) {
  if (c.format == "json") {
    write_file(c.out / (stem + ".json"), dump(json()));
  } else {
    std::ostringstream ss;
    csv(ss);
    write_file(c.out / (stem + ".csv"), ss.str());
  }
}

int cmd_analyze(const ExperimentConfig& c, std::ostream& out) {
  validate(c, true);
  const auto f = row_normalize(load_topology_file(*c.topology));
  std::optional<VectorXd> x0;
  if (c.x0) x0 = initial_state(c, f.dim());
  const auto report = analyze(f, x0);
  prepare_out(c.out);
  write_file(c.out / "report.json", dump(io::report_json(report)));
  print_summary(out, report);
  out << "wrote " << (c.out / "report.json").string() << '\n';
  return 0;
}

int cmd_simulate(const ExperimentConfig& c, std::ostream& out) {
  validate(c, true);
  const auto f = row_normalize(load_topology_file(*c.topology));
  const auto x0 = initial_state(c, f.dim());
  const auto t = c.delay_kind == DelayKind::kNone ? run_sync(f, x0, c.steps, c.ctol)
                                                   : run_async(f, x0, delay_model(c), c.steps, c.ctol);
  prepare_out(c.out);
  write_table(c, "trajectory", [&](std::ostream& s) { io::write_trajectory_csv(s, t); },
              [&] { return io::trajectory_json(t); });
  if (t.consensus) {
    out << "consensus at step " << t.consensus->step << ": " << io::format_double(t.consensus->value) << '\n';
  } else {
    out << "no consensus within " << c.steps << " steps\n";
  }
  return 0;
}

int run_ensemble(const ExperimentConfig& c, const RowStochasticMatrix& f, std::ostream& out) {
  const auto x0 = initial_state(c, f.dim());
  const auto sync = run_sync(f, x0, c.steps, c.ctol);
  const auto ens = monte_carlo(f, x0, delay_model(c), c.samples, c.steps, c.ctol, c.threads);
  const double sync_value = sync.consensus ? sync.consensus->value : std::nan("");
  const auto disc = discrepancy_report(sync_value, ens);

  prepare_out(c.out);
  write_table(c, "norms", [&](std::ostream& s) { io::write_norms_csv(s, ens); },
              [&] { return io::norms_json(ens); });
  write_table(c, "consensus", [&](std::ostream& s) { io::write_consensus_csv(s, ens); },
              [&] { return io::consensus_json(ens); });
  write_table(c, "sync", [&](std::ostream& s) { io::write_trajectory_csv(s, sync); },
              [&] { return io::trajectory_json(sync); });
  nlohmann::json summary = {
      {"ensemble", io::ensemble_json(ens)},
      {"discrepancy", io::discrepancy_json(disc)},
      {"sync", {{"consensus_value", sync.consensus ? nlohmann::json(sync.consensus->value) : nlohmann::json(nullptr)},
                {"consensus_step", sync.consensus ? nlohmann::json(sync.consensus->step) : nlohmann::json(nullptr)}}},
      {"config", {{"tau_d", c.tau_d},
                  {"delay_kind", std::string(to_string(c.delay_kind))},
                  {"seed", c.seed},
                  {"samples", c.samples},
                  {"steps", c.steps},
                  {"ctol", c.ctol},
                  {"x0", *c.x0}}},
  };
  write_file(c.out / "summary.json", dump(summary));

  out << "sync consensus: " << io::format_double(sync_value) << '\n'
      << "samples: " << ens.samples << " (non-converged " << ens.non_converged << ")\n"
      << "async consensus mean " << io::format_double(ens.mean) << ", std " << io::format_double(ens.stddev)
      << ", range [" << io::format_double(ens.min) << ", " << io::format_double(ens.max) << "]\n"
      << "max |async - sync|: " << io::format_double(disc.max_abs_deviation)
      << ", fraction within " << disc.within_tol << ": " << disc.fraction_within << '\n';
  return 0;
}

int cmd_montecarlo(const ExperimentConfig& c, std::ostream& out) {
  validate(c, true);
  const auto f = row_normalize(load_topology_file(*c.topology));
  return run_ensemble(c, f, out);
}

int cmd_reproduce(const std::string& which, const ExperimentConfig& c, std::ostream& out) {
  validate(c, false);
  const auto topo = load_topology(example_topology_text(which));
  const auto f = row_normalize(topo);
  prepare_out(c.out);
  write_file(c.out / "topology.csv", format_topology(topo));
  const auto report = analyze(f, initial_state(c, f.dim()));
  write_file(c.out / "report.json", dump(io::report_json(report)));
  print_summary(out, report);
  return run_ensemble(c, f, out);
}

}  // namespace

std::string_view example_topology_text(std::string_view name) {
  if (name == "example1") return kExample1;
  if (name == "example2") return kExample2;
  throw Error("unknown example '" + std::string(name) + "' (expected example1 or example2)");
}

std::vector<double> parse_vector(std::string_view text) {
  std::vector<double> v;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    auto tok = text.substr(start, end - start);
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.remove_suffix(1);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw Error("malformed vector entry '" + std::string(tok) + "' in '" + std::string(text) + "'");
    }
    v.push_back(x);
    start = end + 1;
  }
  return v;
}

void validate(const ExperimentConfig& c, bool needs_topology) {
  if (needs_topology) {
    if (!c.topology) throw Error("--topology is required");
    if (!std::filesystem::exists(*c.topology)) {
      throw Error("topology file '" + c.topology->string() + "' does not exist");
    }
  }
  if (c.samples < 1) throw Error("--samples must be at least 1");
  if (c.steps < 1) throw Error("--steps must be at least 1");
  if (c.tau_d < 0) throw Error("--tau-d must be nonnegative");
  if (!(c.ctol > 0.0)) throw Error("--ctol must be positive");
  if (c.format != "csv" && c.format != "json") throw Error("--format must be csv or json");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synchronous and asynchronous consensus on directed weighted topologies"};
  app.require_subcommand(1);

  Flags fa, fs, fm, fr;
  auto* analyze_cmd = app.add_subcommand("analyze", "structure, stationary form and convergence verdicts");
  add_flags(analyze_cmd, fa, true, false);
  auto* simulate_cmd = app.add_subcommand("simulate", "one trajectory (sync when --delay-kind none)");
  add_flags(simulate_cmd, fs, true, false);
  auto* mc_cmd = app.add_subcommand("montecarlo", "asynchronous ensemble against the synchronous run");
  add_flags(mc_cmd, fm, true, true);
  auto* reproduce_cmd = app.add_subcommand("reproduce", "bundled example with fixed parameters");
  std::string which;
  reproduce_cmd->add_option("example", which, "example1 or example2")
      ->required()
      ->check(CLI::IsMember({"example1", "example2"}));
  add_flags(reproduce_cmd, fr, false, true);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    const unsigned hw = std::max(1U, std::thread::hardware_concurrency());
    if (analyze_cmd->parsed()) return cmd_analyze(resolve(fa, {}), out);
    if (simulate_cmd->parsed()) return cmd_simulate(resolve(fs, {}), out);
    if (mc_cmd->parsed()) {
      ExperimentConfig base;
      base.threads = hw;
      return cmd_montecarlo(resolve(fm, base), out);
    }
    ExperimentConfig base;
    base.x0 = kExampleX0;
    base.tau_d = kExampleTauD;
    base.delay_kind = DelayKind::kUniform;
    base.seed = kExampleSeed;
    base.samples = kExampleSamples;
    base.steps = kExampleSteps;
    base.threads = hw;
    auto c = resolve(fr, base);
    if (!given(fr.o_out)) c.out /= which;
    return cmd_reproduce(which, c, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace asyncon::cli
