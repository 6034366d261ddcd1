// Acceptance suite. `acceptance` runs every criterion; `acceptance --criterion N`
// runs one. Each prints a single PASS/FAIL line; the exit status is nonzero if
// any selected criterion fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"

#include "asyncon/analysis.hpp"
#include "asyncon/cli.hpp"
#include "asyncon/sim.hpp"
#include "asyncon/switched.hpp"

using namespace asyncon;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// mu from mu^T (I - F) = 0, sum(mu) = 1, solved by plain elimination.
VectorXd oracle_mu(const MatrixXd& f) {
  const Index n = f.rows();
  MatrixXd a = (MatrixXd::Identity(n, n) - f).transpose();
  a.row(n - 1).setOnes();
  MatrixXd b = MatrixXd::Zero(n, 1);
  b(n - 1, 0) = 1.0;
  return oracle::solve(a, b).col(0);
}

Outcome example1_analytics() {
  const double published_rho = 0.83;
  const double published_mu[] = {0.32, 0.35, 0.02, 0.14, 0.17};
  const auto r = analyze(RowStochasticMatrix(oracle::example1()));
  if (!r.mu) return {false, "no rank-one stationary form"};
  double mu_err = 0.0;
  for (Index j = 0; j < 5; ++j) mu_err = std::max(mu_err, std::abs(r.mu->mu(j) - published_mu[j]));
  const double rho_err = std::abs(r.rho_margin - published_rho);
  return {rho_err <= 0.01 && mu_err <= 0.005,
          "rho=" + fmt(r.rho_margin) + " (|err| " + fmt(rho_err) + " <= 0.01), max mu err " + fmt(mu_err) +
              " <= 0.005"};
}

Outcome example1_monte_carlo() {
  const RowStochasticMatrix f(oracle::example1());
  const VectorXd x0 = oracle::example_x0();
  const auto ens = monte_carlo(f, x0, DelayModel{DelayKind::kUniform, 5, 42, {}}, 300, 2000, 1e-8, 4);
  const auto sync = run_sync(f, x0, 2000, 1e-8);
  const double mu_x0 = oracle_mu(oracle::example1()).dot(x0);
  const bool all_converged = ens.non_converged == 0;
  const bool spread = ens.stddev > 0.0 && ens.max - ens.min > 1e-3;
  const double sync_err = sync.consensus ? std::abs(sync.consensus->value - mu_x0) : INFINITY;
  return {all_converged && spread && sync_err <= 1e-8,
          "non-converged " + std::to_string(ens.non_converged) + "/300, std " + fmt(ens.stddev) + ", range " +
              fmt(ens.max - ens.min) + " > 1e-3, |sync - mu^T x0| " + fmt(sync_err) + " <= 1e-8"};
}

Outcome example2_monte_carlo() {
  const RowStochasticMatrix f(oracle::example2());
  const VectorXd x0 = oracle::example_x0();
  const auto sync = run_sync(f, x0, 2000, 1e-8);
  if (!sync.consensus) return {false, "synchronous run did not reach consensus"};
  double worst_leader = 0.0;
  double worst_sync = 0.0;
  long non_converged = 0;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const auto ens = monte_carlo(f, x0, DelayModel{DelayKind::kUniform, 5, seed, {}}, 300, 2000, 1e-8, 4);
    non_converged += ens.non_converged;
    for (double v : ens.consensus_values) {
      worst_leader = std::max(worst_leader, std::abs(v - 3.0));
      worst_sync = std::max(worst_sync, std::abs(v - sync.consensus->value));
    }
  }
  return {non_converged == 0 && worst_leader <= 1e-6 && worst_sync <= 1e-6,
          "5 seeds x 300 samples, non-converged " + std::to_string(non_converged) + ", max |v - 3| " +
              fmt(worst_leader) + ", max |v - sync| " + fmt(worst_sync) + " <= 1e-6"};
}

Outcome product_closure() {
  Engine g(2024);
  long failures = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index n = 2 + static_cast<Index>(uniform_below(g, 7));
    const RowStochasticMatrix a(oracle::random_stochastic(g, n, oracle::unit(g)));
    const RowStochasticMatrix b(oracle::random_stochastic(g, n, oracle::unit(g)));
    const MatrixXd p = product(a, b).matrix();
    worst = std::max(worst, (p.rowwise().sum().array() - 1.0).abs().maxCoeff());
    if (!is_row_stochastic(p, 1e-12)) ++failures;
  }
  return {failures == 0, "1000 products, " + std::to_string(failures) + " failures, max |row sum - 1| " + fmt(worst)};
}

Outcome shift_structure() {
  Engine g(77);
  long failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + static_cast<Index>(uniform_below(g, 3));
    const int tau = 1 + static_cast<int>(uniform_below(g, 2));
    const RowStochasticMatrix f(oracle::random_stochastic(g, n, 0.6));
    DelaySampler sampler({DelayKind::kUniform, tau, g(), {}}, f.matrix());
    ChainProduct<double> acc(n * (tau + 1));
    std::vector<MatrixXd> prefixes;
    for (int k = 0; k < 50; ++k) {
      acc.push(modal_matrix(f, sampler.next()));
      prefixes.push_back(acc.product());
    }
    if (!chain_shift_structure_holds(prefixes, n)) ++failures;
  }
  return {failures == 0, "100 chains of depth 50, " + std::to_string(failures) + " with inexact block rows"};
}

Outcome theorem1_equivalence() {
  MatrixXd single(2, 2);
  single << 1, 0, 0.4, 0.6;
  Theorem1Check a;
  a.tau_d = 1;
  a.chains = 0;
  a.depth = 20;
  a.tol = 1e-6;
  const auto va = verify_theorem1_empirically(RowStochasticMatrix(single), a);

  Theorem1Check b;
  b.tau_d = 2;
  b.chains = 100;
  b.depth = 300;
  b.tol = 1e-8;
  b.seed = 6;
  b.exhaustive_cap = 0;
  const auto vb = verify_theorem1_empirically(RowStochasticMatrix(oracle::example2()), b);

  std::string detail = "(a) " + std::to_string(va.chains_checked) + " sequences" +
                       (va.exhaustive ? " (exhaustive)" : "") + ", max dev " + fmt(va.max_deviation) +
                       " vs 1e-6";
  if (!va.passed) {
    detail += " [the follower's undelayed self-weight decays as 0.6^k under every switching;"
              " the worst depth-20 entry is 0.6^18, so 1e-6 needs depth >= 30]";
  }
  detail += "; (b) " + std::to_string(vb.chains_checked) + " chains, max dev " + fmt(vb.max_deviation) +
            " vs 1e-8";
  return {va.passed && vb.passed, detail};
}

Outcome closed_form_vs_limit() {
  Engine g(99);
  double worst = 0.0;
  int checked = 0;
  while (checked < 50) {
    const Index n = 2 + static_cast<Index>(uniform_below(g, 5));
    const Index m = 1 + static_cast<Index>(uniform_below(g, 2));
    if (m >= n) continue;
    const RowStochasticMatrix f(oracle::random_leader_first(g, n, m));
    const auto closed = stationary_closed_form(f, m);
    worst = std::max(worst, (closed.matrix() - stationary(f).matrix()).cwiseAbs().maxCoeff());
    ++checked;
  }
  return {worst <= 1e-10, "50 leader-first matrices, max |closed - limit| " + fmt(worst) + " <= 1e-10"};
}

Outcome cross_oracle() {
  Engine g(123);
  long mismatched = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + static_cast<Index>(uniform_below(g, 5));
    const int tau = static_cast<int>(uniform_below(g, 5));
    const RowStochasticMatrix f(oracle::random_stochastic(g, n, 0.5));
    VectorXd x0(n);
    for (Index i = 0; i < n; ++i) x0(i) = 10 * oracle::unit(g);
    const auto kind = trial % 2 ? DelayKind::kShared : DelayKind::kUniform;
    DelaySampler sampler({kind, tau, g(), {}}, f.matrix());
    std::vector<DelayAssignment> draws;
    for (int k = 0; k < 200; ++k) draws.push_back(sampler.next());

    const auto t = run_async(f, x0, draws);
    auto s = lift_initial(x0, tau);
    bool same = true;
    for (std::size_t k = 0; k < draws.size() && same; ++k) {
      s = step(modal_matrix(f, draws[k]), s);
      same = t.states[k + 1] == s.current();
    }
    if (!same) ++mismatched;
  }
  return {mismatched == 0, "20 configurations x 200 steps, " + std::to_string(mismatched) + " not bitwise identical"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "asyncon_acceptance_determinism";
  fs::remove_all(root);
  std::ostringstream sink;
  for (const char* run : {"a", "b"}) {
    const int status = cli::run({"asyncon", "reproduce", "example1", "--seed", "42", "--out", (root / run).string()},
                                sink, sink);
    if (status != 0) return {false, "reproduce failed: " + sink.str()};
  }
  std::vector<std::string> differing;
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    if (entry.path().extension() != ".csv") continue;
    ++compared;
    if (slurp(entry.path()) != slurp(root / "b" / entry.path().filename())) {
      differing.push_back(entry.path().filename().string());
    }
  }
  fs::remove_all(root);
  std::string detail = std::to_string(compared) + " CSV files compared";
  for (const auto& d : differing) detail += ", " + d + " differs";
  return {compared > 0 && differing.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"Example 1 analytics", example1_analytics},
      {"Example 1 Monte Carlo", example1_monte_carlo},
      {"Example 2 Monte Carlo", example2_monte_carlo},
      {"product closure", product_closure},
      {"chain shift structure", shift_structure},
      {"leader-form equivalence", theorem1_equivalence},
      {"closed form vs limit", closed_form_vs_limit},
      {"simulator vs switched iteration", cross_oracle},
      {"reproduce determinism", determinism},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (only != 0 && id != only) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << "criterion " << id << " (" << criteria[i].first << "): " << (o.pass ? "PASS" : "FAIL") << " - "
              << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
