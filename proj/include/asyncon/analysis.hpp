#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asyncon/sim.hpp"
#include "asyncon/stochastic.hpp"
#include "asyncon/switched.hpp"
#include "asyncon/topology.hpp"

namespace asyncon {

/// Convergence verdicts for one topology.
///
/// Invariants: async_reachable == (rho_margin < 1) and
/// theorem1_applies == (is_m_rooted_leader_form && async_reachable).
struct ConvergenceReport {
  Index n = 0;
  std::vector<Index> leaders;  // 0-based
  Index m = 0;
  bool has_spanning_tree = false;
  bool is_m_rooted_leader_form = false;
  /// rho(|F - F*|); NaN if F* could not be computed.
  double rho_margin = 0.0;
  bool async_reachable = false;
  bool theorem1_applies = false;
  /// rho(F), informational.
  double rho_f = 0.0;
  std::optional<MatrixXd> fstar;
  std::optional<ConsensusWeights> mu;
  /// mu^T x0 (rank-one F*), or the common leader-determined limit.
  std::optional<double> predicted_sync_value;
  /// F* x0, the per-agent synchronous limits.
  std::optional<VectorXd> predicted_limits;
  std::vector<std::string> notes;
};

/// Best-effort: numeric failures are recorded in `notes`, never thrown.
ConvergenceReport analyze(const RowStochasticMatrix& f,
                          const std::optional<VectorXd>& x0 = std::nullopt);

/// F* in original agent order via (I - Y)^{-1} X on the leader-first form.
RowStochasticMatrix leader_stationary(const RowStochasticMatrix& f);

struct Theorem1Check {
  int tau_d = 1;
  long chains = 100;
  /// Number of modes multiplied per chain.
  long depth = 300;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  /// Exhaustive enumeration runs when modes^depth is at most this.
  std::uint64_t exhaustive_cap = std::uint64_t{1} << 22;
};

struct Theorem1Verdict {
  bool passed = false;
  double max_deviation = 0.0;
  long chains_checked = 0;
  bool exhaustive = false;
  /// Worst switching sequence, filled when max_deviation > tol.
  std::vector<DelayAssignment> counterexample;
};

/// Checks that W~(depth) over random (and, when small enough, all) mode
/// sequences has every block row equal to [F*, 0, ..., 0] within tol.
/// Throws PreconditionError unless analyze(f).theorem1_applies.
Theorem1Verdict verify_theorem1_empirically(const RowStochasticMatrix& f, const Theorem1Check& check);

struct Histogram {
  std::vector<double> edges;  // bins + 1 ascending edges
  std::vector<long> counts;
};

struct DiscrepancyReport {
  double sync_value = 0.0;
  double max_abs_deviation = 0.0;
  double stddev = 0.0;
  double fraction_within = 0.0;
  double within_tol = 1e-6;
  long considered = 0;
  Histogram histogram;
};

/// Non-converged samples count against fraction_within and are left out of
/// the other statistics.
DiscrepancyReport discrepancy_report(double sync_value, const EnsembleSummary& ensemble,
                                     double within_tol = 1e-6, int bins = 20);

struct FalsificationSearch {
  Index n = 4;
  long candidates = 20;
  long samples = 20;
  int tau_d = 2;
  long steps = 2000;
  double agreement_tol = 1e-6;
  std::uint64_t seed = 0;
};

struct FalsificationCandidate {
  MatrixXd f;
  double ensemble_stddev = 0.0;
  double max_abs_deviation = 0.0;
};

/// Random leaderless topologies with a spanning tree whose asynchronous
/// ensembles all agree with the synchronous value. An empty result is not
/// evidence either way.
std::vector<FalsificationCandidate> search_leaderless_agreement(const FalsificationSearch& search);

}  // namespace asyncon
