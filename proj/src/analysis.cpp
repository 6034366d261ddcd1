#include "asyncon/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "asyncon/errors.hpp"
#include "asyncon/rng.hpp"

namespace asyncon {

RowStochasticMatrix leader_stationary(const RowStochasticMatrix& f) {
  const auto ordering = reorder_leaders_first(f);
  const auto ordered_star = stationary_closed_form(ordering.ordered, ordering.m);
  return RowStochasticMatrix(unpermute(ordered_star.matrix(), ordering.permutation), 1e-10);
}

ConvergenceReport analyze(const RowStochasticMatrix& f, const std::optional<VectorXd>& x0) {
  ConvergenceReport rep;
  const auto s = classify_roots(f);
  rep.n = f.dim();
  rep.leaders = s.leaders;
  rep.m = s.m;
  rep.has_spanning_tree = s.has_spanning_tree;
  rep.is_m_rooted_leader_form = s.is_m_rooted_leader_form;

  try {
    rep.rho_f = spectral_radius(f.matrix()).value;
  } catch (const Error& e) {
    rep.rho_f = std::nan("");
    rep.notes.emplace_back(std::string("rho(F) unavailable: ") + e.what());
  }

  try {
    rep.fstar = rep.is_m_rooted_leader_form ? leader_stationary(f).matrix() : stationary(f).matrix();
  } catch (const Error& e) {
    rep.notes.emplace_back(std::string("stationary form unavailable: ") + e.what());
  }

  rep.rho_margin = std::numeric_limits<double>::quiet_NaN();
  if (rep.fstar) {
    try {
      rep.rho_margin = spectral_radius((f.matrix() - *rep.fstar).cwiseAbs()).value;
    } catch (const Error& e) {
      rep.notes.emplace_back(std::string("rho(|F - F*|) unavailable: ") + e.what());
    }
  }
  rep.async_reachable = rep.rho_margin < 1.0;
  rep.theorem1_applies = rep.is_m_rooted_leader_form && rep.async_reachable;

  if (!rep.has_spanning_tree) {
    rep.notes.emplace_back("no spanning tree: consensus is not reachable from arbitrary initial states");
  }
  if (!rep.leaders.empty() && !rep.is_m_rooted_leader_form) {
    rep.notes.emplace_back("leaders exist but do not reach every follower");
  }
  if (!rep.is_m_rooted_leader_form) {
    rep.notes.emplace_back(
        "no m-rooted leader form: asynchronous consensus value may depend on the delays");
  } else if (!rep.async_reachable) {
    rep.notes.emplace_back("leader form present but rho(|F - F*|) >= 1");
  }

  if (rep.fstar) {
    const auto& fs = *rep.fstar;
    bool rank_one = true;
    for (Index i = 1; i < fs.rows() && rank_one; ++i) {
      rank_one = (fs.row(i) - fs.row(0)).cwiseAbs().maxCoeff() <= 1e-10;
    }
    if (rank_one) rep.mu = ConsensusWeights{fs.row(0).transpose()};
  }

  if (x0) {
    if (x0->size() != f.dim()) {
      rep.notes.emplace_back("initial state has " + std::to_string(x0->size()) +
                             " entries for " + std::to_string(f.dim()) + " agents; ignored");
    } else if (rep.fstar) {
      rep.predicted_limits = VectorXd(*rep.fstar * *x0);
      if (rep.mu) {
        rep.predicted_sync_value = rep.mu->predict(*x0);
      } else {
        const auto& lim = *rep.predicted_limits;
        const double scale = std::max(1.0, lim.cwiseAbs().maxCoeff());
        if (lim.maxCoeff() - lim.minCoeff() <= 1e-12 * scale) {
          rep.predicted_sync_value = lim.mean();
        } else if (rep.is_m_rooted_leader_form) {
          rep.notes.emplace_back(
              "leaders start from different values: fixed-point problem, not consensus; "
              "predicted_limits holds the per-agent limits");
        } else {
          rep.notes.emplace_back("synchronous limits differ across agents: no consensus");
        }
      }
    }
  }
  return rep;
}

namespace {

MatrixXd lifted_target(const MatrixXd& fstar, int tau_d) {
  const Index n = fstar.rows();
  const Index dim = n * (tau_d + 1);
  MatrixXd target = MatrixXd::Zero(dim, dim);
  for (int b = 0; b <= tau_d; ++b) target.block(b * n, 0, n, n) = fstar;
  return target;
}

std::uint64_t leaf_count(std::uint64_t modes, long depth) {
  std::uint64_t leaves = 1;
  for (long d = 0; d < depth; ++d) {
    if (modes != 0 && leaves > std::numeric_limits<std::uint64_t>::max() / modes) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    leaves *= modes;
  }
  return leaves;
}

}  // namespace

Theorem1Verdict verify_theorem1_empirically(const RowStochasticMatrix& f, const Theorem1Check& check) {
  if (check.depth < 1) throw PreconditionError("verify_theorem1_empirically: depth must be positive");
  const auto rep = analyze(f);
  if (!rep.theorem1_applies) {
    throw PreconditionError(
        "verify_theorem1_empirically: requires m-rooted leader form and rho(|F - F*|) < 1");
  }
  const MatrixXd target = lifted_target(*rep.fstar, check.tau_d);
  const Index dim = target.rows();
  const auto edges = influence_edges(f.matrix());

  Theorem1Verdict verdict;
  std::vector<DelayAssignment> worst;
  auto record = [&](const MatrixXd& p, auto&& sequence) {
    const double dev = (p - target).cwiseAbs().maxCoeff();
    ++verdict.chains_checked;
    if (dev > verdict.max_deviation || verdict.chains_checked == 1) {
      verdict.max_deviation = dev;
      worst = sequence();
    }
  };

  const auto modes_per_step = mode_count(edges.size(), check.tau_d);
  if (leaf_count(modes_per_step, check.depth) <= check.exhaustive_cap) {
    verdict.exhaustive = true;
    const auto modes = enumerate_modes(f, check.tau_d, check.exhaustive_cap);
    const auto depth = static_cast<std::size_t>(check.depth);
    // prefix[d] is the product of the first d chosen modes.
    std::vector<MatrixXd> prefix(depth + 1);
    prefix[0] = MatrixXd::Identity(dim, dim);
    std::vector<std::size_t> choice(depth, 0);
    std::size_t level = 0;
    bool more = true;
    while (more) {
      prefix[level + 1].noalias() = modes[choice[level]].matrix() * prefix[level];
      if (level + 1 == depth) {
        record(prefix[depth], [&] {
          std::vector<DelayAssignment> seq;
          for (auto c : choice) seq.push_back(modes[c].assignment());
          return seq;
        });
        // Next sibling, backtracking past exhausted levels.
        while (true) {
          if (++choice[level] < modes.size()) break;
          choice[level] = 0;
          if (level == 0) {
            more = false;
            break;
          }
          --level;
        }
      } else {
        ++level;
        choice[level] = 0;
      }
    }
  }

  for (long c = 0; c < check.chains; ++c) {
    DelayModel dm{DelayKind::kUniform, check.tau_d, sample_seed(check.seed, static_cast<std::uint64_t>(c)), {}};
    DelaySampler sampler(dm, f.matrix());
    ChainProduct<double> acc(dim);
    std::vector<DelayAssignment> seq;
    seq.reserve(static_cast<std::size_t>(check.depth));
    for (long k = 0; k < check.depth; ++k) {
      seq.push_back(sampler.next());
      acc.push(modal_matrix(f, seq.back()));
    }
    record(acc.product(), [&] { return seq; });
  }

  verdict.passed = verdict.max_deviation <= check.tol;
  if (!verdict.passed) verdict.counterexample = std::move(worst);
  return verdict;
}

DiscrepancyReport discrepancy_report(double sync_value, const EnsembleSummary& ensemble,
                                     double within_tol, int bins) {
  if (ensemble.consensus_values.empty()) throw PreconditionError("discrepancy_report: empty ensemble");
  if (bins < 1) bins = 1;
  DiscrepancyReport rep;
  rep.sync_value = sync_value;
  rep.within_tol = within_tol;
  std::vector<double> values;
  long within = 0;
  for (double v : ensemble.consensus_values) {
    if (std::isnan(v)) continue;
    values.push_back(v);
    const double dev = std::abs(v - sync_value);
    rep.max_abs_deviation = std::max(rep.max_abs_deviation, dev);
    if (dev <= within_tol) ++within;
  }
  rep.considered = static_cast<long>(values.size());
  rep.fraction_within =
      static_cast<double>(within) / static_cast<double>(ensemble.consensus_values.size());
  if (values.empty()) {
    rep.max_abs_deviation = rep.stddev = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  rep.stddev = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi == lo) {
    rep.histogram.edges = {lo, hi};
    rep.histogram.counts = {static_cast<long>(values.size())};
    return rep;
  }
  const double width = (hi - lo) / bins;
  for (int b = 0; b <= bins; ++b) rep.histogram.edges.push_back(b == bins ? hi : lo + width * b);
  rep.histogram.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    auto b = static_cast<int>((v - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    ++rep.histogram.counts[static_cast<std::size_t>(b)];
  }
  return rep;
}

std::vector<FalsificationCandidate> search_leaderless_agreement(const FalsificationSearch& search) {
  std::vector<FalsificationCandidate> found;
  Engine g(search.seed);
  const Index n = search.n;
  for (long c = 0; c < search.candidates; ++c) {
    MatrixXd a = MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
      a(i, i) = 1.0 + static_cast<double>(uniform_below(g, 4));
      for (Index j = 0; j < n; ++j) {
        if (j != i && uniform_below(g, 2) == 0) a(i, j) = 1.0 + static_cast<double>(uniform_below(g, 4));
      }
    }
    const auto f = row_normalize(DirectedTopology(a));
    const auto rep = analyze(f);
    if (!rep.leaders.empty() || !rep.has_spanning_tree || !rep.async_reachable) continue;
    VectorXd x0(n);
    for (Index i = 0; i < n; ++i) x0(i) = 1.0 + static_cast<double>(uniform_below(g, 5));
    const auto sync = run_sync(f, x0, search.steps);
    if (!sync.consensus) continue;
    DelayModel dm{DelayKind::kUniform, search.tau_d, g(), {}};
    const auto ens = monte_carlo(f, x0, dm, search.samples, search.steps);
    if (ens.non_converged > 0) continue;
    const auto disc = discrepancy_report(sync.consensus->value, ens, search.agreement_tol);
    if (disc.max_abs_deviation <= search.agreement_tol) {
      found.push_back({f.matrix(), ens.stddev, disc.max_abs_deviation});
    }
  }
  return found;
}

}  // namespace asyncon
