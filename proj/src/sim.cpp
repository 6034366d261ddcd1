#include "asyncon/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "asyncon/errors.hpp"

namespace asyncon {

std::string_view to_string(DelayKind kind) {
  switch (kind) {
    case DelayKind::kNone: return "none";
    case DelayKind::kUniform: return "uniform";
    case DelayKind::kFixed: return "fixed";
    case DelayKind::kShared: return "shared";
  }
  return "none";
}

DelayKind parse_delay_kind(std::string_view name) {
  if (name == "none") return DelayKind::kNone;
  if (name == "uniform") return DelayKind::kUniform;
  if (name == "fixed") return DelayKind::kFixed;
  if (name == "shared") return DelayKind::kShared;
  throw Error("unknown delay kind '" + std::string(name) + "' (expected none, uniform, fixed, shared)");
}

DelaySampler::DelaySampler(const DelayModel& model, const MatrixXd& f)
    : model_(model),
      edges_(influence_edges(f)),
      n_(f.rows()),
      tau_d_(model.kind == DelayKind::kNone ? 0 : model.tau_d),
      engine_(model.seed) {
  if (model.tau_d < 0) throw PreconditionError("delay bound must be nonnegative");
  if (model_.kind == DelayKind::kFixed) {
    if (!model_.fixed_delays.empty()) {
      if (model_.fixed_delays.size() != edges_.size()) {
        throw PreconditionError("fixed delay model has " + std::to_string(model_.fixed_delays.size()) +
                                " delays for " + std::to_string(edges_.size()) + " edges");
      }
      fixed_ = model_.fixed_delays;
    } else {
      fixed_.resize(edges_.size());
      for (auto& d : fixed_) d = static_cast<int>(uniform_below(engine_, static_cast<std::uint64_t>(tau_d_) + 1));
    }
  }
}

DelayAssignment DelaySampler::next() {
  const auto bound = static_cast<std::uint64_t>(tau_d_) + 1;
  std::vector<int> delays(edges_.size(), 0);
  switch (model_.kind) {
    case DelayKind::kNone:
      break;
    case DelayKind::kUniform:
      for (auto& d : delays) d = static_cast<int>(uniform_below(engine_, bound));
      break;
    case DelayKind::kFixed:
      delays = fixed_;
      break;
    case DelayKind::kShared: {
      std::vector<int> per_source(static_cast<std::size_t>(n_));
      for (auto& d : per_source) d = static_cast<int>(uniform_below(engine_, bound));
      for (std::size_t e = 0; e < edges_.size(); ++e) {
        delays[e] = per_source[static_cast<std::size_t>(edges_[e].col)];
      }
      break;
    }
  }
  return DelayAssignment(edges_, std::move(delays), tau_d_);
}

std::optional<ConsensusPoint> detect_consensus(const Trajectory& t, double ctol) {
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    const auto& x = t.states[k];
    if (x.size() == 0) continue;
    const double spread = x.maxCoeff() - x.minCoeff();
    if (spread < ctol) return ConsensusPoint{static_cast<long>(k), x.mean(), spread};
  }
  return std::nullopt;
}

namespace {

void check_dims(const RowStochasticMatrix& f, const VectorXd& x0) {
  if (x0.size() != f.dim()) {
    throw DimensionError("initial state has " + std::to_string(x0.size()) + " entries for " +
                         std::to_string(f.dim()) + " agents");
  }
}

void finish(Trajectory& t, double ctol) {
  t.norm_track.reserve(t.states.size());
  for (const auto& x : t.states) t.norm_track.push_back(x.norm());
  t.consensus = detect_consensus(t, ctol);
}

struct RowEntry {
  Index col;
  double weight;
  int edge;  // index into the delay vector; -1 for the undelayed self weight
};

// Nonzero weights of each row of F in ascending column order.
std::vector<std::vector<RowEntry>> row_entries(const MatrixXd& f, const std::vector<InfluenceEdge>& edges) {
  std::vector<std::vector<RowEntry>> rows(static_cast<std::size_t>(f.rows()));
  std::size_t e = 0;
  for (Index i = 0; i < f.rows(); ++i) {
    for (Index j = 0; j < f.cols(); ++j) {
      if (i == j) {
        if (f(i, i) != 0.0) rows[static_cast<std::size_t>(i)].push_back({j, f(i, i), -1});
      } else if (f(i, j) > 0.0) {
        rows[static_cast<std::size_t>(i)].push_back({j, f(i, j), static_cast<int>(e++)});
      }
    }
  }
  if (e != edges.size()) throw PreconditionError("delay draws do not match F's support");
  return rows;
}

class AsyncStepper {
 public:
  AsyncStepper(const RowStochasticMatrix& f, const VectorXd& x0, std::vector<InfluenceEdge> edges)
      : edges_(std::move(edges)), rows_(row_entries(f.matrix(), edges_)) {
    check_dims(f, x0);
    t_.states.push_back(x0);
  }

  // Block-major accumulation (delay 0 first, then 1, ...), columns ascending
  // inside a block: the column order of the modal matrix's top block row.
  void advance(const DelayAssignment& d) {
    if (d.edges() != edges_) throw PreconditionError("delay assignment does not match F's support");
    const auto k = static_cast<long>(t_.states.size()) - 1;
    const auto& delays = d.delays();
    const int tau = d.tau_d();
    VectorXd next(static_cast<Index>(rows_.size()));
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      double acc = 0.0;
      for (int r = 0; r <= tau; ++r) {
        const auto& src = t_.states[static_cast<std::size_t>(std::max(0L, k - r))];
        for (const auto& entry : rows_[i]) {
          const int lag = entry.edge < 0 ? 0 : delays[static_cast<std::size_t>(entry.edge)];
          if (lag == r) acc += entry.weight * src(entry.col);
        }
      }
      next(static_cast<Index>(i)) = acc;
    }
    t_.states.push_back(std::move(next));
  }

  Trajectory take(double ctol) {
    finish(t_, ctol);
    return std::move(t_);
  }

 private:
  std::vector<InfluenceEdge> edges_;
  std::vector<std::vector<RowEntry>> rows_;
  Trajectory t_;
};

}  // namespace

Trajectory run_sync(const RowStochasticMatrix& f, const VectorXd& x0, long steps, double ctol) {
  check_dims(f, x0);
  if (steps < 0) throw PreconditionError("steps must be nonnegative");
  const auto& m = f.matrix();
  Trajectory t;
  t.states.reserve(static_cast<std::size_t>(steps) + 1);
  t.states.push_back(x0);
  for (long k = 0; k < steps; ++k) {
    const auto& x = t.states.back();
    VectorXd next(x.size());
    for (Index i = 0; i < m.rows(); ++i) {
      double acc = 0.0;
      for (Index j = 0; j < m.cols(); ++j) {
        if (m(i, j) != 0.0) acc += m(i, j) * x(j);
      }
      next(i) = acc;
    }
    t.states.push_back(std::move(next));
  }
  finish(t, ctol);
  return t;
}

Trajectory run_async(const RowStochasticMatrix& f, const VectorXd& x0, const DelayModel& dm,
                     long steps, double ctol) {
  if (steps < 0) throw PreconditionError("steps must be nonnegative");
  DelaySampler sampler(dm, f.matrix());
  AsyncStepper stepper(f, x0, influence_edges(f.matrix()));
  for (long k = 0; k < steps; ++k) stepper.advance(sampler.next());
  return stepper.take(ctol);
}

Trajectory run_async(const RowStochasticMatrix& f, const VectorXd& x0,
                     const std::vector<DelayAssignment>& draws, double ctol) {
  AsyncStepper stepper(f, x0, influence_edges(f.matrix()));
  for (const auto& d : draws) stepper.advance(d);
  return stepper.take(ctol);
}

EnsembleSummary monte_carlo(const RowStochasticMatrix& f, const VectorXd& x0,
                            const DelayModel& dm_template, long samples, long steps, double ctol,
                            unsigned threads) {
  if (samples < 1) throw PreconditionError("samples must be at least 1");
  check_dims(f, x0);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EnsembleSummary out;
  out.master_seed = dm_template.seed;
  out.samples = samples;
  out.steps = steps;
  out.consensus_values.assign(static_cast<std::size_t>(samples), nan);
  out.consensus_steps.assign(static_cast<std::size_t>(samples), -1);
  out.norm_tracks.resize(static_cast<std::size_t>(samples));

  std::atomic<long> next{0};
  auto worker = [&] {
    for (long s = next++; s < samples; s = next++) {
      DelayModel dm = dm_template;
      dm.seed = sample_seed(dm_template.seed, static_cast<std::uint64_t>(s));
      auto t = run_async(f, x0, dm, steps, ctol);
      const auto idx = static_cast<std::size_t>(s);
      if (t.consensus) {
        out.consensus_values[idx] = t.consensus->value;
        out.consensus_steps[idx] = t.consensus->step;
      }
      out.norm_tracks[idx] = std::move(t.norm_track);
    }
  };
  threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(samples)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
  }

  // Sequential reduction in sample order.
  double sum = 0.0;
  long count = 0;
  out.min = std::numeric_limits<double>::infinity();
  out.max = -std::numeric_limits<double>::infinity();
  for (double v : out.consensus_values) {
    if (std::isnan(v)) {
      ++out.non_converged;
      continue;
    }
    sum += v;
    ++count;
    out.min = std::min(out.min, v);
    out.max = std::max(out.max, v);
  }
  if (count == 0) {
    out.mean = out.stddev = out.min = out.max = nan;
    return out;
  }
  out.mean = sum / static_cast<double>(count);
  double ss = 0.0;
  for (double v : out.consensus_values) {
    if (!std::isnan(v)) ss += (v - out.mean) * (v - out.mean);
  }
  out.stddev = count > 1 ? std::sqrt(ss / static_cast<double>(count - 1)) : 0.0;
  return out;
}

}  // namespace asyncon
