#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asyncon/rng.hpp"
#include "asyncon/stochastic.hpp"
#include "asyncon/switched.hpp"
#include "asyncon/types.hpp"

namespace asyncon {

inline constexpr double kConsensusTol = 1e-8;

enum class DelayKind {
  kNone,     ///< synchronous: every read is current
  kUniform,  ///< each edge draws its own delay in [0, tau_d] every step
  kFixed,    ///< one assignment for the whole run
  kShared,   ///< each step, every reader of agent j sees the same delay d_j
};

std::string_view to_string(DelayKind kind);
/// Accepts none, uniform, fixed, shared. Throws Error otherwise.
DelayKind parse_delay_kind(std::string_view name);

struct DelayModel {
  DelayKind kind = DelayKind::kNone;
  int tau_d = 0;
  std::uint64_t seed = 0;
  /// kFixed only: delays in influence_edges() order. Drawn uniformly from the
  /// seed when empty.
  std::vector<int> fixed_delays;
};

/// Stateful per-run generator of delay assignments. Identical (model, support)
/// gives an identical draw sequence.
class DelaySampler {
 public:
  DelaySampler(const DelayModel& model, const MatrixXd& f);

  DelayAssignment next();
  int tau_d() const noexcept { return tau_d_; }

 private:
  DelayModel model_;
  std::vector<InfluenceEdge> edges_;
  Index n_;
  int tau_d_;
  Engine engine_;
  std::vector<int> fixed_;
};

struct ConsensusPoint {
  long step = 0;
  double value = 0.0;
  double spread = 0.0;
};

struct Trajectory {
  std::vector<VectorXd> states;
  std::optional<ConsensusPoint> consensus;
  std::vector<double> norm_track;
};

/// First step whose max - min spread is below `ctol`; value is the mean.
std::optional<ConsensusPoint> detect_consensus(const Trajectory& t, double ctol = kConsensusTol);

/// x(k+1) = F x(k) for `steps` steps.
Trajectory run_sync(const RowStochasticMatrix& f, const VectorXd& x0, long steps,
                    double ctol = kConsensusTol);

/// x_i(k+1) = f_ii x_i(k) + sum_j f_ij x_j(k - d_ij) with d drawn from `dm`
/// every step; states before time 0 equal x0.
Trajectory run_async(const RowStochasticMatrix& f, const VectorXd& x0, const DelayModel& dm,
                     long steps, double ctol = kConsensusTol);

/// Same update driven by an explicit draw sequence; draws[k] is used for the
/// step from k to k + 1.
Trajectory run_async(const RowStochasticMatrix& f, const VectorXd& x0,
                     const std::vector<DelayAssignment>& draws, double ctol = kConsensusTol);

struct EnsembleSummary {
  std::uint64_t master_seed = 0;
  long samples = 0;
  long steps = 0;
  /// NaN where the sample did not reach consensus.
  std::vector<double> consensus_values;
  /// -1 where the sample did not reach consensus.
  std::vector<long> consensus_steps;
  std::vector<std::vector<double>> norm_tracks;
  long non_converged = 0;
  // Statistics over converged samples only; NaN when there are none.
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Runs `samples` asynchronous runs; sample s uses seed
/// sample_seed(dm_template.seed, s). The result does not depend on `threads`.
EnsembleSummary monte_carlo(const RowStochasticMatrix& f, const VectorXd& x0,
                            const DelayModel& dm_template, long samples, long steps,
                            double ctol = kConsensusTol, unsigned threads = 1);

}  // namespace asyncon
