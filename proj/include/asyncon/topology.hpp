#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "asyncon/stochastic.hpp"
#include "asyncon/types.hpp"

namespace asyncon {

/// Weighted directed interaction graph. weights(i, j) is the weight agent i
/// places on agent j's state; it is positive iff i receives from j.
class DirectedTopology {
 public:
  /// Throws PreconditionError on a non-square matrix, a negative entry, or an
  /// all-zero row.
  explicit DirectedTopology(MatrixXd weights);

  Index n() const noexcept { return weights_.rows(); }
  const MatrixXd& weights() const noexcept { return weights_; }
  Index nonzero_count() const;

  friend bool operator==(const DirectedTopology& a, const DirectedTopology& b) {
    return a.weights_ == b.weights_;
  }

 private:
  MatrixXd weights_;
};

/// Parses a topology from text. Accepts either a JSON object
/// {"n": int, "weights": [[...], ...]} or one matrix row per line with
/// comma- or whitespace-separated entries; blank lines and lines starting
/// with '#' are skipped. Errors are ParseError with the offending row/column.
DirectedTopology load_topology(std::string_view source);

/// Reads and parses a file. A missing or unreadable file is an Error naming
/// the path.
DirectedTopology load_topology_file(const std::filesystem::path& path);

/// Comma-separated rows at 17 significant digits; re-parses to an identical
/// matrix.
std::string format_topology(const DirectedTopology& t);

/// f_ij = a_ij / sum_j a_ij.
RowStochasticMatrix row_normalize(const DirectedTopology& t);

/// Off-diagonal position (row, col) with f_row,col > 0: `row` reads `col`.
struct InfluenceEdge {
  Index row;
  Index col;
  friend bool operator==(const InfluenceEdge&, const InfluenceEdge&) = default;
};

/// Off-diagonal support of F in row-major order.
std::vector<InfluenceEdge> influence_edges(const MatrixXd& f);

inline constexpr double kLeaderTol = 1e-12;

/// Indices (0-based, ascending) whose row is the matching basis vector.
std::vector<Index> find_leaders(const RowStochasticMatrix& f, double tol = kLeaderTol);

struct RootedStructure {
  std::vector<Index> leaders;
  Index m = 0;
  /// Some node reaches every other node along influence edges j -> i (f_ij > 0).
  bool has_spanning_tree = false;
  /// At least one leader, and the leader set reaches every follower.
  bool is_m_rooted_leader_form = false;
};

RootedStructure classify_roots(const RowStochasticMatrix& f);

/// Nodes reachable from `sources` (inclusive) along influence edges.
std::vector<bool> reachable_from(const MatrixXd& f, const std::vector<Index>& sources);

struct LeaderOrdering {
  /// permutation[new_index] = original index.
  std::vector<Index> permutation;
  RowStochasticMatrix ordered;
  Index m;

  /// Followers' weights on leaders, (n - m) x m.
  MatrixXd x() const;
  /// Followers' weights on followers, (n - m) x (n - m).
  MatrixXd y() const;
};

/// Symmetric permutation P F P^T with result(a, b) = f(perm[a], perm[b]).
MatrixXd permute(const MatrixXd& f, const std::vector<Index>& perm);

/// Inverse of permute() for the same `perm`.
MatrixXd unpermute(const MatrixXd& g, const std::vector<Index>& perm);

/// Leaders first (ascending), then followers (ascending), giving the block
/// form [[I, 0], [X, Y]]. Throws PreconditionError naming the violated
/// condition when F is not in m-rooted leader form.
LeaderOrdering reorder_leaders_first(const RowStochasticMatrix& f);

}  // namespace asyncon
