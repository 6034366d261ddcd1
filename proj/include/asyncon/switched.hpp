#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "asyncon/errors.hpp"
#include "asyncon/stochastic.hpp"
#include "asyncon/topology.hpp"
#include "asyncon/types.hpp"

namespace asyncon {

/// Per-edge read delays for one step: agent `row` reads agent `col`'s state
/// from `delay` steps ago. Keys are exactly the off-diagonal support of F, in
/// row-major order.
class DelayAssignment {
 public:
  DelayAssignment(std::vector<InfluenceEdge> edges, std::vector<int> delays, int tau_d)
      : edges_(std::move(edges)), delays_(std::move(delays)), tau_d_(tau_d) {
    if (tau_d_ < 0) throw PreconditionError("delay bound must be nonnegative");
    if (edges_.size() != delays_.size()) {
      throw DimensionError("delay assignment: " + std::to_string(delays_.size()) +
                           " delays for " + std::to_string(edges_.size()) + " edges");
    }
    for (std::size_t e = 0; e < delays_.size(); ++e) {
      if (delays_[e] < 0 || delays_[e] > tau_d_) {
        throw PreconditionError("delay " + std::to_string(delays_[e]) + " on edge (" +
                                std::to_string(edges_[e].row + 1) + "," +
                                std::to_string(edges_[e].col + 1) + ") outside [0, " +
                                std::to_string(tau_d_) + "]");
      }
    }
  }

  /// Every edge read with zero delay.
  static DelayAssignment synchronous(std::vector<InfluenceEdge> edges, int tau_d) {
    std::vector<int> zeros(edges.size(), 0);
    return DelayAssignment(std::move(edges), std::move(zeros), tau_d);
  }

  int tau_d() const noexcept { return tau_d_; }
  const std::vector<InfluenceEdge>& edges() const noexcept { return edges_; }
  const std::vector<int>& delays() const noexcept { return delays_; }
  std::size_t size() const noexcept { return edges_.size(); }

  /// Delay on edge (row, col); throws if the pair is not an edge.
  int at(Index row, Index col) const {
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      if (edges_[e].row == row && edges_[e].col == col) return delays_[e];
    }
    throw PreconditionError("no influence edge (" + std::to_string(row + 1) + "," +
                            std::to_string(col + 1) + ")");
  }

  friend bool operator==(const DelayAssignment&, const DelayAssignment&) = default;

 private:
  std::vector<InfluenceEdge> edges_;
  std::vector<int> delays_;
  int tau_d_;
};

/// Newest-first history x~(k) = [x(k); x(k-1); ...; x(k - tau_d)].
template <typename Scalar>
class AugmentedState {
 public:
  AugmentedState(VectorX<Scalar> stacked, Index n) : v_(std::move(stacked)), n_(n) {
    if (n_ <= 0 || v_.size() % n_ != 0) {
      throw DimensionError("augmented state length " + std::to_string(v_.size()) +
                           " is not a multiple of n = " + std::to_string(n_));
    }
  }

  Index n() const noexcept { return n_; }
  int tau_d() const noexcept { return static_cast<int>(v_.size() / n_) - 1; }
  const VectorX<Scalar>& stacked() const noexcept { return v_; }

  /// x(k - lag).
  auto block(Index lag) const { return v_.segment(lag * n_, n_); }
  auto current() const { return block(0); }

 private:
  VectorX<Scalar> v_;
  Index n_;
};

/// Replicates x0 tau_d + 1 times: states before time 0 equal x(0).
template <typename Scalar>
AugmentedState<Scalar> lift_initial(const VectorX<Scalar>& x0, int tau_d) {
  if (tau_d < 0) throw PreconditionError("delay bound must be nonnegative");
  const Index n = x0.size();
  VectorX<Scalar> v(n * (tau_d + 1));
  for (int r = 0; r <= tau_d; ++r) v.segment(r * n, n) = x0;
  return AugmentedState<Scalar>(std::move(v), n);
}

/// Transition matrix of the augmented system for one delay assignment.
///
///   [ W_11 W_12 ... W_1(T+1) ]
///   [ I    0    ...  0       ]
///   [ 0    I    ...  0       ]
///   [ ...          I  0      ]
///
/// f_ij sits in W_1(d_ij + 1) at (i, j); f_ii always sits in W_11. The top
/// block row therefore sums to F with no arithmetic on the weights.
template <typename Scalar>
class ModalMatrix {
 public:
  ModalMatrix(RowStochastic<Scalar> w, DelayAssignment d, Index n)
      : w_(std::move(w)), d_(std::move(d)), n_(n) {}

  const RowStochastic<Scalar>& stochastic() const noexcept { return w_; }
  const MatrixX<Scalar>& matrix() const noexcept { return w_.matrix(); }
  const DelayAssignment& assignment() const noexcept { return d_; }
  Index n() const noexcept { return n_; }
  int tau_d() const noexcept { return d_.tau_d(); }

  /// W_1(r+1), the top-row block applied to x(k - r).
  MatrixX<Scalar> top_block(Index r) const { return w_.matrix().block(0, r * n_, n_, n_); }

 private:
  RowStochastic<Scalar> w_;
  DelayAssignment d_;
  Index n_;
};

template <typename Scalar>
ModalMatrix<Scalar> modal_matrix(const RowStochastic<Scalar>& f, const DelayAssignment& d) {
  const Index n = f.dim();
  const int tau = d.tau_d();
  const auto support = influence_edges(f.matrix().template cast<double>());
  if (support != d.edges()) {
    throw PreconditionError("delay assignment keys do not match the off-diagonal support of F");
  }
  const Index dim = n * (tau + 1);
  MatrixX<Scalar> w = MatrixX<Scalar>::Zero(dim, dim);
  for (Index i = 0; i < n; ++i) w(i, i) = f(i, i);
  for (std::size_t e = 0; e < d.size(); ++e) {
    const auto [i, j] = d.edges()[e];
    w(i, d.delays()[e] * n + j) = f(i, j);
  }
  for (int b = 1; b <= tau; ++b) w.block(b * n, (b - 1) * n, n, n).setIdentity();
  return ModalMatrix<Scalar>(RowStochastic<Scalar>(std::move(w)), d, n);
}

inline constexpr std::uint64_t kModeEnumerationCap = 1'000'000;

/// (tau_d + 1)^edge_count, saturating at uint64 max.
inline std::uint64_t mode_count(std::size_t edge_count, int tau_d) {
  std::uint64_t count = 1;
  const auto base = static_cast<std::uint64_t>(tau_d) + 1;
  for (std::size_t e = 0; e < edge_count; ++e) {
    if (count > std::numeric_limits<std::uint64_t>::max() / base) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    count *= base;
  }
  return count;
}

/// Every delay assignment for F's support, lexicographic in the row-major
/// edge order (first edge most significant).
inline std::vector<DelayAssignment> enumerate_assignments(const MatrixXd& f, int tau_d,
                                                          std::uint64_t cap = kModeEnumerationCap) {
  if (tau_d < 0) throw PreconditionError("delay bound must be nonnegative");
  auto edges = influence_edges(f);
  const auto count = mode_count(edges.size(), tau_d);
  if (count > cap) {
    throw PreconditionError("mode enumeration: " + std::to_string(tau_d + 1) + "^" +
                            std::to_string(edges.size()) + " modes exceed the cap of " +
                            std::to_string(cap) + "; sample delay assignments instead");
  }
  std::vector<DelayAssignment> out;
  out.reserve(count);
  std::vector<int> digits(edges.size(), 0);
  for (std::uint64_t c = 0; c < count; ++c) {
    out.emplace_back(edges, digits, tau_d);
    for (std::size_t pos = digits.size(); pos-- > 0;) {
      if (++digits[pos] <= tau_d) break;
      digits[pos] = 0;
    }
  }
  return out;
}

template <typename Scalar>
std::vector<ModalMatrix<Scalar>> enumerate_modes(const RowStochastic<Scalar>& f, int tau_d,
                                                 std::uint64_t cap = kModeEnumerationCap) {
  std::vector<ModalMatrix<Scalar>> modes;
  for (const auto& d : enumerate_assignments(f.matrix().template cast<double>(), tau_d, cap)) {
    modes.push_back(modal_matrix(f, d));
  }
  return modes;
}

/// x~(k+1) = W x~(k).
///
/// Accumulates each row over columns in ascending order (block-major). The
/// asynchronous simulator uses the same order, so both paths produce
/// bitwise-identical current states for identical delays.
template <typename Scalar>
AugmentedState<Scalar> step(const ModalMatrix<Scalar>& w, const AugmentedState<Scalar>& s) {
  const auto& m = w.matrix();
  const auto& x = s.stacked();
  if (m.cols() != x.size() || w.n() != s.n()) {
    throw DimensionError("step: modal matrix of size " + std::to_string(m.cols()) +
                         " applied to augmented state of length " + std::to_string(x.size()));
  }
  VectorX<Scalar> out(x.size());
  for (Index i = 0; i < m.rows(); ++i) {
    Scalar acc = 0;
    for (Index c = 0; c < m.cols(); ++c) {
      if (m(i, c) != Scalar(0)) acc += m(i, c) * x(c);
    }
    out(i) = acc;
  }
  return AugmentedState<Scalar>(std::move(out), s.n());
}

/// Left-accumulated product W~(k) = W_k ... W_1 W_0 of a mode sequence, with
/// modes[0] applied first.
template <typename Scalar>
class ChainProduct {
 public:
  explicit ChainProduct(Index dim) : p_(MatrixX<Scalar>::Identity(dim, dim)) {}

  void push(const ModalMatrix<Scalar>& w) {
    if (w.matrix().rows() != p_.rows()) {
      throw DimensionError("chain: mode of size " + std::to_string(w.matrix().rows()) +
                           " does not match chain size " + std::to_string(p_.rows()));
    }
    p_ = (w.matrix() * p_).eval();
    ++length_;
  }

  const MatrixX<Scalar>& product() const noexcept { return p_; }
  std::size_t length() const noexcept { return length_; }

 private:
  MatrixX<Scalar> p_;
  std::size_t length_ = 0;
};

template <typename Scalar>
RowStochastic<Scalar> chain(const std::vector<ModalMatrix<Scalar>>& modes) {
  if (modes.empty()) throw PreconditionError("chain: empty mode sequence");
  ChainProduct<Scalar> acc(modes.front().matrix().rows());
  for (const auto& w : modes) acc.push(w);
  return RowStochastic<Scalar>(acc.product(), 1e-10);
}

/// Block row r of W~(k) equals block row 0 of W~(k - r); before time 0 the
/// product is the identity, so for r > k it equals block row r - k - 1 of I.
/// `prefixes[k]` holds W~(k). Comparison is exact.
template <typename Scalar>
bool chain_shift_structure_holds(const std::vector<MatrixX<Scalar>>& prefixes, Index n) {
  if (prefixes.empty()) return true;
  const Index dim = prefixes.front().rows();
  const Index blocks = dim / n;
  const MatrixX<Scalar> eye = MatrixX<Scalar>::Identity(dim, dim);
  for (std::size_t k = 0; k < prefixes.size(); ++k) {
    for (Index r = 1; r < blocks; ++r) {
      const auto lower = prefixes[k].middleRows(r * n, n);
      const auto kk = static_cast<Index>(k);
      if (r <= kk) {
        if (lower != prefixes[static_cast<std::size_t>(kk - r)].topRows(n)) return false;
      } else if (lower != eye.middleRows((r - kk - 1) * n, n)) {
        return false;
      }
    }
  }
  return true;
}

/// Largest entrywise difference between any block row and the first one.
template <typename Derived>
double max_block_row_difference(const Eigen::MatrixBase<Derived>& p, Index n) {
  double diff = 0.0;
  const Index blocks = p.rows() / n;
  for (Index r = 1; r < blocks; ++r) {
    diff = std::max(diff, static_cast<double>(
                              (p.middleRows(r * n, n) - p.topRows(n)).cwiseAbs().maxCoeff()));
  }
  return diff;
}

}  // namespace asyncon
