#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "asyncon/errors.hpp"
#include "asyncon/types.hpp"

namespace asyncon {

inline constexpr double kStochasticTol = 1e-12;

/// True iff `m` is square, every entry lies in [-tol, 1 + tol] and every row
/// sums to 1 within `tol`.
template <typename Derived>
bool is_row_stochastic(const Eigen::MatrixBase<Derived>& m,
                       double tol = kStochasticTol) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  for (Index i = 0; i < m.rows(); ++i) {
    double sum = 0.0;
    for (Index j = 0; j < m.cols(); ++j) {
      const double v = static_cast<double>(m(i, j));
      if (!(v >= -tol && v <= 1.0 + tol)) return false;
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

/// Square nonnegative matrix with unit row sums. Invariants are checked on
/// construction and the value is immutable afterwards.
template <typename Scalar>
class RowStochastic {
 public:
  using MatrixType = MatrixX<Scalar>;

  explicit RowStochastic(MatrixType m, double tol = kStochasticTol)
      : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0) {
      throw PreconditionError("row-stochastic matrix must be square and non-empty, got " +
                              std::to_string(m_.rows()) + "x" + std::to_string(m_.cols()));
    }
    if (!is_row_stochastic(m_, tol)) {
      throw PreconditionError("matrix is not row-stochastic within tolerance " +
                              std::to_string(tol));
    }
  }

  static RowStochastic identity(Index n) { return RowStochastic(MatrixType::Identity(n, n)); }

  Index dim() const noexcept { return m_.rows(); }
  const MatrixType& matrix() const noexcept { return m_; }
  Scalar operator()(Index i, Index j) const { return m_(i, j); }

  friend bool operator==(const RowStochastic& a, const RowStochastic& b) {
    return a.m_ == b.m_;
  }

 private:
  MatrixType m_;
};

using RowStochasticMatrix = RowStochastic<double>;

/// Matrix product of two row-stochastic matrices. Closure under products is
/// re-checked by the result's constructor.
template <typename Scalar>
RowStochastic<Scalar> product(const RowStochastic<Scalar>& a, const RowStochastic<Scalar>& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("product: dimension mismatch " + std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()));
  }
  return RowStochastic<Scalar>(a.matrix() * b.matrix());
}

enum class SpectralMethod { kPowerIteration, kGelfand, kExact };

struct SpectralRadiusResult {
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  long iterations = 0;
  bool converged = false;
  SpectralMethod method = SpectralMethod::kPowerIteration;
};

inline constexpr double kSpectralTol = 1e-10;
inline constexpr long kSpectralMaxIter = 100000;

/// Perron root of a nonnegative square matrix.
///
/// Power iteration from the all-ones vector, bracketed by Collatz-Wielandt
/// bounds (min and max of (Mv)_i / v_i). When the bracket does not close, as
/// for reducible or imprimitive matrices, the estimate switches to Gelfand's
/// formula ||M^k||_inf^(1/k) evaluated by normalized repeated squaring.
/// Throws NonConvergenceError carrying the best bracket if `max_iter` runs
/// out first.
template <typename Derived>
SpectralRadiusResult spectral_radius(const Eigen::MatrixBase<Derived>& m_in,
                                     double tol = kSpectralTol,
                                     long max_iter = kSpectralMaxIter) {
  using std::abs;
  const MatrixXd m = m_in.template cast<double>();
  const Index n = m.rows();
  if (n == 0 || m.cols() != n) throw DimensionError("spectral_radius: matrix must be square");
  if ((m.array() < 0.0).any()) {
    throw PreconditionError("spectral_radius: matrix has negative entries");
  }

  SpectralRadiusResult res;
  res.upper = m.cwiseAbs().rowwise().sum().maxCoeff();
  if (res.upper == 0.0) {
    res.converged = true;
    res.method = SpectralMethod::kExact;
    return res;
  }

  const long power_budget = std::max(1L, std::min(2000L, max_iter / 2));
  VectorXd v = VectorXd::Ones(n);
  long it = 0;
  for (; it < power_budget; ++it) {
    const VectorXd w = m * v;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    bool positive = true;
    for (Index i = 0; i < n; ++i) {
      if (v(i) > 0.0) {
        const double ratio = w(i) / v(i);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
      } else {
        positive = false;
      }
    }
    res.lower = std::max(res.lower, lo);
    if (positive) res.upper = std::min(res.upper, hi);
    if (res.upper - res.lower <= tol) {
      res.value = 0.5 * (res.lower + res.upper);
      res.iterations = it + 1;
      res.converged = true;
      return res;
    }
    const double scale = w.maxCoeff();
    if (scale == 0.0) {
      // M^k 1 = 0 with M >= 0 forces M^k = 0.
      res = SpectralRadiusResult{0.0, 0.0, 0.0, it + 1, true, SpectralMethod::kExact};
      return res;
    }
    v = w / scale;
  }

  // Gelfand: M^(2^j) = exp(log_scale) * b with ||b||_inf = 1.
  MatrixXd b = m / res.upper;
  double log_scale = std::log(res.upper);
  double exponent = 1.0;
  double prev = res.upper;
  for (int j = 1; it < max_iter && j <= 64; ++j, ++it) {
    const MatrixXd c = b * b;
    const double norm = c.rowwise().sum().maxCoeff();
    if (norm == 0.0) {
      res = SpectralRadiusResult{0.0, 0.0, 0.0, it + 1, true, SpectralMethod::kExact};
      return res;
    }
    log_scale = 2.0 * log_scale + std::log(norm);
    exponent *= 2.0;
    b = c / norm;
    const double estimate = std::exp(log_scale / exponent);
    res.upper = std::min(res.upper, estimate);
    if (j >= 3 && abs(estimate - prev) <= 0.5 * tol) {
      res.value = std::max(estimate, res.lower);
      res.iterations = it + 1;
      res.converged = true;
      res.method = SpectralMethod::kGelfand;
      return res;
    }
    prev = estimate;
  }

  res.iterations = it;
  throw NonConvergenceError("spectral_radius: no convergence within " +
                                std::to_string(max_iter) + " iterations, bracket [" +
                                std::to_string(res.lower) + ", " + std::to_string(res.upper) + "]",
                            NonConvergenceKind::kSlowConvergence, res.lower, res.upper);
}

inline constexpr int kStationaryMaxSquarings = 200;
/// Residual ||F L - L||_max above which a squaring limit L is rejected as the
/// limit of a periodic subsequence.
inline constexpr double kStationaryResidualTol = 1e-9;

/// lim F^k by repeated squaring (k = 2^j), stopping when successive iterates
/// agree entrywise within `tol`.
template <typename Scalar>
RowStochastic<Scalar> stationary(const RowStochastic<Scalar>& f, double tol = kStochasticTol,
                                 int max_squarings = kStationaryMaxSquarings) {
  MatrixX<Scalar> p = f.matrix();
  double prev_diff = std::numeric_limits<double>::infinity();
  double last_diff = prev_diff;
  for (int j = 0; j < max_squarings; ++j) {
    MatrixX<Scalar> q = p * p;
    prev_diff = last_diff;
    last_diff = static_cast<double>((q - p).cwiseAbs().maxCoeff());
    p = std::move(q);
    if (last_diff < tol) {
      const double residual = static_cast<double>((f.matrix() * p - p).cwiseAbs().maxCoeff());
      if (residual > kStationaryResidualTol) {
        throw NonConvergenceError(
            "stationary: powers of F oscillate (periodic chain); F*L differs from L by " +
                std::to_string(residual),
            NonConvergenceKind::kOscillation, std::nan(""), std::nan(""));
      }
      return RowStochastic<Scalar>(std::move(p));
    }
  }
  // Periodic chains keep an O(1) change between squarings; slow chains show a
  // small change that may still be growing.
  const bool stalled = !(last_diff < 0.5 * prev_diff) && last_diff > 1e-3;
  throw NonConvergenceError(
      std::string("stationary: no convergence after ") + std::to_string(max_squarings) +
          " squarings (" + (stalled ? "oscillation" : "slow convergence") +
          "), last change " + std::to_string(last_diff),
      stalled ? NonConvergenceKind::kOscillation : NonConvergenceKind::kSlowConvergence,
      std::nan(""), std::nan(""));
}

/// Stationary form of a leader-first matrix [[I, 0], [X, Y]] with `m` leader
/// rows: F* = [[I, 0], [R, 0]] where (I - Y) R = X.
template <typename Scalar>
RowStochastic<Scalar> stationary_closed_form(const RowStochastic<Scalar>& f_ordered, Index m) {
  const Index n = f_ordered.dim();
  const auto& f = f_ordered.matrix();
  if (m < 1 || m > n) {
    throw PreconditionError("stationary_closed_form: leader count " + std::to_string(m) +
                            " outside [1, " + std::to_string(n) + "]");
  }
  const auto top = f.topRows(m);
  MatrixX<Scalar> expected_top = MatrixX<Scalar>::Zero(m, n);
  expected_top.leftCols(m).setIdentity();
  if ((top - expected_top).cwiseAbs().maxCoeff() > kStochasticTol) {
    throw PreconditionError("stationary_closed_form: first " + std::to_string(m) +
                            " rows are not identity rows");
  }
  MatrixX<Scalar> fstar = MatrixX<Scalar>::Zero(n, n);
  fstar.topLeftCorner(m, m).setIdentity();
  const Index k = n - m;
  if (k > 0) {
    const MatrixX<Scalar> x = f.bottomLeftCorner(k, m);
    const MatrixX<Scalar> i_minus_y = MatrixX<Scalar>::Identity(k, k) - f.bottomRightCorner(k, k);
    Eigen::FullPivLU<MatrixX<Scalar>> lu(i_minus_y);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) {
      throw PreconditionError(
          "stationary_closed_form: I - Y is singular; some follower class receives no "
          "leader influence");
    }
    fstar.bottomLeftCorner(k, m) = lu.solve(x);
  }
  return RowStochastic<Scalar>(std::move(fstar), 1e-10);
}

struct ConsensusWeights {
  VectorXd mu;

  /// Synchronous consensus value mu^T x0.
  double predict(const VectorXd& x0) const { return mu.dot(x0); }
};

/// mu from the rank-one stationary form F* = 1 mu^T. Throws PreconditionError
/// when the rows of F* differ by more than `tol`.
template <typename Scalar>
ConsensusWeights consensus_weights(const RowStochastic<Scalar>& f, double tol = 1e-10) {
  const auto fstar = stationary(f);
  const auto& s = fstar.matrix();
  const auto first = s.row(0);
  for (Index i = 1; i < s.rows(); ++i) {
    if ((s.row(i) - first).cwiseAbs().maxCoeff() > tol) {
      throw PreconditionError(
          "consensus_weights: no rank-one stationary form (rows of F* differ); use "
          "stationary_closed_form for leader-follower topologies");
    }
  }
  ConsensusWeights w{first.transpose().template cast<double>()};
  if (std::abs(w.mu.sum() - 1.0) > 1e-10 || (w.mu.array() < 0.0).any()) {
    throw PreconditionError("consensus_weights: stationary row is not a probability vector");
  }
  return w;
}

/// rho(|F - F*|) for a known stationary form.
template <typename Scalar>
double async_margin(const RowStochastic<Scalar>& f, const RowStochastic<Scalar>& fstar) {
  if (f.dim() != fstar.dim()) throw DimensionError("async_margin: dimension mismatch");
  return spectral_radius((f.matrix() - fstar.matrix()).cwiseAbs()).value;
}

/// rho(|F - F*|) with F* from the squaring limit.
template <typename Scalar>
double async_margin(const RowStochastic<Scalar>& f) {
  return async_margin(f, stationary(f));
}

}  // namespace asyncon
