#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "erq/generator.hpp"

namespace erq {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Iteration budget exhausted before the convergence threshold was met.
struct ConvergenceError : SolverError {
  ConvergenceError(const std::string& what, double diff)
      : SolverError(what + " (last difference " + std::to_string(diff) + ")"),
        last_diff(diff) {}
  double last_diff;
};

enum class Method { squaring, linear, uniformization };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::squaring: return "squaring";
    case Method::linear: return "linear";
    case Method::uniformization: return "uniform";
  }
  return "?";
}

inline Method method_from_name(const std::string& name) {
  if (name == "squaring") return Method::squaring;
  if (name == "linear") return Method::linear;
  if (name == "uniform" || name == "uniformization")
    return Method::uniformization;
  throw std::invalid_argument("unknown method '" + name +
                              "' (expected squaring, linear or uniform)");
}

struct SolverConfig {
  double delta = 1e-12;        ///< successive-iterate convergence threshold
  double residual_tol = 1e-9;  ///< accepted max-norm of pi*Q
  int max_squarings = 60;
  long max_power_iterations = 5'000'000;
  double time_step = 0.0;  ///< h for exp(hQ); 0 selects 1/(1.05*max|q_ii|)

  void validate() const {
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
    if (max_squarings < 1)
      throw std::invalid_argument("max_squarings must be >= 1");
  }
};

struct StationaryDistribution {
  std::vector<double> pi;  ///< aligned with StateSpace ordering
  Method method = Method::squaring;
  int iterations = 0;
  double residual = 0.0;  ///< max-norm of pi*Q
};

namespace detail {

// Dense instances hold an N x N matrix of doubles; beyond a few thousand
// states that stops being a sensible tool and uniformization should be used.
constexpr std::size_t kDenseLimit = 6000;

inline void require_dense_size(const GeneratorMatrix& Q, const char* where) {
  if (Q.size() > kDenseLimit)
    throw SolverError(std::string(where) + ": " + std::to_string(Q.size()) +
                      " states exceeds the dense-matrix limit of " +
                      std::to_string(kDenseLimit) +
                      "; use the uniformization method");
}

inline Eigen::MatrixXd to_dense(const GeneratorMatrix& Q) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(Q.size(), Q.size());
  for (const auto& e : Q.entries()) A(e.row, e.col) += e.rate;
  return A;
}

inline double max_abs(const Eigen::MatrixXd& A) {
  return A.cwiseAbs().maxCoeff();
}

inline double default_time_step(const GeneratorMatrix& Q) {
  const double m = Q.max_abs_diagonal();
  if (m == 0.0) return 1.0;  // single absorbing state; any h works
  return 1.0 / (1.05 * m);
}

/// max-norm of pi*Q computed on the sparse entries.
inline double stationary_residual(const std::vector<double>& pi,
                                  const GeneratorMatrix& Q) {
  std::vector<double> v(Q.size(), 0.0);
  for (const auto& e : Q.entries()) v[e.col] += pi[e.row] * e.rate;
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Shared post-processing: clamp roundoff negatives, normalize the mass to
/// exactly one, and verify the residual against the configured tolerance.
inline StationaryDistribution finalize(std::vector<double> pi,
                                       const GeneratorMatrix& Q, Method method,
                                       int iterations,
                                       const SolverConfig& cfg) {
  double sum = 0.0;
  for (double& x : pi) {
    if (x < 0.0) {
      if (x < -1e-9)
        throw SolverError("stationary vector has negative entry " +
                          std::to_string(x));
      x = 0.0;
    }
    sum += x;
  }
  if (!(std::abs(sum - 1.0) <= 1e-9))
    throw SolverError("stationary vector mass " + std::to_string(sum) +
                      " is not 1");
  for (double& x : pi) x /= sum;

  StationaryDistribution out;
  out.pi = std::move(pi);
  out.method = method;
  out.iterations = iterations;
  out.residual = stationary_residual(out.pi, Q);
  if (!(out.residual <= cfg.residual_tol))
    throw SolverError("stationary residual " + std::to_string(out.residual) +
                      " exceeds tolerance " +
                      std::to_string(cfg.residual_tol));
  return out;
}

}  // namespace detail

/// Transition matrix P(h) = exp(hQ), computed by scaling and squaring with a
/// truncated Taylor series (tail below 1e-14 in the max norm). Tiny negative
/// entries from roundoff are clamped to zero and rows renormalized; the
/// largest such adjustment is reported alongside the matrix.
struct TransitionMatrix {
  Eigen::MatrixXd P;
  double clamp_adjustment = 0.0;
};

inline TransitionMatrix transition_matrix(const GeneratorMatrix& Q, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("time step h must be > 0");
  detail::require_dense_size(Q, "transition_matrix");
  const auto n = static_cast<Eigen::Index>(Q.size());

  Eigen::MatrixXd A = detail::to_dense(Q) * h;
  const double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
  int scalings = 0;
  while (norm / std::exp2(scalings) > 0.5) ++scalings;
  A /= std::exp2(scalings);
  const double b = norm / std::exp2(scalings);  // <= 0.5

  Eigen::MatrixXd E = Eigen::MatrixXd::Identity(n, n) + A;
  Eigen::MatrixXd term = A;
  for (int k = 2; k <= 60; ++k) {
    term = (term * A) / double(k);
    E += term;
    const double tnorm = detail::max_abs(term);
    // Geometric tail bound: remaining terms < tnorm * q / (1-q), q = b/(k+1).
    const double q = b / (k + 1);
    if (tnorm * q / (1.0 - q) < 1e-15) break;
  }
  for (int i = 0; i < scalings; ++i) {
    E = E * E;
    if (!E.allFinite())
      throw SolverError("non-finite values while squaring exp(" +
                        std::to_string(h) + " Q)");
  }
  if (!E.allFinite())
    throw SolverError("non-finite values in exp(hQ) series");

  TransitionMatrix out{std::move(E), 0.0};
  for (Eigen::Index i = 0; i < n; ++i) {
    double rowsum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      double& x = out.P(i, j);
      if (x < 0.0) {
        if (x < -1e-13)
          throw SolverError("exp(hQ) entry " + std::to_string(x) +
                            " is negative beyond roundoff");
        out.clamp_adjustment = std::max(out.clamp_adjustment, -x);
        x = 0.0;
      }
      rowsum += x;
    }
    if (std::abs(rowsum - 1.0) > 1e-12)
      throw SolverError("exp(hQ) row sum " + std::to_string(rowsum) +
                        " is not stochastic");
    out.clamp_adjustment = std::max(out.clamp_adjustment,
                                    std::abs(rowsum - 1.0));
    out.P.row(i) /= rowsum;
  }
  return out;
}

/// Repeated squaring of a stochastic matrix until successive iterates agree
/// elementwise within delta; the rank-1 limit's rows all equal the stationary
/// vector, returned as the row average. A fixed point whose rows still
/// disagree (identity, reducible or periodic chains) is rejected.
struct SquaringOutcome {
  std::vector<double> pi;
  int squarings = 0;
  double last_diff = 0.0;
};

inline SquaringOutcome squaring_limit(Eigen::MatrixXd P,
                                      const SolverConfig& cfg = {}) {
  cfg.validate();
  const Eigen::Index n = P.rows();
  if (P.cols() != n) throw std::invalid_argument("matrix must be square");

  Eigen::MatrixXd next(n, n);
  double diff = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= cfg.max_squarings; ++k) {
    next.noalias() = P * P;
    if (!next.allFinite())
      throw SolverError("non-finite values while squaring transition matrix");
    diff = detail::max_abs(next - P);
    P.swap(next);
    if (diff <= cfg.delta) {
      const double spread =
          (P.colwise().maxCoeff() - P.colwise().minCoeff()).maxCoeff();
      if (spread > std::max(1e4 * cfg.delta, 1e-8))
        throw SolverError(
            "squaring reached a fixed point whose rows disagree (spread " +
            std::to_string(spread) + "); the chain is reducible or periodic");
      Eigen::RowVectorXd pi = P.colwise().mean();
      return SquaringOutcome{{pi.begin(), pi.end()}, k, diff};
    }
  }
  throw ConvergenceError("transition-matrix squaring did not converge within " +
                             std::to_string(cfg.max_squarings) + " squarings",
                         diff);
}

/// Reference method: stationary distribution via the rank-1 limit of
/// exp(hQ)^(2^k).
inline StationaryDistribution steady_state_squaring(
    const GeneratorMatrix& Q, const SolverConfig& cfg = {}) {
  cfg.validate();
  const double h =
      cfg.time_step > 0.0 ? cfg.time_step : detail::default_time_step(Q);
  TransitionMatrix tm = transition_matrix(Q, h);
  SquaringOutcome out = squaring_limit(std::move(tm.P), cfg);
  return detail::finalize(std::move(out.pi), Q, Method::squaring,
                          out.squarings, cfg);
}

/// Direct route: solve pi*Q = 0 with sum(pi) = 1 by replacing one equation of
/// the transposed system with the normalization row, then LU with partial
/// pivoting plus two refinement sweeps.
inline StationaryDistribution steady_state_linear(const GeneratorMatrix& Q,
                                                  const SolverConfig& cfg = {}) {
  cfg.validate();
  detail::require_dense_size(Q, "steady_state_linear");
  const auto n = static_cast<Eigen::Index>(Q.size());

  Eigen::MatrixXd A = detail::to_dense(Q).transpose();
  A.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (min_pivot <= n * std::numeric_limits<double>::epsilon() *
                       detail::max_abs(A))
    throw SolverError("singular system: the chain is reducible");

  Eigen::VectorXd x = lu.solve(b);
  int refinements = 0;
  for (; refinements < 2; ++refinements) {
    Eigen::VectorXd res = b - A * x;
    x += lu.solve(res);
  }
  if (!x.allFinite())
    throw SolverError("linear solve produced non-finite values");
  return detail::finalize({x.begin(), x.end()}, Q, Method::linear, refinements,
                          cfg);
}

/// Third route: uniformization. P = I + Q/Lambda with Lambda = 1.05*max|q_ii|
/// shares Q's stationary vector; plain power iteration on the sparse entries
/// finds it. Iteration stops once successive iterates differ by <= delta and
/// the geometric-rate error estimate has dropped to the same scale.
inline StationaryDistribution steady_state_uniformization(
    const GeneratorMatrix& Q, const SolverConfig& cfg = {}) {
  cfg.validate();
  const std::size_t n = Q.size();
  if (n == 1)
    return detail::finalize({1.0}, Q, Method::uniformization, 0, cfg);

  const double uniform_rate = 1.05 * Q.max_abs_diagonal();
  if (!(uniform_rate > 0.0))
    throw SolverError("zero generator cannot be uniformized");

  struct Jump {
    std::size_t row, col;
    double prob;
  };
  std::vector<Jump> jumps;
  jumps.reserve(Q.entries().size());
  for (const auto& e : Q.entries())
    jumps.push_back({e.row, e.col, e.rate / uniform_rate});

  std::vector<double> x(n, 1.0 / double(n)), y(n);
  double prev_diff = 0.0;
  double rate_estimate = 0.0;  // decayed max of recent diff ratios
  double best_diff = std::numeric_limits<double>::infinity();
  long best_at = 0;
  double diff = std::numeric_limits<double>::infinity();
  for (long it = 1; it <= cfg.max_power_iterations; ++it) {
    y = x;
    for (const auto& j : jumps) y[j.col] += x[j.row] * j.prob;
    double sum = 0.0;
    for (double v : y) sum += v;
    for (double& v : y) v /= sum;

    diff = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      diff = std::max(diff, std::abs(y[i] - x[i]));
    x.swap(y);

    if (prev_diff > 0.0 && diff > 0.0) {
      const double ratio = std::min(diff / prev_diff, 1.0 - 1e-12);
      rate_estimate = std::max(ratio, 0.9995 * rate_estimate);
    }
    prev_diff = diff;
    if (diff < best_diff) {
      best_diff = diff;
      best_at = it;
    }

    if (diff <= cfg.delta) {
      // The iterate still carries ~diff/(1-gamma) of the subdominant mode;
      // keep going until that estimate is negligible or roundoff stalls it.
      const double remaining = diff * rate_estimate / (1.0 - rate_estimate);
      const bool stalled = it - best_at > 300;
      if (remaining <= 0.1 * cfg.delta || diff == 0.0 || stalled)
        return detail::finalize(std::move(x), Q, Method::uniformization,
                                static_cast<int>(it), cfg);
    }
  }
  throw ConvergenceError("uniformization power iteration did not converge",
                         diff);
}

inline StationaryDistribution solve_stationary(const GeneratorMatrix& Q,
                                               Method method,
                                               const SolverConfig& cfg = {}) {
  switch (method) {
    case Method::squaring: return steady_state_squaring(Q, cfg);
    case Method::linear: return steady_state_linear(Q, cfg);
    case Method::uniformization: return steady_state_uniformization(Q, cfg);
  }
  throw std::invalid_argument("unknown method");
}

}  // namespace erq
