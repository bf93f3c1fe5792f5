#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "bamc/errors.hpp"
#include "bamc/transition_matrix.hpp"

namespace bamc {

inline constexpr double kDetailedBalanceTol = 1e-10;

namespace detail {

inline double stationary_residual(const RowMajorMatrix& P, const Eigen::VectorXd& pi) {
  return (pi.transpose() * P - pi.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace detail

// Unique stationary distribution of an ergodic chain. Direct route solves
// the rank-repaired system (I - P^T + 11^T) pi = 1; if that solution is not
// strictly positive with residual <= tol, falls back to power iteration.
inline Eigen::VectorXd stationary_distribution(const TransitionMatrix& tm, double tol = 1e-12) {
  const int S = tm.size();
  const RowMajorMatrix& P = tm.entries();

  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(S, S) - P.transpose() +
                      Eigen::MatrixXd::Ones(S, S);
  Eigen::VectorXd pi = A.partialPivLu().solve(Eigen::VectorXd::Ones(S));
  if ((pi.array() > 0.0).all() && detail::stationary_residual(P, pi) <= tol) return pi;

  pi = Eigen::VectorXd::Constant(S, 1.0 / S);
  constexpr int kMaxSweeps = 2'000'000;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    Eigen::VectorXd next = P.transpose() * pi;
    next /= next.sum();
    pi = next;
    if (detail::stationary_residual(P, pi) <= tol && (pi.array() > 0.0).all()) return pi;
  }
  throw NoConvergence("stationary distribution did not converge");
}

// Per-state Gini index G(x) = sum_y P(x,y)(1 - P(x,y)), in [0, 1 - 1/S].
// Zero exactly when the row is deterministic.
inline Eigen::VectorXd gini_index(const TransitionMatrix& tm) {
  const RowMajorMatrix& P = tm.entries();
  return (P.array() * (1.0 - P.array())).rowwise().sum();
}

inline bool is_reversible(const TransitionMatrix& tm, const Eigen::VectorXd& pi,
                          double tol = kDetailedBalanceTol) {
  const int S = tm.size();
  for (int x = 0; x < S; ++x)
    for (int y = x + 1; y < S; ++y)
      if (std::abs(pi(x) * tm(x, y) - pi(y) * tm(y, x)) > tol) return false;
  return true;
}

// Absolute spectral gap 1 - max(|lambda_2|, ..., |lambda_S|). Defined for
// reversible chains only; nullopt signals a non-reversible chain rather
// than an error. Computed on the symmetrization D^{1/2} P D^{-1/2}, whose
// spectrum equals that of P when detailed balance holds.
inline std::optional<double> spectral_gap(const TransitionMatrix& tm, const Eigen::VectorXd& pi,
                                          double db_tol = kDetailedBalanceTol) {
  if (!is_reversible(tm, pi, db_tol)) return std::nullopt;
  const int S = tm.size();
  const Eigen::VectorXd sqrt_pi = pi.array().sqrt();
  Eigen::MatrixXd B = sqrt_pi.asDiagonal() * tm.entries() * sqrt_pi.cwiseInverse().asDiagonal();
  B = 0.5 * (B + B.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& lam = es.eigenvalues();  // ascending
  const double second = std::max(std::abs(lam(0)), std::abs(lam(S - 2)));
  return 1.0 - second;
}

// Pseudo-spectral gap max_l gap((P*)^l P^l) / l over l = 1..l_max, where
// P* is the time reversal. (P*)^l P^l is similar to B^T B with
// B = D^{1/2} P^l D^{-1/2}, so its spectrum comes from a symmetric PSD
// eigenproblem. Truncation at l_max makes the result a lower bound; the
// default covers the exact maximum for every chain with at most 6 states.
inline double pseudo_spectral_gap(const TransitionMatrix& tm, const Eigen::VectorXd& pi,
                                  int l_max = 32) {
  if (l_max < 1) throw InvalidConfig("l_max must be at least 1");
  const int S = tm.size();
  const Eigen::VectorXd sqrt_pi = pi.array().sqrt();
  const Eigen::MatrixXd B1 =
      sqrt_pi.asDiagonal() * tm.entries() * sqrt_pi.cwiseInverse().asDiagonal();
  Eigen::MatrixXd Bl = Eigen::MatrixXd::Identity(S, S);
  double best = 0.0;
  for (int l = 1; l <= l_max; ++l) {
    Bl = Bl * B1;
    Eigen::MatrixXd A = Bl.transpose() * Bl;
    A = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    const double second = std::min(1.0, std::max(0.0, es.eigenvalues()(S - 2)));
    best = std::max(best, (1.0 - second) / l);
  }
  return best;
}

struct ChainAnalysis {
  Eigen::VectorXd stationary;
  double min_stationary = 0.0;
  Eigen::VectorXd gini;              // per state
  double gini_sum = 0.0;
  double inv_stationary_sum = 0.0;   // H = sum_x 1/pi(x), >= S^2
  bool reversible = false;
  std::optional<double> spectral_gap;
  double pseudo_spectral_gap = 0.0;

  // gap driving mixing-time bounds: absolute gap when defined, else pseudo
  double mixing_gap() const { return reversible ? *spectral_gap : pseudo_spectral_gap; }
};

inline ChainAnalysis analyze_chain(const TransitionMatrix& tm) {
  if (!tm.ergodic()) throw NotErgodic("analysis requires an ergodic chain");
  ChainAnalysis a;
  a.stationary = stationary_distribution(tm);
  a.min_stationary = a.stationary.minCoeff();
  a.gini = gini_index(tm);
  a.gini_sum = a.gini.sum();
  a.inv_stationary_sum = a.stationary.cwiseInverse().sum();
  a.reversible = is_reversible(tm, a.stationary);
  if (a.reversible) a.spectral_gap = spectral_gap(tm, a.stationary);
  a.pseudo_spectral_gap = bamc::pseudo_spectral_gap(tm, a.stationary);
  return a;
}

}  // namespace bamc
