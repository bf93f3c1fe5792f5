#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bamc/errors.hpp"
#include "bamc/instance.hpp"

namespace bamc {

struct SmoothingConfig {
  double alpha = 0.0;

  static SmoothingConfig defaults(int S) { return {1.0 / (3.0 * S)}; }

  void validate() const {
    if (!(alpha > 0.0)) throw InvalidConfig("smoothing alpha must be positive");
  }
};

// Sufficient statistics for one chain. visits(x) counts observations of x;
// transitions(x, y) counts observed consecutive pairs, so
// sum_y transitions(x, y) = visits(x) - [last_state == x].
struct ChainCounts {
  std::int64_t pulls = 0;
  Eigen::VectorX<std::int64_t> visits;
  Eigen::MatrixX<std::int64_t> transitions;
  std::optional<int> last_state;

  explicit ChainCounts(int S)
      : visits(Eigen::VectorX<std::int64_t>::Zero(S)),
        transitions(Eigen::MatrixX<std::int64_t>::Zero(S, S)) {}

  int num_states() const { return static_cast<int>(visits.size()); }
};

struct ObservationCounts {
  std::vector<ChainCounts> chains;
  std::int64_t rounds = 0;

  ObservationCounts(int K, int S) : chains(K, ChainCounts(S)) {}
};

inline void record_observation(ObservationCounts& counts, int k, int x) {
  ChainCounts& c = counts.chains[k];
  if (c.last_state) c.transitions(*c.last_state, x) += 1;
  c.visits(x) += 1;
  c.pulls += 1;
  c.last_state = x;
  counts.rounds += 1;
}

// Smoothed row estimate (alpha + N(x,y)) / (alpha S + T_x). The denominator
// uses the visit count, so the last-visited row sums to slightly below one
// and unvisited rows are uniform.
inline void smoothed_row(const ChainCounts& c, int x, const SmoothingConfig& cfg,
                         Eigen::MatrixXd& out) {
  const int S = c.num_states();
  if (c.visits(x) == 0) {
    // alpha / (alpha S) in floating point can land one ulp off 1/S
    out.row(x).setConstant(1.0 / S);
    return;
  }
  const double denom = cfg.alpha * S + static_cast<double>(c.visits(x));
  for (int y = 0; y < S; ++y)
    out(x, y) = (cfg.alpha + static_cast<double>(c.transitions(x, y))) / denom;
}

inline Eigen::MatrixXd smoothed_estimate(const ChainCounts& c, const SmoothingConfig& cfg) {
  cfg.validate();
  const int S = c.num_states();
  Eigen::MatrixXd phat(S, S);
  for (int x = 0; x < S; ++x) smoothed_row(c, x, cfg, phat);
  return phat;
}

// Visit frequencies T_x / T. Exact integer ratios, no renormalization.
inline Eigen::VectorXd empirical_stationary(const ChainCounts& c) {
  if (c.pulls == 0) throw NoSamples("empirical stationary needs at least one observation");
  return c.visits.cast<double>() / static_cast<double>(c.pulls);
}

inline Eigen::VectorXd empirical_gini(const Eigen::MatrixXd& phat) {
  return (phat.array() * (1.0 - phat.array())).rowwise().sum();
}

namespace detail {

inline double row_sq_distance(const Eigen::MatrixXd& phat, const RowMajorMatrix& truth, int x) {
  double d = 0.0;
  for (int y = 0; y < static_cast<int>(truth.cols()); ++y) {
    const double e = phat(x, y) - truth(x, y);
    d += e * e;
  }
  return d;
}

}  // namespace detail

// L_k = sum_x pihat_k(x) ||phat_k(x,.) - P_k(x,.)||_2^2
inline std::vector<double> loss_weighted(const ObservationCounts& counts,
                                         const std::vector<Eigen::MatrixXd>& phat,
                                         const ProblemInstance& instance) {
  std::vector<double> loss(counts.chains.size());
  for (std::size_t k = 0; k < counts.chains.size(); ++k) {
    const ChainCounts& c = counts.chains[k];
    if (c.pulls == 0) throw NoSamples("chain " + std::to_string(k) + " was never sampled");
    const RowMajorMatrix& P = instance.chain(static_cast<int>(k)).matrix.entries();
    double acc = 0.0;
    for (int x = 0; x < c.num_states(); ++x) {
      const double w = static_cast<double>(c.visits(x)) / static_cast<double>(c.pulls);
      if (w > 0.0) acc += w * detail::row_sq_distance(phat[k], P, x);
    }
    loss[k] = acc;
  }
  return loss;
}

// L'_k = sum_x ||phat_k(x,.) - P_k(x,.)||_2^2
inline std::vector<double> loss_unweighted(const std::vector<Eigen::MatrixXd>& phat,
                                           const ProblemInstance& instance) {
  std::vector<double> loss(phat.size());
  for (std::size_t k = 0; k < phat.size(); ++k) {
    const RowMajorMatrix& P = instance.chain(static_cast<int>(k)).matrix.entries();
    double acc = 0.0;
    for (int x = 0; x < instance.num_states(); ++x)
      acc += detail::row_sq_distance(phat[k], P, x);
    loss[k] = acc;
  }
  return loss;
}

// L''_k weights rows by the true stationary distribution; NaN for chains
// without an analysis (permissive instances).
inline std::vector<double> loss_pseudo(const std::vector<Eigen::MatrixXd>& phat,
                                       const ProblemInstance& instance) {
  std::vector<double> loss(phat.size());
  for (std::size_t k = 0; k < phat.size(); ++k) {
    const AnalyzedChain& chain = instance.chain(static_cast<int>(k));
    if (!chain.analysis) {
      loss[k] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const RowMajorMatrix& P = chain.matrix.entries();
    double acc = 0.0;
    for (int x = 0; x < instance.num_states(); ++x)
      acc += chain.analysis->stationary(x) * detail::row_sq_distance(phat[k], P, x);
    loss[k] = acc;
  }
  return loss;
}

struct LossReport {
  std::vector<double> weighted;    // L_k
  double max_weighted = 0.0;       // L_n
  std::vector<double> unweighted;  // L'_k, diagnostic
  double max_unweighted = 0.0;
  std::vector<double> pseudo;      // L''_k, diagnostic, NaN when pi unknown
  double max_pseudo = 0.0;
  std::vector<std::int64_t> pulls;
  std::vector<double> allocation;  // T_k / n
};

inline LossReport make_loss_report(const ObservationCounts& counts, const SmoothingConfig& cfg,
                                   const ProblemInstance& instance) {
  std::vector<Eigen::MatrixXd> phat;
  phat.reserve(counts.chains.size());
  for (const ChainCounts& c : counts.chains) phat.push_back(smoothed_estimate(c, cfg));

  LossReport r;
  r.weighted = loss_weighted(counts, phat, instance);
  r.unweighted = loss_unweighted(phat, instance);
  r.pseudo = loss_pseudo(phat, instance);
  auto vec_max = [](const std::vector<double>& v) {
    // NaN entries (permissive chains) are skipped; all-NaN yields NaN
    double m = std::numeric_limits<double>::quiet_NaN();
    for (double x : v)
      if (!std::isnan(x) && !(x <= m)) m = x;
    return m;
  };
  r.max_weighted = vec_max(r.weighted);
  r.max_unweighted = vec_max(r.unweighted);
  r.max_pseudo = vec_max(r.pseudo);
  for (const ChainCounts& c : counts.chains) {
    r.pulls.push_back(c.pulls);
    r.allocation.push_back(static_cast<double>(c.pulls) / static_cast<double>(counts.rounds));
  }
  return r;
}

}  // namespace bamc
