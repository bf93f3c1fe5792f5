#pragma once

// Confidence machinery: peeled log scalings, per-entry deviation radii for
// the smoothed estimator (true-variance and empirical-variance forms), a
// stationary-occupancy radius, the uniform-in-time confidence event, and
// the budget beyond which the refined loss bound applies.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

#include "bamc/errors.hpp"
#include "bamc/history.hpp"
#include "bamc/instance.hpp"

namespace bamc {

struct ConfidenceConfig {
  std::int64_t n = 0;  // budget the scalings are tuned for
  double delta = 0.05;
  int K = 1;
  int S = 2;
  double c = 1.1;  // peeling base

  void validate() const {
    if (n < 2) throw InvalidConfig("confidence scaling needs n >= 2");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidConfig("delta must lie in (0, 1)");
    if (!(c > 1.0)) throw InvalidConfig("peeling base c must exceed 1");
    if (K < 1 || S < 2) throw InvalidConfig("need K >= 1 chains and S >= 2 states");
  }
};

// c * ln(ceil(ln n / ln c) * ratio); the ceil counts geometric peeling slabs
inline double peeled_log(std::int64_t n, double c, double ratio) {
  const double peels = std::ceil(std::log(static_cast<double>(n)) / std::log(c));
  return c * std::log(peels * ratio);
}

// scaling for the K-chain uniform confidence event, ratio 6KS^2/delta
inline double beta(const ConfidenceConfig& cfg) {
  cfg.validate();
  return peeled_log(cfg.n, cfg.c, 6.0 * cfg.K * cfg.S * cfg.S / cfg.delta);
}

// single-chain scaling, ratio 2S^2/delta
inline double zeta(std::int64_t n, double delta, int S, double c = 1.1) {
  ConfidenceConfig probe{n, delta, 1, S, c};
  probe.validate();
  return peeled_log(n, c, 2.0 * S * S / delta);
}

// sqrt(2 v z) + b z for a sub-gamma upper tail with variance proxy v and
// scale b
inline double sub_gamma_radius(double v, double b, double z) {
  if (v < 0.0 || z < 0.0) throw InvalidConfig("sub-gamma radius needs v, z >= 0");
  return std::sqrt(2.0 * v * z) + b * z;
}

// True-variance radius for one entry of the smoothed estimator after t_x
// visits. var is P(x,y)(1 - P(x,y)).
inline double bernstein_markov_radius(double p_xy, std::int64_t t_x, double zeta_val,
                                      double alpha, int S) {
  const double tx = static_cast<double>(t_x);
  const double denom = tx + alpha * S;
  const double var = p_xy * (1.0 - p_xy);
  const double main = std::sqrt((tx / denom) * 2.0 * var * zeta_val / denom);
  const double slack = (zeta_val / 3.0 + alpha * std::abs(1.0 - S * p_xy)) / denom;
  return main + slack;
}

// Constants of the empirical-variance radius at a given scaling zeta.
struct EmpiricalBernsteinConstants {
  double zeta = 0.0;
  double zeta_prime = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  static EmpiricalBernsteinConstants compute(double zeta_val, double alpha, int S) {
    EmpiricalBernsteinConstants k;
    k.zeta = zeta_val;
    k.zeta_prime = zeta_val / 3.0 + alpha * (S - 1);
    k.c1 = std::sqrt(8.0 * zeta_val) * (2.0 * zeta_val + k.zeta_prime);
    k.c2 = k.zeta_prime * k.zeta_prime +
           4.0 * zeta_val *
               (4.0 * zeta_val + k.zeta_prime + 2.0 * std::sqrt(zeta_val * k.zeta_prime)) +
           k.zeta_prime * std::sqrt(8.0 * zeta_val) *
               (5.3 * std::sqrt(zeta_val) + std::sqrt(2.0 * k.zeta_prime));
    return k;
  }
};

// Fully data-driven radius: replaces the true variance with
// vhat = phat(x,y)(1 - phat(x,y)).
inline double empirical_bernstein_radius(double phat_xy, std::int64_t t_x,
                                         const EmpiricalBernsteinConstants& k, double alpha,
                                         int S) {
  const double tx = static_cast<double>(t_x);
  const double denom2 = (tx + alpha * S) * (tx + alpha * S);
  const double vhat = phat_xy * (1.0 - phat_xy);
  return std::sqrt(2.0 * tx * vhat * k.zeta / denom2 + k.c1 * std::sqrt(tx * vhat) / denom2 +
                   k.c2 / denom2);
}

// Deviation radius for the empirical occupancy of one state after n pulls
// of a chain with spectral (or pseudo-spectral) gap gamma.
inline double stationary_radius(double pi_x, double gamma, std::int64_t n, double delta,
                                double pi_min) {
  if (!(gamma > 0.0) || n < 1 || !(delta > 0.0 && delta < 1.0) || !(pi_min > 0.0))
    throw InvalidConfig("stationary radius needs gamma > 0, n >= 1, delta in (0,1), pi_min > 0");
  const double e_term = std::log((1.0 / delta) * std::sqrt(2.0 / pi_min));
  return std::sqrt(8.0 * pi_x * (1.0 - pi_x) * e_term / (gamma * static_cast<double>(n))) +
         20.0 * e_term / (gamma * static_cast<double>(n));
}

// Uniform-in-time confidence event: at every recorded round, for every
// chain and entry, the estimate deviates from the truth by at most the
// true-variance radius at scaling beta. Unvisited rows pass automatically
// because their radius exceeds one.
inline bool confidence_event_holds(const EstimateHistory& history,
                                   const ProblemInstance& instance,
                                   const ConfidenceConfig& cfg) {
  const double b = beta(cfg);
  const int S = instance.num_states();
  for (const RoundSnapshot& snap : history.snapshots) {
    for (int k = 0; k < instance.num_chains(); ++k) {
      const ChainSnapshot& cs = snap.chains[k];
      const RowMajorMatrix& P = instance.chain(k).matrix.entries();
      for (int x = 0; x < S; ++x) {
        const std::int64_t tx = cs.visits(x);
        const double denom = static_cast<double>(tx) + history.alpha * S;
        for (int y = 0; y < S; ++y) {
          const double var = P(x, y) * (1.0 - P(x, y));
          const double radius =
              std::sqrt(2.0 * static_cast<double>(tx) * var * b) / denom + b / (3.0 * denom);
          if (std::abs(cs.phat(x, y) - P(x, y)) > radius) return false;
        }
      }
    }
  }
  return true;
}

// Budget beyond which the refined bound regime applies:
// ceil(K * max_k ((300 / (gap_k pimin_k)) * ln((2K/delta) / sqrt(pimin_k)))^2)
inline double budget_cutoff_formula(int K, std::span<const double> gaps,
                                    std::span<const double> pi_mins, double delta) {
  if (K < 1 || gaps.size() != static_cast<std::size_t>(K) || pi_mins.size() != gaps.size())
    throw InvalidConfig("cutoff needs one gap and one pi_min per chain");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidConfig("delta must lie in (0, 1)");
  double worst = 0.0;
  for (int k = 0; k < K; ++k) {
    if (!(gaps[k] > 0.0) || !(pi_mins[k] > 0.0))
      throw InvalidConfig("cutoff needs positive gaps and stationary minima");
    const double inner =
        (300.0 / (gaps[k] * pi_mins[k])) * std::log((2.0 * K / delta) / std::sqrt(pi_mins[k]));
    worst = std::max(worst, inner * inner);
  }
  return std::ceil(static_cast<double>(K) * worst);
}

inline std::int64_t budget_cutoff(const ProblemInstance& instance, double delta) {
  const int K = instance.num_chains();
  std::vector<double> gaps(K), pi_mins(K);
  for (int k = 0; k < K; ++k) {
    const auto& analysis = instance.chain(k).analysis;
    if (!analysis) throw NotErgodic("budget cutoff needs analyzed (ergodic) chains");
    gaps[k] = analysis->mixing_gap();
    pi_mins[k] = analysis->min_stationary;
  }
  const double cutoff = budget_cutoff_formula(K, gaps, pi_mins, delta);
  if (cutoff >= static_cast<double>(std::numeric_limits<std::int64_t>::max()))
    return std::numeric_limits<std::int64_t>::max();
  return static_cast<std::int64_t>(cutoff);
}

}  // namespace bamc
