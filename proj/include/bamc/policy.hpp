#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bamc/concentration.hpp"
#include "bamc/errors.hpp"
#include "bamc/estimation.hpp"
#include "bamc/history.hpp"
#include "bamc/instance.hpp"
#include "bamc/simulate.hpp"

namespace bamc {

enum class Policy { BaMc, Uniform, OracleStatic };

inline std::string to_string(Policy p) {
  switch (p) {
    case Policy::BaMc: return "bamc";
    case Policy::Uniform: return "uniform";
    case Policy::OracleStatic: return "oracle-static";
  }
  return "?";
}

inline Policy parse_policy(const std::string& name) {
  if (name == "bamc") return Policy::BaMc;
  if (name == "uniform") return Policy::Uniform;
  if (name == "oracle-static") return Policy::OracleStatic;
  throw SchemaError("unknown policy \"" + name + "\"");
}

// Optimistic index for one chain after T pulls:
//   gini term        (2 beta / T) sum_{x visited} Ghat(x)
//   deviation term   (6.6 beta^{3/2} / T) sum_x T_x^{3/2}/(T_x+aS)^2
//                                         sum_y sqrt(phat(1-phat)(x,y))
//   correction term  (28 beta^2 S / T) sum_{x visited} 1/(T_x+aS)
// Unvisited states contribute to no term.
struct IndexSnapshot {
  double term_gini = 0.0;
  double term_deviation = 0.0;
  double term_correction = 0.0;

  double value() const { return term_gini + term_deviation + term_correction; }
};

inline IndexSnapshot compute_index(const ChainCounts& counts, const Eigen::MatrixXd& phat,
                                   double beta_val, double alpha) {
  if (counts.pulls < 1) throw NotSampled("index needs at least one pull");
  const int S = counts.num_states();
  const double T = static_cast<double>(counts.pulls);
  const double aS = alpha * S;

  double gini_sum = 0.0, deviation = 0.0, correction = 0.0;
  for (int x = 0; x < S; ++x) {
    const double tx = static_cast<double>(counts.visits(x));
    if (tx <= 0.0) continue;
    double g = 0.0, sd = 0.0;
    for (int y = 0; y < S; ++y) {
      const double v = phat(x, y) * (1.0 - phat(x, y));
      g += v;
      sd += std::sqrt(v);
    }
    gini_sum += g;
    deviation += tx * std::sqrt(tx) / ((tx + aS) * (tx + aS)) * sd;
    correction += 1.0 / (tx + aS);
  }

  IndexSnapshot snap;
  snap.term_gini = 2.0 * beta_val / T * gini_sum;
  snap.term_deviation = 6.6 * beta_val * std::sqrt(beta_val) / T * deviation;
  snap.term_correction = 28.0 * beta_val * beta_val * S / T * correction;
  return snap;
}

// Round t chooses chains 1, 1, 2, 2, ..., K, K for t <= 2K, then the
// argmax index, lowest id on ties. Chain ids are 0-based.
inline int bamc_select(std::span<const IndexSnapshot> indices, std::int64_t t, int K,
                       std::int64_t n) {
  if (n < 2 * static_cast<std::int64_t>(K))
    throw BudgetTooSmall("budget must cover two pulls per chain");
  if (t <= 2 * static_cast<std::int64_t>(K)) return static_cast<int>((t - 1) / 2);
  int best = 0;
  double best_value = indices[0].value();
  for (int k = 1; k < K; ++k) {
    const double v = indices[k].value();
    if (v > best_value) {
      best = k;
      best_value = v;
    }
  }
  return best;
}

inline int uniform_policy(std::int64_t t, int K) { return static_cast<int>((t - 1) % K); }

// Integerized eta_k * n by largest remainder (lowest index wins ties),
// then repaired so every chain receives at least one pull.
inline std::vector<std::int64_t> oracle_static_allocation(const ProblemInstance& instance,
                                                          std::int64_t n) {
  const int K = instance.num_chains();
  if (n < K) throw BudgetTooSmall("budget must cover one pull per chain");
  std::vector<std::int64_t> alloc(K);
  std::vector<std::pair<double, int>> remainders(K);
  std::int64_t assigned = 0;
  for (int k = 0; k < K; ++k) {
    const double quota = instance.eta(k) * static_cast<double>(n);
    alloc[k] = static_cast<std::int64_t>(std::floor(quota));
    remainders[k] = {quota - std::floor(quota), k};
    assigned += alloc[k];
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::int64_t i = 0; i < n - assigned; ++i) alloc[remainders[i % K].second] += 1;
  for (int k = 0; k < K; ++k) {
    while (alloc[k] == 0) {
      const int donor =
          static_cast<int>(std::max_element(alloc.begin(), alloc.end()) - alloc.begin());
      alloc[donor] -= 1;
      alloc[k] += 1;
    }
  }
  return alloc;
}

struct RunOptions {
  SnapshotMode snapshot_mode = SnapshotMode::Off;
  bool record_trajectory = false;
  double c = 1.1;
  std::optional<double> alpha;  // default 1/(3S)
};

struct AllocationResult {
  std::vector<std::int64_t> pulls;
  std::vector<int> trajectory;  // empty unless requested
  LossReport loss_report;
  EstimateHistory history;  // empty when snapshots are off
  double beta_used = 0.0;
};

// Loss bound that holds for any budget and any chains:
// 304 K S^2 beta^2 / n + 564 K^2 S^2 beta^2 / (n - 2K)^2.
inline double any_budget_bound(int K, int S, double beta_val, std::int64_t n) {
  if (n <= 2 * static_cast<std::int64_t>(K)) throw BudgetTooSmall("bound needs n > 2K");
  const double nn = static_cast<double>(n);
  const double tail = nn - 2.0 * K;
  return 304.0 * K * S * S * beta_val * beta_val / nn +
         564.0 * K * K * S * S * beta_val * beta_val / (tail * tail);
}

struct TheoryBounds {
  double generic_high_prob = 0.0;  // 304 K S^2 beta^2 / n
  double inflated_oracle = 0.0;    // 2 beta Lambda / n
  double excess_term = 0.0;        // C0 beta^{3/2} / n^{3/2}, NaN if pi unknown
  double asymptotic_target = 0.0;  // Lambda / n
};

inline TheoryBounds theory_bounds(const ProblemInstance& instance, std::int64_t n, double delta,
                                  double c = 1.1) {
  const int K = instance.num_chains();
  const int S = instance.num_states();
  const double b = beta({n, delta, K, S, c});
  const double lambda = instance.lambda_total();

  TheoryBounds out;
  out.generic_high_prob = 304.0 * K * S * S * b * b / static_cast<double>(n);
  out.inflated_oracle = 2.0 * b * lambda / static_cast<double>(n);
  out.asymptotic_target = lambda / static_cast<double>(n);
  if (instance.fully_analyzed()) {
    double max_h = 0.0, max_h_over_eta = 0.0;
    for (int k = 0; k < K; ++k) {
      const double h = instance.chain(k).analysis->inv_stationary_sum;
      max_h = std::max(max_h, h);
      max_h_over_eta = std::max(max_h_over_eta, h / instance.eta(k));
    }
    const double c0 = 150.0 * K * std::sqrt(S * lambda * max_h) +
                      3.0 * std::sqrt(S * lambda) * max_h_over_eta;
    out.excess_term = c0 * b * std::sqrt(b) / (static_cast<double>(n) * std::sqrt(n));
  } else {
    out.excess_term = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

namespace detail {

class SnapshotSchedule {
 public:
  SnapshotSchedule(SnapshotMode mode, int K, std::int64_t n) : mode_(mode), n_(n) {
    next_ = 2 * static_cast<std::int64_t>(K);
  }

  bool due(std::int64_t t) {
    if (mode_ == SnapshotMode::Off) return false;
    if (mode_ == SnapshotMode::Full) return true;
    if (t == n_) return true;
    if (t < next_) return false;
    while (next_ <= t)
      next_ = std::max(next_ + 1, static_cast<std::int64_t>(std::ceil(1.25 * next_)));
    return true;
  }

 private:
  SnapshotMode mode_;
  std::int64_t n_;
  std::int64_t next_;
};

}  // namespace detail

// Plays one policy against one instance for n rounds. Chain k consumes the
// stream derived from (seed, k), so trajectories depend only on the seed
// and each chain's own pull count, never on the policy. The scaling beta is
// fixed up front from (n, delta). Index maintenance is incremental: after a
// pull only the sampled chain's estimate rows and index are refreshed.
inline AllocationResult run_policy(const ProblemInstance& instance, Policy policy, std::int64_t n,
                                   double delta, std::uint64_t seed,
                                   const RunOptions& opts = {}) {
  const int K = instance.num_chains();
  const int S = instance.num_states();
  const std::int64_t min_budget = policy == Policy::BaMc ? 2 * static_cast<std::int64_t>(K)
                                                         : static_cast<std::int64_t>(K);
  if (n < min_budget) throw BudgetTooSmall("budget " + std::to_string(n) + " is too small");

  const SmoothingConfig smoothing{opts.alpha.value_or(1.0 / (3.0 * S))};
  smoothing.validate();
  const ConfidenceConfig conf{n, delta, K, S, opts.c};
  const double beta_val = beta(conf);

  ObservationCounts counts(K, S);
  std::vector<ChainProcess> processes;
  processes.reserve(K);
  for (int k = 0; k < K; ++k)
    processes.emplace_back(k, RandomStream(derive_seed(seed, static_cast<std::uint64_t>(k) + 1)));

  std::vector<Eigen::MatrixXd> phat;
  phat.reserve(K);
  for (int k = 0; k < K; ++k) phat.push_back(smoothed_estimate(counts.chains[k], smoothing));
  std::vector<IndexSnapshot> indices(K);

  AllocationResult result;
  result.beta_used = beta_val;
  result.history.alpha = smoothing.alpha;
  result.history.budget = n;
  if (opts.record_trajectory) result.trajectory.reserve(n);
  detail::SnapshotSchedule schedule(opts.snapshot_mode, K, n);

  std::vector<std::int64_t> static_alloc;
  if (policy == Policy::OracleStatic) static_alloc = oracle_static_allocation(instance, n);

  int static_chain = 0;
  std::int64_t static_used = 0;
  for (std::int64_t t = 1; t <= n; ++t) {
    int k = 0;
    switch (policy) {
      case Policy::BaMc:
        k = bamc_select(indices, t, K, n);
        break;
      case Policy::Uniform:
        k = uniform_policy(t, K);
        break;
      case Policy::OracleStatic:
        while (static_used == static_alloc[static_chain]) {
          ++static_chain;
          static_used = 0;
        }
        k = static_chain;
        ++static_used;
        break;
    }

    ChainCounts& c = counts.chains[k];
    const std::optional<int> prev_last = c.last_state;
    const int x = processes[k].step(instance.chain(k).matrix, instance.initial_dist(k));
    record_observation(counts, k, x);
    smoothed_row(c, x, smoothing, phat[k]);
    if (prev_last && *prev_last != x) smoothed_row(c, *prev_last, smoothing, phat[k]);
    if (policy == Policy::BaMc) indices[k] = compute_index(c, phat[k], beta_val, smoothing.alpha);

    if (opts.record_trajectory) result.trajectory.push_back(k);
    if (schedule.due(t)) {
      RoundSnapshot snap;
      snap.t = t;
      snap.chains.reserve(K);
      for (int j = 0; j < K; ++j)
        snap.chains.push_back({counts.chains[j].pulls, counts.chains[j].visits, phat[j]});
      result.history.snapshots.push_back(std::move(snap));
    }
  }

  result.loss_report = make_loss_report(counts, smoothing, instance);
  result.pulls = result.loss_report.pulls;
  return result;
}

}  // namespace bamc
