// Acceptance gate for the allocation library. Each criterion prints exactly
// one [PASS]/[FAIL] line; the process exits nonzero if any line failed.
//
// The reference instance pairs three reversible 3-state chains with known
// stationary vectors, spectral gaps, and Gini masses, so every empirical
// check below has a closed-form target.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "bamc/bamc.hpp"

using namespace bamc;

namespace {

bool g_all_ok = true;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
  if (!ok) g_all_ok = false;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

ProblemInstance reference_instance() {
  Eigen::MatrixXd A(3, 3), B(3, 3), C(3, 3);
  A << 0.4, 0.3, 0.3, 0.3, 0.4, 0.3, 0.3, 0.3, 0.4;
  B << 0.5, 0.5, 0.0, 0.25, 0.25, 0.5, 0.0, 0.5, 0.5;
  C << 0.7, 0.15, 0.15, 0.15, 0.7, 0.15, 0.15, 0.15, 0.7;
  return build_instance({A, B, C});
}

double median_of(std::vector<double> v) { return quantile(std::move(v), 0.5); }

// ---------------------------------------------------------------- 1, 2, 4, 8

struct AdaptiveRuns {
  std::vector<std::int64_t> budgets{1'000, 10'000, 100'000};
  std::vector<std::vector<double>> losses;       // per budget, per rep: L_n
  std::vector<std::vector<double>> allocations;  // at the largest budget, per chain
};

AdaptiveRuns run_adaptive_grid(const ProblemInstance& inst) {
  AdaptiveRuns out;
  // 50 replications are prescribed at the largest budget; the smaller budgets
  // are cheap, so extra replications there sharpen the decay comparison
  const int reps[3] = {150, 150, 50};
  out.losses.resize(out.budgets.size());
  out.allocations.resize(inst.num_chains());
  for (std::size_t bi = 0; bi < out.budgets.size(); ++bi) {
    for (int r = 0; r < reps[bi]; ++r) {
      const AllocationResult run =
          run_policy(inst, Policy::BaMc, out.budgets[bi], 0.05, 1'000 + r);
      out.losses[bi].push_back(run.loss_report.max_weighted);
      if (bi + 1 == out.budgets.size())
        for (int k = 0; k < inst.num_chains(); ++k)
          out.allocations[k].push_back(run.loss_report.allocation[k]);
    }
  }
  return out;
}

void criterion_1_loss_decay(const ProblemInstance& inst, const AdaptiveRuns& grid) {
  const double lambda = inst.lambda_total();
  // n * L_n settles into a nondegenerate fluctuation around its plateau, so
  // "nonincreasing" is judged against the sampling error of a median of 50:
  // an increase only fails the gate when it clears two standard errors.
  std::vector<double> med, se;
  for (std::size_t bi = 0; bi < grid.budgets.size(); ++bi) {
    std::vector<double> scaled;
    for (double L : grid.losses[bi])
      scaled.push_back(static_cast<double>(grid.budgets[bi]) * L);
    med.push_back(median_of(scaled));
    const double iqr = quantile(scaled, 0.75) - quantile(scaled, 0.25);
    se.push_back(1.253 * (iqr / 1.349) / std::sqrt(static_cast<double>(scaled.size())));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < med.size(); ++i)
    monotone = monotone && med[i] <= med[i - 1] + 2.0 * std::hypot(se[i], se[i - 1]);
  const bool in_band = med.back() >= 0.6 * lambda && med.back() <= 2.5 * lambda;
  report(1, monotone && in_band,
         "median n*loss over budgets {1e3,1e4,1e5} = {" + fmt(med[0]) + ", " + fmt(med[1]) +
             ", " + fmt(med[2]) + "} (stderr {" + fmt(se[0]) + ", " + fmt(se[1]) + ", " +
             fmt(se[2]) + "}), nonincreasing=" + (monotone ? "yes" : "no") +
             ", final within [" + fmt(0.6 * lambda) + ", " + fmt(2.5 * lambda) + "]");
}

void criterion_2_allocation(const ProblemInstance& inst, const AdaptiveRuns& grid) {
  bool ok = true;
  double worst = 0.0;
  for (int k = 0; k < inst.num_chains(); ++k) {
    const double dev = std::abs(median_of(grid.allocations[k]) - inst.eta(k));
    worst = std::max(worst, dev);
    ok = ok && dev <= 0.05;
  }
  report(2, ok,
         "median pull fractions at n=1e5 deviate from the Gini shares by at most " + fmt(worst) +
             " (allowed 0.05)");
}

std::vector<double> criterion_3_static_balance(const ProblemInstance& inst) {
  const int reps = 200;
  const std::int64_t n = 100'000;
  std::vector<double> mean_scaled(inst.num_chains(), 0.0);
  std::vector<double> losses;
  for (int r = 0; r < reps; ++r) {
    const AllocationResult run = run_policy(inst, Policy::OracleStatic, n, 0.05, 2'000 + r);
    for (int k = 0; k < inst.num_chains(); ++k)
      mean_scaled[k] +=
          static_cast<double>(run.loss_report.pulls[k]) * run.loss_report.weighted[k];
    losses.push_back(run.loss_report.max_weighted);
  }
  bool ok = true;
  double worst_ratio = 1.0;
  for (int k = 0; k < inst.num_chains(); ++k) {
    mean_scaled[k] /= reps;
    const double ratio = mean_scaled[k] / inst.gini_sum(k);
    if (std::abs(ratio - 1.0) > std::abs(worst_ratio - 1.0)) worst_ratio = ratio;
    ok = ok && ratio >= 0.85 && ratio <= 1.15;
  }
  report(3, ok,
         "static oracle mean T_k*L_k over " + std::to_string(reps) +
             " runs at n=1e5 stays within 15% of each Gini mass (worst ratio " +
             fmt(worst_ratio) + ")");
  return losses;
}

void criterion_4_worst_case(const ProblemInstance& inst, const AdaptiveRuns& grid,
                            const std::vector<double>& static_losses) {
  bool ok = true;
  double tightest = 1e300;
  std::size_t checked = 0;
  auto check = [&](double L, std::int64_t n) {
    const double bound =
        any_budget_bound(inst.num_chains(), inst.num_states(),
                         beta({n, 0.05, inst.num_chains(), inst.num_states()}), n);
    ok = ok && L <= bound;
    tightest = std::min(tightest, bound / std::max(L, 1e-300));
    ++checked;
  };
  for (std::size_t bi = 0; bi < grid.budgets.size(); ++bi)
    for (double L : grid.losses[bi]) check(L, grid.budgets[bi]);
  for (double L : static_losses) check(L, 100'000);
  report(4, ok,
         "all " + std::to_string(checked) +
             " recorded losses sit under the distribution-free budget bound (minimum slack "
             "factor " +
             fmt(tightest) + ")");
}

// ------------------------------------------------------------------- 5 and 6

void criteria_5_6_event_and_optimism() {
  Eigen::MatrixXd B(3, 3);
  B << 0.5, 0.5, 0.0, 0.25, 0.25, 0.5, 0.0, 0.5, 0.5;
  const ProblemInstance solo = build_instance({B});
  const std::int64_t n = 10'000;
  const double delta = 0.1;
  const int seeds = 500;
  const ConfidenceConfig conf{n, delta, 1, 3};
  const double beta_val = beta(conf);
  const Eigen::VectorXd true_gini = gini_index(solo.chain(0).matrix);

  RunOptions opts;
  opts.snapshot_mode = SnapshotMode::Full;
  const SmoothingConfig smoothing = SmoothingConfig::defaults(3);

  int violations = 0;
  long long optimism_checks = 0, optimism_failures = 0;
  for (int r = 0; r < seeds; ++r) {
    const AllocationResult run = run_policy(solo, Policy::BaMc, n, delta, 3'000 + r, opts);
    if (!confidence_event_holds(run.history, solo, conf)) {
      ++violations;
      continue;  // optimism is only promised on the confidence event
    }
    for (const RoundSnapshot& snap : run.history.snapshots) {
      const ChainSnapshot& cs = snap.chains[0];
      ChainCounts counts(3);
      counts.pulls = cs.pulls;
      counts.visits = cs.visits;
      const IndexSnapshot idx = compute_index(counts, cs.phat, beta_val, smoothing.alpha);
      double floor = 0.0;
      for (int x = 0; x < 3; ++x)
        if (cs.visits(x) > 0) floor += true_gini(x);
      floor *= 2.0 * beta_val / static_cast<double>(cs.pulls);
      ++optimism_checks;
      if (idx.value() < floor) ++optimism_failures;
    }
  }

  const double freq = static_cast<double>(violations) / seeds;
  const double cap = delta + 3.0 * std::sqrt(delta * (1.0 - delta) / seeds);
  report(5, freq <= cap,
         "confidence event failed in " + fmt(100.0 * freq) + "% of " + std::to_string(seeds) +
             " runs (allowed " + fmt(100.0 * cap) + "%)");
  report(6, optimism_failures == 0,
         "index dominated the true-Gini floor in " + std::to_string(optimism_checks) +
             " round checks with " + std::to_string(optimism_failures) + " violations");
}

// ------------------------------------------------------------------------- 7

void criterion_7_frozen_values(const ProblemInstance& inst) {
  struct Entry {
    const char* name;
    double actual;
    double expected;
  };
  std::vector<Entry> entries;
  auto add = [&](const char* name, double actual, double expected) {
    entries.push_back({name, actual, expected});
  };

  add("beta(1e5,0.05,K3,S3)", beta({100'000, 0.05, 3, 3}), 14.1670310698);
  add("beta(1e4,0.1,K1,S3)", beta({10'000, 0.1, 1, 3}), 11.9529081299);
  add("zeta(1e4,0.1,S3)", zeta(10'000, 0.1, 3), 10.7444346123);

  const auto eb = EmpiricalBernsteinConstants::compute(10.0, 1.0 / 6.0, 2);
  add("zeta_prime", eb.zeta_prime, 3.5);
  add("c1", eb.c1, 210.190389885);
  add("c2", eb.c2, 2833.03473125);
  add("empirical_radius", empirical_bernstein_radius(0.5, 100, eb, 1.0 / 6.0, 2),
      0.659917084861);
  add("variance_radius", bernstein_markov_radius(0.5, 100, 10.0, 1.0 / 6.0, 2),
      0.256086509385);
  add("stationary_radius", stationary_radius(0.5, 0.3, 1'000, 0.1, 0.5), 0.341036214064);

  {
    ChainCounts c(2);
    c.pulls = 2;
    c.visits << 2, 0;
    c.transitions(0, 0) = 1;
    c.last_state = 0;
    const Eigen::MatrixXd phat = smoothed_estimate(c, SmoothingConfig{1.0 / 6.0});
    const IndexSnapshot idx = compute_index(c, phat, 2.0, 1.0 / 6.0);
    add("index_term_gini", idx.term_gini, 0.632653061224);
    add("index_term_deviation", idx.term_deviation, 3.67329297821);
    add("index_term_correction", idx.term_correction, 48.0);
    add("index_value", idx.value(), 52.3059460394);
  }
  {
    ChainCounts c(2);
    c.pulls = 4;
    c.visits << 4, 0;
    c.transitions(0, 0) = 2;
    c.transitions(0, 1) = 1;
    c.last_state = 0;
    const Eigen::MatrixXd phat = smoothed_estimate(c, SmoothingConfig{1.0 / 6.0});
    add("smoothed_p00", phat(0, 0), 0.5);
    add("smoothed_p01", phat(0, 1), 0.269230769231);
    add("smoothed_row_sum", phat.row(0).sum(), 0.769230769231);
  }
  {
    Eigen::MatrixXd M(2, 2);
    M << 0.9, 0.1, 0.2, 0.8;
    const TransitionMatrix tm(M);
    const Eigen::VectorXd pi = stationary_distribution(tm);
    add("stationary_0", pi(0), 2.0 / 3.0);
    add("spectral_gap", *spectral_gap(tm, pi), 0.3);
    add("pseudo_gap", pseudo_spectral_gap(tm, pi), 0.51);
  }
  {
    Eigen::MatrixXd L(2, 2);
    L << 0.5, 0.5, 0.1, 0.9;
    const ChainAnalysis a = analyze_chain(TransitionMatrix(L));
    add("lazy_stationary_0", a.stationary(0), 1.0 / 6.0);
    add("lazy_inv_pi_sum", a.inv_stationary_sum, 7.2);
  }
  {
    const ProblemInstance one = build_instance({[] {
      Eigen::MatrixXd M(2, 2);
      M << 0.9, 0.1, 0.2, 0.8;
      return M;
    }()});
    ObservationCounts counts(1, 2);
    counts.chains[0].pulls = 4;
    counts.chains[0].visits << 2, 2;
    Eigen::MatrixXd off(2, 2);
    off << 1.0, 0.0, 0.2, 0.8;
    add("weighted_loss", loss_weighted(counts, {off}, one)[0], 0.01);
  }
  {
    Eigen::MatrixXd L(2, 2);
    L << 0.5, 0.5, 0.1, 0.9;
    const ProblemInstance lazy = build_instance({L});
    Eigen::MatrixXd off(2, 2);
    off << 0.6, 0.4, 0.1, 0.9;
    add("pseudo_loss", loss_pseudo({off}, lazy)[0], 0.00333333333333);
  }

  add("instance_lambda", inst.lambda_total(), 5.0);
  add("instance_eta_1", inst.eta(0), 0.396);
  add("instance_eta_2", inst.eta(1), 0.325);
  add("instance_eta_3", inst.eta(2), 0.279);
  add("instance_gap_1", *inst.chain(0).analysis->spectral_gap, 0.9);
  add("instance_gap_2", *inst.chain(1).analysis->spectral_gap, 0.5);
  add("instance_gap_3", *inst.chain(2).analysis->spectral_gap, 0.45);
  add("instance_H_2", inst.chain(1).analysis->inv_stationary_sum, 10.0);
  add("generic_bound", theory_bounds(inst, 100'000, 0.05).generic_high_prob, 16.4738474669);
  {
    const std::vector<double> gaps{0.3, 0.3}, pi_mins{0.2, 0.2};
    add("cutoff_formula", budget_cutoff_formula(2, gaps, pi_mins, 0.05), 1345116492.0);
  }
  {
    const auto alloc = oracle_static_allocation(inst, 100);
    // eta = (.396, .325, .279) -> quotas 40/32/28 by largest remainder
    add("static_quota_1", static_cast<double>(alloc[0]), 40.0);
    add("static_quota_2", static_cast<double>(alloc[1]), 32.0);
    add("static_quota_3", static_cast<double>(alloc[2]), 28.0);
  }

  int failed = 0;
  for (const Entry& e : entries) {
    const double rel = std::abs(e.actual - e.expected) /
                       std::max(std::abs(e.expected), 1e-300);
    if (rel > 1e-6) {
      ++failed;
      std::printf("       mismatch %s: got %.12g want %.12g\n", e.name, e.actual, e.expected);
    }
  }
  report(7, failed == 0,
         std::to_string(entries.size()) + " precomputed reference values match to six "
         "significant digits (" + std::to_string(failed) + " mismatches)");
}

// ------------------------------------------------------------------------- 8

void criterion_8_cutoff_and_refined_bound(const ProblemInstance& inst,
                                          const AdaptiveRuns& grid) {
  // closed form cross-checked against an independent evaluation
  const std::int64_t cutoff = budget_cutoff(inst, 0.05);
  const bool cutoff_ok = cutoff == 844'366'154;

  const std::int64_t n = grid.budgets.back();
  const double refined = theory_bounds(inst, n, 0.05).inflated_oracle;
  const double med = median_of(grid.losses.back());
  const bool bound_ok = med <= refined;
  report(8, cutoff_ok && bound_ok,
         "budget cutoff = " + std::to_string(cutoff) +
             " (expected 844366154), median loss at n=1e5 " + fmt(med) +
             " stays below the inflated oracle rate " + fmt(refined));
}

// ------------------------------------------------------------------------- 9

Eigen::MatrixXd random_chain(int S, RandomStream& rng, double concentration) {
  Eigen::MatrixXd M(S, S);
  for (int x = 0; x < S; ++x) {
    double total = 0.0;
    for (int y = 0; y < S; ++y) {
      M(x, y) = rng.gamma(concentration) + 1e-9;
      total += M(x, y);
    }
    M.row(x) /= total;
  }
  return M;
}

void criterion_9_property_families() {
  const int cases = 1'000;
  RandomStream rng(0xACCE55);
  long long checked = 0;
  int failures = 0;
  std::string first_failure;
  auto expect = [&](bool ok, const char* family) {
    ++checked;
    if (!ok) {
      ++failures;
      if (first_failure.empty()) first_failure = family;
    }
  };

  // family 1: generated matrices are valid stochastic ergodic chains
  for (int i = 0; i < cases; ++i) {
    const int S = 2 + static_cast<int>(rng.next_u64() % 5);
    const double conc = std::exp(rng.normal());
    const Eigen::MatrixXd M = random_chain(S, rng, conc);
    bool ok = true;
    try {
      const TransitionMatrix tm(M);
      ok = tm.ergodic();
    } catch (const Error&) {
      ok = false;
    }
    expect(ok, "stochastic-validity");
  }

  // family 2: pull and visit counts are conserved through a full run
  for (int i = 0; i < cases; ++i) {
    const ProblemInstance inst =
        build_instance({random_chain(2, rng, 1.0), random_chain(2, rng, 1.0)});
    const std::int64_t n = 8 + static_cast<std::int64_t>(rng.next_u64() % 100);
    const Policy policy = static_cast<Policy>(rng.next_u64() % 3);
    RunOptions opts;
    opts.snapshot_mode = SnapshotMode::Full;
    const AllocationResult run = run_policy(inst, policy, n, 0.05, rng.next_u64(), opts);
    std::int64_t total = 0;
    bool ok = true;
    const RoundSnapshot& last = run.history.snapshots.back();
    for (int k = 0; k < 2; ++k) {
      total += run.pulls[k];
      ok = ok && last.chains[k].visits.sum() == run.pulls[k];
      ok = ok && last.chains[k].pulls == run.pulls[k];
    }
    expect(ok && total == n, "count-conservation");
  }

  // family 3: selection is an exact argmax with lowest-id ties
  for (int i = 0; i < cases; ++i) {
    const int K = 2 + static_cast<int>(rng.next_u64() % 6);
    std::vector<IndexSnapshot> idx(K);
    for (auto& s : idx) s.term_gini = static_cast<double>(rng.next_u64() % 6);
    int expected = 0;
    for (int k = 1; k < K; ++k)
      if (idx[k].value() > idx[expected].value()) expected = k;
    const std::int64_t t = 2 * K + 1 + static_cast<std::int64_t>(rng.next_u64() % 100);
    expect(bamc_select(idx, t, K, 1'000) == expected, "argmax");
  }

  // family 4: identical seeds reproduce runs bit for bit
  for (int i = 0; i < cases; ++i) {
    const ProblemInstance inst = build_instance({random_chain(3, rng, 1.0)});
    const std::int64_t n = 6 + static_cast<std::int64_t>(rng.next_u64() % 60);
    const std::uint64_t seed = rng.next_u64();
    const AllocationResult a = run_policy(inst, Policy::BaMc, n, 0.05, seed);
    const AllocationResult b = run_policy(inst, Policy::BaMc, n, 0.05, seed);
    bool ok = a.pulls == b.pulls;
    for (std::size_t k = 0; k < a.loss_report.weighted.size(); ++k)
      ok = ok && a.loss_report.weighted[k] == b.loss_report.weighted[k];
    expect(ok, "determinism");
  }

  // family 5: smoothing keeps every estimate inside the uniform/empirical
  // bracket
  for (int i = 0; i < cases; ++i) {
    const int S = 2 + static_cast<int>(rng.next_u64() % 4);
    ChainCounts c(S);
    const int pulls = 1 + static_cast<int>(rng.next_u64() % 60);
    ChainProcess proc(0, RandomStream(rng.next_u64()));
    const TransitionMatrix tm(random_chain(S, rng, 1.0));
    const Eigen::VectorXd init = Eigen::VectorXd::Constant(S, 1.0 / S);
    ObservationCounts counts(1, S);
    for (int p = 0; p < pulls; ++p) record_observation(counts, 0, proc.step(tm, init));
    c = counts.chains[0];
    const double alpha = 0.02 + 0.5 * rng.uniform();
    const Eigen::MatrixXd phat = smoothed_estimate(c, SmoothingConfig{alpha});
    bool ok = true;
    for (int x = 0; x < S; ++x) {
      for (int y = 0; y < S; ++y) {
        ok = ok && phat(x, y) > 0.0 && phat(x, y) < 1.0;
        if (c.visits(x) > 0) {
          const double ratio =
              static_cast<double>(c.transitions(x, y)) / static_cast<double>(c.visits(x));
          ok = ok && phat(x, y) >= std::min(ratio, 1.0 / S) - 1e-12;
          ok = ok && phat(x, y) <= std::max(ratio, 1.0 / S) + 1e-12;
        } else {
          ok = ok && phat(x, y) == 1.0 / S;
        }
      }
    }
    expect(ok, "smoothing-bracket");
  }

  report(9, failures == 0,
         "5 property families x " + std::to_string(cases) + " randomized cases (" +
             std::to_string(checked) + " total) with " + std::to_string(failures) +
             " failures" + (failures ? ", first in " + first_failure : ""));
}

}  // namespace

int main() {
  const ProblemInstance inst = reference_instance();
  const AdaptiveRuns grid = run_adaptive_grid(inst);
  criterion_1_loss_decay(inst, grid);
  criterion_2_allocation(inst, grid);
  const std::vector<double> static_losses = criterion_3_static_balance(inst);
  criterion_4_worst_case(inst, grid, static_losses);
  criteria_5_6_event_and_optimism();
  criterion_7_frozen_values(inst);
  criterion_8_cutoff_and_refined_bound(inst, grid);
  criterion_9_property_families();
  std::printf("%s\n", g_all_ok ? "acceptance: all 9 criteria passed"
                               : "acceptance: at least one criterion failed");
  return g_all_ok ? 0 : 1;
}
