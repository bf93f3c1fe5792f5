#include "catch_amalgamated.hpp"

#include <cmath>

#include "bamc/bamc.hpp"

using namespace bamc;

namespace {

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd M(2, 2);
  M << a, b, c, d;
  return M;
}

constexpr double kRel = 1e-9;  // frozen reference values carry 12 digits

}  // namespace

TEST_CASE("confidence scaling reference values") {
  CHECK(beta({100'000, 0.05, 3, 3}) == Catch::Approx(14.1670310698).epsilon(kRel));
  CHECK(beta({10'000, 0.1, 1, 3}) == Catch::Approx(11.9529081299).epsilon(kRel));
  CHECK(beta({1'000, 0.05, 3, 3}) == Catch::Approx(13.6111668549).epsilon(kRel));
  CHECK(beta({10'000, 0.05, 3, 3}) == Catch::Approx(13.923843546).epsilon(kRel));
  CHECK(zeta(10'000, 0.1, 3) == Catch::Approx(10.7444346123).epsilon(kRel));
  // smallest admissible budgets exercise the peeling ceil directly
  CHECK(beta({2, 0.05, 3, 3}) == Catch::Approx(11.179047165512833).epsilon(kRel));
  CHECK(beta({3, 0.05, 3, 3}) == Catch::Approx(11.625058784431815).epsilon(kRel));
}

TEST_CASE("confidence scaling monotonicity") {
  double prev = 0.0;
  for (std::int64_t n : {2, 10, 100, 1'000, 10'000, 100'000, 1'000'000}) {
    const double b = beta({n, 0.05, 3, 3});
    REQUIRE(b >= prev);
    prev = b;
  }
  CHECK(beta({1'000, 0.01, 2, 4}) > beta({1'000, 0.05, 2, 4}));  // tighter delta
  CHECK(beta({1'000, 0.05, 5, 4}) > beta({1'000, 0.05, 2, 4}));  // more chains
  CHECK(beta({1'000, 0.05, 2, 6}) > beta({1'000, 0.05, 2, 4}));  // more states
  for (std::int64_t n : {2, 50, 5'000})
    REQUIRE(beta({n, 0.05, 1, 3}) >= zeta(n, 0.05, 3));  // 6KS^2 >= 2S^2
}

TEST_CASE("configuration guards") {
  CHECK_THROWS_AS(beta({1, 0.05, 1, 2}), InvalidConfig);
  CHECK_THROWS_AS(beta({100, 0.0, 1, 2}), InvalidConfig);
  CHECK_THROWS_AS(beta({100, 1.0, 1, 2}), InvalidConfig);
  CHECK_THROWS_AS(beta({100, 0.05, 0, 2}), InvalidConfig);
  CHECK_THROWS_AS(beta({100, 0.05, 1, 1}), InvalidConfig);
  CHECK_THROWS_AS(beta({100, 0.05, 1, 2, 1.0}), InvalidConfig);
  CHECK_NOTHROW(beta({2, 0.05, 1, 2}));
}

TEST_CASE("sub-gamma radius") {
  CHECK(sub_gamma_radius(0.0, 0.0, 5.0) == 0.0);
  CHECK(sub_gamma_radius(2.0, 3.0, 8.0) ==
        Catch::Approx(std::sqrt(32.0) + 24.0).epsilon(1e-12));
}

TEST_CASE("transition radius with known variance, worked example") {
  // P = 0.5, S = 2, alpha = 1/6, T_x = 100, zeta = 10
  const double r = bernstein_markov_radius(0.5, 100, 10.0, 1.0 / 6.0, 2);
  CHECK(r == Catch::Approx(0.256086509385).epsilon(kRel));
  // decreasing in the visit count
  double prev = 1e300;
  for (std::int64_t t : {1, 2, 5, 10, 100, 1'000, 10'000}) {
    const double rt = bernstein_markov_radius(0.5, t, 10.0, 1.0 / 6.0, 2);
    REQUIRE(rt < prev);
    prev = rt;
  }
}

TEST_CASE("empirical radius constants and worked example") {
  const auto eb = EmpiricalBernsteinConstants::compute(10.0, 1.0 / 6.0, 2);
  CHECK(eb.zeta_prime == Catch::Approx(3.5).epsilon(kRel));
  CHECK(eb.c1 == Catch::Approx(210.190389885).epsilon(kRel));
  CHECK(eb.c2 == Catch::Approx(2833.03473125).epsilon(kRel));
  CHECK(empirical_bernstein_radius(0.5, 100, eb, 1.0 / 6.0, 2) ==
        Catch::Approx(0.659917084861).epsilon(kRel));
}

TEST_CASE("stationary distribution radius") {
  CHECK(stationary_radius(0.5, 0.3, 1'000, 0.1, 0.5) ==
        Catch::Approx(0.341036214064).epsilon(kRel));
  CHECK_THROWS_AS(stationary_radius(0.5, 0.0, 1'000, 0.1, 0.5), InvalidConfig);
  CHECK_THROWS_AS(stationary_radius(0.5, 0.3, 1'000, 0.1, 0.0), InvalidConfig);
  // shrinks with the horizon
  CHECK(stationary_radius(0.5, 0.3, 100'000, 0.1, 0.5) <
        stationary_radius(0.5, 0.3, 1'000, 0.1, 0.5));
}

TEST_CASE("budget cutoff closed form") {
  const std::vector<double> gaps{0.3, 0.3};
  const std::vector<double> pi_mins{0.2, 0.2};
  CHECK(budget_cutoff_formula(2, gaps, pi_mins, 0.05) ==
        Catch::Approx(1345116492.0).epsilon(1e-12));

  Eigen::MatrixXd B(3, 3);
  B << 0.5, 0.5, 0.0, 0.25, 0.25, 0.5, 0.0, 0.5, 0.5;
  const ProblemInstance inst = build_instance({B});
  const std::int64_t n0 = budget_cutoff(inst, 0.05);
  CHECK(n0 > 0);
  // harder delta asks for more budget
  CHECK(budget_cutoff(inst, 0.01) > n0);
}

TEST_CASE("confidence event evaluation over a recorded history") {
  const ProblemInstance inst = build_instance({mat2(0.9, 0.1, 0.2, 0.8)});
  RunOptions opts;
  opts.snapshot_mode = SnapshotMode::Full;
  const AllocationResult run = run_policy(inst, Policy::BaMc, 500, 0.1, 7, opts);
  REQUIRE(run.history.snapshots.size() == 500);
  const ConfidenceConfig cfg{500, 0.1, 1, 2};
  CHECK(confidence_event_holds(run.history, inst, cfg));  // holds w.p. >= 0.9

  // corrupting one estimate entry far beyond any radius must break it
  EstimateHistory bent = run.history;
  bent.snapshots.back().chains[0].phat(0, 0) += 0.9;
  CHECK_FALSE(confidence_event_holds(bent, inst, cfg));
}
