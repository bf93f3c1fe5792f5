#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bamc/errors.hpp"
#include "bamc/instance.hpp"
#include "bamc/rng.hpp"

namespace bamc {

// Random instance families. Every family must produce chains that pass
// strict validation; sampling retries up to a cap before failing.
struct GeneratorSpec {
  enum class Family { DirichletRows, LazyTwoState, NearDeterministic };

  Family family = Family::DirichletRows;
  int K = 1;
  int S = 2;
  double concentration = 1.0;    // dirichlet-rows
  std::vector<double> epsilon;   // lazy-two-state, one value or one per chain
  double leak = 0.05;            // near-deterministic

  static Family parse_family(const std::string& name) {
    if (name == "dirichlet-rows") return Family::DirichletRows;
    if (name == "lazy-two-state") return Family::LazyTwoState;
    if (name == "near-deterministic") return Family::NearDeterministic;
    throw SchemaError("unknown generator family \"" + name + "\"");
  }
};

namespace detail {

inline Eigen::MatrixXd dirichlet_rows_matrix(int S, double concentration, RandomStream& rng) {
  Eigen::MatrixXd M(S, S);
  for (int x = 0; x < S; ++x) {
    double total = 0.0;
    for (int y = 0; y < S; ++y) {
      M(x, y) = rng.gamma(concentration);
      total += M(x, y);
    }
    if (!(total > 0.0)) throw GenerationFailed("degenerate Dirichlet row");
    M.row(x) /= total;
  }
  return M;
}

// [[1/2, 1/2], [eps, 1 - eps]]: state 2 is lazy, occupied 1/(1+2eps) of the time
inline Eigen::MatrixXd lazy_two_state_matrix(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw SchemaError("lazy-two-state needs eps in (0, 1)");
  Eigen::MatrixXd M(2, 2);
  M << 0.5, 0.5, eps, 1.0 - eps;
  return M;
}

// cycle with uniform leakage: P = (1 - leak) C + leak / S
inline Eigen::MatrixXd near_deterministic_matrix(int S, double leak) {
  if (!(leak > 0.0 && leak < 1.0)) throw SchemaError("near-deterministic needs leak in (0, 1)");
  Eigen::MatrixXd M = Eigen::MatrixXd::Constant(S, S, leak / S);
  for (int x = 0; x < S; ++x) M(x, (x + 1) % S) += 1.0 - leak;
  return M;
}

}  // namespace detail

inline ProblemInstance generate_instance(const GeneratorSpec& spec, std::uint64_t seed) {
  if (spec.K < 1) throw SchemaError("generator needs K >= 1");
  if (spec.family == GeneratorSpec::Family::LazyTwoState && spec.epsilon.size() > 1 &&
      spec.epsilon.size() != static_cast<std::size_t>(spec.K))
    throw SchemaError("lazy-two-state needs one epsilon or one per chain");
  constexpr int kMaxAttempts = 100;

  std::vector<Eigen::MatrixXd> matrices;
  for (int k = 0; k < spec.K; ++k) {
    RandomStream rng(derive_seed(seed, 0x67656eULL, static_cast<std::uint64_t>(k)));
    Eigen::MatrixXd M;
    bool ok = false;
    for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
      switch (spec.family) {
        case GeneratorSpec::Family::DirichletRows:
          if (spec.S < 2) throw SchemaError("dirichlet-rows needs S >= 2");
          if (!(spec.concentration > 0.0))
            throw SchemaError("dirichlet-rows needs positive concentration");
          M = detail::dirichlet_rows_matrix(spec.S, spec.concentration, rng);
          break;
        case GeneratorSpec::Family::LazyTwoState: {
          if (spec.epsilon.empty()) throw SchemaError("lazy-two-state needs epsilon");
          const double eps =
              spec.epsilon.size() == 1 ? spec.epsilon[0] : spec.epsilon.at(k);
          M = detail::lazy_two_state_matrix(eps);
          break;
        }
        case GeneratorSpec::Family::NearDeterministic:
          if (spec.S < 2) throw SchemaError("near-deterministic needs S >= 2");
          M = detail::near_deterministic_matrix(spec.S, spec.leak);
          break;
      }
      try {
        TransitionMatrix probe(M);
        ok = gini_index(probe).sum() > 0.0;
      } catch (const Error&) {
        ok = false;
      }
    }
    if (!ok)
      throw GenerationFailed("could not generate a valid chain for index " + std::to_string(k));
    matrices.push_back(std::move(M));
  }
  return build_instance(matrices);
}

}  // namespace bamc
