#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "bamc/estimation.hpp"

namespace bamc {

enum class SnapshotMode {
  Off,
  Checkpoints,  // geometric round grid plus the final round
  Full,         // every round; required for uniform-in-time coverage checks
};

struct ChainSnapshot {
  std::int64_t pulls = 0;
  Eigen::VectorX<std::int64_t> visits;
  Eigen::MatrixXd phat;
};

struct RoundSnapshot {
  std::int64_t t = 0;
  std::vector<ChainSnapshot> chains;
};

// Estimator state over time for one run. Carries the smoothing level so
// radius checks reproduce the exact estimates that were recorded.
struct EstimateHistory {
  double alpha = 0.0;
  std::int64_t budget = 0;
  std::vector<RoundSnapshot> snapshots;

  bool empty() const { return snapshots.empty(); }
};

inline ChainSnapshot snapshot_chain(const ChainCounts& c, const SmoothingConfig& cfg) {
  return {c.pulls, c.visits, smoothed_estimate(c, cfg)};
}

}  // namespace bamc
