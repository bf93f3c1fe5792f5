#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>

#include "bamc/rng.hpp"
#include "bamc/transition_matrix.hpp"

namespace bamc {

// One chain frozen between pulls. The first step draws from the initial
// distribution; every later step draws from the row of the current state.
// State changes only through step(), and the stream is owned by the
// process, so a trajectory is a pure function of (seed, pull count).
class ChainProcess {
 public:
  ChainProcess(int chain_id, RandomStream stream) : id_(chain_id), rng_(stream) {}

  int step(const TransitionMatrix& P, const Eigen::VectorXd& initial) {
    if (!state_) {
      state_ = rng_.categorical({initial.data(), static_cast<std::size_t>(initial.size())});
    } else {
      state_ = rng_.categorical(P.row(*state_));
    }
    return *state_;
  }

  int chain_id() const { return id_; }
  std::optional<int> current() const { return state_; }

 private:
  int id_;
  std::optional<int> state_;
  RandomStream rng_;
};

}  // namespace bamc
