#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bamc/errors.hpp"

namespace bamc {

inline constexpr double kRowSumTol = 1e-12;

// row-major so that transition rows are contiguous for sampling
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ChainValidation {
  RequireErgodic,   // default: reject reducible or periodic chains
  AllowNonErgodic,  // admit any stochastic matrix
};

// True iff P^m is entrywise positive for some m <= S^2, i.e. the chain is
// irreducible and aperiodic. Uses boolean squaring of the positivity
// pattern; positivity persists once attained, so checking the pattern at
// the first power-of-two exponent >= S^2 is exact.
template <typename Derived>
inline bool ergodic_pattern(const Eigen::MatrixBase<Derived>& P) {
  const int S = static_cast<int>(P.rows());
  using BoolMat = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
  BoolMat reach = (P.array() > 0.0);
  auto all_positive = [&] { return reach.all(); };
  std::int64_t exponent = 1;
  while (!all_positive() && exponent < static_cast<std::int64_t>(S) * S) {
    BoolMat next = BoolMat::Constant(S, S, false);
    for (int x = 0; x < S; ++x)
      for (int z = 0; z < S; ++z)
        if (reach(x, z))
          for (int y = 0; y < S; ++y) next(x, y) = next(x, y) || reach(z, y);
    reach.swap(next);
    exponent *= 2;
  }
  return all_positive();
}

// Row-stochastic matrix, validated on construction. Ergodicity is recorded
// so downstream analysis can refuse chains admitted permissively.
class TransitionMatrix {
 public:
  explicit TransitionMatrix(const Eigen::MatrixXd& entries,
                            ChainValidation mode = ChainValidation::RequireErgodic)
      : entries_(entries) {
    const int S = static_cast<int>(entries_.rows());
    if (S < 2 || entries_.cols() != S)
      throw NotStochastic("transition matrix must be square with at least 2 states");
    for (int x = 0; x < S; ++x) {
      double row_sum = 0.0;
      for (int y = 0; y < S; ++y) {
        const double p = entries_(x, y);
        if (!(p >= 0.0) || !std::isfinite(p))
          throw NotStochastic("negative or non-finite entry at row " + std::to_string(x) +
                              ", col " + std::to_string(y));
        row_sum += p;
      }
      if (std::abs(row_sum - 1.0) > kRowSumTol)
        throw NotStochastic("row " + std::to_string(x) + " sums to " + std::to_string(row_sum));
    }
    ergodic_ = ergodic_pattern(entries_);
    if (!ergodic_ && mode == ChainValidation::RequireErgodic)
      throw NotErgodic("chain is reducible or periodic");
  }

  int size() const { return static_cast<int>(entries_.rows()); }
  const RowMajorMatrix& entries() const { return entries_; }
  double operator()(int x, int y) const { return entries_(x, y); }
  std::span<const double> row(int x) const {
    return {entries_.data() + static_cast<std::size_t>(x) * entries_.cols(),
            static_cast<std::size_t>(entries_.cols())};
  }
  bool ergodic() const { return ergodic_; }

 private:
  RowMajorMatrix entries_;
  bool ergodic_ = false;
};

inline TransitionMatrix validate_chain(const Eigen::MatrixXd& raw,
                                       ChainValidation mode = ChainValidation::RequireErgodic) {
  return TransitionMatrix(raw, mode);
}

}  // namespace bamc
