#pragma once

#include <pdbcu/problem.hpp>
#include <pdbcu/types.hpp>

#include <algorithm>
#include <cstdint>
#include <vector>

namespace pdbcu {

/// Running sum S_T = x^2 + ... + x^T over the iterates produced by T block
/// updates, kept lazily: each block remembers since which update its
/// current value has been held, so a step costs O(block width) instead of O(n).
class ErgodicAccumulator {
 public:
  ErgodicAccumulator() = default;
  explicit ErgodicAccumulator(const BlockPartition& p)
      : sum_(Vector::Zero(p.total_dim())), held_since_(static_cast<std::size_t>(p.num_blocks()), 0) {}

  /// Block i is about to be overwritten by update number t (t >= 1);
  /// `old_value` is its value before the update.
  template <class Seg>
  void on_block_update(const BlockPartition& p, Index i, const Seg& old_value, std::int64_t t) {
    auto& since = held_since_[static_cast<std::size_t>(i)];
    const std::int64_t n = count(since, t - 1);
    if (n > 0) p.segment(sum_, i) += static_cast<double>(n) * old_value;
    since = t;
  }

  /// S_T given the current iterate x = x^T.
  Vector sum(const BlockPartition& p, const Vector& x, std::int64_t t) const {
    Vector s = sum_;
    for (Index i = 0; i < p.num_blocks(); ++i) {
      const std::int64_t n = count(held_since_[static_cast<std::size_t>(i)], t);
      if (n > 0) p.segment(s, i) += static_cast<double>(n) * p.segment(x, i);
    }
    return s;
  }

 private:
  // Number of indices in [max(from, 2), to].
  static std::int64_t count(std::int64_t from, std::int64_t to) {
    return std::max<std::int64_t>(0, to - std::max<std::int64_t>(from, 2) + 1);
  }

  Vector sum_;
  std::vector<std::int64_t> held_since_;
};

/// Iterate triple (x^k, r^k, lambda^k) with the update counter k.
struct SaddleState {
  Vector x;
  Vector r;       // A x - b, maintained incrementally
  Vector lambda;  // starts at 0
  std::int64_t k = 0;
  ErgodicAccumulator ergodic;
  // x^0, x^1, ... when history recording is on (debug / oracle tests only).
  std::vector<Vector> history;
  bool record_history = false;

  static SaddleState initial(const ProblemInstance& inst, const Vector& x0,
                             bool record_history = false) {
    SaddleState s;
    s.x = x0;
    s.r = residual(inst, x0);
    s.lambda = Vector::Zero(inst.num_rows());
    s.ergodic = ErgodicAccumulator(inst.partition);
    s.record_history = record_history;
    if (record_history) s.history.push_back(x0);
    return s;
  }

  /// Running sum of x^{k+1} for k = 1..K, where K = updates - 1.
  Vector ergodic_sum(const ProblemInstance& inst) const {
    return ergodic.sum(inst.partition, x, k);
  }
};

/// (x^{K+1} + sum_{k=1}^K x^{k+1}) / (1 + K/m), evaluated literally.
/// The weights do not sum to one when m > 1; see ergodic_average for the
/// normalized point the rate metrics use.
inline Vector ergodic_point(const ProblemInstance& inst, const SaddleState& s, Index m) {
  if (s.k < 1) throw StateError("ergodic_point: no update has been made yet");
  const double kk = static_cast<double>(s.k - 1);
  return (s.x + s.ergodic_sum(inst)) / (1.0 + kk / static_cast<double>(m));
}

/// (x^{K+1} + (1/m) sum_{k=1}^K x^{k+1}) / (1 + K/m): a convex combination
/// of the iterates, weight 1 on the last and 1/m on the others.
inline Vector ergodic_average(const ProblemInstance& inst, const SaddleState& s, Index m) {
  if (s.k < 1) throw StateError("ergodic_average: no update has been made yet");
  const double md = static_cast<double>(m);
  const double kk = static_cast<double>(s.k - 1);
  return (s.x + s.ergodic_sum(inst) / md) / (1.0 + kk / md);
}

}  // namespace pdbcu
