#pragma once

#include <pdbcu/linalg.hpp>
#include <pdbcu/partition.hpp>
#include <pdbcu/types.hpp>

#include <algorithm>
#include <string>
#include <variant>
#include <vector>

namespace pdbcu {

/// Column block A_i of the constraint matrix: dense, or column-compressed
/// sparse so that A_i^T v and A_i d cost O(nnz(A_i)).
using ConstraintBlock = std::variant<Matrix, SparseMatrix>;

namespace detail {

// Blocks whose smaller dimension is at most this get an exact
// eigen-decomposition of the smaller Gram matrix instead of power iteration.
inline constexpr Index kExactNormWidth = 256;
inline constexpr double kNormInflation = 1.001;

inline Matrix gram(const ConstraintBlock& blk) {
  return std::visit(
      [](const auto& a) -> Matrix {
        if (a.rows() < a.cols()) return Matrix(a * a.transpose());
        return Matrix(a.transpose() * a);
      },
      blk);
}

inline double block_sq_norm(const ConstraintBlock& blk) {
  const Index w = std::visit([](const auto& a) { return a.cols(); }, blk);
  if (w == 1) {
    // Exact column norm; no inflation needed.
    return std::visit([](const auto& a) { return a.col(0).squaredNorm(); }, blk);
  }
  const Index rows = std::visit([](const auto& a) { return a.rows(); }, blk);
  if (std::min(w, rows) <= kExactNormWidth) return kNormInflation * linalg::max_eigenvalue(gram(blk));
  const double est = std::visit(
      [w](const auto& a) {
        return linalg::power_iteration(w, [&a](const Vector& in, Vector& out) {
          Vector t = a * in;
          out.noalias() = a.transpose() * t;
        });
      },
      blk);
  return kNormInflation * est;
}

}  // namespace detail

/// Constraint system A x = b with A = [A_1, ..., A_m].
class ConstraintBlocks {
 public:
  ConstraintBlocks() = default;

  ConstraintBlocks(std::vector<ConstraintBlock> blocks, Vector rhs)
      : blocks_(std::move(blocks)), rhs_(std::move(rhs)) {
    if (blocks_.empty()) throw StructuralError("constraint: no blocks");
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const Index rows = std::visit([](const auto& a) { return a.rows(); }, blocks_[i]);
      if (rows != rhs_.size())
        throw StructuralError("constraint: block " + std::to_string(i) + " has " +
                              std::to_string(rows) + " rows, rhs has " +
                              std::to_string(rhs_.size()));
    }
    sq_norms_.reserve(blocks_.size());
    for (const auto& b : blocks_) sq_norms_.push_back(detail::block_sq_norm(b));
  }

  /// Split a full matrix along `partition`. Blocks whose density is below
  /// `sparse_threshold` are stored compressed.
  static ConstraintBlocks from_dense(const Matrix& a, const BlockPartition& partition, Vector b,
                                     double sparse_threshold = 0.3) {
    if (a.cols() != partition.total_dim())
      throw StructuralError("constraint: matrix columns do not match partition");
    std::vector<ConstraintBlock> blocks;
    blocks.reserve(static_cast<std::size_t>(partition.num_blocks()));
    for (const auto& r : partition.ranges()) {
      Matrix blk = a.middleCols(r.start, r.width);
      const double density = blk.size() == 0 ? 0.0
                                             : static_cast<double>((blk.array() != 0.0).count()) /
                                                   static_cast<double>(blk.size());
      if (density < sparse_threshold)
        blocks.emplace_back(SparseMatrix(blk.sparseView()));
      else
        blocks.emplace_back(std::move(blk));
    }
    return ConstraintBlocks(std::move(blocks), std::move(b));
  }

  static ConstraintBlocks from_sparse(const SparseMatrix& a, const BlockPartition& partition,
                                      Vector b) {
    if (a.cols() != partition.total_dim())
      throw StructuralError("constraint: matrix columns do not match partition");
    std::vector<ConstraintBlock> blocks;
    for (const auto& r : partition.ranges())
      blocks.emplace_back(SparseMatrix(a.middleCols(r.start, r.width)));
    return ConstraintBlocks(std::move(blocks), std::move(b));
  }

  Index rows() const { return rhs_.size(); }
  Index num_blocks() const { return static_cast<Index>(blocks_.size()); }
  const Vector& rhs() const { return rhs_; }
  const ConstraintBlock& block(Index i) const { return blocks_[static_cast<std::size_t>(i)]; }
  Index block_cols(Index i) const {
    return std::visit([](const auto& a) { return a.cols(); }, block(i));
  }
  bool is_sparse(Index i) const { return std::holds_alternative<SparseMatrix>(block(i)); }

  /// Cached upper bound on ||A_i||^2.
  double sq_norm(Index i) const { return sq_norms_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& sq_norms() const { return sq_norms_; }

  /// Replace the cached norms. Only meant for fault-injection in tests and
  /// the verify tool; the solver trusts these values.
  void override_sq_norms(std::vector<double> v) {
    if (v.size() != blocks_.size()) throw StructuralError("constraint: norm count mismatch");
    sq_norms_ = std::move(v);
  }

  /// r += A_i d
  template <class In, class Out>
  void add_block_product(Index i, const In& d, Out&& r) const {
    std::visit([&](const auto& a) { r.noalias() += a * d; }, block(i));
  }

  /// out = A_i^T v
  template <class In, class Out>
  void block_transpose_product(Index i, const In& v, Out&& out) const {
    std::visit([&](const auto& a) { out.noalias() = a.transpose() * v; }, block(i));
  }

  /// A x, accumulated block by block.
  Vector apply(const Vector& x, const BlockPartition& partition) const {
    if (x.size() != partition.total_dim() || partition.num_blocks() != num_blocks())
      throw StructuralError("constraint: dimension mismatch in apply");
    Vector out = Vector::Zero(rows());
    for (Index i = 0; i < num_blocks(); ++i) add_block_product(i, partition.segment(x, i), out);
    return out;
  }

  /// A^T v as a full vector.
  Vector apply_transpose(const Vector& v, const BlockPartition& partition) const {
    Vector out(partition.total_dim());
    for (Index i = 0; i < num_blocks(); ++i) {
      auto seg = partition.segment(out, i);
      block_transpose_product(i, v, seg);
    }
    return out;
  }

  Matrix to_dense() const {
    Index cols = 0;
    for (Index i = 0; i < num_blocks(); ++i) cols += block_cols(i);
    Matrix out(rows(), cols);
    Index at = 0;
    for (Index i = 0; i < num_blocks(); ++i) {
      const Index w = block_cols(i);
      std::visit([&](const auto& a) { out.middleCols(at, w) = Matrix(a); }, block(i));
      at += w;
    }
    return out;
  }

  SparseMatrix to_sparse() const {
    Index cols = 0;
    for (Index i = 0; i < num_blocks(); ++i) cols += block_cols(i);
    std::vector<Eigen::Triplet<double>> trips;
    Index at = 0;
    for (Index i = 0; i < num_blocks(); ++i) {
      std::visit(
          [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, SparseMatrix>) {
              for (Index c = 0; c < a.outerSize(); ++c)
                for (SparseMatrix::InnerIterator it(a, c); it; ++it)
                  trips.emplace_back(it.row(), at + c, it.value());
            } else {
              for (Index c = 0; c < a.cols(); ++c)
                for (Index r = 0; r < a.rows(); ++r)
                  if (a(r, c) != 0.0) trips.emplace_back(r, at + c, a(r, c));
            }
          },
          block(i));
      at += block_cols(i);
    }
    SparseMatrix out(rows(), cols);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
  }

  /// Same matrix re-split along a different partition.
  ConstraintBlocks reblocked(const BlockPartition& partition) const {
    bool all_dense = true;
    for (Index i = 0; i < num_blocks(); ++i) all_dense = all_dense && !is_sparse(i);
    if (all_dense) return from_dense(to_dense(), partition, rhs_, 0.0);
    return from_sparse(to_sparse(), partition, rhs_);
  }

 private:
  std::vector<ConstraintBlock> blocks_;
  Vector rhs_;
  std::vector<double> sq_norms_;
};

}  // namespace pdbcu
