#pragma once

#include <pdbcu/constraint.hpp>
#include <pdbcu/partition.hpp>
#include <pdbcu/prox.hpp>
#include <pdbcu/smooth.hpp>
#include <pdbcu/types.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pdbcu {

/// Known optimum used for the |F(x) - F*| metric.
struct OptimumReference {
  double f_star = 0.0;
  Vector x_star;
  Vector lambda_star;  // may be empty when unknown
};

/// min f(x) + sum_i g_i(x_i)  s.t.  sum_i A_i x_i = b.
///
/// Immutable after construction; all members are safe to read from any
/// number of threads.
struct ProblemInstance {
  BlockPartition partition;
  ConstraintBlocks constraint;
  SmoothOracle smooth;
  std::vector<ProxTerm> prox_terms;
  std::optional<OptimumReference> optimum;
  // Generator parameters and other provenance, echoed into trace headers.
  std::map<std::string, std::string> metadata;

  Index dim() const { return partition.total_dim(); }
  Index num_blocks() const { return partition.num_blocks(); }
  Index num_rows() const { return constraint.rows(); }

  /// Throws StructuralError when any width disagrees.
  void validate() const {
    const Index m = partition.num_blocks();
    if (constraint.num_blocks() != m)
      throw StructuralError("instance: constraint has " + std::to_string(constraint.num_blocks()) +
                            " blocks, partition has " + std::to_string(m));
    if (static_cast<Index>(prox_terms.size()) != m)
      throw StructuralError("instance: need one prox term per block");
    for (Index i = 0; i < m; ++i)
      if (constraint.block_cols(i) != partition[i].width)
        throw StructuralError("instance: block " + std::to_string(i) + " width mismatch");
    if (!smooth.function) throw StructuralError("instance: missing smooth oracle");
    if (smooth.function->dim() != partition.total_dim())
      throw StructuralError("instance: smooth oracle dimension mismatch");
    if (smooth.lipschitz_blocks.size() != m)
      throw StructuralError("instance: need one Lipschitz constant per block");
  }
};

inline void check_dim(const ProblemInstance& inst, const Vector& x) {
  if (x.size() != inst.dim())
    throw StructuralError("vector of length " + std::to_string(x.size()) +
                          " does not match problem dimension " + std::to_string(inst.dim()));
}

/// A x - b, computed directly from the blocks.
inline Vector residual(const ProblemInstance& inst, const Vector& x) {
  check_dim(inst, x);
  return inst.constraint.apply(x, inst.partition) - inst.constraint.rhs();
}

inline Vector block_grad_at(const ProblemInstance& inst, const Vector& x, Index i) {
  check_dim(inst, x);
  if (i < 0 || i >= inst.num_blocks()) throw StructuralError("block index out of range");
  Vector g(inst.partition[i].width);
  inst.smooth.block_grad(x, inst.partition[i], g);
  return g;
}

/// F(x) = f(x) + sum_i g_i(x_i); +infinity outside dom(g).
inline double objective(const ProblemInstance& inst, const Vector& x) {
  check_dim(inst, x);
  double g = 0.0;
  for (Index i = 0; i < inst.num_blocks(); ++i) {
    g += inst.prox_terms[static_cast<std::size_t>(i)].value(inst.partition.segment(x, i));
    if (g == kInfinity) return kInfinity;
  }
  return inst.smooth.value(x) + g;
}

/// Same instance with the variable re-split along `partition`; Lipschitz
/// constants must be re-estimated by the caller (see estimate_lipschitz).
/// Every new block takes the prox term of the old block holding its first
/// coordinate, so the old term must be uniform across merged blocks.
inline ProblemInstance reblock(const ProblemInstance& inst, const BlockPartition& partition) {
  if (partition.total_dim() != inst.dim()) throw StructuralError("reblock: dimension mismatch");
  ProblemInstance out;
  out.partition = partition;
  out.constraint = inst.constraint.reblocked(partition);
  out.smooth.function = inst.smooth.function;
  out.optimum = inst.optimum;
  out.metadata = inst.metadata;
  Index old = 0;
  for (const auto& r : partition.ranges()) {
    while (inst.partition[old].end() <= r.start) ++old;
    const ProxTerm& t = inst.prox_terms[static_cast<std::size_t>(old)];
    for (Index j = old; j < inst.num_blocks() && inst.partition[j].start < r.end(); ++j) {
      const ProxTerm& u = inst.prox_terms[static_cast<std::size_t>(j)];
      if (u.kind != t.kind || u.weight != t.weight || u.lo != t.lo || u.hi != t.hi)
        throw StructuralError("reblock: merged blocks carry different prox terms");
    }
    out.prox_terms.push_back(t);
  }
  out.smooth.lipschitz_blocks = Vector::Zero(partition.num_blocks());
  return out;
}

}  // namespace pdbcu
