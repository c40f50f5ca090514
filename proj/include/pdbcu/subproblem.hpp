#pragma once

#include <pdbcu/problem.hpp>
#include <pdbcu/prox.hpp>
#include <pdbcu/types.hpp>

namespace pdbcu {

/// Scratch buffers for one block update, sized once per run.
struct BlockWorkspace {
  Vector dual;    // lambda - beta r        (length q)
  Vector lin;     // grad - A_i^T dual      (max block width)
  Vector anchor;  // x_i - lin / eta        (max block width)

  BlockWorkspace() = default;
  BlockWorkspace(Index rows, Index max_width)
      : dual(rows), lin(max_width), anchor(max_width) {}

  static BlockWorkspace for_instance(const ProblemInstance& inst) {
    Index w = 0;
    for (const auto& r : inst.partition.ranges()) w = std::max(w, r.width);
    return BlockWorkspace(inst.num_rows(), w);
  }
};

/// Exact minimizer of
///   <grad - A_i^T (lambda - beta r), y> + g_i(y) + eta/2 ||y - x_i||^2,
/// i.e. prox of g_i with weight 1/eta at x_i - (grad - A_i^T(lambda - beta r)) / eta.
/// `grad` may be the current block gradient or a delayed one.
template <class Grad, class Out>
void solve_block_subproblem(const ProblemInstance& inst, const Vector& x, const Vector& r,
                            const Vector& lambda, Index i, const Grad& grad, double beta,
                            double eta, BlockWorkspace& ws, Out&& out) {
  if (!(eta > 0.0)) throw ParameterError("subproblem: eta must be positive");
  const BlockRange& b = inst.partition[i];
  ws.dual.noalias() = lambda - beta * r;
  auto lin = ws.lin.head(b.width);
  inst.constraint.block_transpose_product(i, ws.dual, lin);
  lin = grad - lin;
  auto anchor = ws.anchor.head(b.width);
  anchor = x.segment(b.start, b.width) - lin / eta;
  prox_apply(ScaledProxQuery{inst.prox_terms[static_cast<std::size_t>(i)], 1.0 / eta}, anchor,
             out);
}

inline Vector solve_block_subproblem(const ProblemInstance& inst, const Vector& x,
                                     const Vector& r, const Vector& lambda, Index i,
                                     const Vector& grad, double beta, double eta) {
  auto ws = BlockWorkspace::for_instance(inst);
  Vector out(inst.partition[i].width);
  solve_block_subproblem(inst, x, r, lambda, i, grad, beta, eta, ws, out);
  return out;
}

}  // namespace pdbcu
