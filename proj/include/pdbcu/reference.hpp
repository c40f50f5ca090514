#pragma once

#include <pdbcu/linalg.hpp>
#include <pdbcu/problem.hpp>

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace pdbcu {

struct ReferenceOptions {
  double tol = 1e-9;            // accepted KKT residual, relative to 1 + ||b||
  double beta = 1.0;
  long max_iters = 400000;      // full-vector iterations in total
  long polish_every = 2000;
};

struct ReferenceSolution {
  Vector x_star;
  Vector lambda_star;
  double f_star = 0.0;
  double kkt_residual = kInfinity;
  long iterations = 0;
  std::string method;
};

namespace detail {

// Block by block, so it only relies on the oracle interface.
inline Vector full_gradient(const ProblemInstance& inst, const Vector& x) {
  Vector g(inst.dim());
  for (Index i = 0; i < inst.num_blocks(); ++i) {
    const BlockRange& b = inst.partition[i];
    inst.smooth.block_grad(x, b, g.segment(b.start, b.width));
  }
  return g;
}

// Block-separable prox of sum_i g_i with common step.
inline Vector full_prox(const ProblemInstance& inst, const Vector& v, double step) {
  Vector out(v.size());
  for (Index i = 0; i < inst.num_blocks(); ++i) {
    const BlockRange& b = inst.partition[i];
    const ProxTerm& t = inst.prox_terms[static_cast<std::size_t>(i)];
    for (Index j = b.start; j < b.end(); ++j) out[j] = t.prox_scalar(v[j], step);
  }
  return out;
}

inline const ProxTerm& term_of(const ProblemInstance& inst, const std::vector<Index>& owner, Index j) {
  return inst.prox_terms[static_cast<std::size_t>(owner[static_cast<std::size_t>(j)])];
}

}  // namespace detail

/// max(||Ax - b||, ||x - prox_g(x - grad f(x) + A^T lambda)||): zero exactly
/// at a KKT pair of  grad f + dg - A^T lambda  containing 0,  Ax = b.
inline double kkt_residual(const ProblemInstance& inst, const Vector& x, const Vector& lambda) {
  check_dim(inst, x);
  if (lambda.size() != inst.num_rows()) throw StructuralError("kkt: multiplier length mismatch");
  const Vector r = residual(inst, x);
  const Vector g = detail::full_gradient(inst, x) - inst.constraint.apply_transpose(lambda, inst.partition);
  const Vector p = detail::full_prox(inst, x - g, 1.0);
  return std::max(r.norm(), (x - p).norm());
}

namespace detail {

// Fix coordinates judged to sit on the nonsmooth set of g, then solve the
// equality-constrained quadratic on the rest exactly. The correction is the
// minimum-norm one, so lambda stays close to the iterate's multiplier (this
// matters when A_F has fewer columns than rows and lambda is not unique).
inline bool polish(const ProblemInstance& inst, const std::vector<Index>& owner, double thr,
                   const Vector& x, const Vector& lambda, Vector& x_out, Vector& lam_out) {
  const Index n = inst.dim();
  const Index q = inst.num_rows();
  Vector fixed_x = x;
  std::vector<Index> free;
  Vector sign = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    const ProxTerm& t = term_of(inst, owner, j);
    switch (t.kind) {
      case ProxTerm::Kind::Zero:
        free.push_back(j);
        break;
      case ProxTerm::Kind::L1:
        if (std::abs(x[j]) > thr) {
          free.push_back(j);
          sign[j] = t.weight * (x[j] > 0 ? 1.0 : -1.0);
        } else {
          fixed_x[j] = 0.0;
        }
        break;
      case ProxTerm::Kind::NonNeg:
        if (x[j] > thr) free.push_back(j);
        else fixed_x[j] = 0.0;
        break;
      case ProxTerm::Kind::Box:
        if (x[j] - t.lo <= thr) fixed_x[j] = t.lo;
        else if (t.hi - x[j] <= thr) fixed_x[j] = t.hi;
        else free.push_back(j);
        break;
    }
  }
  const Index nf = static_cast<Index>(free.size());
  const Matrix a = inst.constraint.to_dense();
  const bool quad = inst.smooth.function->is_quadratic() && inst.smooth.function->kind() != "zero";

  // Current stationarity and feasibility defects at (fixed_x, lambda).
  const Vector grad = full_gradient(inst, fixed_x);
  const Vector atl = a.transpose() * lambda;
  Matrix kkt = Matrix::Zero(nf + q, nf + q);
  Vector rhs(nf + q);
  for (Index u = 0; u < nf; ++u) {
    const Index j = free[static_cast<std::size_t>(u)];
    rhs[u] = -(grad[j] + sign[j] - atl[j]);
    kkt.block(nf, u, q, 1) = a.col(j);
    kkt.block(u, nf, 1, q) = -a.col(j).transpose();
  }
  rhs.tail(q) = inst.constraint.rhs() - a * fixed_x;
  if (quad && nf > 0) {
    Vector e = Vector::Zero(1), col;
    for (Index u = 0; u < nf; ++u) {
      const Index j = free[static_cast<std::size_t>(u)];
      e[0] = 1.0;
      inst.smooth.function->hessian_columns_apply(BlockRange{j, 1}, e, col);
      for (Index v = 0; v < nf; ++v) kkt(v, u) = col[free[static_cast<std::size_t>(v)]];
    }
  }
  const Vector step = Eigen::CompleteOrthogonalDecomposition<Matrix>(kkt).solve(rhs);
  if (!step.allFinite()) return false;
  x_out = fixed_x;
  for (Index u = 0; u < nf; ++u) x_out[free[static_cast<std::size_t>(u)]] += step[u];
  lam_out = lambda + step.tail(q);
  return true;
}

}  // namespace detail

namespace detail {

// For l1 blocks (f = 0 gives basis pursuit): |A^T lambda - grad f|_j <= w
// everywhere, with equality and matching sign where x_j != 0.
inline bool l1_certificate_holds(const ProblemInstance& inst, const Vector& x, const Vector& lambda,
                                 double tol) {
  const Vector s = inst.constraint.apply_transpose(lambda, inst.partition) - full_gradient(inst, x);
  for (Index i = 0; i < inst.num_blocks(); ++i) {
    const ProxTerm& t = inst.prox_terms[static_cast<std::size_t>(i)];
    if (t.kind != ProxTerm::Kind::L1) continue;
    for (Index j = inst.partition[i].start; j < inst.partition[i].end(); ++j) {
      if (std::abs(s[j]) > t.weight + tol) return false;
      if (x[j] != 0.0 && std::abs(s[j] - t.weight * (x[j] > 0 ? 1.0 : -1.0)) > tol) return false;
    }
  }
  return true;
}

}  // namespace detail

/// High-accuracy primal-dual pair for small and medium instances, computed
/// independently of the block solvers: full-vector linearized augmented
/// Lagrangian iterations, periodically finished by an exact solve on the
/// current support. Throws OracleFailure if the residual target is missed.
inline ReferenceSolution reference_solve(const ProblemInstance& inst, const ReferenceOptions& opts = {}) {
  inst.validate();
  if (!(opts.beta > 0.0) || !(opts.tol > 0.0)) throw ParameterError("reference: beta and tol must be positive");
  const Index n = inst.dim();
  const Index q = inst.num_rows();
  const SmoothFunction& f = *inst.smooth.function;
  if (!f.is_quadratic()) throw UnsupportedError("reference: smooth part must be quadratic");

  std::vector<Index> owner(static_cast<std::size_t>(n));
  for (Index i = 0; i < inst.num_blocks(); ++i)
    for (Index j = inst.partition[i].start; j < inst.partition[i].end(); ++j) owner[static_cast<std::size_t>(j)] = i;

  const linalg::PowerIterationOptions pio{500, 1e-10};
  const double lf = f.kind() == "zero"
                        ? 0.0
                        : linalg::power_iteration(n, [&](const Vector& v, Vector& w) { f.hessian_apply(v, w); }, pio);
  const double la = linalg::power_iteration(
      n,
      [&](const Vector& v, Vector& w) {
        w = inst.constraint.apply_transpose(inst.constraint.apply(v, inst.partition), inst.partition);
      },
      pio);
  const double eta = 1.05 * (lf + opts.beta * la) + 1e-12;
  const double target = opts.tol * (1.0 + inst.constraint.rhs().norm());

  // grad f(x) = Q x + c with c = grad f(0).
  const Vector c = detail::full_gradient(inst, Vector::Zero(n));
  Vector qx(n);
  auto grad_f = [&](const Vector& v) -> Vector {
    if (f.kind() == "zero") return c;
    f.hessian_apply(v, qx);
    return qx + c;
  };

  Vector x(n);
  for (Index j = 0; j < n; ++j) x[j] = detail::term_of(inst, owner, j).project_scalar(0.0);
  Vector lambda = Vector::Zero(q);
  Vector r = residual(inst, x);
  ReferenceSolution best;
  best.method = "lalm";
  for (long it = 1; it <= opts.max_iters; ++it) {
    const Vector g = grad_f(x) -
                     inst.constraint.apply_transpose(lambda - opts.beta * r, inst.partition);
    x = detail::full_prox(inst, x - g / eta, 1.0 / eta);
    r = residual(inst, x);
    lambda -= opts.beta * r;
    if (it % opts.polish_every != 0 && it != opts.max_iters) continue;

    const double res = kkt_residual(inst, x, lambda);
    if (res < best.kkt_residual) best = {x, lambda, 0.0, res, it, "lalm"};
    const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
    for (double rel : {1e-3, 1e-5, 1e-7}) {
      Vector xp, lp;
      if (!detail::polish(inst, owner, rel * scale, x, lambda, xp, lp)) continue;
      const double pres = kkt_residual(inst, xp, lp);
      if (pres < best.kkt_residual) best = {xp, lp, 0.0, pres, it, "lalm+active_set"};
    }
    if (best.kkt_residual <= target) break;
  }
  if (!(best.kkt_residual <= target))
    throw OracleFailure("reference: KKT residual " + std::to_string(best.kkt_residual) +
                        " above target " + std::to_string(target));
  if (residual(inst, best.x_star).norm() > target)
    throw OracleFailure("reference: feasibility above target");
  if (!detail::l1_certificate_holds(inst, best.x_star, best.lambda_star, 10.0 * target))
    throw OracleFailure("reference: l1 dual certificate violated");
  best.f_star = objective(inst, best.x_star);
  if (!std::isfinite(best.f_star)) throw OracleFailure("reference: solution outside dom(g)");
  return best;
}

/// Copy of `inst` carrying the reference optimum.
inline ProblemInstance with_reference(ProblemInstance inst, const ReferenceSolution& sol) {
  inst.optimum = OptimumReference{sol.f_star, sol.x_star, sol.lambda_star};
  return inst;
}

}  // namespace pdbcu
