#pragma once

#include <pdbcu/linalg.hpp>
#include <pdbcu/problem.hpp>
#include <pdbcu/types.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace pdbcu {

struct LipschitzConstants {
  Vector blocks;      // L_i
  double cross = 0.0; // L_r
};

/// L_i = ||Q_ii|| and L_r = max_i ||Q_{:,i}|| for quadratic f; zeros for f = 0.
inline LipschitzConstants estimate_lipschitz(const SmoothFunction& f,
                                             const BlockPartition& partition) {
  if (!f.is_quadratic())
    throw UnsupportedError("estimate_lipschitz: oracle is not quadratic; supply constants");
  LipschitzConstants out;
  const Index m = partition.num_blocks();
  out.blocks = Vector::Zero(m);
  if (f.kind() == "zero") return out;

  const Index n = partition.total_dim();
  for (Index i = 0; i < m; ++i) {
    const BlockRange& b = partition[i];
    if (b.width <= detail::kExactNormWidth) {
      const Matrix qii = f.hessian_diag_block(b);
      out.blocks[i] = std::max(0.0, linalg::max_eigenvalue(0.5 * (qii + qii.transpose())));
      Matrix cols(n, b.width);
      Vector e = Vector::Zero(b.width);
      Vector col;
      for (Index j = 0; j < b.width; ++j) {
        e.setZero();
        e[j] = 1.0;
        f.hessian_columns_apply(b, e, col);
        cols.col(j) = col;
      }
      const double cross_sq =
          b.width == 1 ? cols.col(0).squaredNorm()
                       : linalg::max_eigenvalue(Matrix(cols.transpose() * cols));
      out.cross = std::max(out.cross, std::sqrt(std::max(0.0, cross_sq)));
    } else {
      Vector col;
      // Rayleigh quotients undershoot; inflate as for the constraint norms.
      out.blocks[i] = detail::kNormInflation * linalg::power_iteration(b.width, [&](const Vector& u, Vector& w) {
        f.hessian_columns_apply(b, u, col);
        w = col.segment(b.start, b.width);
      });
      Vector full;
      const double cross_sq = linalg::power_iteration(b.width, [&](const Vector& u, Vector& w) {
        f.hessian_columns_apply(b, u, col);
        f.hessian_apply(col, full);
        w = full.segment(b.start, b.width);
      });
      out.cross = std::max(out.cross, detail::kNormInflation * std::sqrt(std::max(0.0, cross_sq)));
    }
  }
  return out;
}

inline LipschitzConstants estimate_lipschitz(const ProblemInstance& inst) {
  return estimate_lipschitz(*inst.smooth.function, inst.partition);
}

/// Fill the instance's Lipschitz constants from its quadratic oracle.
inline void attach_lipschitz(ProblemInstance& inst) {
  auto lc = estimate_lipschitz(inst);
  inst.smooth.lipschitz_blocks = std::move(lc.blocks);
  inst.smooth.lipschitz_cross = lc.cross;
}

enum class PlanMode { Serial, AsyncDelayAware, SyncParallel };

/// Dual stepsize rho and per-block proximal weights eta_i (P_i = eta_i I).
struct StepsizePlan {
  double beta = 1.0;
  double rho = 1.0;
  Vector eta;
  PlanMode mode = PlanMode::Serial;
  int tau = 0;
  double alpha = 1.0;
  Index group_size = 1;
  // L_i + beta ||A_i||^2; sync-parallel rounds sum these over the group.
  Vector base_weights;
  // The serial rule is used even though the run is delayed or grouped.
  bool serial_weights_override = false;

  Index num_blocks() const { return eta.size(); }

  void validate(Index m) const {
    if (!(beta > 0.0)) throw ParameterError("plan: beta must be positive");
    if (!(rho > 0.0)) throw ParameterError("plan: rho must be positive");
    if (rho * static_cast<double>(m) > beta * (1.0 + 1e-15))
      throw ParameterError("plan: rho must not exceed beta/m");
    if (eta.size() != m || base_weights.size() != m)
      throw StructuralError("plan: weight vector length does not match block count");
    for (Index i = 0; i < m; ++i)
      if (!(eta[i] > 0.0) || !std::isfinite(eta[i]))
        throw ParameterError("plan: eta[" + std::to_string(i) + "] must be positive and finite");
  }

  std::string mode_name() const {
    switch (mode) {
      case PlanMode::Serial: return "serial";
      case PlanMode::AsyncDelayAware: return "async";
      case PlanMode::SyncParallel: return "sync";
    }
    return "?";
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "mode=" << mode_name() << " beta=" << beta << " rho=" << rho << " tau=" << tau
       << " alpha=" << alpha << " group=" << group_size
       << " serial_weights=" << (serial_weights_override ? 1 : 0);
    return os.str();
  }
};

namespace detail {
inline Vector serial_weights(const ProblemInstance& inst, double beta) {
  const Index m = inst.num_blocks();
  Vector w(m);
  for (Index i = 0; i < m; ++i)
    w[i] = inst.smooth.lipschitz_blocks[i] + beta * inst.constraint.sq_norm(i);
  return w;
}
}  // namespace detail

/// rho = beta/m, eta_i = L_i + beta ||A_i||^2.
inline StepsizePlan serial_plan(const ProblemInstance& inst, double beta) {
  if (!(beta > 0.0)) throw ParameterError("serial_plan: beta must be positive");
  StepsizePlan p;
  p.beta = beta;
  p.rho = beta / static_cast<double>(inst.num_blocks());
  p.base_weights = detail::serial_weights(inst, beta);
  p.eta = p.base_weights;
  return p;
}

/// Delay-aware weights
///   eta_i = L_i + alpha L_c + tau L_i / m + (kappa/alpha + 2) L_r tau^2 / m + beta ||A_i||^2
/// with L_c = max_j L_j and kappa = L_r / L_c. tau == 0 returns serial_plan.
inline StepsizePlan async_plan(const ProblemInstance& inst, double beta, int tau,
                               double alpha = 1.0) {
  if (tau < 0) throw ParameterError("async_plan: tau must be nonnegative");
  if (!(alpha > 0.0)) throw ParameterError("async_plan: alpha must be positive");
  if (tau == 0) return serial_plan(inst, beta);
  StepsizePlan p = serial_plan(inst, beta);
  p.mode = PlanMode::AsyncDelayAware;
  p.tau = tau;
  p.alpha = alpha;
  const Index m = inst.num_blocks();
  const double md = static_cast<double>(m);
  const double t = static_cast<double>(tau);
  const Vector& L = inst.smooth.lipschitz_blocks;
  const double lc = L.size() ? L.maxCoeff() : 0.0;
  const double lr = inst.smooth.lipschitz_cross;
  for (Index i = 0; i < m; ++i) {
    const double a_term = beta * inst.constraint.sq_norm(i);
    if (lc == 0.0) {
      // Every term is proportional to a Lipschitz constant; kappa's limit is dropped.
      p.eta[i] = 2.0 * lr * t * t / md + a_term;
    } else {
      const double kappa = lr / lc;
      p.eta[i] = L[i] + alpha * lc + t * L[i] / md + (kappa / alpha + 2.0) * lr * t * t / md +
                 a_term;
    }
  }
  return p;
}

/// Delayed run that keeps the serial weights (no delay compensation).
inline StepsizePlan async_plan_serial_weights(const ProblemInstance& inst, double beta, int tau) {
  if (tau < 0) throw ParameterError("async_plan: tau must be nonnegative");
  StepsizePlan p = serial_plan(inst, beta);
  if (tau > 0) {
    p.mode = PlanMode::AsyncDelayAware;
    p.tau = tau;
    p.serial_weights_override = true;
  }
  return p;
}

/// Weights for one sync-parallel group: every member gets
/// sum_{j in group} (L_j + beta ||A_j||^2). Returned in group order.
inline Vector sync_group_weights(const StepsizePlan& plan, const std::vector<Index>& group) {
  if (group.empty()) throw ParameterError("sync_parallel_plan: empty group");
  double total = 0.0;
  for (Index j : group) total += plan.base_weights[j];
  return Vector::Constant(static_cast<Index>(group.size()), total);
}

inline Vector sync_parallel_plan(const ProblemInstance& inst, double beta,
                                 const std::vector<Index>& group) {
  if (group.empty()) throw ParameterError("sync_parallel_plan: empty group");
  for (Index j : group)
    if (j < 0 || j >= inst.num_blocks()) throw StructuralError("sync_parallel_plan: bad block");
  return sync_group_weights(serial_plan(inst, beta), group);
}

/// Plan for the sync-parallel engine with group size p. With
/// `serial_weights` the group inflation is skipped.
inline StepsizePlan sync_plan(const ProblemInstance& inst, double beta, Index group_size,
                              bool serial_weights = false) {
  if (group_size < 1 || group_size > inst.num_blocks())
    throw ParameterError("sync_plan: group size must be in [1, m]");
  StepsizePlan p = serial_plan(inst, beta);
  p.mode = PlanMode::SyncParallel;
  p.group_size = group_size;
  p.serial_weights_override = serial_weights;
  return p;
}

/// Replace rho, keeping the rho <= beta/m condition.
inline StepsizePlan with_rho(StepsizePlan p, double rho) {
  p.rho = rho;
  p.validate(p.eta.size());
  return p;
}

}  // namespace pdbcu
