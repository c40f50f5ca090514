#pragma once

#include <pdbcu/reference.hpp>
#include <pdbcu/serial_solver.hpp>

#include <Eigen/SVD>

#include <cstdio>
#include <set>
#include <string>
#include <vector>

namespace pdbcu {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
  const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

struct VerifyOptions {
  std::uint64_t seed = 7;
  std::int64_t steps = 2000;     // serial steps for the residual recursion check
  Index max_probe_blocks = 25;   // Lipschitz / gradient probes
  int prox_queries = 200;
  bool reference = true;
  ReferenceOptions reference_options{};
};

namespace detail {

inline std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

inline std::vector<Index> probe_blocks(const ProblemInstance& inst, Index limit, Rng& rng) {
  std::vector<Index> out;
  const Index m = inst.num_blocks();
  if (m <= limit) {
    for (Index i = 0; i < m; ++i) out.push_back(i);
  } else {
    for (Index k = 0; k < limit; ++k) out.push_back(static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(m))));
  }
  return out;
}

inline Vector random_point(const ProblemInstance& inst, Rng& rng) {
  Vector x(inst.dim());
  for (Index j = 0; j < x.size(); ++j) x[j] = rng.normal();
  return x;
}

}  // namespace detail

/// Cached ||A_i||^2 must bound the exact value from above, and not by much.
inline CheckResult check_spectral_bound(const ProblemInstance& inst) {
  CheckResult c{"spectral_bound", true, ""};
  double worst = 0.0;
  for (Index i = 0; i < inst.num_blocks(); ++i) {
    const Matrix ai = std::visit([](const auto& blk) { return Matrix(blk); }, inst.constraint.block(i));
    const double exact = ai.cols() == 1 ? ai.squaredNorm()
                                        : std::pow(Eigen::JacobiSVD<Matrix>(ai).singularValues()[0], 2);
    const double cached = inst.constraint.sq_norm(i);
    const bool ok = cached >= exact * (1.0 - 1e-9) - 1e-14 && cached <= exact * 1.01 + 1e-12;
    if (!ok && c.passed) {
      c.passed = false;
      c.detail = "block " + std::to_string(i) + detail::fmt(": cached %.6g vs exact %.6g", cached, exact);
    }
    if (exact > 0) worst = std::max(worst, cached / exact);
  }
  if (c.passed) c.detail = detail::fmt("max cached/exact ratio %.6f", worst);
  return c;
}

/// Gradient differences along random block directions stay within L_i and L_r.
inline CheckResult check_lipschitz_probes(const ProblemInstance& inst, Rng& rng, Index limit) {
  CheckResult c{"lipschitz_probe", true, ""};
  const Vector x = detail::random_point(inst, rng);
  const Vector g0 = detail::full_gradient(inst, x);
  double worst = 0.0;
  for (Index i : detail::probe_blocks(inst, limit, rng)) {
    const BlockRange& b = inst.partition[i];
    Vector d(b.width);
    for (Index j = 0; j < b.width; ++j) d[j] = rng.normal();
    Vector y = x;
    y.segment(b.start, b.width) += d;
    const Vector diff = detail::full_gradient(inst, y) - g0;
    const double dn = d.norm();
    const double block_ratio = diff.segment(b.start, b.width).norm() / dn;
    const double cross_ratio = diff.norm() / dn;
    const double tol = 1e-9 * (1.0 + g0.norm());
    if (block_ratio > inst.smooth.lipschitz_blocks[i] * (1.0 + 1e-6) + tol ||
        cross_ratio > inst.smooth.lipschitz_cross * (1.0 + 1e-6) + tol) {
      c.passed = false;
      c.detail = "block " + std::to_string(i) + detail::fmt(": observed %.6g / %.6g exceeds constants", block_ratio, cross_ratio);
      return c;
    }
    if (inst.smooth.lipschitz_blocks[i] > 0) worst = std::max(worst, block_ratio / inst.smooth.lipschitz_blocks[i]);
  }
  c.detail = detail::fmt("max observed/L_i %.4f", worst);
  return c;
}

/// Block gradients against central differences of f.
inline CheckResult check_gradient_fd(const ProblemInstance& inst, Rng& rng, Index limit) {
  CheckResult c{"gradient_fd", true, ""};
  const Vector x = detail::random_point(inst, rng);
  const double h = 1e-5;
  double worst = 0.0;
  for (Index i : detail::probe_blocks(inst, std::min<Index>(limit, 5), rng)) {
    const BlockRange& b = inst.partition[i];
    const Vector g = block_grad_at(inst, x, i);
    for (Index j = 0; j < std::min<Index>(b.width, 4); ++j) {
      Vector xp = x, xm = x;
      xp[b.start + j] += h;
      xm[b.start + j] -= h;
      const double fd = (inst.smooth.value(xp) - inst.smooth.value(xm)) / (2 * h);
      const double err = std::abs(fd - g[j]) / (1.0 + std::abs(g[j]));
      worst = std::max(worst, err);
    }
  }
  c.passed = worst <= 1e-4;
  c.detail = detail::fmt("max relative error %.3g", worst);
  return c;
}

/// r^k = A x^k - b and lambda^k = -rho sum_{t=1..k} r^t along a serial run.
inline CheckResult check_residual_recursion(const ProblemInstance& inst, std::uint64_t seed, std::int64_t steps) {
  CheckResult c{"residual_recursion", true, ""};
  const StepsizePlan plan = serial_plan(inst, 1.0);
  SaddleState s = SaddleState::initial(inst, Vector::Zero(inst.dim()));
  Rng rng(seed);
  detail::StepBuffers buf(inst);
  Vector rsum = Vector::Zero(inst.num_rows());
  const double bnorm = inst.constraint.rhs().norm();
  double worst_r = 0.0, worst_l = 0.0;
  for (std::int64_t k = 0; k < steps; ++k) {
    step(inst, s, plan, rng, buf);
    rsum += s.r;
    worst_r = std::max(worst_r, (s.r - residual(inst, s.x)).norm() / (1.0 + bnorm));
    worst_l = std::max(worst_l, (s.lambda + plan.rho * rsum).norm() / (1.0 + s.lambda.norm()));
  }
  c.passed = worst_r <= 1e-8 && worst_l <= 1e-8;
  c.detail = detail::fmt("residual drift %.3g, dual drift %.3g", worst_r, worst_l);
  return c;
}

/// 0 in y - a + t dg(y) for every prox term used by the instance.
inline CheckResult check_prox_certificates(const ProblemInstance& inst, Rng& rng, int queries) {
  CheckResult c{"prox_certificate", true, ""};
  std::set<std::size_t> seen;
  int checked = 0;
  for (std::size_t i = 0; i < inst.prox_terms.size(); ++i) {
    const ProxTerm& t = inst.prox_terms[i];
    // One representative per distinct term.
    bool dup = false;
    for (std::size_t j : seen) {
      const ProxTerm& u = inst.prox_terms[j];
      dup = dup || (u.kind == t.kind && u.weight == t.weight && u.lo == t.lo && u.hi == t.hi);
    }
    if (dup) continue;
    seen.insert(i);
    for (int q = 0; q < queries; ++q) {
      const double a = 3.0 * rng.normal();
      const double step = 0.05 + 2.0 * rng.uniform01();
      const double y = t.prox_scalar(a, step);
      const double tol = 1e-12 * (1.0 + std::abs(a));
      bool ok = true;
      switch (t.kind) {
        case ProxTerm::Kind::Zero:
          ok = std::abs(y - a) <= tol;
          break;
        case ProxTerm::Kind::L1: {
          const double tw = step * t.weight;
          ok = y == 0.0 ? std::abs(a) <= tw + tol : std::abs(a - y - tw * (y > 0 ? 1.0 : -1.0)) <= tol;
          break;
        }
        case ProxTerm::Kind::NonNeg:
          ok = y >= 0.0 && (y > 0.0 ? std::abs(y - a) <= tol : a <= tol);
          break;
        case ProxTerm::Kind::Box:
          ok = y >= t.lo && y <= t.hi &&
               (y == t.lo ? a <= t.lo + tol : y == t.hi ? a >= t.hi - tol : std::abs(y - a) <= tol);
          break;
      }
      ++checked;
      if (!ok) {
        c.passed = false;
        c.detail = t.name() + detail::fmt(": certificate fails at anchor %.6g, step %.6g", a, step);
        return c;
      }
    }
  }
  c.detail = std::to_string(checked) + " queries";
  return c;
}

/// Reference pair (attached or freshly solved) satisfies KKT to 1e-8 (1 + ||b||).
inline CheckResult check_reference_kkt(const ProblemInstance& inst, const ReferenceOptions& opts) {
  CheckResult c{"reference_kkt", false, ""};
  const double target = 1e-8 * (1.0 + inst.constraint.rhs().norm());
  try {
    double res;
    if (inst.optimum && inst.optimum->lambda_star.size() == inst.num_rows()) {
      res = kkt_residual(inst, inst.optimum->x_star, inst.optimum->lambda_star);
    } else {
      res = reference_solve(inst, opts).kkt_residual;
    }
    c.passed = res <= target;
    c.detail = detail::fmt("residual %.3g (target %.3g)", res, target);
  } catch (const Error& e) {
    c.detail = e.what();
  }
  return c;
}

inline CheckResult check_trace(const RunTrace& trace) {
  CheckResult c{"trace_validation", true, ""};
  const auto problems = validate_trace(trace);
  if (!problems.empty()) {
    c.passed = false;
    c.detail = problems.front();
  } else {
    c.detail = std::to_string(trace.rows.size()) + " rows";
  }
  return c;
}

/// Full invariant suite for one instance. Structural failures end the run
/// early since the later checks assume consistent shapes.
inline VerifyReport verify_instance(const ProblemInstance& inst, const VerifyOptions& opts = {}) {
  VerifyReport rep;
  try {
    inst.validate();
    rep.checks.push_back({"structure", true, "dim " + std::to_string(inst.dim()) + ", blocks " +
                                                 std::to_string(inst.num_blocks()) + ", rows " +
                                                 std::to_string(inst.num_rows())});
  } catch (const Error& e) {
    rep.checks.push_back({"structure", false, e.what()});
    return rep;
  }
  Rng rng(opts.seed);
  rep.checks.push_back(check_spectral_bound(inst));
  rep.checks.push_back(check_lipschitz_probes(inst, rng, opts.max_probe_blocks));
  rep.checks.push_back(check_gradient_fd(inst, rng, opts.max_probe_blocks));
  rep.checks.push_back(check_prox_certificates(inst, rng, opts.prox_queries));
  rep.checks.push_back(check_residual_recursion(inst, opts.seed, opts.steps));
  if (opts.reference) rep.checks.push_back(check_reference_kkt(inst, opts.reference_options));
  return rep;
}

}  // namespace pdbcu
