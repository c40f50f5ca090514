#pragma once

#include <pdbcu/solver_core.hpp>

#include <cmath>
#include <utility>
#include <vector>

namespace pdbcu {

/// One randomized primal-dual block update: pick i uniformly, linearize f at
/// x^k, solve the prox subproblem for block i, then update r and lambda.
inline void step(const ProblemInstance& inst, SaddleState& s, const StepsizePlan& plan, Rng& rng,
                 detail::StepBuffers& buf) {
  const Index i = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(inst.num_blocks())));
  const Index w = inst.partition[i].width;
  auto grad = buf.grad.head(w);
  inst.smooth.block_grad(s.x, inst.partition[i], grad);
  detail::compute_block(inst, s, plan.beta, plan.eta[i], i, grad, buf);
  detail::commit_block(inst, plan.rho, s, i, buf.next.head(w), buf.delta);
}

inline void step(const ProblemInstance& inst, SaddleState& s, const StepsizePlan& plan, Rng& rng) {
  detail::StepBuffers buf(inst);
  step(inst, s, plan, rng, buf);
}

struct RunResult {
  SaddleState state;
  RunTrace trace;
};

/// Runs max_epochs * m updates (one epoch = m block updates), tracing after
/// each traced epoch and stopping early when the configured tolerances hold.
inline RunResult run(const ProblemInstance& inst, const RunConfig& cfg) {
  inst.validate();
  cfg.validate(inst);
  RunResult out{SaddleState::initial(inst, cfg.initial_point(inst), cfg.record_history), {}};
  detail::TraceRecorder rec(inst, cfg, out.trace);
  rec.write_header("serial", out.state);
  if (cfg.max_epochs == 0) return out;

  Rng rng(cfg.seed);
  detail::StepBuffers buf(inst);
  detail::Stopwatch clock;
  const std::int64_t m = inst.num_blocks();
  clock.start();
  for (std::int64_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::int64_t j = 0; j < m; ++j) step(inst, out.state, cfg.plan, rng, buf);
    if (rec.wants(epoch)) {
      clock.stop();
      const bool done = rec.record(out.state, epoch, clock.elapsed_ms());
      if (done) break;
      clock.start();
    }
  }
  clock.stop();
  return out;
}

/// Empirical (eps, sigma)-solution test over independent runs: the fraction
/// of runs whose averaged point has |F - F*| >= eps must be <= sigma, and
/// likewise for ||A xbar - b||. Uses the last row of each trace.
inline bool check_eps_sigma(const std::vector<RunTrace>& traces, double eps, double sigma) {
  if (traces.size() < 20)
    throw ParameterError("check_eps_sigma: at least 20 independent traces are required");
  if (!(eps > 0.0) || sigma < 0.0) throw ParameterError("check_eps_sigma: bad eps/sigma");
  std::size_t obj_bad = 0;
  std::size_t feas_bad = 0;
  for (const auto& t : traces) {
    const TraceRow& r = t.last();
    if (std::isnan(r.erg_obj_err))
      throw UnsupportedError("check_eps_sigma: trace lacks an optimum reference");
    if (std::isnan(r.erg_feas)) throw UnsupportedError("check_eps_sigma: trace lacks ergodic data");
    if (r.erg_obj_err >= eps) ++obj_bad;
    if (r.erg_feas >= eps) ++feas_bad;
  }
  const double n = static_cast<double>(traces.size());
  return static_cast<double>(obj_bad) / n <= sigma && static_cast<double>(feas_bad) / n <= sigma;
}

/// Iteration count K for which the averaged point is an (eps, sigma)-solution:
///   K >= m * max((C0 + (1+||l*||)^2 / (2 m rho)) / (eps sigma) - 1,
///                (5 C0 + 13 ||l*||^2 / (2 m rho)) / (eps sigma) - 1).
inline double eps_sigma_iterations(double c0, double lambda_star_norm, Index m, double rho,
                                   double eps, double sigma) {
  const double md = static_cast<double>(m);
  const double es = eps * sigma;
  const double t1 = (c0 + (1.0 + lambda_star_norm) * (1.0 + lambda_star_norm) / (2.0 * md * rho)) / es - 1.0;
  const double t2 = (5.0 * c0 + 13.0 * lambda_star_norm * lambda_star_norm / (2.0 * md * rho)) / es - 1.0;
  return md * std::max({t1, t2, 0.0});
}

/// C0 = (1 - 1/m) [F(x0) - F(x)] + 1/2 ||x0 - x||_P^2 + (beta/2 - beta/m) ||r0||^2,
/// evaluated at the reference point x = x*.
inline double rate_constant_c0(const ProblemInstance& inst, const StepsizePlan& plan,
                               const Vector& x0, const Vector& x_star) {
  const double md = static_cast<double>(inst.num_blocks());
  const double f0 = objective(inst, x0);
  const double fs = objective(inst, x_star);
  double p_norm = 0.0;
  for (Index i = 0; i < inst.num_blocks(); ++i)
    p_norm += plan.eta[i] * (inst.partition.segment(x0, i) - inst.partition.segment(x_star, i)).squaredNorm();
  const double r0 = residual(inst, x0).squaredNorm();
  return (1.0 - 1.0 / md) * (f0 - fs) + 0.5 * p_norm + (plan.beta / 2.0 - plan.beta / md) * r0;
}

}  // namespace pdbcu
