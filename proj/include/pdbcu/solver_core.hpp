#pragma once

#include <pdbcu/problem.hpp>
#include <pdbcu/rng.hpp>
#include <pdbcu/state.hpp>
#include <pdbcu/stepsize.hpp>
#include <pdbcu/subproblem.hpp>
#include <pdbcu/trace.hpp>
#include <pdbcu/types.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>

namespace pdbcu {

struct RunConfig {
  StepsizePlan plan;
  std::int64_t max_epochs = 1;
  std::uint64_t seed = 0;
  std::int64_t trace_every = 1;
  // Early stop once ||r|| <= stop_feas and (when an optimum is known)
  // |F(x) - F*| <= stop_obj, checked on traced epochs.
  std::optional<double> stop_feas;
  std::optional<double> stop_obj;
  std::optional<Vector> x0;  // zero when unset
  bool track_ergodic = false;
  bool record_history = false;

  void validate(const ProblemInstance& inst) const {
    if (max_epochs < 0) throw ParameterError("config: max_epochs must be nonnegative");
    if (trace_every < 1) throw ParameterError("config: trace_every must be >= 1");
    plan.validate(inst.num_blocks());
    if (x0) check_dim(inst, *x0);
  }

  Vector initial_point(const ProblemInstance& inst) const {
    return x0 ? *x0 : Vector::Zero(inst.dim());
  }
};

namespace detail {

/// Buffers shared by every run mode so that they execute identical
/// floating-point operations for identical inputs.
struct StepBuffers {
  BlockWorkspace ws;
  Vector grad;
  Vector next;
  Vector delta;

  explicit StepBuffers(const ProblemInstance& inst)
      : ws(BlockWorkspace::for_instance(inst)),
        grad(ws.lin.size()),
        next(ws.lin.size()),
        delta(ws.lin.size()) {}
};

/// New value of block i from gradient `grad`, written to buf.next.
template <class Grad>
void compute_block(const ProblemInstance& inst, const SaddleState& s, double beta, double eta,
                   Index i, const Grad& grad, StepBuffers& buf) {
  const Index w = inst.partition[i].width;
  solve_block_subproblem(inst, s.x, s.r, s.lambda, i, grad, beta, eta, buf.ws, buf.next.head(w));
}

/// Apply x_i <- new_block, r += A_i (x_i^{k+1} - x_i^k), lambda -= rho r, k += 1.
template <class Block>
void commit_block(const ProblemInstance& inst, double rho, SaddleState& s, Index i,
                  const Block& new_block, Vector& delta_buf) {
  const BlockRange& b = inst.partition[i];
  auto xi = s.x.segment(b.start, b.width);
  auto delta = delta_buf.head(b.width);
  delta = new_block - xi;
  inst.constraint.add_block_product(i, delta, s.r);
  s.ergodic.on_block_update(inst.partition, i, xi, s.k + 1);
  xi.array() = new_block.array();
  s.lambda -= rho * s.r;
  ++s.k;
  if (s.record_history) s.history.push_back(s.x);
}

inline double objective_error(const ProblemInstance& inst, const Vector& x) {
  const double f = objective(inst, x);
  if (f == kInfinity) throw StateError("iterate left the domain of g");
  if (!inst.optimum) return kMissing;
  return std::abs(f - inst.optimum->f_star);
}

/// Projection onto dom(g); only used for the averaged point, where the
/// convex combination can cross a box bound by one rounding error.
inline Vector project_to_domain(const ProblemInstance& inst, Vector x) {
  for (Index i = 0; i < inst.num_blocks(); ++i) {
    const ProxTerm& t = inst.prox_terms[static_cast<std::size_t>(i)];
    for (Index j = inst.partition[i].start; j < inst.partition[i].end(); ++j)
      x[j] = t.project_scalar(x[j]);
  }
  return x;
}

class Stopwatch {
 public:
  void start() { t0_ = clock::now(); running_ = true; }
  void stop() {
    if (running_) elapsed_ += std::chrono::duration<double, std::milli>(clock::now() - t0_).count();
    running_ = false;
  }
  double elapsed_ms() const {
    return running_ ? elapsed_ + std::chrono::duration<double, std::milli>(clock::now() - t0_).count()
                    : elapsed_;
  }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point t0_{};
  double elapsed_ = 0.0;
  bool running_ = false;
};

/// Writes per-epoch rows and decides early stopping. The snapshot for
/// epoch e is taken after the e*m-th update.
class TraceRecorder {
 public:
  TraceRecorder(const ProblemInstance& inst, const RunConfig& cfg, RunTrace& trace)
      : inst_(inst), cfg_(cfg), trace_(trace) {}

  void write_header(const std::string& mode, const SaddleState& s) {
    std::ostringstream seed;
    seed << cfg_.seed;
    trace_.set("mode", mode);
    trace_.set("seed", seed.str());
    trace_.set("plan", cfg_.plan.describe());
    trace_.set("max_epochs", std::to_string(cfg_.max_epochs));
    trace_.set("trace_every", std::to_string(cfg_.trace_every));
    trace_.set("blocks", std::to_string(inst_.num_blocks()));
    trace_.set("dim", std::to_string(inst_.dim()));
    trace_.set("rows", std::to_string(inst_.num_rows()));
    for (const auto& [k, v] : inst_.metadata) trace_.set("instance." + k, v);
    trace_.initial_feas = s.r.norm();
  }

  std::int64_t epoch_of(const SaddleState& s) const { return s.k / inst_.num_blocks(); }

  /// True when epoch `e` should produce a row.
  bool wants(std::int64_t e) const {
    return e >= 1 && (e % cfg_.trace_every == 0 || e == cfg_.max_epochs);
  }

  /// Returns true if the stop rule is satisfied.
  bool record(const SaddleState& s, std::int64_t epoch, double wall_ms, TraceRow row = {}) {
    row.epoch = epoch;
    row.wall_ms = wall_ms;
    row.feas = s.r.norm();
    row.obj_err = objective_error(inst_, s.x);
    if (cfg_.track_ergodic && s.k >= 1) {
      const Vector xbar = project_to_domain(inst_, ergodic_average(inst_, s, inst_.num_blocks()));
      row.erg_feas = residual(inst_, xbar).norm();
      row.erg_obj_err = objective_error(inst_, xbar);
    }
    trace_.rows.push_back(row);
    if (!cfg_.stop_feas && !cfg_.stop_obj) return false;
    bool ok = true;
    if (cfg_.stop_feas) ok = ok && row.feas <= *cfg_.stop_feas;
    if (cfg_.stop_obj && !std::isnan(row.obj_err)) ok = ok && row.obj_err <= *cfg_.stop_obj;
    return ok;
  }

 private:
  const ProblemInstance& inst_;
  const RunConfig& cfg_;
  RunTrace& trace_;
};

}  // namespace detail
}  // namespace pdbcu
