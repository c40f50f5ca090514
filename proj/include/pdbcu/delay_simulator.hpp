#pragma once

#include <pdbcu/solver_core.hpp>

#include <cstdint>
#include <vector>

namespace pdbcu {

/// The tau+1 most recent iterates x^{k-tau}, ..., x^k. Slots that would hold
/// an iterate with negative index hold x^0.
class IterateRing {
 public:
  IterateRing(int tau, const Vector& x0)
      : slots_(static_cast<std::size_t>(tau) + 1, x0), head_(0) {
    if (tau < 0) throw ParameterError("ring: tau must be nonnegative");
  }

  int tau() const { return static_cast<int>(slots_.size()) - 1; }

  void push(const Vector& x) {
    head_ = (head_ + 1) % slots_.size();
    slots_[head_] = x;
  }

  /// Iterate `delay` steps back from the newest (0 = newest).
  const Vector& back(int delay) const {
    const std::size_t n = slots_.size();
    return slots_[(head_ + n - static_cast<std::size_t>(delay)) % n];
  }

 private:
  std::vector<Vector> slots_;
  std::size_t head_;
};

struct DelaySimResult {
  SaddleState state;
  RunTrace trace;
  std::vector<std::int64_t> delay_histogram;  // counts for delays 0..tau
};

/// Serial loop whose block gradient is evaluated at an iterate drawn uniformly
/// from the last tau+1 iterates. Block choice uses the same stream as the
/// serial solver; delay draws use a separate split stream, so the block
/// sequence does not depend on tau.
inline DelaySimResult run_simulated_delay(const ProblemInstance& inst, const RunConfig& cfg, int tau) {
  if (tau < 0) throw ParameterError("delay simulator: tau must be nonnegative");
  inst.validate();
  cfg.validate(inst);
  DelaySimResult out{SaddleState::initial(inst, cfg.initial_point(inst), cfg.record_history), {},
                     std::vector<std::int64_t>(static_cast<std::size_t>(tau) + 1, 0)};
  detail::TraceRecorder rec(inst, cfg, out.trace);
  rec.write_header("delay_sim", out.state);
  out.trace.set("tau", std::to_string(tau));
  if (cfg.max_epochs == 0) return out;

  Rng rng(cfg.seed);
  Rng delay_rng = rng.split(1);
  IterateRing ring(tau, out.state.x);
  detail::StepBuffers buf(inst);
  detail::Stopwatch clock;
  SaddleState& s = out.state;
  const std::int64_t m = inst.num_blocks();
  const auto mu = static_cast<std::uint64_t>(m);
  clock.start();
  for (std::int64_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::int64_t j = 0; j < m; ++j) {
      const Index i = static_cast<Index>(rng.uniform_index(mu));
      const int d = static_cast<int>(delay_rng.uniform_index(static_cast<std::uint64_t>(tau) + 1));
      ++out.delay_histogram[static_cast<std::size_t>(d)];
      const Index w = inst.partition[i].width;
      auto grad = buf.grad.head(w);
      inst.smooth.block_grad(tau == 0 ? s.x : ring.back(d), inst.partition[i], grad);
      detail::compute_block(inst, s, cfg.plan.beta, cfg.plan.eta[i], i, grad, buf);
      detail::commit_block(inst, cfg.plan.rho, s, i, buf.next.head(w), buf.delta);
      if (tau > 0) ring.push(s.x);
    }
    if (rec.wants(epoch)) {
      clock.stop();
      TraceRow extra;
      extra.tau = tau;
      const bool done = rec.record(s, epoch, clock.elapsed_ms(), extra);
      if (done) break;
      clock.start();
    }
  }
  clock.stop();
  return out;
}

}  // namespace pdbcu
