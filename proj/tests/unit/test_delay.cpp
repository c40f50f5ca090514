#include "oracles.hpp"

#include <pdbcu/delay_simulator.hpp>
#include <pdbcu/generators.hpp>
#include <pdbcu/serial_solver.hpp>

#include <gtest/gtest.h>

using namespace pdbcu;

namespace {

RunConfig config(const StepsizePlan& plan, std::int64_t epochs, std::uint64_t seed) {
  RunConfig cfg;
  cfg.plan = plan;
  cfg.max_epochs = epochs;
  cfg.seed = seed;
  return cfg;
}

Vector filled(double v) { return Vector::Constant(2, v); }

}  // namespace

TEST(IterateRing, MissingSlotsAliasInitialPoint) {
  IterateRing ring(3, filled(0));
  for (int d = 0; d <= 3; ++d) EXPECT_EQ(ring.back(d), filled(0));
  ring.push(filled(1));
  EXPECT_EQ(ring.back(0), filled(1));
  EXPECT_EQ(ring.back(1), filled(0));
  EXPECT_EQ(ring.back(3), filled(0));
}

TEST(IterateRing, HoldsLastTauPlusOneIterates) {
  IterateRing ring(3, filled(0));
  for (int k = 1; k <= 10; ++k) ring.push(filled(k));
  for (int d = 0; d <= 3; ++d) EXPECT_EQ(ring.back(d), filled(10 - d));
  EXPECT_EQ(ring.tau(), 3);
}

TEST(IterateRing, NegativeTauRejected) { EXPECT_THROW(IterateRing(-1, filled(0)), ParameterError); }

TEST(DelaySim, ZeroDelayIsBitwiseSerial) {
  for (const auto& inst : {oracle::random_ncqp(1, 20, 4, 5), gen_ncqp({10, 60, 0, 2})}) {
    const auto cfg = config(serial_plan(inst, 1.0), 30, 5);
    const auto d = run_simulated_delay(inst, cfg, 0);
    const auto s = run(inst, cfg);
    EXPECT_EQ(d.state.x, s.state.x);
    EXPECT_EQ(d.state.lambda, s.state.lambda);
    EXPECT_TRUE(same_trajectory(d.trace, s.trace));
  }
}

TEST(DelaySim, ZeroSmoothIsDelayInvariant) {
  const auto inst = gen_basis_pursuit({20, 80, 4, 8, 1});
  const auto cfg = config(serial_plan(inst, 1.0), 30, 5);
  const auto ref = run(inst, cfg);
  for (int tau : {1, 5, 40}) {
    const auto d = run_simulated_delay(inst, cfg, tau);
    EXPECT_EQ(d.state.x, ref.state.x) << "tau " << tau;
    EXPECT_TRUE(same_trajectory(d.trace, ref.trace));
  }
}

TEST(DelaySim, DelayDrawsAreUniform) {
  const auto inst = gen_ncqp({10, 60, 0, 2});
  const int tau = 5;
  const auto d = run_simulated_delay(inst, config(async_plan(inst, 1.0, tau), 200, 3), tau);
  ASSERT_EQ(d.delay_histogram.size(), 6u);
  double n = 0;
  for (auto c : d.delay_histogram) n += static_cast<double>(c);
  EXPECT_EQ(n, 200.0 * 60.0);
  const double expect = n / 6.0;
  double chi2 = 0;
  for (auto c : d.delay_histogram) chi2 += (static_cast<double>(c) - expect) * (static_cast<double>(c) - expect) / expect;
  EXPECT_LT(chi2, 15.086);  // chi-square, 5 dof, 1% level
}

// Delayed gradient oracle: replay the block and delay streams by hand.
TEST(DelaySim, GradientIsTakenAtAStoredIterate) {
  const auto inst = oracle::random_ncqp(3, 10, 3, 5);
  const int tau = 3;
  auto cfg = config(async_plan(inst, 1.0, tau), 4, 11);
  cfg.record_history = true;
  const auto d = run_simulated_delay(inst, cfg, tau);
  const auto& h = d.state.history;
  ASSERT_EQ(h.size(), 21u);

  Rng rng(11);
  Rng delay_rng = rng.split(1);
  const Matrix A = inst.constraint.to_dense();
  const Vector& b = inst.constraint.rhs();
  Vector lam = Vector::Zero(3);
  for (std::size_t k = 0; k + 1 < h.size(); ++k) {
    const Index i = static_cast<Index>(rng.uniform_index(5));
    const int delay = static_cast<int>(delay_rng.uniform_index(tau + 1));
    const Vector& stale = h[k >= static_cast<std::size_t>(delay) ? k - static_cast<std::size_t>(delay) : 0];
    const BlockRange& br = inst.partition[i];
    const Vector g = block_grad_at(inst, stale, i);
    const Vector r = A * h[k] - b;
    const Vector anchor =
        h[k].segment(br.start, br.width) -
        (g - A.middleCols(br.start, br.width).transpose() * (lam - cfg.plan.beta * r)) / cfg.plan.eta[i];
    Vector expect = h[k];
    expect.segment(br.start, br.width) = anchor.cwiseMax(0.0);
    ASSERT_LE((h[k + 1] - expect).norm(), 1e-10 * (1 + expect.norm())) << "step " << k;
    lam -= cfg.plan.rho * (A * h[k + 1] - b);
  }
}

TEST(DelaySim, RowsCarryTau) {
  const auto inst = gen_ncqp({10, 60, 0, 2});
  const auto d = run_simulated_delay(inst, config(async_plan(inst, 1.0, 7), 5, 3), 7);
  ASSERT_EQ(d.trace.rows.size(), 5u);
  for (const auto& r : d.trace.rows) EXPECT_EQ(r.tau, 7);
  EXPECT_EQ(d.trace.get("tau"), "7");
  std::stringstream ss;
  write_trace_csv(ss, d.trace);
  EXPECT_EQ(read_trace_csv(ss).rows.back().tau, 7);
}

TEST(DelaySim, BlockSequenceIndependentOfTau) {
  const auto inst = oracle::random_ncqp(3, 10, 3, 5);
  std::vector<std::vector<Index>> seqs;
  for (int tau : {0, 2, 9}) {
    auto cfg = config(async_plan(inst, 1.0, tau), 3, 4);
    cfg.record_history = true;
    const auto d = run_simulated_delay(inst, cfg, tau);
    std::vector<Index> seq;
    for (std::size_t k = 0; k + 1 < d.state.history.size(); ++k) {
      const Vector diff = d.state.history[k + 1] - d.state.history[k];
      Index which = -1;
      for (Index i = 0; i < 5; ++i)
        if (inst.partition.segment(diff, i).squaredNorm() > 0) which = i;
      seq.push_back(which);
    }
    seqs.push_back(seq);
  }
  // Unchanged blocks show as -1; compare positions where both moved.
  for (std::size_t k = 0; k < seqs[0].size(); ++k)
    for (std::size_t t = 1; t < seqs.size(); ++t)
      if (seqs[0][k] >= 0 && seqs[t][k] >= 0) EXPECT_EQ(seqs[0][k], seqs[t][k]);
}

TEST(DelaySim, NegativeTauRejected) {
  const auto inst = oracle::random_ncqp(3, 10, 3, 5);
  EXPECT_THROW(run_simulated_delay(inst, config(serial_plan(inst, 1.0), 1, 0), -2), ParameterError);
}
