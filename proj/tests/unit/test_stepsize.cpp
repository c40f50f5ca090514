#include "oracles.hpp"

#include <pdbcu/generators.hpp>
#include <pdbcu/stepsize.hpp>

#include <gtest/gtest.h>

using namespace pdbcu;

namespace {

class LogisticLike final : public SmoothFunction {
 public:
  Index dim() const override { return 3; }
  double value(const Vector& x) const override { return std::log1p(std::exp(x.sum())); }
  void block_gradient(const Vector& x, const BlockRange&, Eigen::Ref<Vector> out) const override {
    out.setConstant(1.0 / (1.0 + std::exp(-x.sum())));
  }
  std::string kind() const override { return "logistic"; }
};

ProblemInstance diag_instance(const Vector& l, const Matrix& a) {
  const Index n = l.size();
  return oracle::make_instance(l.asDiagonal().toDenseMatrix(), Vector::Zero(n), a, Vector::Zero(a.rows()),
                               BlockPartition::coordinates(n), std::vector<ProxTerm>(n, ProxTerm::zero()));
}

const ProblemInstance& ncqp_small() {
  static const ProblemInstance inst = gen_ncqp({20, 200, 0, 5});
  return inst;
}

}  // namespace

TEST(SerialPlan, BasisPursuitWeightsAreScaledBlockNorms) {
  const auto inst = gen_basis_pursuit({30, 100, 5, 100, 2});
  for (double beta : {1.0, 10.0}) {
    const auto p = serial_plan(inst, beta);
    EXPECT_DOUBLE_EQ(p.rho, beta / 100.0);
    for (Index i = 0; i < 100; ++i) {
      const BlockRange& b = inst.partition[i];
      const Matrix ai = inst.constraint.to_dense().middleCols(b.start, b.width);
      EXPECT_NEAR(p.eta[i], beta * oracle::spectral_sq(ai), 1e-12 * p.eta[i]);
    }
  }
}

TEST(SerialPlan, NcqpCoordinateWeights) {
  const auto& inst = ncqp_small();
  const auto p = serial_plan(inst, std::sqrt(2.0));
  const Matrix a = inst.constraint.to_dense();
  Vector e = Vector::Zero(inst.dim());
  Vector col;
  for (Index i = 0; i < inst.dim(); ++i) {
    inst.smooth.function->hessian_columns_apply(inst.partition[i], Vector::Ones(1), col);
    const double qii = col[i];
    EXPECT_NEAR(p.eta[i], qii + std::sqrt(2.0) * a.col(i).squaredNorm(), 1e-12 * p.eta[i]);
  }
}

TEST(SerialPlan, DirectEvaluation) {
  Matrix a(1, 1);
  a(0, 0) = 0.5;
  const auto inst = diag_instance(Vector::Constant(1, 2.0), a);
  EXPECT_DOUBLE_EQ(serial_plan(inst, 10.0).eta[0], 4.5);
}

TEST(SerialPlan, RejectsNonpositiveBeta) {
  EXPECT_THROW(serial_plan(ncqp_small(), 0.0), ParameterError);
  EXPECT_THROW(serial_plan(ncqp_small(), -1.0), ParameterError);
}

TEST(AsyncPlan, ZeroDelayIsBitwiseSerial) {
  for (const ProblemInstance& inst : {ncqp_small(), gen_basis_pursuit({20, 60, 4, 6, 1})}) {
    const auto s = serial_plan(inst, 1.3);
    const auto a = async_plan(inst, 1.3, 0, 0.7);
    EXPECT_EQ(s.rho, a.rho);
    EXPECT_EQ(s.eta, a.eta);
    EXPECT_EQ(s.describe(), a.describe());
  }
}

TEST(AsyncPlan, DirectEvaluationUnitConstants) {
  const Index m = 2000;
  const auto inst = diag_instance(Vector::Ones(m), Matrix::Zero(1, m));
  ASSERT_DOUBLE_EQ(inst.smooth.lipschitz_cross, 1.0);
  const auto p = async_plan(inst, 1.0, 10, 1.0);
  for (Index i = 0; i < m; ++i) EXPECT_NEAR(p.eta[i], 2.155, 1e-12);
  EXPECT_DOUBLE_EQ(p.rho, 1.0 / m);
}

TEST(AsyncPlan, WeightsIncreaseWithDelay) {
  const auto inst = gen_ncqp({200, 2000, 0, 0});
  Vector prev = serial_plan(inst, std::sqrt(2.0)).eta;
  for (int tau : {5, 10, 20, 40}) {
    const Vector eta = async_plan(inst, std::sqrt(2.0), tau, 1.0).eta;
    EXPECT_TRUE(((eta - prev).array() > 0.0).all()) << "tau " << tau;
    prev = eta;
  }
}

TEST(AsyncPlan, BalancedAlphaMinimizesWeights) {
  const auto& inst = ncqp_small();
  const double lc = inst.smooth.lipschitz_blocks.maxCoeff(), lr = inst.smooth.lipschitz_cross;
  const double m = static_cast<double>(inst.num_blocks());
  const int tau = 7;
  const double alpha_star = std::sqrt((lr / lc) * lr * tau * tau / (m * lc));
  const Vector best = async_plan(inst, 1.0, tau, alpha_star).eta;
  for (double f : {0.5, 2.0}) {
    const Vector other = async_plan(inst, 1.0, tau, f * alpha_star).eta;
    EXPECT_TRUE(((best - other).array() <= 1e-12).all());
  }
}

TEST(AsyncPlan, ZeroSmoothUsesDegenerateRule) {
  const auto inst = gen_basis_pursuit({20, 60, 4, 6, 1});
  const auto s = serial_plan(inst, 2.0);
  const auto a = async_plan(inst, 2.0, 10);
  for (Index i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(a.eta[i], s.eta[i]);
  EXPECT_EQ(a.tau, 10);
}

TEST(AsyncPlan, RejectsBadArguments) {
  EXPECT_THROW(async_plan(ncqp_small(), 1.0, 3, 0.0), ParameterError);
  EXPECT_THROW(async_plan(ncqp_small(), 1.0, -1), ParameterError);
}

TEST(AsyncPlan, SerialOverrideIsFlagged) {
  const auto p = async_plan_serial_weights(ncqp_small(), 1.0, 5);
  EXPECT_TRUE(p.serial_weights_override);
  EXPECT_EQ(p.eta, serial_plan(ncqp_small(), 1.0).eta);
  EXPECT_NE(p.describe().find("serial_weights=1"), std::string::npos);
}

TEST(Plans, DominateSerialWeightsAndRespectRhoBound) {
  const auto& inst = ncqp_small();
  const double beta = 0.9;
  const Vector base = serial_plan(inst, beta).eta;
  for (int tau : {0, 1, 5, 40}) {
    for (double alpha : {0.3, 1.0, 4.0}) {
      const auto p = async_plan(inst, beta, tau, alpha);
      EXPECT_LE(p.rho * inst.num_blocks(), p.beta * (1 + 1e-15));
      EXPECT_NO_THROW(p.validate(inst.num_blocks()));
      EXPECT_TRUE(((p.eta - base).array() >= 0.0).all());
    }
  }
}

TEST(Plans, RhoAboveBoundRejected) {
  const auto p = serial_plan(ncqp_small(), 2.0);
  EXPECT_NO_THROW(with_rho(p, 0.5 * p.rho));
  EXPECT_THROW(with_rho(p, 1.01 * p.rho), ParameterError);
}

TEST(SyncPlan, SingletonGroupIsSerialWeight) {
  const auto& inst = ncqp_small();
  const auto s = serial_plan(inst, 1.0);
  for (Index i : {0, 17, 199}) EXPECT_DOUBLE_EQ(sync_parallel_plan(inst, 1.0, {i})[0], s.eta[i]);
}

TEST(SyncPlan, TwoTermSum) {
  Vector l(2);
  l << 2.0, 3.0;
  const auto inst = diag_instance(l, Matrix::Zero(1, 2));
  const Vector w = sync_parallel_plan(inst, 1.0, {0, 1});
  EXPECT_DOUBLE_EQ(w[0], 5.0);
  EXPECT_DOUBLE_EQ(w[1], 5.0);
}

TEST(SyncPlan, SvmGroupOfFourDominatesFourTimesMinimum) {
  const auto inst = gen_dual_svm(gen_synthetic_svm_data({400, 50, 0.2, 3}), {});
  const auto s = serial_plan(inst, 0.1);
  const double min_single = s.eta.minCoeff();
  const std::vector<Index> group{0, 2, 5, 7};
  const Vector w = sync_parallel_plan(inst, 0.1, group);
  double sum = 0.0;
  for (Index j : group) sum += s.eta[j];
  for (Index k = 0; k < 4; ++k) {
    EXPECT_DOUBLE_EQ(w[k], sum);
    EXPECT_GE(w[k], 4.0 * min_single);
  }
}

TEST(SyncPlan, EmptyGroupRejected) {
  EXPECT_THROW(sync_parallel_plan(ncqp_small(), 1.0, {}), ParameterError);
}

TEST(Lipschitz, ZeroSmoothGivesZeros) {
  const auto inst = gen_basis_pursuit({10, 30, 3, 5, 0});
  const auto lc = estimate_lipschitz(inst);
  EXPECT_EQ(lc.blocks, Vector::Zero(5));
  EXPECT_EQ(lc.cross, 0.0);
}

TEST(Lipschitz, IdentityCoordinates) {
  const auto inst = diag_instance(Vector::Ones(6), Matrix::Zero(1, 6));
  const auto lc = estimate_lipschitz(inst);
  EXPECT_EQ(lc.blocks, Vector::Ones(6));
  EXPECT_EQ(lc.cross, 1.0);
}

TEST(Lipschitz, MatchesDenseOracle) {
  std::mt19937_64 g(12);
  for (int rep = 0; rep < 5; ++rep) {
    const Matrix q = oracle::random_psd(g, 12);
    const auto part = BlockPartition::even(12, 3);
    const auto inst = oracle::make_instance(q, Vector::Zero(12), Matrix::Zero(1, 12), Vector::Zero(1), part,
                                            std::vector<ProxTerm>(3, ProxTerm::zero()));
    double lr = 0.0;
    for (Index i = 0; i < 3; ++i) {
      const Matrix qii = q.block(4 * i, 4 * i, 4, 4);
      EXPECT_NEAR(inst.smooth.lipschitz_blocks[i], oracle::lambda_max(qii), 1e-6 * oracle::lambda_max(qii));
      lr = std::max(lr, std::sqrt(oracle::spectral_sq(q.middleCols(4 * i, 4))));
    }
    EXPECT_NEAR(inst.smooth.lipschitz_cross, lr, 1e-6 * lr);
  }
}

TEST(Lipschitz, PowerIterationPathIsAnUpperBoundWithinOnePercent) {
  std::mt19937_64 g(8);
  const Index w = 300;
  const Matrix q = oracle::random_psd(g, 2 * w);
  const auto inst = oracle::make_instance(q, Vector::Zero(2 * w), Matrix::Zero(1, 2 * w), Vector::Zero(1),
                                          BlockPartition::even(2 * w, 2), std::vector<ProxTerm>(2, ProxTerm::zero()));
  double lr = 0.0;
  for (Index i = 0; i < 2; ++i) {
    const double exact = oracle::lambda_max(q.block(i * w, i * w, w, w));
    EXPECT_GE(inst.smooth.lipschitz_blocks[i], exact * (1 - 1e-9));
    EXPECT_LE(inst.smooth.lipschitz_blocks[i], exact * 1.01);
    lr = std::max(lr, std::sqrt(oracle::spectral_sq(q.middleCols(i * w, w))));
  }
  EXPECT_GE(inst.smooth.lipschitz_cross, lr * (1 - 1e-9));
  EXPECT_LE(inst.smooth.lipschitz_cross, lr * 1.01);
}

TEST(Lipschitz, NonQuadraticOracleUnsupported) {
  LogisticLike f;
  EXPECT_THROW(estimate_lipschitz(f, BlockPartition::single(3)), UnsupportedError);
}
