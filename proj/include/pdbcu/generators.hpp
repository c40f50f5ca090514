#pragma once

#include <pdbcu/libsvm.hpp>
#include <pdbcu/problem.hpp>
#include <pdbcu/rng.hpp>
#include <pdbcu/stepsize.hpp>

#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

namespace pdbcu {

namespace detail {
inline std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Gaussian matrix filled row by row.
inline Matrix gaussian_matrix(Rng& rng, Index rows, Index cols) {
  Matrix a(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) a(r, c) = rng.normal();
  return a;
}

// `k` distinct indices from [0, n) by partial Fisher-Yates, in draw order.
inline std::vector<Index> sample_without_replacement(Rng& rng, Index n, Index k) {
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index j = 0; j < k; ++j) {
    const Index pick = j + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n - j)));
    std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}
}  // namespace detail

struct BasisPursuitSpec {
  Index rows = 300;     // q
  Index cols = 1000;    // n
  Index nnz = 30;
  Index blocks = 100;
  std::uint64_t seed = 0;
};

struct BasisPursuitInstance {
  ProblemInstance instance;
  Vector planted;  // x^o with b = A x^o
};

/// min ||x||_1 s.t. A x = b: Gaussian A with unit Euclidean row norms,
/// planted x^o with `nnz` standard Gaussian entries at uniform positions.
inline BasisPursuitInstance gen_basis_pursuit_with_signal(const BasisPursuitSpec& spec) {
  if (spec.rows <= 0 || spec.cols <= 0) throw ParameterError("basis pursuit: dimensions must be positive");
  if (spec.nnz < 0 || spec.nnz > spec.cols) throw ParameterError("basis pursuit: need 0 <= nnz <= n");
  Rng rng(spec.seed);
  Matrix a = detail::gaussian_matrix(rng, spec.rows, spec.cols);
  for (Index r = 0; r < spec.rows; ++r) {
    const double nrm = a.row(r).norm();
    if (nrm > 0.0) a.row(r) /= nrm;
  }
  Vector planted = Vector::Zero(spec.cols);
  for (Index pos : detail::sample_without_replacement(rng, spec.cols, spec.nnz)) planted[pos] = rng.normal();

  BasisPursuitInstance out;
  ProblemInstance& inst = out.instance;
  inst.partition = BlockPartition::even(spec.cols, spec.blocks);
  // b is formed with the same block accumulation residual() uses, so that
  // residual(planted) is exactly zero.
  ConstraintBlocks tmp = ConstraintBlocks::from_dense(a, inst.partition, Vector::Zero(spec.rows), 0.0);
  Vector b = tmp.apply(planted, inst.partition);
  inst.constraint = ConstraintBlocks::from_dense(a, inst.partition, std::move(b), 0.0);
  inst.smooth.function = std::make_shared<ZeroSmooth>(spec.cols);
  inst.prox_terms.assign(static_cast<std::size_t>(spec.blocks), ProxTerm::l1(1.0));
  attach_lipschitz(inst);
  inst.metadata = {{"family", "basis_pursuit"},
                   {"q", std::to_string(spec.rows)},
                   {"n", std::to_string(spec.cols)},
                   {"nnz", std::to_string(spec.nnz)},
                   {"blocks", std::to_string(spec.blocks)},
                   {"seed", std::to_string(spec.seed)},
                   {"row_normalization", "euclidean"}};
  inst.validate();
  out.planted = std::move(planted);
  return out;
}

inline ProblemInstance gen_basis_pursuit(const BasisPursuitSpec& spec) {
  return gen_basis_pursuit_with_signal(spec).instance;
}

struct NcqpSpec {
  Index rows = 200;    // q, rows of B
  Index cols = 2000;   // n
  Index blocks = 0;    // 0 = one coordinate per block
  std::uint64_t seed = 0;
};

/// min 1/2 x^T Q x + c^T x s.t. [B, I] x = b, x >= 0, with Q = H H^T,
/// H, B, c standard Gaussian and b uniform on [0, 1]; x = (0, b) is feasible.
inline ProblemInstance gen_ncqp(const NcqpSpec& spec) {
  if (spec.rows <= 0 || spec.cols <= spec.rows) throw ParameterError("ncqp: need n > q > 0");
  Rng rng(spec.seed);
  const Index n = spec.cols;
  const Index q = spec.rows;
  const Matrix h = detail::gaussian_matrix(rng, n, n);
  Matrix qm = h * h.transpose();
  qm = 0.5 * (qm + qm.transpose());
  Vector c(n);
  for (Index j = 0; j < n; ++j) c[j] = rng.normal();
  Matrix a = Matrix::Zero(q, n);
  a.leftCols(n - q) = detail::gaussian_matrix(rng, q, n - q);
  a.rightCols(q).setIdentity();
  Vector b(q);
  for (Index r = 0; r < q; ++r) b[r] = rng.uniform01();

  ProblemInstance inst;
  const Index m = spec.blocks ? spec.blocks : n;
  inst.partition = BlockPartition::even(n, m);
  inst.constraint = ConstraintBlocks::from_dense(a, inst.partition, std::move(b));
  inst.smooth.function = std::make_shared<DenseQuadratic>(std::move(qm), std::move(c));
  inst.prox_terms.assign(static_cast<std::size_t>(m), ProxTerm::nonneg());
  attach_lipschitz(inst);
  inst.metadata = {{"family", "ncqp"},
                   {"q", std::to_string(q)},
                   {"n", std::to_string(n)},
                   {"blocks", std::to_string(m)},
                   {"seed", std::to_string(spec.seed)}};
  inst.validate();
  return inst;
}

struct DualSvmSpec {
  double c = 10.0;
  Index block_width = 50;
};

/// min 1/2 t^T D Z Z^T D t - e^T t  s.t. y^T t = 0, 0 <= t <= C.
inline ProblemInstance gen_dual_svm(const LabeledDataset& data, const DualSvmSpec& spec) {
  const Index n = data.num_samples();
  if (n == 0) throw IngestionError("dual svm: empty dataset");
  for (Index j = 0; j < n; ++j)
    if (data.labels[j] != 1.0 && data.labels[j] != -1.0)
      throw IngestionError("dual svm: label of sample " + std::to_string(j + 1) +
                           " is not +1 or -1");
  if (!(spec.c > 0.0)) throw ParameterError("dual svm: C must be positive");
  ProblemInstance inst;
  inst.partition = BlockPartition::fixed_width(n, spec.block_width);
  Matrix a = data.labels.transpose();
  inst.constraint = ConstraintBlocks::from_dense(a, inst.partition, Vector::Zero(1), 0.0);
  inst.smooth.function = std::make_shared<GramQuadratic>(data.features, data.labels);
  inst.prox_terms.assign(static_cast<std::size_t>(inst.partition.num_blocks()),
                         ProxTerm::box(0.0, spec.c));
  attach_lipschitz(inst);
  inst.metadata = {{"family", "dual_svm"},
                   {"samples", std::to_string(n)},
                   {"features", std::to_string(data.num_features())},
                   {"C", detail::num(spec.c)},
                   {"block_width", std::to_string(spec.block_width)}};
  inst.validate();
  return inst;
}

struct SyntheticSvmSpec {
  Index samples = 2000;
  Index features = 100;
  double density = 0.1;
  std::uint64_t seed = 0;
};

/// Two-class sparse data: each feature present with probability `density`,
/// Gaussian values shifted by the label on the first tenth of the features,
/// rows scaled to unit norm (as in the usual LIBSVM text-classification sets).
inline LabeledDataset gen_synthetic_svm_data(const SyntheticSvmSpec& spec) {
  if (spec.samples <= 0 || spec.features <= 0 || !(spec.density > 0.0) || spec.density > 1.0)
    throw ParameterError("synthetic svm: bad dimensions or density");
  Rng rng(spec.seed);
  const Index informative = std::max<Index>(1, spec.features / 10);
  std::vector<Eigen::Triplet<double>> trips;
  Vector labels(spec.samples);
  for (Index r = 0; r < spec.samples; ++r) {
    const double y = rng.uniform01() < 0.5 ? 1.0 : -1.0;
    labels[r] = y;
    std::vector<Eigen::Triplet<double>> row;
    double sq = 0.0;
    for (Index c = 0; c < spec.features; ++c) {
      if (rng.uniform01() >= spec.density) continue;
      const double v = rng.normal() + (c < informative ? 1.5 * y : 0.0);
      row.emplace_back(r, c, v);
      sq += v * v;
    }
    if (row.empty()) {
      const double v = 1.0 + (0 < informative ? 1.5 * y : 0.0);
      row.emplace_back(r, 0, v);
      sq = v * v;
    }
    const double scale = 1.0 / std::sqrt(sq);
    for (const auto& t : row) trips.emplace_back(t.row(), t.col(), t.value() * scale);
  }
  LabeledDataset ds;
  ds.labels = std::move(labels);
  ds.features.resize(spec.samples, spec.features);
  ds.features.setFromTriplets(trips.begin(), trips.end());
  ds.features.makeCompressed();
  return ds;
}

}  // namespace pdbcu
