#pragma once

#include <pdbcu/types.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>

namespace pdbcu::linalg {

struct PowerIterationOptions {
  int max_iters = 2000;
  double rel_tol = 1e-12;
};

/// Largest eigenvalue of a symmetric PSD operator of dimension `dim`,
/// given as `apply(in, out)` computing out = M * in. Returns the final
/// Rayleigh quotient, which never exceeds the true value.
template <class Apply>
double power_iteration(Index dim, Apply&& apply, PowerIterationOptions opts = {}) {
  if (dim == 0) return 0.0;
  // Deterministic, non-degenerate start: all-ones with a slow ramp.
  Vector v(dim);
  for (Index j = 0; j < dim; ++j) v[j] = 1.0 + 0.01 * static_cast<double>(j % 7);
  v.normalize();
  Vector w(dim);
  double estimate = 0.0;
  for (int it = 0; it < opts.max_iters; ++it) {
    apply(v, w);
    const double rq = v.dot(w);
    const double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    v = w / nrm;
    const bool converged = it > 0 && std::abs(rq - estimate) <= opts.rel_tol * std::abs(rq);
    estimate = rq;
    if (converged) break;
  }
  return estimate;
}

/// Largest eigenvalue of a small symmetric matrix by dense decomposition.
inline double max_eigenvalue(const Matrix& sym) {
  if (sym.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace pdbcu::linalg
