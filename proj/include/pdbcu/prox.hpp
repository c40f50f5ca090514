#pragma once

#include <pdbcu/types.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace pdbcu {

/// Separable nonsmooth term g_i applied coordinatewise to one block.
struct ProxTerm {
  enum class Kind { Zero, L1, Box, NonNeg };

  Kind kind = Kind::Zero;
  double weight = 1.0;  // L1 only: g(y) = weight * ||y||_1
  double lo = 0.0;      // Box only
  double hi = 0.0;      // Box only

  static ProxTerm zero() { return {}; }
  static ProxTerm l1(double w) {
    if (!(w >= 0.0)) throw ParameterError("prox: l1 weight must be nonnegative");
    return {Kind::L1, w, 0.0, 0.0};
  }
  static ProxTerm box(double lo, double hi) {
    if (!(lo <= hi)) throw ParameterError("prox: box requires lo <= hi");
    return {Kind::Box, 1.0, lo, hi};
  }
  static ProxTerm nonneg() { return {Kind::NonNeg, 1.0, 0.0, 0.0}; }

  std::string name() const {
    switch (kind) {
      case Kind::Zero: return "zero";
      case Kind::L1: return "l1(" + std::to_string(weight) + ")";
      case Kind::Box: return "box(" + std::to_string(lo) + "," + std::to_string(hi) + ")";
      case Kind::NonNeg: return "nonneg";
    }
    return "?";
  }

  /// g(y), +infinity outside the domain of the indicator kinds.
  template <class Derived>
  double value(const Eigen::MatrixBase<Derived>& y) const {
    switch (kind) {
      case Kind::Zero: return 0.0;
      case Kind::L1: return weight * y.template lpNorm<1>();
      case Kind::Box:
        for (Index j = 0; j < y.size(); ++j)
          if (y[j] < lo || y[j] > hi) return kInfinity;
        return 0.0;
      case Kind::NonNeg:
        for (Index j = 0; j < y.size(); ++j)
          if (y[j] < 0.0) return kInfinity;
        return 0.0;
    }
    return 0.0;
  }

  /// Scalar closed-form prox of weight*g at a.
  double prox_scalar(double a, double step) const {
    switch (kind) {
      case Kind::Zero: return a;
      case Kind::L1: {
        const double t = weight * step;
        // |a| == t resolves to exactly 0.
        if (a > t) return a - t;
        if (a < -t) return a + t;
        return 0.0;
      }
      case Kind::Box: return std::clamp(a, lo, hi);
      case Kind::NonNeg: return a > 0.0 ? a : 0.0;
    }
    return a;
  }

  /// Euclidean projection onto dom(g) for one coordinate.
  double project_scalar(double a) const {
    switch (kind) {
      case Kind::Box: return std::clamp(a, lo, hi);
      case Kind::NonNeg: return a > 0.0 ? a : 0.0;
      default: return a;
    }
  }
};

/// argmin_y term(y) + 1/(2 weight) ||y - anchor||^2
struct ScaledProxQuery {
  ProxTerm term;
  double weight = 1.0;
};

template <class In, class Out>
void prox_apply(const ScaledProxQuery& q, const In& anchor, Out&& out) {
  if (!(q.weight > 0.0) || !std::isfinite(q.weight))
    throw ParameterError("prox: weight must be positive and finite");
  for (Index j = 0; j < anchor.size(); ++j) out[j] = q.term.prox_scalar(anchor[j], q.weight);
}

inline Vector prox_apply(const ScaledProxQuery& q, const Vector& anchor) {
  Vector out(anchor.size());
  prox_apply(q, anchor, out);
  return out;
}

}  // namespace pdbcu
