#pragma once

#include <pdbcu/partition.hpp>
#include <pdbcu/types.hpp>

#include <memory>
#include <string>
#include <vector>

namespace pdbcu {

/// The smooth convex part f of the objective. Implementations must be pure:
/// the same input always gives the same output and no member is mutated,
/// so a single instance can be shared by the master and every worker.
class SmoothFunction {
 public:
  virtual ~SmoothFunction() = default;

  virtual Index dim() const = 0;
  virtual double value(const Vector& x) const = 0;

  /// out = grad_block f(x) for the coordinates in `block`.
  virtual void block_gradient(const Vector& x, const BlockRange& block,
                              Eigen::Ref<Vector> out) const = 0;

  /// Quadratic functions f(x) = 1/2 x^T Q x + c^T x expose Hessian products,
  /// which is what Lipschitz estimation needs.
  virtual bool is_quadratic() const { return false; }

  /// out = Q v
  virtual void hessian_apply(const Vector& /*v*/, Vector& /*out*/) const {
    throw UnsupportedError("smooth: Hessian products unavailable for this oracle");
  }

  /// out = Q[:, block] u  (length dim())
  virtual void hessian_columns_apply(const BlockRange& block, const Vector& u, Vector& out) const {
    Vector v = Vector::Zero(dim());
    v.segment(block.start, block.width) = u;
    hessian_apply(v, out);
  }

  /// Dense Q[block, block]; the default goes through hessian_columns_apply.
  virtual Matrix hessian_diag_block(const BlockRange& block) const {
    Matrix out(block.width, block.width);
    Vector e = Vector::Zero(block.width);
    Vector col;
    for (Index j = 0; j < block.width; ++j) {
      e.setZero();
      e[j] = 1.0;
      hessian_columns_apply(block, e, col);
      out.col(j) = col.segment(block.start, block.width);
    }
    return out;
  }

  virtual std::string kind() const = 0;
};

/// f = 0 (basis pursuit).
class ZeroSmooth final : public SmoothFunction {
 public:
  explicit ZeroSmooth(Index n) : n_(n) {}
  Index dim() const override { return n_; }
  double value(const Vector&) const override { return 0.0; }
  void block_gradient(const Vector&, const BlockRange&, Eigen::Ref<Vector> out) const override {
    out.setZero();
  }
  bool is_quadratic() const override { return true; }
  void hessian_apply(const Vector& v, Vector& out) const override { out = Vector::Zero(v.size()); }
  Matrix hessian_diag_block(const BlockRange& b) const override {
    return Matrix::Zero(b.width, b.width);
  }
  std::string kind() const override { return "zero"; }

 private:
  Index n_;
};

/// f(x) = 1/2 x^T Q x + c^T x with an explicit symmetric Q.
class DenseQuadratic final : public SmoothFunction {
 public:
  DenseQuadratic(Matrix q, Vector c) : q_(std::move(q)), c_(std::move(c)) {
    if (q_.rows() != q_.cols() || q_.rows() != c_.size())
      throw StructuralError("quadratic: Q must be square and match c");
  }

  Index dim() const override { return c_.size(); }
  const Matrix& q() const { return q_; }
  const Vector& c() const { return c_; }

  double value(const Vector& x) const override { return 0.5 * x.dot(q_ * x) + c_.dot(x); }

  void block_gradient(const Vector& x, const BlockRange& b,
                      Eigen::Ref<Vector> out) const override {
    out.noalias() = q_.middleRows(b.start, b.width) * x;
    out += c_.segment(b.start, b.width);
  }

  bool is_quadratic() const override { return true; }
  void hessian_apply(const Vector& v, Vector& out) const override { out.noalias() = q_ * v; }
  void hessian_columns_apply(const BlockRange& b, const Vector& u, Vector& out) const override {
    out.noalias() = q_.middleCols(b.start, b.width) * u;
  }
  Matrix hessian_diag_block(const BlockRange& b) const override {
    return q_.block(b.start, b.start, b.width, b.width);
  }
  std::string kind() const override { return "dense_quadratic"; }

 private:
  Matrix q_;
  Vector c_;
};

/// Dual SVM objective f(t) = 1/2 t^T D Z Z^T D t - e^T t, where the rows of Z
/// are the samples and D = Diag(y). The N x N Gram matrix is never formed;
/// each gradient costs two sparse products.
class GramQuadratic final : public SmoothFunction {
 public:
  GramQuadratic(SparseRowMatrix samples, Vector labels)
      : z_(std::move(samples)), y_(std::move(labels)) {
    if (z_.rows() != y_.size()) throw StructuralError("gram: sample/label count mismatch");
    z_.makeCompressed();
  }

  Index dim() const override { return y_.size(); }
  const SparseRowMatrix& samples() const { return z_; }
  const Vector& labels() const { return y_; }

  // w = Z^T D t
  Vector weights(const Vector& t) const {
    Vector yt = y_.cwiseProduct(t);
    return z_.transpose() * yt;
  }

  double value(const Vector& t) const override {
    return 0.5 * weights(t).squaredNorm() - t.sum();
  }

  void block_gradient(const Vector& t, const BlockRange& b,
                      Eigen::Ref<Vector> out) const override {
    const Vector w = weights(t);
    out.noalias() = z_.middleRows(b.start, b.width) * w;
    out.array() = out.array() * y_.segment(b.start, b.width).array() - 1.0;
  }

  bool is_quadratic() const override { return true; }
  void hessian_apply(const Vector& v, Vector& out) const override {
    out = y_.cwiseProduct(Vector(z_ * weights(v)));
  }
  void hessian_columns_apply(const BlockRange& b, const Vector& u, Vector& out) const override {
    Vector yu = y_.segment(b.start, b.width).cwiseProduct(u);
    Vector w = z_.middleRows(b.start, b.width).transpose() * yu;
    out = y_.cwiseProduct(Vector(z_ * w));
  }
  Matrix hessian_diag_block(const BlockRange& b) const override {
    SparseRowMatrix zb = z_.middleRows(b.start, b.width);
    Matrix g = Matrix(zb * SparseRowMatrix(zb.transpose()));
    const Vector yb = y_.segment(b.start, b.width);
    return yb.asDiagonal() * g * yb.asDiagonal();
  }
  std::string kind() const override { return "gram_quadratic"; }

 private:
  SparseRowMatrix z_;
  Vector y_;
};

/// Gradient oracle plus the Lipschitz constants the stepsize rules need.
struct SmoothOracle {
  std::shared_ptr<const SmoothFunction> function;
  Vector lipschitz_blocks;       // L_i
  double lipschitz_cross = 0.0;  // L_r

  double value(const Vector& x) const { return function->value(x); }
  void block_grad(const Vector& x, const BlockRange& b, Eigen::Ref<Vector> out) const {
    function->block_gradient(x, b, out);
  }
};

}  // namespace pdbcu
