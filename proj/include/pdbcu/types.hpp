#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace pdbcu {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Error hierarchy. Every failure the library raises derives from Error so
// callers (the CLI in particular) can map categories onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension or shape mismatch between parts of a problem.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Out-of-range numeric parameter (nonpositive stepsize, bad nnz, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Operation requested on a state that cannot support it.
class StateError : public Error {
 public:
  using Error::Error;
};

// Feature not available for the given input (e.g. Lipschitz estimation of a
// non-quadratic oracle).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Malformed input file.
class IngestionError : public Error {
 public:
  using Error::Error;
};

// A reference solver could not certify its answer.
class OracleFailure : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace pdbcu
