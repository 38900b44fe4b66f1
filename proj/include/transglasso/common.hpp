#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace transglasso {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error hierarchy. The CLI maps these onto its exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error(what), row_(row), column_(column) {}
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition (asymmetric input, bad weights, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Every candidate of a tuning sweep failed.
class SelectionError : public Error {
 public:
  using Error::Error;
};

// Small matrix helpers shared across modules.

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

inline double max_abs_asymmetry(const Matrix& a) {
  return (a - a.transpose()).cwiseAbs().maxCoeff();
}

/// Entrywise |A|_inf.
inline double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

/// |A|_0 with entries counted when |a_jl| > zero_tol, both triangles and the diagonal.
inline std::size_t count_nonzero(const Matrix& a, double zero_tol) {
  return static_cast<std::size_t>((a.array().abs() > zero_tol).count());
}

inline double min_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

/// Mixes a base seed with a stream index (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace transglasso
