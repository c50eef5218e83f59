#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>

#include "btq/geometry.hpp"

namespace btq {

// Linear operator on the level-m section space, as a dense matrix in the
// orthonormal basis. The level tag guards against mixing spaces.
class OperatorMatrix {
 public:
  OperatorMatrix(Level level, Eigen::MatrixXcd entries, std::string diagnostics = {})
      : level_(level), a_(std::move(entries)), diag_(std::move(diagnostics)) {
    if (a_.rows() != a_.cols()) throw std::invalid_argument("operator matrix must be square");
  }

  static OperatorMatrix identity(Level level, Eigen::Index d) {
    return OperatorMatrix(level, Eigen::MatrixXcd::Identity(d, d));
  }

  Level level() const { return level_; }
  Eigen::Index dimension() const { return a_.rows(); }
  const Eigen::MatrixXcd& entries() const { return a_; }
  Eigen::MatrixXcd& entries() { return a_; }
  const std::string& diagnostics() const { return diag_; }

 private:
  Level level_;
  Eigen::MatrixXcd a_;
  std::string diag_;
};

inline void require_same_level(const OperatorMatrix& a, const OperatorMatrix& b) {
  if (a.level() != b.level())
    throw std::invalid_argument("operator level mismatch: " + a.level().str() + " vs " +
                                b.level().str());
}

inline OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_level(a, b);
  return OperatorMatrix(a.level(), a.entries() + b.entries());
}

inline OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_level(a, b);
  return OperatorMatrix(a.level(), a.entries() - b.entries());
}

inline OperatorMatrix operator*(Complex c, const OperatorMatrix& a) {
  return OperatorMatrix(a.level(), c * a.entries());
}

inline OperatorMatrix adjoint(const OperatorMatrix& a) {
  return OperatorMatrix(a.level(), a.entries().adjoint());
}

inline double frobenius_norm(const OperatorMatrix& a) { return a.entries().norm(); }

inline double frobenius_distance(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_level(a, b);
  return (a.entries() - b.entries()).norm();
}

}  // namespace btq
