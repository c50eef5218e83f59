#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>
#include <string>

#include "btq/functions.hpp"
#include "btq/hilbert.hpp"
#include "btq/operator_matrix.hpp"

namespace btq {

namespace detail {

inline Eigen::VectorXcd values_at_nodes(const SectionSpace& space, const SmoothFunction& f) {
  const auto& rule = space.rule();
  Eigen::VectorXcd fv(static_cast<Eigen::Index>(rule.size()));
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Complex v = f.value(rule.nodes[i]);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::runtime_error("non-finite value of " + f.name + " at quadrature node " +
                               std::to_string(i));
    fv(static_cast<Eigen::Index>(i)) = v;
  }
  return fv;
}

inline std::string band_diagnostics(const QuadratureRule& rule, const SmoothFunction& f) {
  if (f.band < 0)
    return "band of " + f.name + " unknown; quadrature exactness not certified";
  if (f.band > rule.extra_band)
    return "band " + std::to_string(f.band) + " of " + f.name + " exceeds rule extra band " +
           std::to_string(rule.extra_band) + "; entries carry quadrature error";
  return {};
}

}  // namespace detail

// T_f = Pi (f .): matrix elements <s_j, f s_k> in the orthonormal basis,
// assembled from the cached weighted basis values.
inline OperatorMatrix toeplitz(const SectionSpace& space, const SmoothFunction& f) {
  const Eigen::VectorXcd fv = detail::values_at_nodes(space, f);
  Eigen::MatrixXcd t =
      space.weighted_basis().adjoint() * fv.asDiagonal() * space.weighted_basis();
  return OperatorMatrix(space.level(), std::move(t), detail::band_diagnostics(space.rule(), f));
}

// Largest singular value; hermitian input goes through the hermitian
// eigensolver for accuracy and determinism.
inline double operator_norm(const OperatorMatrix& A) {
  const Eigen::MatrixXcd& a = A.entries();
  if (a.rows() == 0) return 0.0;
  const double scale = a.norm();
  if (scale == 0.0) return 0.0;
  if ((a - a.adjoint()).norm() <= 1e-12 * scale) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
  return svd.singularValues()(0);
}

// Hilbert-Schmidt pairing Tr(A^† C).
inline Complex hs_inner(const OperatorMatrix& A, const OperatorMatrix& C) {
  require_same_level(A, C);
  return (A.entries().conjugate().array() * C.entries().array()).sum();
}

inline OperatorMatrix multiply(const OperatorMatrix& A, const OperatorMatrix& C) {
  require_same_level(A, C);
  return OperatorMatrix(A.level(), A.entries() * C.entries());
}

inline OperatorMatrix commutator(const OperatorMatrix& A, const OperatorMatrix& C) {
  require_same_level(A, C);
  return OperatorMatrix(A.level(), A.entries() * C.entries() - C.entries() * A.entries());
}

// Compressed prequantum operator Q(f) = Pi ((i/m) nabla_{X_f} + f) Pi. The
// connection acts on chart-0 coefficient functions as d + m (d log h) + dbar;
// on holomorphic sections only the (1,0) part survives. Q(1) = Id fixes the
// sign and phase convention.
inline OperatorMatrix geometric_quantization_operator(const SectionSpace& space,
                                                      const SmoothFunction& f) {
  if (space.model().complex_dimension() != 1)
    throw std::invalid_argument("prequantum operator implemented on one-factor models");
  if (!f.has_first_derivatives())
    throw std::invalid_argument("prequantum operator requires derivative data for " + f.name);

  const auto& rule = space.rule();
  const Eigen::Index n = static_cast<Eigen::Index>(rule.size());
  const double m = space.level()[0];

  Eigen::MatrixXcd dw(n, space.dimension());  // weighted d/dz of the basis at the nodes
  Eigen::VectorXcd ca(n), cb(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const ChartPoint& x = rule.nodes[static_cast<std::size_t>(i)];
    const double w = rule.weights[static_cast<std::size_t>(i)] *
                     space.model().bundle_metric_density(x, space.level());
    dw.row(i) = std::sqrt(w) * space.basis().basis_derivative_values(x).transpose();
    const Complex a = hamiltonian_coefficient(f, x);
    const Complex kappa = -std::conj(x.z()) / (1.0 + std::norm(x.z()));
    ca(i) = Complex(0, 1) / m * a;
    cb(i) = ca(i) * m * kappa + f.value(x);
  }
  Eigen::MatrixXcd g = ca.asDiagonal() * dw + cb.asDiagonal() * space.weighted_basis();
  Eigen::MatrixXcd q = space.weighted_basis().adjoint() * g;
  return OperatorMatrix(space.level(), std::move(q), detail::band_diagnostics(rule, f));
}

// Least-squares fit of the Laplace constant c in
//   Q(f) = T(f) - (c / 2m) T((1+|z|^2)^2 d^2 f/dz dzbar)
// at the given space's level. This is the one place the Laplacian
// normalization is tied down; kLaplaceConstant records the result.
inline double pin_laplace_constant(const SectionSpace& space, const SmoothFunction& f) {
  const double m = space.level()[0];
  const OperatorMatrix q = geometric_quantization_operator(space, f);
  const OperatorMatrix tf = toeplitz(space, f);
  const OperatorMatrix tl = toeplitz(space, laplacian(f, 1.0));
  const double denom = frobenius_norm(tl);
  if (denom == 0.0) throw std::invalid_argument("laplacian of " + f.name + " vanishes; cannot pin");
  const OperatorMatrix r = tf - q;
  return 2.0 * m * hs_inner(tl, r).real() / (denom * denom);
}

}  // namespace btq
