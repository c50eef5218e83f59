#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "btq/functions.hpp"
#include "btq/hilbert.hpp"
#include "btq/operators.hpp"

namespace btq {

// Covariant Berezin symbol of an operator: the coherent expectation
// sigma(A)(x) = <e_q, A e_q> / <e_q, e_q>, fiber-scale free.
struct SymbolFunction {
  Level level = Level::single(1);
  std::string source;
  std::function<Complex(const ChartPoint&)> evaluator;

  Complex operator()(const ChartPoint& x) const { return evaluator(x); }
};

inline SymbolFunction covariant_symbol(const OperatorMatrix& A, const SectionSpace& space) {
  if (A.level() != space.level())
    throw std::invalid_argument("operator level does not match the section space");
  SymbolFunction s;
  s.level = space.level();
  s.source = "sigma";
  s.evaluator = [be = space.basis(), a = A.entries()](const ChartPoint& x) {
    const Eigen::VectorXcd sv = be.basis_values(preferred_chart(x));
    const Complex num = (sv.array() * (a * sv.conjugate()).array()).sum();
    return num / sv.squaredNorm();
  };
  return s;
}

// sigma(A) evaluated at every quadrature node, one matrix product per call.
inline Eigen::VectorXcd covariant_symbol_at_nodes(const OperatorMatrix& A,
                                                  const SectionSpace& space) {
  if (A.level() != space.level())
    throw std::invalid_argument("operator level does not match the section space");
  const Eigen::MatrixXcd& wn = space.weighted_basis();
  const Eigen::MatrixXcd g = wn * A.entries();
  const Eigen::VectorXcd num = (g.array() * wn.conjugate().array()).rowwise().sum();
  return num.array() / space.epsilon_weights().array();
}

// sigma(A) on an explicit point list (rows of the returned vector follow pts).
inline Eigen::VectorXcd covariant_symbol_at(const OperatorMatrix& A, const SectionSpace& space,
                                            const std::vector<ChartPoint>& pts) {
  if (A.level() != space.level())
    throw std::invalid_argument("operator level does not match the section space");
  std::vector<ChartPoint> at;
  at.reserve(pts.size());
  for (const ChartPoint& p : pts) at.push_back(preferred_chart(p));
  const Eigen::MatrixXcd b = space.basis().basis_matrix(at);
  const Eigen::MatrixXcd g = b * A.entries();
  const Eigen::VectorXcd num = (g.array() * b.conjugate().array()).rowwise().sum();
  const Eigen::VectorXd den = b.rowwise().squaredNorm();
  return num.array() / den.array();
}

// Integral against the modified measure Omega_eps = eps(x) Omega(x).
template <class F>
Complex modified_measure_integrate(const SectionSpace& space, F&& f) {
  const auto& rule = space.rule();
  Complex acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Complex v = f(rule.nodes[i]);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::runtime_error("non-finite integrand at node " + std::to_string(i));
    acc += space.epsilon_weights()(static_cast<Eigen::Index>(i)) * v;
  }
  return acc;
}

inline Complex modified_measure_integrate(const SectionSpace& space, const SmoothFunction& f) {
  return modified_measure_integrate(space, [&f](const ChartPoint& x) { return f.value(x); });
}

// <f, g>_eps, conjugate linear in the first argument.
template <class F, class G>
Complex modified_measure_pairing(const SectionSpace& space, F&& f, G&& g) {
  return modified_measure_integrate(
      space, [&](const ChartPoint& x) { return std::conj(f(x)) * g(x); });
}

// Integral representation int f(x) P_x Omega_eps(x), assembled node by node
// from coherent projectors. Equals the Toeplitz operator of f.
inline OperatorMatrix contravariant_reconstruct(const SectionSpace& space,
                                                const SmoothFunction& f) {
  const auto& rule = space.rule();
  const Eigen::Index d = space.dimension();
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(d, d);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const ChartPoint& x = rule.nodes[i];
    const CoherentVector e = coherent_vector(space, x);
    const double nn = e.coefficients.squaredNorm();
    const double eps = space.model().bundle_metric_density(x, space.level()) * nn;
    const Complex c = rule.weights[i] * eps * f.value(x) / nn;
    acc.noalias() += c * (e.coefficients * e.coefficients.adjoint());
  }
  return OperatorMatrix(space.level(), std::move(acc));
}

// int P_x Omega_eps = Id (resolution of identity).
inline OperatorMatrix resolution_of_identity(const SectionSpace& space) {
  return contravariant_reconstruct(space, constant(1.0, "one"));
}

// The Toeplitz images of the balanced monomial family monomial(j,k), j,k <= m,
// as columns of a d^2 x (m+1)^2 matrix. Full column rank certifies
// surjectivity of the Toeplitz map at this level.
struct ToeplitzMap {
  Level level = Level::single(1);
  std::vector<std::array<int, 2>> family;
  Eigen::MatrixXcd columns;
  std::string diagnostics;
};

inline ToeplitzMap build_toeplitz_map(const SectionSpace& space) {
  if (space.model().complex_dimension() != 1)
    throw std::invalid_argument("toeplitz map family implemented on one-factor models");
  const int m = space.level()[0];
  const Eigen::Index d = space.dimension();
  ToeplitzMap map;
  map.level = space.level();
  map.columns.resize(d * d, static_cast<Eigen::Index>(m + 1) * (m + 1));
  Eigen::Index col = 0;
  for (int j = 0; j <= m; ++j)
    for (int k = 0; k <= m; ++k) {
      const OperatorMatrix t = toeplitz(space, monomial(j, k));
      if (map.diagnostics.empty() && !t.diagnostics().empty()) map.diagnostics = t.diagnostics();
      map.family.push_back({j, k});
      map.columns.col(col++) =
          Eigen::Map<const Eigen::VectorXcd>(t.entries().data(), d * d);
    }
  return map;
}

struct ContravariantSolution {
  Eigen::VectorXcd coefficients;
  double residual = 0.0;       // Frobenius norm of the reconstruction error
  double operator_scale = 0.0; // Frobenius norm of the target operator
};

// Minimal-norm least-squares representation of A over the monomial family.
// Surjectivity of the Toeplitz map makes the residual vanish up to quadrature
// accuracy; a residual above tolerance signals a defect.
inline ContravariantSolution contravariant_solve(const ToeplitzMap& map, const OperatorMatrix& A,
                                                 double rel_tol = 1e-8, bool enforce = true) {
  if (A.level() != map.level)
    throw std::invalid_argument("operator level does not match the Toeplitz map");
  const Eigen::Index d = A.dimension();
  const Eigen::Map<const Eigen::VectorXcd> target(A.entries().data(), d * d);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(map.columns);
  ContravariantSolution sol;
  sol.coefficients = cod.solve(target);
  sol.residual = (map.columns * sol.coefficients - target).norm();
  sol.operator_scale = target.norm();
  if (enforce && sol.residual > rel_tol * std::max(sol.operator_scale, 1e-300))
    throw std::runtime_error("Toeplitz span deficient: residual " + std::to_string(sol.residual) +
                             " exceeds " + std::to_string(rel_tol) + " * ||A||");
  return sol;
}

inline OperatorMatrix reconstruct_from_solution(const ToeplitzMap& map,
                                                const ContravariantSolution& sol) {
  const Eigen::Index d2 = map.columns.rows();
  const Eigen::Index d = static_cast<Eigen::Index>(std::lround(std::sqrt(double(d2))));
  Eigen::VectorXcd v = map.columns * sol.coefficients;
  Eigen::MatrixXcd a = Eigen::Map<Eigen::MatrixXcd>(v.data(), d, d);
  return OperatorMatrix(map.level, std::move(a));
}

// Singular values of the column-equilibrated map: each column scaled to unit
// Frobenius norm, so the rank certificate does not depend on how the family
// members are normalized.
inline Eigen::VectorXd toeplitz_map_singular_values(const ToeplitzMap& map) {
  Eigen::MatrixXcd eq = map.columns;
  for (Eigen::Index c = 0; c < eq.cols(); ++c) {
    const double n = eq.col(c).norm();
    if (n > 0.0) eq.col(c) /= n;
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(eq);
  return svd.singularValues();
}

// |<A, T_f>_HS - <sigma(A), f>_eps|: the two sides of the adjointness
// identity, computed independently (trace pairing vs quadrature).
inline double adjointness_check(const OperatorMatrix& A, const SmoothFunction& f,
                                const SectionSpace& space) {
  const Complex lhs = hs_inner(A, toeplitz(space, f));
  const Eigen::VectorXcd sym = covariant_symbol_at_nodes(A, space);
  Complex rhs = 0.0;
  const auto& rule = space.rule();
  for (std::size_t i = 0; i < rule.size(); ++i)
    rhs += space.epsilon_weights()(static_cast<Eigen::Index>(i)) *
           std::conj(sym(static_cast<Eigen::Index>(i))) * f.value(rule.nodes[i]);
  return std::abs(lhs - rhs);
}

// Batched adjointness residuals: entry (a, f) is
// |<A_a, T_f>_HS - <sigma(A_a), f>_eps|. Each Toeplitz operator and each
// symbol-at-nodes vector is computed once.
inline Eigen::MatrixXd adjointness_residual_matrix(const SectionSpace& space,
                                                   const std::vector<OperatorMatrix>& as,
                                                   const std::vector<SmoothFunction>& fs) {
  const auto& rule = space.rule();
  const Eigen::Index n = static_cast<Eigen::Index>(rule.size());
  Eigen::MatrixXcd fvals(n, static_cast<Eigen::Index>(fs.size()));
  std::vector<OperatorMatrix> tfs;
  tfs.reserve(fs.size());
  for (std::size_t fi = 0; fi < fs.size(); ++fi) {
    for (Eigen::Index i = 0; i < n; ++i)
      fvals(i, static_cast<Eigen::Index>(fi)) = fs[fi].value(rule.nodes[static_cast<std::size_t>(i)]);
    tfs.push_back(toeplitz(space, fs[fi]));
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(as.size()), static_cast<Eigen::Index>(fs.size()));
  for (std::size_t ai = 0; ai < as.size(); ++ai) {
    const Eigen::VectorXcd sym = covariant_symbol_at_nodes(as[ai], space);
    const Eigen::VectorXcd wsym = space.epsilon_weights().asDiagonal() * sym;
    for (std::size_t fi = 0; fi < fs.size(); ++fi) {
      const Complex lhs = hs_inner(as[ai], tfs[fi]);
      const Complex rhs = wsym.dot(fvals.col(static_cast<Eigen::Index>(fi)));
      out(static_cast<Eigen::Index>(ai), static_cast<Eigen::Index>(fi)) = std::abs(lhs - rhs);
    }
  }
  return out;
}

enum class BerezinMethod { coherent, kernel };

// B(f)(x) = sigma(T_f)(x); the kernel route integrates f K(x,.) Omega_eps by
// quadrature. The two agree on the band-limited class.
inline Complex berezin_transform(const SectionSpace& space, const SmoothFunction& f,
                                 const ChartPoint& x,
                                 BerezinMethod method = BerezinMethod::coherent) {
  if (method == BerezinMethod::coherent) {
    const OperatorMatrix tf = toeplitz(space, f);
    return covariant_symbol(tf, space)(x);
  }
  const Eigen::VectorXcd sx = space.basis().basis_values(preferred_chart(x));
  const Eigen::VectorXcd q = space.weighted_basis().conjugate() * sx;
  const double den = sx.squaredNorm();
  Complex acc = 0.0;
  const auto& rule = space.rule();
  for (std::size_t i = 0; i < rule.size(); ++i)
    acc += f.value(rule.nodes[i]) * std::norm(q(static_cast<Eigen::Index>(i)));
  return acc / den;
}

// Batch coherent-method transform on a fixed point set.
inline Eigen::VectorXcd berezin_values(const SectionSpace& space, const SmoothFunction& f,
                                       const std::vector<ChartPoint>& pts) {
  const OperatorMatrix tf = toeplitz(space, f);
  return covariant_symbol_at(tf, space, pts);
}

}  // namespace btq
