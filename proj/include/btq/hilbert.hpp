#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "btq/geometry.hpp"
#include "btq/operator_matrix.hpp"
#include "btq/quadrature.hpp"

namespace btq {

// Evaluates the monomial family and the orthonormal basis of holomorphic
// sections at chart points, in the chart-0 frame convention (chart-1 points go
// through the transition, which reverses the monomial order).
class BasisEvaluator {
 public:
  BasisEvaluator(ManifoldModel model, Level level, Eigen::MatrixXcd transform)
      : model_(model), level_(level), s_(std::move(transform)) {
    model_.require_level(level_);
    for (int k1 = 0; k1 <= level_[0]; ++k1) {
      if (level_.factors() == 1) {
        exps_.push_back({k1, 0});
      } else {
        for (int k2 = 0; k2 <= level_[1]; ++k2) exps_.push_back({k1, k2});
      }
    }
    if (s_.rows() != dimension() || s_.cols() != dimension())
      throw std::invalid_argument("basis transform has wrong shape");
  }

  const ManifoldModel& model() const { return model_; }
  Level level() const { return level_; }
  Eigen::Index dimension() const {
    Eigen::Index d = level_[0] + 1;
    if (level_.factors() == 2) d *= level_[1] + 1;
    return d;
  }
  const std::vector<std::array<int, 2>>& exponents() const { return exps_; }
  const Eigen::MatrixXcd& transform() const { return s_; }

  // Chart-adapted coefficient of the k-th monomial section at x: z^k in chart
  // 0, w^(m-k) in chart 1 (per factor).
  Eigen::VectorXcd monomial_values(const ChartPoint& x) const {
    model_.require_point(x);
    std::array<std::vector<Complex>, 2> pows;
    for (int i = 0; i < level_.factors(); ++i) {
      const int m = level_[i];
      const FactorCoord& c = x.factor(i);
      std::vector<Complex> p(static_cast<std::size_t>(m) + 1);
      Complex acc = 1.0;
      for (int k = 0; k <= m; ++k) {
        p[static_cast<std::size_t>(k)] = acc;
        acc *= c.z;
      }
      if (c.chart == 1) std::reverse(p.begin(), p.end());
      pows[static_cast<std::size_t>(i)] = std::move(p);
    }
    Eigen::VectorXcd v(dimension());
    for (Eigen::Index j = 0; j < dimension(); ++j) {
      const auto& e = exps_[static_cast<std::size_t>(j)];
      Complex val = pows[0][static_cast<std::size_t>(e[0])];
      if (level_.factors() == 2) val *= pows[1][static_cast<std::size_t>(e[1])];
      v(j) = val;
    }
    return v;
  }

  // hat s_k(x) for the orthonormal basis sections.
  Eigen::VectorXcd basis_values(const ChartPoint& x) const {
    return s_.transpose() * monomial_values(x);
  }

  // d/dz of the orthonormal basis coefficients, chart-0 one-factor points only.
  Eigen::VectorXcd basis_derivative_values(const ChartPoint& x) const {
    if (level_.factors() != 1 || x.factors() != 1 || x.chart() != 0)
      throw std::invalid_argument("basis derivative implemented for chart-0 CP1 points");
    const int m = level_[0];
    Eigen::VectorXcd dmon(m + 1);
    Complex acc = 1.0;
    dmon(0) = 0.0;
    for (int k = 1; k <= m; ++k) {
      dmon(k) = double(k) * acc;
      acc *= x.z();
    }
    return s_.transpose() * dmon;
  }

  // Rows: points, columns: basis sections.
  Eigen::MatrixXcd basis_matrix(const std::vector<ChartPoint>& pts) const {
    Eigen::MatrixXcd out(static_cast<Eigen::Index>(pts.size()), dimension());
    for (std::size_t i = 0; i < pts.size(); ++i)
      out.row(static_cast<Eigen::Index>(i)) = basis_values(pts[i]).transpose();
    return out;
  }

 private:
  ManifoldModel model_;
  Level level_;
  std::vector<std::array<int, 2>> exps_;
  Eigen::MatrixXcd s_;
};

// The level-m space of holomorphic sections: Gram matrix of the monomial
// family under the quadrature rule, Cholesky orthonormalization, and cached
// weighted basis values at the rule's nodes.
class SectionSpace {
 public:
  SectionSpace(const ManifoldModel& model, Level level, QuadratureRule rule)
      : model_(model), level_(level), rule_(std::move(rule)) {
    model_.require_level(level_);
    if (rule_.level != level_ || rule_.kind != model_.kind())
      throw std::invalid_argument("quadrature rule was built for a different space");
    assemble();
  }

  const ManifoldModel& model() const { return model_; }
  Level level() const { return level_; }
  const QuadratureRule& rule() const { return rule_; }
  Eigen::Index dimension() const { return basis_->dimension(); }
  const Eigen::MatrixXcd& gram() const { return gram_; }
  const Eigen::MatrixXcd& basis_transform() const { return basis_->transform(); }
  const BasisEvaluator& basis() const { return *basis_; }

  // WN(i,k) = sqrt(w_i h^m(x_i)) hat s_k(x_i); orthonormality reads WN^† WN = I.
  const Eigen::MatrixXcd& weighted_basis() const { return wn_; }
  // w_i eps(x_i); summing these against function values integrates against
  // the modified measure Omega_eps.
  const Eigen::VectorXd& epsilon_weights() const { return weps_; }
  double epsilon_at_node(std::size_t i) const {
    return weps_(static_cast<Eigen::Index>(i)) / rule_.weights[i];
  }

 private:
  void assemble() {
    // Monomial gram via the weighted design matrix; hermitian PSD by
    // construction up to roundoff.
    const Eigen::Index n = static_cast<Eigen::Index>(rule_.size());
    BasisEvaluator mono(model_, level_, Eigen::MatrixXcd::Identity(count(), count()));
    Eigen::MatrixXcd wm(n, count());
    for (Eigen::Index i = 0; i < n; ++i) {
      const ChartPoint& x = rule_.nodes[static_cast<std::size_t>(i)];
      const double w = rule_.weights[static_cast<std::size_t>(i)] *
                       model_.bundle_metric_density(x, level_);
      wm.row(i) = std::sqrt(w) * mono.monomial_values(x).transpose();
    }
    gram_ = wm.adjoint() * wm;

    Eigen::LLT<Eigen::MatrixXcd> llt(gram_);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("Gram matrix not positive definite: quadrature under-resolved");
    Eigen::MatrixXcd s =
        llt.matrixU().solve(Eigen::MatrixXcd::Identity(count(), count()));
    basis_.emplace(model_, level_, std::move(s));

    wn_ = wm * basis_->transform();
    const double orth_err =
        (wn_.adjoint() * wn_ - Eigen::MatrixXcd::Identity(count(), count())).norm();
    if (orth_err > 1e-8)
      throw std::runtime_error("orthonormalization residual " + std::to_string(orth_err) +
                               ": quadrature under-resolved");
    weps_ = wn_.rowwise().squaredNorm();
  }

  Eigen::Index count() const {
    Eigen::Index d = level_[0] + 1;
    if (level_.factors() == 2) d *= level_[1] + 1;
    return d;
  }

  ManifoldModel model_;
  Level level_;
  QuadratureRule rule_;
  Eigen::MatrixXcd gram_;
  std::optional<BasisEvaluator> basis_;
  Eigen::MatrixXcd wn_;
  Eigen::VectorXd weps_;
};

inline SectionSpace build_section_space(const ManifoldModel& model, Level m,
                                        int extra_band = kDefaultExtraBand) {
  return SectionSpace(model, m, build_rule(model, m, extra_band));
}

// Coherent vector e_q for the canonical fiber representative q = frame(x)
// (chart-0 frame normalized to 1; chart-1 points use the transition frame).
// Rescaling the representative by c divides the coefficients by conj(c).
struct CoherentVector {
  Level level;
  ChartPoint base_point;
  Eigen::VectorXcd coefficients;
};

inline CoherentVector coherent_vector(const SectionSpace& space, const ChartPoint& x,
                                      Complex fiber_scale = 1.0) {
  if (fiber_scale == 0.0) throw std::invalid_argument("fiber representative must be nonzero");
  Eigen::VectorXcd v = space.basis().basis_values(x).conjugate() / std::conj(fiber_scale);
  return CoherentVector{space.level(), x, std::move(v)};
}

// Rawnsley's epsilon function |q|^2 <e_q, e_q>; independent of the fiber
// representative. Constant exactly when the quantization is projectively
// induced, which holds for these models.
inline double epsilon_function(const SectionSpace& space, const ChartPoint& x) {
  const ChartPoint p = preferred_chart(x);
  const double h = space.model().bundle_metric_density(p, space.level());
  return h * space.basis().basis_values(p).squaredNorm();
}

// Rank-one projector |e_q><e_q| / <e_q,e_q> onto the coherent state at x.
inline OperatorMatrix coherent_projector(const SectionSpace& space, const ChartPoint& x) {
  const CoherentVector e = coherent_vector(space, x);
  const double nn = e.coefficients.squaredNorm();
  if (!(nn > 0.0)) throw std::runtime_error("coherent vector vanished (cannot happen for very ample bundles)");
  Eigen::MatrixXcd p = (e.coefficients * e.coefficients.adjoint()) / nn;
  return OperatorMatrix(space.level(), std::move(p));
}

// Normalized squared overlap of coherent states; symmetric, 1 on the
// diagonal, decays off-diagonal with rate increasing in the level.
class TwoPointKernel {
 public:
  explicit TwoPointKernel(const SectionSpace& space) : basis_(space.basis()) {}

  Level level() const { return basis_.level(); }

  double operator()(const ChartPoint& x, const ChartPoint& y) const {
    // scale-free in both coherent vectors; evaluate each in its better chart
    const Eigen::VectorXcd sx = basis_.basis_values(preferred_chart(x));
    const Eigen::VectorXcd sy = basis_.basis_values(preferred_chart(y));
    return std::norm(sx.dot(sy)) / (sx.squaredNorm() * sy.squaredNorm());
  }

 private:
  BasisEvaluator basis_;
};

inline TwoPointKernel two_point_kernel(const SectionSpace& space) {
  return TwoPointKernel(space);
}

// Projective image of x under the coherent state embedding: unit norm, first
// significant entry rotated real-positive.
inline Eigen::VectorXcd coherent_embedding(const SectionSpace& space, const ChartPoint& x) {
  // the projective image does not depend on the fiber frame
  Eigen::VectorXcd v = coherent_vector(space, preferred_chart(x)).coefficients;
  const double n = v.norm();
  if (!(n > 0.0)) throw std::runtime_error("coherent vector vanished");
  v /= n;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (std::abs(v(k)) > 1e-12) {
      v *= std::conj(v(k)) / std::abs(v(k));
      break;
    }
  }
  return v;
}

}  // namespace btq
