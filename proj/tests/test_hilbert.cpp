#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "btq/functions.hpp"
#include "btq/hilbert.hpp"

using namespace btq;

namespace {

double beta_gram(int m, int k) {
  return kTwoPi * std::exp(std::lgamma(k + 1.0) + std::lgamma(m - k + 1.0) - std::lgamma(m + 2.0));
}

}  // namespace

TEST_CASE("gram matrices match the Beta oracle") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  {
    const SectionSpace s1 = build_section_space(cp1, Level::single(1));
    CHECK(s1.gram()(0, 0).real() == Catch::Approx(kPi).epsilon(1e-12));
    CHECK(s1.gram()(1, 1).real() == Catch::Approx(kPi).epsilon(1e-12));
    const SectionSpace s2 = build_section_space(cp1, Level::single(2));
    CHECK(s2.gram()(0, 0).real() == Catch::Approx(kTwoPi / 3.0).epsilon(1e-12));
    CHECK(s2.gram()(1, 1).real() == Catch::Approx(kPi / 3.0).epsilon(1e-12));
    CHECK(s2.gram()(2, 2).real() == Catch::Approx(kTwoPi / 3.0).epsilon(1e-12));
  }
  for (int m : {5, 17, 40}) {
    const SectionSpace space = build_section_space(cp1, Level::single(m));
    CHECK(space.dimension() == m + 1);
    for (int j = 0; j <= m; ++j)
      for (int k = 0; k <= m; ++k) {
        if (j == k)
          CHECK(space.gram()(j, k).real() == Catch::Approx(beta_gram(m, k)).epsilon(1e-12));
        else
          CHECK(std::abs(space.gram()(j, k)) < 1e-14 * beta_gram(m, 0));
      }
  }
}

TEST_CASE("cholesky orthonormalization") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  for (int m : {1, 8, 20}) {
    const SectionSpace space = build_section_space(cp1, Level::single(m));
    const Eigen::MatrixXcd& s = space.basis_transform();
    const Eigen::MatrixXcd check = s.adjoint() * space.gram() * s;
    CHECK((check - Eigen::MatrixXcd::Identity(m + 1, m + 1)).norm() < 1e-12);
    // upper triangular by construction
    for (int j = 1; j <= m; ++j)
      for (int k = 0; k < j; ++k) CHECK(std::abs(s(j, k)) == 0.0);
  }
  const ManifoldModel prod = ManifoldModel::cp1xcp1();
  const SectionSpace ps = build_section_space(prod, Level::pair(3, 4));
  CHECK(ps.dimension() == 20);
  CHECK((ps.basis_transform().adjoint() * ps.gram() * ps.basis_transform() -
         Eigen::MatrixXcd::Identity(20, 20))
            .norm() < 1e-12);
}

TEST_CASE("under-resolved quadrature is rejected") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  QuadratureRule starved = build_rule(cp1, Level::single(1), 0);
  starved.level = Level::single(10);
  starved.nodes.resize(6);
  starved.weights.resize(6);
  CHECK_THROWS_AS(SectionSpace(cp1, Level::single(10), starved), std::runtime_error);
}

TEST_CASE("reproducing property through the scalar product") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  const int m = 5;
  const SectionSpace space = build_section_space(cp1, Level::single(m));
  const QuadratureRule& rule = space.rule();
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const ChartPoint x = sample_disk(cp1, 2.0, rng);
    const CoherentVector e = coherent_vector(space, x);
    for (int j = 0; j <= m; ++j) {
      // <e_q, s_j> evaluated as an honest integral of h^m(e_q, s_j)
      const Complex inner = integrate(
          [&](const ChartPoint& y) {
            const Eigen::VectorXcd sy = space.basis().basis_values(y);
            const Complex eq_at_y = (sy.transpose() * e.coefficients)(0, 0);
            return std::conj(eq_at_y) * sy(j) *
                   cp1.bundle_metric_density(y, space.level());
          },
          rule);
      const Complex expect = space.basis().basis_values(x)(j);
      CHECK(std::abs(inner - expect) < 1e-10 * (1.0 + std::abs(expect)));
    }
  }
}

TEST_CASE("coherent vector at the pole and scaling law") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  const int m = 6;
  const SectionSpace space = build_section_space(cp1, Level::single(m));
  const CoherentVector e0 = coherent_vector(space, ChartPoint::affine(0.0));
  for (int k = 1; k <= m; ++k) CHECK(std::abs(e0.coefficients(k)) < 1e-15);
  CHECK(e0.coefficients.squaredNorm() == Catch::Approx((m + 1) / kTwoPi).epsilon(1e-12));

  const ChartPoint x = ChartPoint::affine({0.4, -0.7});
  const Complex c(0.0, 2.0);
  const CoherentVector base = coherent_vector(space, x);
  const CoherentVector scaled = coherent_vector(space, x, c);
  CHECK((scaled.coefficients - base.coefficients / std::conj(c)).norm() < 1e-15);
  CHECK_THROWS_AS(coherent_vector(space, x, 0.0), std::invalid_argument);

  // chart-1 representative of the same point relates by the transition scale
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> rad(0.5, 2.0), ang(0.0, kTwoPi);
  for (int i = 0; i < 20; ++i) {
    const Complex z = std::polar(rad(rng), ang(rng));
    const CoherentVector a = coherent_vector(space, ChartPoint::affine(z));
    const CoherentVector b = coherent_vector(space, ChartPoint::infinity_chart(1.0 / z));
    Complex zbar_m = 1.0;
    for (int k = 0; k < m; ++k) zbar_m *= std::conj(z);
    CHECK((b.coefficients - a.coefficients / zbar_m).norm() <
          1e-12 * a.coefficients.norm() * std::abs(1.0 / zbar_m));
  }
}

TEST_CASE("epsilon function is the constant dimension/volume") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  std::mt19937_64 rng(13);
  for (int m : {1, 9, 33}) {
    const SectionSpace space = build_section_space(cp1, Level::single(m));
    const double expect = (m + 1) / kTwoPi;
    double lo = expect, hi = expect;
    for (int i = 0; i < 500; ++i) {
      const double e = epsilon_function(space, sample_volume_uniform(cp1, rng));
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    CHECK(hi / lo - 1.0 < 1e-10);
    CHECK(hi / expect - 1.0 < 1e-10);
    // epsilon integrates to the dimension
    const Complex total = integrate(
        [&](const ChartPoint& y) { return Complex(epsilon_function(space, y)); }, space.rule());
    CHECK(total.real() == Catch::Approx(m + 1.0).epsilon(1e-12));
    // stays finite arbitrarily close to the pole at infinity
    CHECK(epsilon_function(space, ChartPoint::affine({1e8, 0.0})) ==
          Catch::Approx(expect).epsilon(1e-10));
    CHECK(epsilon_function(space, ChartPoint::infinity_chart(0.0)) ==
          Catch::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("metric identity relates projectors and epsilon") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  const int m = 4;
  const SectionSpace space = build_section_space(cp1, Level::single(m));
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> pick(0, m);
  for (int i = 0; i < 40; ++i) {
    const int j = pick(rng), k = pick(rng);
    const ChartPoint x = sample_disk(cp1, 2.5, rng);
    const Eigen::VectorXcd sv = space.basis().basis_values(x);
    const Complex lhs =
        std::conj(sv(j)) * sv(k) * cp1.bundle_metric_density(x, space.level());
    const OperatorMatrix p = coherent_projector(space, x);
    const Complex rhs = p.entries()(j, k) * epsilon_function(space, x);
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("coherent projector is a rank-one hermitian idempotent") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  const int m = 7;
  const SectionSpace space = build_section_space(cp1, Level::single(m));
  std::mt19937_64 rng(19);
  for (int i = 0; i < 10; ++i) {
    const ChartPoint x = sample_volume_uniform(cp1, rng);
    const Eigen::MatrixXcd p = coherent_projector(space, x).entries();
    CHECK((p * p - p).norm() < 1e-12);
    CHECK((p - p.adjoint()).norm() < 1e-13);
    CHECK(std::abs(p.trace() - 1.0) < 1e-12);
    // fiber representative drops out
    const Eigen::MatrixXcd q = [&] {
      const CoherentVector e = coherent_vector(space, x, Complex(0.7, -0.2));
      return Eigen::MatrixXcd((e.coefficients * e.coefficients.adjoint()) /
                              e.coefficients.squaredNorm());
    }();
    CHECK((p - q).norm() < 1e-13);
  }
  const Eigen::MatrixXcd p0 = coherent_projector(space, ChartPoint::affine(0.0)).entries();
  Eigen::MatrixXcd e00 = Eigen::MatrixXcd::Zero(m + 1, m + 1);
  e00(0, 0) = 1.0;
  CHECK((p0 - e00).norm() < 1e-14);
}

TEST_CASE("two-point kernel closed form, symmetry, range") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  std::mt19937_64 rng(23);
  {
    const SectionSpace s2 = build_section_space(cp1, Level::single(2));
    const TwoPointKernel k2 = two_point_kernel(s2);
    CHECK(k2(ChartPoint::affine(0.0), ChartPoint::affine(1.0)) ==
          Catch::Approx(0.25).epsilon(1e-12));
  }
  for (int m : {1, 3, 12, 40}) {
    const SectionSpace space = build_section_space(cp1, Level::single(m));
    const TwoPointKernel kern = two_point_kernel(space);
    CHECK(kern(ChartPoint::affine(0.0), ChartPoint::infinity_chart(0.0)) < 1e-20);
    for (int i = 0; i < 500; ++i) {
      const ChartPoint x = sample_volume_uniform(cp1, rng);
      const ChartPoint y = sample_volume_uniform(cp1, rng);
      const double v = kern(x, y);
      CHECK(std::abs(v - kern(y, x)) < 1e-13);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-12);
      const double cf = std::pow(std::norm(1.0 + std::conj(x.z()) * y.z()) /
                                     ((1.0 + std::norm(x.z())) * (1.0 + std::norm(y.z()))),
                                 m);
      CHECK(std::abs(v - cf) < 1e-10);
    }
    for (int i = 0; i < 20; ++i) {
      const ChartPoint x = sample_volume_uniform(cp1, rng);
      CHECK(std::abs(kern(x, x) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("coherent embedding") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  const int m = 5;
  const SectionSpace space = build_section_space(cp1, Level::single(m));
  const Eigen::VectorXcd v0 = coherent_embedding(space, ChartPoint::affine(0.0));
  CHECK(std::abs(v0(0) - 1.0) < 1e-14);
  for (int k = 1; k <= m; ++k) CHECK(std::abs(v0(k)) < 1e-14);

  std::mt19937_64 rng(29);
  for (int i = 0; i < 20; ++i) {
    const ChartPoint x = sample_volume_uniform(cp1, rng);
    const Eigen::VectorXcd v = coherent_embedding(space, x);
    CHECK(v.norm() == Catch::Approx(1.0).epsilon(1e-13));
  }

  // components of the unnormalized coherent vector are antiholomorphic in z
  for (int i = 0; i < 10; ++i) {
    const Complex z = sample_disk(cp1, 2.0, rng).z();
    const double h = 1e-5;
    for (int k = 0; k <= m; ++k) {
      auto comp = [&](Complex w) { return coherent_vector(space, ChartPoint(w)).coefficients(k); };
      const Complex fx = (comp(z + h) - comp(z - h)) / (2 * h);
      const Complex fy = (comp(z + Complex(0, h)) - comp(z - Complex(0, h))) / (2 * h);
      const Complex dz = 0.5 * (fx - Complex(0, 1) * fy);
      CHECK(std::abs(dz) < 1e-6);
    }
  }

  // injectivity: distinct points have non-proportional coherent vectors
  const TwoPointKernel kern = two_point_kernel(space);
  int tested = 0;
  while (tested < 100) {
    const ChartPoint x = sample_volume_uniform(cp1, rng);
    const ChartPoint y = sample_volume_uniform(cp1, rng);
    if (std::abs(x.z() - y.z()) < 1e-3) continue;
    CHECK(kern(x, y) < 1.0 - 1e-8);
    ++tested;
  }
}
