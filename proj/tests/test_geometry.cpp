#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "btq/functions.hpp"
#include "btq/geometry.hpp"

using namespace btq;

namespace {

std::vector<SmoothFunction> library() {
  return {standard_function("one"),  standard_function("x1"), standard_function("x2"),
          standard_function("x3"),   monomial(1, 1),          monomial(2, 0),
          monomial(2, 1),            monomial(3, 2)};
}

Complex fd_dz(const SmoothFunction& f, Complex z, double h) {
  const Complex fx = (f.value(ChartPoint(z + h)) - f.value(ChartPoint(z - h))) / (2 * h);
  const Complex fy =
      (f.value(ChartPoint(z + Complex(0, h))) - f.value(ChartPoint(z - Complex(0, h)))) / (2 * h);
  return 0.5 * (fx - Complex(0, 1) * fy);
}

Complex fd_dzbar(const SmoothFunction& f, Complex z, double h) {
  const Complex fx = (f.value(ChartPoint(z + h)) - f.value(ChartPoint(z - h))) / (2 * h);
  const Complex fy =
      (f.value(ChartPoint(z + Complex(0, h))) - f.value(ChartPoint(z - Complex(0, h)))) / (2 * h);
  return 0.5 * (fx + Complex(0, 1) * fy);
}

Complex fd_dzzbar(const SmoothFunction& f, Complex z, double h) {
  const Complex lap = f.value(ChartPoint(z + h)) + f.value(ChartPoint(z - h)) +
                      f.value(ChartPoint(z + Complex(0, h))) +
                      f.value(ChartPoint(z - Complex(0, h))) - 4.0 * f.value(ChartPoint(z));
  return 0.25 * lap / (h * h);
}

}  // namespace

TEST_CASE("chart transition round trip is the identity") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> rad(0.5, 2.0), ang(0.0, kTwoPi);
  for (int i = 0; i < 200; ++i) {
    const Complex z = std::polar(rad(rng), ang(rng));
    const ChartPoint p(z);
    const ChartPoint back = p.to_chart(1).to_chart(0);
    CHECK(std::abs(back.z() - z) <= 1e-15 * std::abs(z));
    CHECK(back.chart() == 0);
  }
}

TEST_CASE("chart point invariants") {
  CHECK_THROWS_AS(ChartPoint(Complex(std::numeric_limits<double>::infinity(), 0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(ChartPoint(Complex(0, std::numeric_limits<double>::quiet_NaN())),
                  std::invalid_argument);
  CHECK_THROWS_AS(ChartPoint(1.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(ChartPoint::affine(0.0).to_chart(1), std::domain_error);
  CHECK_THROWS_AS(Level::single(0), std::invalid_argument);
}

TEST_CASE("kaehler potential closed form and frame relation") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  CHECK(kaehler_potential(cp1, Level::single(1), ChartPoint::affine(0.0)) == 0.0);
  CHECK(kaehler_potential(cp1, Level::single(2), ChartPoint::affine(1.0)) ==
        Catch::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(kaehler_potential(cp1, Level::single(3), ChartPoint::affine({1.0, 1.0})) ==
        Catch::Approx(3.0 * std::log(3.0)).epsilon(1e-14));
  CHECK_THROWS_AS(kaehler_potential(cp1, Level::single(2), ChartPoint::infinity_chart(0.5)),
                  std::invalid_argument);

  // exp(-K) equals the level-m bundle density
  std::mt19937_64 rng(5);
  for (int m = 1; m <= 12; m += 3) {
    for (int i = 0; i < 20; ++i) {
      const ChartPoint x = sample_disk(cp1, 3.0, rng);
      const double lhs = std::exp(-kaehler_potential(cp1, Level::single(m), x));
      const double rhs = cp1.bundle_metric_density(x, Level::single(m));
      CHECK(std::abs(lhs / rhs - 1.0) < 1e-12);
    }
  }
  const ManifoldModel prod = ManifoldModel::cp1xcp1();
  for (int i = 0; i < 20; ++i) {
    const ChartPoint x = sample_disk(prod, 3.0, rng);
    const Level lv = Level::pair(3, 4);
    CHECK(std::abs(std::exp(-kaehler_potential(prod, lv, x)) /
                       prod.bundle_metric_density(x, lv) -
                   1.0) < 1e-12);
  }
}

TEST_CASE("quantization condition holds on both manifolds") {
  std::mt19937_64 rng(123);
  const ManifoldModel cp1 = ManifoldModel::cp1();
  std::vector<ChartPoint> pts;
  for (int i = 0; i < 100; ++i) pts.push_back(sample_disk(cp1, 5.0, rng));
  CHECK(verify_quantization_condition(cp1, pts) < 1e-6);
  CHECK(verify_quantization_condition(cp1, {ChartPoint::affine(0.0)}) < 1e-7);

  const ManifoldModel prod = ManifoldModel::cp1xcp1();
  std::vector<ChartPoint> pts2;
  for (int i = 0; i < 50; ++i) pts2.push_back(sample_disk(prod, 5.0, rng));
  CHECK(verify_quantization_condition(prod, pts2) < 1e-6);
}

TEST_CASE("manifold model densities and volume") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  CHECK(cp1.total_volume() == Catch::Approx(kTwoPi));
  CHECK(cp1.bundle_metric_density(ChartPoint::affine(0.0)) == 1.0);
  CHECK(cp1.volume_density(ChartPoint::affine(0.0)) == 2.0);
  const ManifoldModel prod = ManifoldModel::cp1xcp1();
  CHECK(prod.total_volume() == Catch::Approx(kTwoPi * kTwoPi));
  const ChartPoint p(FactorCoord{0, {1.0, 0.0}}, FactorCoord{0, {0.0, 0.0}});
  CHECK(prod.volume_density(p) == Catch::Approx(0.5 * 2.0));
  CHECK_THROWS_AS(ManifoldModel::named("torus"), std::invalid_argument);
  CHECK_THROWS_AS(cp1.require_point(p), std::invalid_argument);
}

TEST_CASE("standard function values") {
  const SmoothFunction x1 = standard_function("x1");
  const SmoothFunction x2 = standard_function("x2");
  const SmoothFunction x3 = standard_function("x3");
  CHECK(x3.value(ChartPoint::affine(0.0)).real() == Catch::Approx(-1.0));
  CHECK(x3.value(ChartPoint::infinity_chart(0.0)).real() == Catch::Approx(1.0));

  std::mt19937_64 rng(17);
  const ManifoldModel cp1 = ManifoldModel::cp1();
  for (int i = 0; i < 100; ++i) {
    const ChartPoint p = sample_volume_uniform(cp1, rng);
    const double s = std::norm(x1.value(p)) + std::norm(x2.value(p)) + std::norm(x3.value(p));
    CHECK(s == Catch::Approx(1.0).epsilon(1e-12));
  }
  CHECK(monomial(1, 0).value(ChartPoint::affine(1.0)).real() == Catch::Approx(0.5));
  CHECK_THROWS_AS(standard_function("x4"), std::invalid_argument);
  CHECK_THROWS_AS(monomial(-1, 0), std::invalid_argument);

  // chart-1 evaluation agrees with the transition for library functions
  for (const SmoothFunction& f : library()) {
    for (int i = 0; i < 20; ++i) {
      std::uniform_real_distribution<double> rad(0.5, 2.0), ang(0.0, kTwoPi);
      const Complex z = std::polar(rad(rng), ang(rng));
      const Complex a = f.value(ChartPoint::affine(z));
      const Complex b = f.value(ChartPoint::infinity_chart(1.0 / z));
      CHECK(std::abs(a - b) < 1e-12 * (1.0 + std::abs(a)));
    }
  }
}

TEST_CASE("library derivatives match central finite differences") {
  std::mt19937_64 rng(29);
  const ManifoldModel cp1 = ManifoldModel::cp1();
  for (const SmoothFunction& f : library()) {
    for (int i = 0; i < 50; ++i) {
      const Complex z = sample_disk(cp1, 3.0, rng).z();
      const ChartPoint p(z);
      const Complex d1 = f.dz(p), d1f = fd_dz(f, z, 1e-5);
      const Complex d2 = f.dzbar(p), d2f = fd_dzbar(f, z, 1e-5);
      CHECK(std::abs(d1 - d1f) < 1e-6 * (1.0 + std::abs(d1)));
      CHECK(std::abs(d2 - d2f) < 1e-6 * (1.0 + std::abs(d2)));
      // second-order stencils at step 1e-5 sit on the roundoff floor; the
      // mixed derivative check uses the balanced step instead
      const Complex dm = f.dzzbar(p), dmf = fd_dzzbar(f, z, 1e-4);
      CHECK(std::abs(dm - dmf) < 1e-6 * (1.0 + std::abs(dm)));
    }
  }
}

TEST_CASE("real functions have real values and conjugate derivatives") {
  std::mt19937_64 rng(31);
  const ManifoldModel cp1 = ManifoldModel::cp1();
  for (const SmoothFunction& f : library()) {
    if (!f.is_real) continue;
    for (int i = 0; i < 30; ++i) {
      const ChartPoint p = sample_volume_uniform(cp1, rng);
      CHECK(std::abs(f.value(p).imag()) < 1e-14);
      const ChartPoint q = sample_disk(cp1, 3.0, rng);
      CHECK(std::abs(f.dzbar(q) - std::conj(f.dz(q))) < 1e-13);
    }
  }
}

TEST_CASE("sup norms are attained on a fine grid") {
  const std::vector<ChartPoint> grid = sample_grid_cp1(400, 64, true);
  for (const SmoothFunction& f : library()) {
    REQUIRE(f.sup_norm.has_value());
    double gmax = 0.0;
    for (const ChartPoint& p : grid) gmax = std::max(gmax, std::abs(f.value(p)));
    CHECK(gmax <= *f.sup_norm + 1e-12);
    CHECK(gmax >= 0.995 * *f.sup_norm);
  }
}

TEST_CASE("poisson bracket chart formula and algebra") {
  const SmoothFunction x1 = standard_function("x1");
  const SmoothFunction x2 = standard_function("x2");
  const SmoothFunction x3 = standard_function("x3");
  const SmoothFunction one = standard_function("one");
  std::mt19937_64 rng(37);
  const ManifoldModel cp1 = ManifoldModel::cp1();

  const SmoothFunction b11 = poisson_bracket(x1, x1);
  const SmoothFunction b31 = poisson_bracket(x3, one);
  const SmoothFunction b12 = poisson_bracket(x1, x2);
  CHECK(std::abs(b12.value(ChartPoint::affine(0.0)) - 2.0) < 1e-12);
  for (int i = 0; i < 50; ++i) {
    const ChartPoint p = sample_disk(cp1, 2.5, rng);
    CHECK(std::abs(b11.value(p)) < 1e-12);
    CHECK(std::abs(b31.value(p)) < 1e-12);
    // su(2) relation fixed by the flow oracle below: {x1,x2} = -2 x3
    CHECK(std::abs(b12.value(p) - (-2.0) * x3.value(p)) < 1e-10);
  }

  // antisymmetry and Leibniz on random pairs from the library
  const auto fs = library();
  std::uniform_int_distribution<std::size_t> pick(0, fs.size() - 1);
  for (int i = 0; i < 20; ++i) {
    const SmoothFunction &f = fs[pick(rng)], &g = fs[pick(rng)], &h = fs[pick(rng)];
    const ChartPoint p = sample_disk(cp1, 2.0, rng);
    CHECK(std::abs(poisson_bracket(f, g).value(p) + poisson_bracket(g, f).value(p)) < 1e-8);
    const Complex lhs = poisson_bracket(f, multiply(g, h)).value(p);
    const Complex rhs = poisson_bracket(f, g).value(p) * h.value(p) +
                        g.value(p) * poisson_bracket(f, h).value(p);
    CHECK(std::abs(lhs - rhs) < 1e-8);
  }

  // Jacobi identity with finite-difference-backed inner brackets
  auto jacobi = [&](const SmoothFunction& f, const SmoothFunction& g, const SmoothFunction& h,
                    const ChartPoint& p) {
    return poisson_bracket(f, poisson_bracket(g, h)).value(p) +
           poisson_bracket(g, poisson_bracket(h, f)).value(p) +
           poisson_bracket(h, poisson_bracket(f, g)).value(p);
  };
  for (int i = 0; i < 10; ++i) {
    const ChartPoint p = sample_disk(cp1, 2.0, rng);
    CHECK(std::abs(jacobi(x1, x2, x3, p)) < 1e-6);
  }

  SmoothFunction bare;
  bare.value = [](const ChartPoint&) { return Complex(1.0); };
  CHECK_THROWS_AS(poisson_bracket(bare, x1), std::invalid_argument);
}

TEST_CASE("hamiltonian flow oracle pins the bracket sign and magnitude") {
  // Integrate dz/dt = -i (1+|z|^2)^2 conj(dz(x1)) and compare the observed
  // rate of change of x2 along the flow with the bracket {x2, x1}.
  const SmoothFunction x1 = standard_function("x1");
  const SmoothFunction x2 = standard_function("x2");
  auto rhs = [&](Complex z) { return hamiltonian_coefficient(x1, ChartPoint(z)); };
  Complex z = Complex(0.3, 0.4);
  const double dt = 1e-4;
  const double x1_start = x1.value(ChartPoint(z)).real();
  std::vector<double> x2_trace;
  for (int step = 0; step < 2000; ++step) {
    x2_trace.push_back(x2.value(ChartPoint(z)).real());
    const Complex k1 = rhs(z);
    const Complex k2 = rhs(z + 0.5 * dt * k1);
    const Complex k3 = rhs(z + 0.5 * dt * k2);
    const Complex k4 = rhs(z + dt * k3);
    z += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  // x1 is conserved along its own flow
  CHECK(std::abs(x1.value(ChartPoint(z)).real() - x1_start) < 1e-8);
  // d x2/dt at the midpoint equals {x2, x1} there
  const int mid = 1000;
  const double observed = (x2_trace[mid + 1] - x2_trace[mid - 1]) / (2 * dt);
  Complex zm = Complex(0.3, 0.4);
  // re-integrate to the midpoint for the comparison point
  {
    Complex w = Complex(0.3, 0.4);
    for (int step = 0; step < mid; ++step) {
      const Complex k1 = rhs(w);
      const Complex k2 = rhs(w + 0.5 * dt * k1);
      const Complex k3 = rhs(w + 0.5 * dt * k2);
      const Complex k4 = rhs(w + dt * k3);
      w += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    zm = w;
  }
  const double bracket = poisson_bracket(x2, x1).value(ChartPoint(zm)).real();
  CHECK(observed == Catch::Approx(bracket).margin(1e-5));
}

TEST_CASE("laplacian eigenfunctions and pinned constant") {
  const SmoothFunction x1 = standard_function("x1");
  const SmoothFunction x2 = standard_function("x2");
  const SmoothFunction x3 = standard_function("x3");
  const SmoothFunction one = standard_function("one");
  std::mt19937_64 rng(41);
  const ManifoldModel cp1 = ManifoldModel::cp1();

  const SmoothFunction lap3 = laplacian(x3);
  double lambda = 0.0;
  bool first = true;
  for (int i = 0; i < 100; ++i) {
    ChartPoint p = sample_disk(cp1, 3.0, rng);
    if (std::abs(x3.value(p)) < 0.1) continue;  // avoid the nodal circle
    const double ratio = (lap3.value(p) / x3.value(p)).real();
    if (first) {
      lambda = ratio;
      first = false;
    }
    CHECK(std::abs(ratio / lambda - 1.0) < 1e-8);
  }
  // chart formula at z = 0: lap x3(0) = c (1+0)^2 * 2 = 4, x3(0) = -1
  CHECK(lambda == Catch::Approx(-2.0 * kLaplaceConstant).epsilon(1e-10));

  for (const SmoothFunction& f : {x1, x2}) {
    const SmoothFunction lapf = laplacian(f);
    for (int i = 0; i < 30; ++i) {
      ChartPoint p = sample_disk(cp1, 3.0, rng);
      if (std::abs(f.value(p)) < 0.1) continue;
      CHECK((lapf.value(p) / f.value(p)).real() == Catch::Approx(lambda).epsilon(1e-8));
    }
  }
  for (int i = 0; i < 10; ++i)
    CHECK(std::abs(laplacian(one).value(sample_disk(cp1, 3.0, rng))) < 1e-12);

  SmoothFunction bare;
  bare.value = [](const ChartPoint&) { return Complex(1.0); };
  CHECK_THROWS_AS(laplacian(bare), std::invalid_argument);
}
