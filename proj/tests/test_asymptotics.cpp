#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "btq/asymptotics.hpp"

using namespace btq;

TEST_CASE("loglog fit recovers exact power laws") {
  std::vector<ConvergenceRow> rows;
  for (int m = 4; m <= 60; m += 2) rows.push_back({m, 3.7 * std::pow(m, -1.3)});
  const SlopeFit fit = fit_loglog(rows);
  REQUIRE(fit.valid);
  CHECK(fit.slope == Catch::Approx(-1.3).epsilon(1e-9));
  CHECK(fit.r2 == Catch::Approx(1.0).epsilon(1e-9));
  CHECK(fit.m_lo == 32);
  CHECK(fit.m_hi == 60);

  rows[20].value = 0.0;
  CHECK_FALSE(fit_loglog(rows, 1.0).valid);
  CHECK_FALSE(fit_loglog({}, 0.5).valid);
}

TEST_CASE("norm gap sweep matches the closed form 2/(m+2)") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  const SmoothFunction x3 = standard_function("x3");
  const ConvergenceTable t = sweep_norm_limit(cp1, x3, MRange{4, 60, 2});
  for (const auto& row : t.rows)
    CHECK(row.value == Catch::Approx(2.0 / (row.m + 2.0)).margin(1e-10));
  for (std::size_t i = 1; i < t.rows.size(); ++i)
    CHECK(t.rows[i].value < t.rows[i - 1].value);  // strictly decreasing
  REQUIRE(t.fit.valid);
  CHECK(t.fit.slope <= -0.9);
  // refit on the upper two-thirds moves the slope by less than 0.1
  const SlopeFit wider = fit_loglog(t.rows, 2.0 / 3.0);
  CHECK(std::abs(wider.slope - t.fit.slope) < 0.1);
  // the tail window carries the -1.00 +/- 0.05 rate
  std::vector<ConvergenceRow> tail;
  for (const auto& row : t.rows)
    if (row.m >= 40) tail.push_back(row);
  const SlopeFit tf = fit_loglog(tail, 1.0);
  CHECK(tf.slope >= -1.05);
  CHECK(tf.slope <= -0.95);

  const ConvergenceTable flat = sweep_norm_limit(cp1, standard_function("one"), MRange{4, 16, 4});
  for (const auto& row : flat.rows) CHECK(std::abs(row.value) < 1e-12);
  CHECK_FALSE(flat.fit.valid);

  SmoothFunction nameless = monomial(1, 1);
  nameless.sup_norm.reset();
  CHECK_THROWS_AS(sweep_norm_limit(cp1, nameless, MRange{4, 8, 2}), std::invalid_argument);
}

TEST_CASE("dirac sweep matches the su(2) closed form") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  const SmoothFunction x1 = standard_function("x1");
  const SmoothFunction x2 = standard_function("x2");
  const SmoothFunction x3 = standard_function("x3");
  const SmoothFunction one = standard_function("one");

  const ConvergenceTable t = sweep_dirac(cp1, x1, x2, MRange{10, 40, 2});
  for (const auto& row : t.rows)
    CHECK(row.value ==
          Catch::Approx(4.0 * row.m / ((row.m + 2.0) * (row.m + 2.0))).margin(1e-10));

  const ConvergenceTable self = sweep_dirac(cp1, x1, x1, MRange{4, 12, 4});
  for (const auto& row : self.rows) CHECK(row.value < 1e-12);
  const ConvergenceTable casimir = sweep_dirac(cp1, x3, one, MRange{4, 12, 4});
  for (const auto& row : casimir.rows) CHECK(row.value < 1e-12);
}

TEST_CASE("product sweep matches the closed form 1/(m+3)") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  const SmoothFunction x3 = standard_function("x3");
  const ConvergenceTable t = sweep_product(cp1, x3, x3, MRange{4, 40, 2});
  for (const auto& row : t.rows)
    CHECK(row.value == Catch::Approx(1.0 / (row.m + 3.0)).margin(1e-10));

  const ConvergenceTable with_one =
      sweep_product(cp1, standard_function("one"), x3, MRange{4, 12, 4});
  for (const auto& row : with_one.rows) CHECK(row.value < 1e-12);
}

TEST_CASE("berezin sweep matches the closed form 2/(m+2)") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  const SmoothFunction x3 = standard_function("x3");
  const ConvergenceTable t = sweep_berezin(cp1, x3, MRange{4, 40, 2});
  for (const auto& row : t.rows)
    CHECK(row.value == Catch::Approx(2.0 / (row.m + 2.0)).margin(1e-9));
  const ConvergenceTable flat = sweep_berezin(cp1, standard_function("one"), MRange{4, 12, 4});
  for (const auto& row : flat.rows) CHECK(row.value < 1e-12);
}

TEST_CASE("first expansion coefficient of the berezin transform") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  const SmoothFunction x3 = standard_function("x3");
  const A1Estimate est = estimate_A1(cp1, x3, MRange{4, 60, 2});
  for (std::size_t i = 0; i < est.points.size(); ++i) {
    const Complex expect = -2.0 * x3.value(est.points[i]);
    CHECK(std::abs(est.values(static_cast<Eigen::Index>(i)) - expect) < 1e-3 * 2.0);
  }
  // A1 = Delta f / 2 under this metric normalization
  CHECK(est.delta_constant == Catch::Approx(0.5).margin(1e-3));
  CHECK(est.misfit < 1e-4);

  // evaluator works at fresh points, including near the far pole
  CHECK(std::abs(est.a1(ChartPoint::affine({0.3, 0.1})) -
                 (-2.0) * x3.value(ChartPoint::affine({0.3, 0.1}))) < 2e-3);
  CHECK(std::abs(est.a1(ChartPoint::affine({1e8, 0.0})) - (-2.0)) < 2e-3);

  const A1Estimate flat = estimate_A1(cp1, standard_function("one"), MRange{4, 40, 2});
  CHECK(flat.values.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(flat.delta_constant == 0.0);

  const A1Estimate ex1 = estimate_A1(cp1, standard_function("x1"), MRange{4, 60, 2});
  CHECK(ex1.delta_constant == Catch::Approx(est.delta_constant).margin(1e-3));
}

TEST_CASE("tuynman identity across levels") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  std::vector<int> ms;
  for (int m = 2; m <= 12; ++m) ms.push_back(m);
  const TuynmanReport rep = tuynman_check(
      cp1, ms, {standard_function("x1"), standard_function("x2"), standard_function("x3")});
  CHECK(rep.laplace_constant == Catch::Approx(2.0).epsilon(1e-8));
  CHECK(rep.worst < 1e-8);
  CHECK(rep.rows.size() == ms.size() * 3);
}

TEST_CASE("inequality battery") {
  const ManifoldModel cp1 = ManifoldModel::cp1();
  const auto battery = standard_battery(cp1);
  const InequalityReport rep = inequality_battery(cp1, {2, 10}, battery);
  CHECK(rep.worst_violation <= 1e-10);
  for (const auto& row : rep.rows) {
    CHECK(row.berezin_sup <= row.toeplitz_norm + 1e-10);
    CHECK(row.toeplitz_norm <= row.function_sup + 1e-10);
    if (row.function == "x3") {
      // first inequality is tight for x3: the symbol peaks at the poles
      CHECK(row.berezin_sup == Catch::Approx(row.toeplitz_norm).margin(1e-12));
      CHECK(row.toeplitz_norm == Catch::Approx(row.m / (row.m + 2.0)).margin(1e-12));
    }
    if (row.function == "one") {
      CHECK(row.berezin_sup == Catch::Approx(1.0).margin(1e-12));
      CHECK(row.toeplitz_norm == Catch::Approx(1.0).margin(1e-12));
      CHECK(row.function_sup == Catch::Approx(1.0).margin(1e-12));
    }
  }
}
