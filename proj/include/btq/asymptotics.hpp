#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "btq/functions.hpp"
#include "btq/hilbert.hpp"
#include "btq/operators.hpp"
#include "btq/parallel.hpp"
#include "btq/symbols.hpp"

namespace btq {

struct ConvergenceRow {
  int m = 0;
  double value = 0.0;
};

struct SlopeFit {
  bool valid = false;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int m_lo = 0;
  int m_hi = 0;
  int points = 0;
};

// Least-squares slope of log(value) against log(m) over the trailing window
// of the range: window_fraction = 0.5 fits on the top half. Defined only when
// every windowed value is positive.
inline SlopeFit fit_loglog(const std::vector<ConvergenceRow>& rows,
                           double window_fraction = 0.5) {
  SlopeFit out;
  if (rows.size() < 2) return out;
  const double m_min = rows.front().m, m_max = rows.back().m;
  const double cut = m_max - window_fraction * (m_max - m_min);
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    if (r.m < cut) continue;
    if (!(r.value > 0.0)) return out;
    xs.push_back(std::log(double(r.m)));
    ys.push_back(std::log(r.value));
    if (out.points == 0) out.m_lo = r.m;
    out.m_hi = r.m;
    ++out.points;
  }
  if (out.points < 2) return out;
  const double n = double(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) return out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  out.valid = true;
  return out;
}

struct ConvergenceTable {
  std::string label;
  std::vector<ConvergenceRow> rows;
  SlopeFit fit;  // top-half window
};

struct MRange {
  int lo = 4;
  int hi = 60;
  int step = 2;

  std::vector<int> values() const {
    if (lo < 1 || hi < lo || step < 1) throw std::invalid_argument("invalid level range");
    std::vector<int> out;
    for (int m = lo; m <= hi; m += step) out.push_back(m);
    return out;
  }
};

namespace detail {

template <class RowFn>
ConvergenceTable sweep_table(std::string label, const MRange& range, RowFn&& per_m,
                             int workers) {
  const std::vector<int> ms = range.values();
  ConvergenceTable table;
  table.label = std::move(label);
  table.rows.resize(ms.size());
  parallel_for(
      ms.size(),
      [&](std::size_t i) { table.rows[i] = ConvergenceRow{ms[i], per_m(ms[i])}; }, workers);
  table.fit = fit_loglog(table.rows);
  return table;
}

}  // namespace detail

// Rows (m, |f|_inf - |T_f^(m)|): the operator norms increase to the sup norm.
inline ConvergenceTable sweep_norm_limit(const ManifoldModel& model, const SmoothFunction& f,
                                         const MRange& range = {},
                                         int extra_band = kDefaultExtraBand, int workers = 0) {
  if (!f.sup_norm) throw std::invalid_argument("sweep_norm_limit needs the sup norm of " + f.name);
  const double sup = *f.sup_norm;
  return detail::sweep_table(
      "norm_gap(" + f.name + ")", range,
      [&](int m) {
        const SectionSpace space = build_section_space(model, Level::single(m), extra_band);
        return sup - operator_norm(toeplitz(space, f));
      },
      workers);
}

// Rows (m, |m i [T_f, T_g] - T_{f,g}|): the Dirac-condition residual, O(1/m).
// A wrong bracket sign or scale turns this into an O(1) sequence.
inline ConvergenceTable sweep_dirac(const ManifoldModel& model, const SmoothFunction& f,
                                    const SmoothFunction& g, const MRange& range = {10, 60, 2},
                                    int extra_band = kDefaultExtraBand, int workers = 0) {
  const SmoothFunction bracket = poisson_bracket(f, g);
  return detail::sweep_table(
      "dirac(" + f.name + "," + g.name + ")", range,
      [&](int m) {
        const SectionSpace space = build_section_space(model, Level::single(m), extra_band);
        const OperatorMatrix tf = toeplitz(space, f);
        const OperatorMatrix tg = toeplitz(space, g);
        const OperatorMatrix tb = toeplitz(space, bracket);
        return operator_norm(Complex(0, double(m)) * commutator(tf, tg) - tb);
      },
      workers);
}

// Rows (m, |T_f T_g - T_{fg}|).
inline ConvergenceTable sweep_product(const ManifoldModel& model, const SmoothFunction& f,
                                      const SmoothFunction& g, const MRange& range = {},
                                      int extra_band = kDefaultExtraBand, int workers = 0) {
  const SmoothFunction fg = multiply(f, g);
  return detail::sweep_table(
      "product(" + f.name + "," + g.name + ")", range,
      [&](int m) {
        const SectionSpace space = build_section_space(model, Level::single(m), extra_band);
        const OperatorMatrix tf = toeplitz(space, f);
        const OperatorMatrix tg = toeplitz(space, g);
        return operator_norm(multiply(tf, tg) - toeplitz(space, fg));
      },
      workers);
}

// Rows (m, sup_grid |B^(m)(f) - f|) over a pole-inclusive sample grid.
inline ConvergenceTable sweep_berezin(const ManifoldModel& model, const SmoothFunction& f,
                                      const MRange& range = {},
                                      int extra_band = kDefaultExtraBand, int workers = 0,
                                      int grid_u = 48, int grid_phi = 48) {
  if (model.complex_dimension() != 1)
    throw std::invalid_argument("berezin sweep implemented on one-factor models");
  const std::vector<ChartPoint> pts = sample_grid_cp1(grid_u, grid_phi, true);
  Eigen::VectorXcd fv(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i)
    fv(static_cast<Eigen::Index>(i)) = f.value(pts[i]);
  return detail::sweep_table(
      "berezin_gap(" + f.name + ")", range,
      [&, pts, fv](int m) {
        const SectionSpace space = build_section_space(model, Level::single(m), extra_band);
        const Eigen::VectorXcd bv = berezin_values(space, f, pts);
        return (bv - fv).cwiseAbs().maxCoeff();
      },
      workers);
}

// Pointwise extrapolation of m (B^(m) f - f) to its limit A1(f), the first
// Berezin expansion coefficient, together with the least-squares constant
// relating it to the Laplacian of f.
struct A1Estimate {
  std::vector<ChartPoint> points;
  Eigen::VectorXcd values;            // extrapolated A1(f) at the points
  Eigen::VectorXcd laplacian_values;  // Delta f at the points
  double delta_constant = 0.0;        // gamma minimizing |A1 - gamma Delta f|
  double misfit = 0.0;                // relative residual of that fit
  SymbolFunction a1;                  // on-demand evaluator at arbitrary points
};

inline A1Estimate estimate_A1(const ManifoldModel& model, const SmoothFunction& f,
                              const MRange& range = {}, int extra_band = kDefaultExtraBand,
                              int workers = 0, int n_points = 200,
                              std::uint64_t seed = 987654321) {
  if (model.complex_dimension() != 1)
    throw std::invalid_argument("A1 estimate implemented on one-factor models");
  if (!f.has_mixed_second())
    throw std::invalid_argument("A1 estimate needs the Laplacian of " + f.name);

  // Fit window: the upper two-thirds of the range, where the power series in
  // 1/m is resolved. Three expansion terms 1, 1/m, 1/m^2 keep the truncation
  // bias of the constant safely below the verification tolerances.
  const std::vector<int> all = range.values();
  std::vector<int> ms;
  const double cut = range.lo + (range.hi - range.lo) / 3.0;
  for (int m : all)
    if (m >= cut) ms.push_back(m);
  if (ms.size() < 4) throw std::invalid_argument("A1 estimate needs at least 4 levels in window");

  const Eigen::Index nm = static_cast<Eigen::Index>(ms.size());
  Eigen::MatrixXd design(nm, 3);
  for (Eigen::Index i = 0; i < nm; ++i) {
    const double m = ms[static_cast<std::size_t>(i)];
    design(i, 0) = 1.0;
    design(i, 1) = 1.0 / m;
    design(i, 2) = 1.0 / (m * m);
  }
  // Row of the pseudo-inverse extracting the constant term.
  const Eigen::MatrixXd pinv =
      (design.transpose() * design).ldlt().solve(design.transpose());
  const Eigen::VectorXd wfit = pinv.row(0).transpose();

  A1Estimate est;
  // Sample points stay inside the affine chart: the Laplacian comparison
  // needs the chart-0 derivative fields of f.
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n_points; ++i) {
    ChartPoint x = preferred_chart(sample_volume_uniform(model, rng));
    if (x.chart() == 1) x = ChartPoint::affine(1.0 / x.z());
    est.points.push_back(x);
  }
  est.points.push_back(ChartPoint::affine(0.0));
  const Eigen::Index np = static_cast<Eigen::Index>(est.points.size());

  Eigen::VectorXcd fv(np);
  for (Eigen::Index i = 0; i < np; ++i) fv(i) = f.value(est.points[static_cast<std::size_t>(i)]);

  Eigen::MatrixXcd data(nm, np);
  struct PerLevel {
    int m;
    Eigen::MatrixXcd t;
    std::optional<BasisEvaluator> basis;
  };
  std::vector<PerLevel> levels(ms.size());
  parallel_for(
      ms.size(),
      [&](std::size_t i) {
        const int m = ms[i];
        const SectionSpace space = build_section_space(model, Level::single(m), extra_band);
        const OperatorMatrix tf = toeplitz(space, f);
        data.row(static_cast<Eigen::Index>(i)) =
            double(m) *
            (covariant_symbol_at(tf, space, est.points) - fv).transpose();
        levels[i] = PerLevel{m, tf.entries(), space.basis()};
      },
      workers);

  est.values = (wfit.transpose().cast<Complex>() * data).transpose();

  const SmoothFunction lap = laplacian(f);
  est.laplacian_values.resize(np);
  for (Eigen::Index i = 0; i < np; ++i)
    est.laplacian_values(i) = lap.value(est.points[static_cast<std::size_t>(i)]);
  const double lap_sq = est.laplacian_values.squaredNorm();
  const double a1_norm = est.values.norm();
  if (lap_sq > 0.0 && a1_norm > 1e-12 * (1.0 + fv.norm())) {
    est.delta_constant = (est.laplacian_values.dot(est.values)).real() / lap_sq;
    est.misfit =
        (est.values - est.delta_constant * est.laplacian_values).norm() / a1_norm;
  }

  est.a1.level = Level::single(range.hi);
  est.a1.source = "A1(" + f.name + ")";
  est.a1.evaluator = [levels = std::move(levels), wfit, f](const ChartPoint& x0) {
    const ChartPoint x = preferred_chart(x0);
    Complex acc = 0.0;
    const Complex fx = f.value(x);
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const Eigen::VectorXcd sv = levels[i].basis->basis_values(x);
      const Complex num = (sv.array() * (levels[i].t * sv.conjugate()).array()).sum();
      const Complex sym = num / sv.squaredNorm();
      acc += wfit(static_cast<Eigen::Index>(i)) * double(levels[i].m) * (sym - fx);
    }
    return acc;
  };
  return est;
}

// The norm chain |B(f)|_inf <= |T_f| <= |f|_inf, per (level, function), with
// sup norms taken over a pole-inclusive grid plus the known analytic value.
struct InequalityRow {
  int m = 0;
  std::string function;
  double berezin_sup = 0.0;
  double toeplitz_norm = 0.0;
  double function_sup = 0.0;
  double violation = 0.0;  // max(berezin_sup - toeplitz_norm, toeplitz_norm - function_sup)
};

struct InequalityReport {
  std::vector<InequalityRow> rows;
  double worst_violation = 0.0;
};

inline InequalityReport inequality_battery(const ManifoldModel& model,
                                           const std::vector<int>& levels,
                                           const std::vector<SmoothFunction>& battery,
                                           int extra_band = kDefaultExtraBand, int workers = 0,
                                           int grid_u = 200, int grid_phi = 200) {
  if (model.complex_dimension() != 1)
    throw std::invalid_argument("inequality battery implemented on one-factor models");
  const std::vector<ChartPoint> pts = sample_grid_cp1(grid_u, grid_phi, true);
  InequalityReport report;
  report.rows.resize(levels.size() * battery.size());
  parallel_for(
      levels.size(),
      [&](std::size_t li) {
        const int m = levels[li];
        const SectionSpace space = build_section_space(model, Level::single(m), extra_band);
        const Eigen::MatrixXcd b = space.basis().basis_matrix(pts);
        const Eigen::VectorXd den = b.rowwise().squaredNorm();
        for (std::size_t fi = 0; fi < battery.size(); ++fi) {
          const SmoothFunction& f = battery[fi];
          const OperatorMatrix tf = toeplitz(space, f);
          const Eigen::VectorXcd num =
              ((b * tf.entries()).array() * b.conjugate().array()).rowwise().sum();
          const double bsup = (num.array() / den.array()).abs().maxCoeff();
          const double tnorm = operator_norm(tf);
          double fsup = 0.0;
          for (const ChartPoint& p : pts) fsup = std::max(fsup, std::abs(f.value(p)));
          if (f.sup_norm) fsup = std::max(fsup, *f.sup_norm);
          InequalityRow row{m, f.name, bsup, tnorm, fsup,
                            std::max(bsup - tnorm, tnorm - fsup)};
          report.rows[li * battery.size() + fi] = std::move(row);
        }
      },
      workers);
  for (const auto& r : report.rows)
    report.worst_violation = std::max(report.worst_violation, r.violation);
  return report;
}

// Residuals |Q^(m)(f) - T^(m)(f - Delta f / 2m)| with the Laplace constant
// pinned at one level and validated across the whole range.
struct TuynmanReport {
  double laplace_constant = 0.0;
  int pin_level = 0;
  struct Row {
    int m = 0;
    std::string function;
    double residual = 0.0;
  };
  std::vector<Row> rows;
  double worst = 0.0;
};

inline TuynmanReport tuynman_check(const ManifoldModel& model, const std::vector<int>& levels,
                                   const std::vector<SmoothFunction>& fs, int pin_level = 10,
                                   int extra_band = kDefaultExtraBand, int workers = 0) {
  TuynmanReport report;
  report.pin_level = pin_level;
  {
    const SectionSpace pin_space =
        build_section_space(model, Level::single(pin_level), extra_band);
    report.laplace_constant = pin_laplace_constant(pin_space, standard_function("x3"));
  }
  const double c = report.laplace_constant;
  report.rows.resize(levels.size() * fs.size());
  parallel_for(
      levels.size(),
      [&](std::size_t li) {
        const int m = levels[li];
        const SectionSpace space = build_section_space(model, Level::single(m), extra_band);
        for (std::size_t fi = 0; fi < fs.size(); ++fi) {
          const SmoothFunction& f = fs[fi];
          const OperatorMatrix q = geometric_quantization_operator(space, f);
          const SmoothFunction corrected =
              add(f, scale(-c / (2.0 * m), laplacian(f, 1.0)));
          const double r = frobenius_distance(q, toeplitz(space, corrected));
          report.rows[li * fs.size() + fi] = TuynmanReport::Row{m, f.name, r};
        }
      },
      workers);
  for (const auto& r : report.rows) report.worst = std::max(report.worst, r.residual);
  return report;
}

}  // namespace btq
