#pragma once

#include <cstdio>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "btq/geometry.hpp"

namespace btq {

enum class DerivativeKind { analytic, finite_difference, none };

// A classical observable: point evaluation plus chart-0 derivative data.
// Derivative fields are meaningful on one-factor manifolds only; composite
// functions built by the combinators below propagate them analytically,
// Poisson brackets carry finite-difference-backed ones.
struct SmoothFunction {
  using Eval = std::function<Complex(const ChartPoint&)>;

  std::string name;
  Eval value;
  Eval dz;      // df/dz
  Eval dzbar;   // df/dzbar
  Eval dzzbar;  // d^2 f / dz dzbar
  DerivativeKind deriv_kind = DerivativeKind::none;
  std::optional<double> sup_norm;
  bool is_real = false;
  int band = -1;  // max monomial degree against the matched (1+|z|^2) weight; -1 unknown

  bool has_first_derivatives() const { return static_cast<bool>(dz) && static_cast<bool>(dzbar); }
  bool has_mixed_second() const { return static_cast<bool>(dzzbar); }
};

namespace detail {

inline Complex ipow(Complex z, int n) {
  Complex r = 1.0;
  for (int i = 0; i < n; ++i) r *= z;
  return r;
}

inline ChartPoint to_affine(const ChartPoint& p) {
  ChartPoint q = p;
  for (int i = 0; i < p.factors(); ++i)
    if (q.factor(i).chart != 0) q = q.to_chart(0, i);
  return q;
}

inline void require_single_factor(const ChartPoint& p) {
  if (p.factors() != 1)
    throw std::invalid_argument("function expects a one-factor chart point");
}

}  // namespace detail

// Attaches central finite-difference derivative fields computed from value.
// The first-derivative step follows the library-wide convention 1e-5; the
// mixed second derivative uses a larger step balancing truncation against
// roundoff (an h^2 denominator at h = 1e-5 sits at the double roundoff floor).
inline void attach_fd_derivatives(SmoothFunction& f, double first_step = 1e-5,
                                  double second_step = 1e-4) {
  const SmoothFunction::Eval v = f.value;
  const double h1 = first_step, h2 = second_step;
  f.dz = [v, h1](const ChartPoint& p0) {
    const ChartPoint p = detail::to_affine(p0);
    detail::require_single_factor(p);
    const Complex z = p.z();
    const Complex fx = (v(ChartPoint(z + h1)) - v(ChartPoint(z - h1))) / (2.0 * h1);
    const Complex fy = (v(ChartPoint(z + Complex(0, h1))) - v(ChartPoint(z - Complex(0, h1)))) / (2.0 * h1);
    return 0.5 * (fx - Complex(0, 1) * fy);
  };
  f.dzbar = [v, h1](const ChartPoint& p0) {
    const ChartPoint p = detail::to_affine(p0);
    detail::require_single_factor(p);
    const Complex z = p.z();
    const Complex fx = (v(ChartPoint(z + h1)) - v(ChartPoint(z - h1))) / (2.0 * h1);
    const Complex fy = (v(ChartPoint(z + Complex(0, h1))) - v(ChartPoint(z - Complex(0, h1)))) / (2.0 * h1);
    return 0.5 * (fx + Complex(0, 1) * fy);
  };
  f.dzzbar = [v, h2](const ChartPoint& p0) {
    const ChartPoint p = detail::to_affine(p0);
    detail::require_single_factor(p);
    const Complex z = p.z();
    const Complex lap = v(ChartPoint(z + h2)) + v(ChartPoint(z - h2)) +
                        v(ChartPoint(z + Complex(0, h2))) + v(ChartPoint(z - Complex(0, h2))) -
                        4.0 * v(ChartPoint(z));
    return 0.25 * lap / (h2 * h2);
  };
  f.deriv_kind = DerivativeKind::finite_difference;
}

inline double monomial_sup_norm(int j, int k) {
  if (j == k) return 1.0;
  const double a = 0.5 * (j + k);
  const double m = std::max(j, k);
  return std::pow(a, a) * std::pow(m - a, m - a) / std::pow(m, m);
}

// monomial(j,k) = z^j zbar^k (1+|z|^2)^(-max(j,k)); extends smoothly through
// the chart at infinity, where it reads w^(M-j) wbar^(M-k) (1+|w|^2)^(-M).
inline SmoothFunction monomial(int j, int k) {
  if (j < 0 || k < 0) throw std::invalid_argument("monomial exponents must be >= 0");
  const int M = std::max(j, k);
  SmoothFunction f;
  f.name = "monomial(" + std::to_string(j) + "," + std::to_string(k) + ")";
  f.band = M;
  f.is_real = (j == k);
  f.deriv_kind = DerivativeKind::analytic;
  f.sup_norm = monomial_sup_norm(j, k);
  f.value = [j, k, M](const ChartPoint& p) -> Complex {
    detail::require_single_factor(p);
    const Complex z = p.z();
    const double denom = std::pow(1.0 + std::norm(z), M);
    if (p.chart() == 0) return detail::ipow(z, j) * detail::ipow(std::conj(z), k) / denom;
    return detail::ipow(z, M - j) * detail::ipow(std::conj(z), M - k) / denom;
  };
  f.dz = [j, k, M](const ChartPoint& p0) -> Complex {
    const ChartPoint p = detail::to_affine(p0);
    detail::require_single_factor(p);
    const Complex z = p.z(), zb = std::conj(z);
    const double d = 1.0 + std::norm(z);
    Complex r = -double(M) * detail::ipow(z, j) * detail::ipow(zb, k + 1) / std::pow(d, M + 1);
    if (j > 0) r += double(j) * detail::ipow(z, j - 1) * detail::ipow(zb, k) / std::pow(d, M);
    return r;
  };
  f.dzbar = [j, k, M](const ChartPoint& p0) -> Complex {
    const ChartPoint p = detail::to_affine(p0);
    detail::require_single_factor(p);
    const Complex z = p.z(), zb = std::conj(z);
    const double d = 1.0 + std::norm(z);
    Complex r = -double(M) * detail::ipow(z, j + 1) * detail::ipow(zb, k) / std::pow(d, M + 1);
    if (k > 0) r += double(k) * detail::ipow(z, j) * detail::ipow(zb, k - 1) / std::pow(d, M);
    return r;
  };
  f.dzzbar = [j, k, M](const ChartPoint& p0) -> Complex {
    const ChartPoint p = detail::to_affine(p0);
    detail::require_single_factor(p);
    const Complex z = p.z(), zb = std::conj(z);
    const double d = 1.0 + std::norm(z);
    Complex r = -double(M) * (j + k + 1) * detail::ipow(z, j) * detail::ipow(zb, k) / std::pow(d, M + 1);
    r += double(M) * (M + 1) * detail::ipow(z, j + 1) * detail::ipow(zb, k + 1) / std::pow(d, M + 2);
    if (j > 0 && k > 0)
      r += double(j) * double(k) * detail::ipow(z, j - 1) * detail::ipow(zb, k - 1) / std::pow(d, M);
    return r;
  };
  return f;
}

inline SmoothFunction constant(Complex c, std::string name = {}) {
  SmoothFunction f;
  f.name = name.empty() ? "const" : std::move(name);
  f.band = 0;
  f.is_real = (c.imag() == 0.0);
  f.deriv_kind = DerivativeKind::analytic;
  f.sup_norm = std::abs(c);
  f.value = [c](const ChartPoint&) { return c; };
  auto zero = [](const ChartPoint&) { return Complex(0.0); };
  f.dz = zero;
  f.dzbar = zero;
  f.dzzbar = zero;
  return f;
}

namespace detail {
inline DerivativeKind combine_kinds(DerivativeKind a, DerivativeKind b) {
  if (a == DerivativeKind::none || b == DerivativeKind::none) return DerivativeKind::none;
  if (a == DerivativeKind::finite_difference || b == DerivativeKind::finite_difference)
    return DerivativeKind::finite_difference;
  return DerivativeKind::analytic;
}
}  // namespace detail

inline SmoothFunction add(const SmoothFunction& f, const SmoothFunction& g) {
  SmoothFunction h;
  h.name = f.name + "+" + g.name;
  h.is_real = f.is_real && g.is_real;
  h.band = (f.band >= 0 && g.band >= 0) ? std::max(f.band, g.band) : -1;
  h.deriv_kind = detail::combine_kinds(f.deriv_kind, g.deriv_kind);
  h.value = [f, g](const ChartPoint& p) { return f.value(p) + g.value(p); };
  if (f.dz && g.dz) h.dz = [f, g](const ChartPoint& p) { return f.dz(p) + g.dz(p); };
  if (f.dzbar && g.dzbar) h.dzbar = [f, g](const ChartPoint& p) { return f.dzbar(p) + g.dzbar(p); };
  if (f.dzzbar && g.dzzbar)
    h.dzzbar = [f, g](const ChartPoint& p) { return f.dzzbar(p) + g.dzzbar(p); };
  return h;
}

inline SmoothFunction scale(Complex c, const SmoothFunction& f) {
  SmoothFunction h;
  h.name = "scale(" + f.name + ")";
  h.is_real = f.is_real && c.imag() == 0.0;
  h.band = f.band;
  h.deriv_kind = f.deriv_kind;
  h.value = [c, f](const ChartPoint& p) { return c * f.value(p); };
  if (f.dz) h.dz = [c, f](const ChartPoint& p) { return c * f.dz(p); };
  if (f.dzbar) h.dzbar = [c, f](const ChartPoint& p) { return c * f.dzbar(p); };
  if (f.dzzbar) h.dzzbar = [c, f](const ChartPoint& p) { return c * f.dzzbar(p); };
  if (f.sup_norm) h.sup_norm = std::abs(c) * *f.sup_norm;
  return h;
}

inline SmoothFunction multiply(const SmoothFunction& f, const SmoothFunction& g) {
  SmoothFunction h;
  h.name = f.name + "*" + g.name;
  h.is_real = f.is_real && g.is_real;
  h.band = (f.band >= 0 && g.band >= 0) ? f.band + g.band : -1;
  h.deriv_kind = detail::combine_kinds(f.deriv_kind, g.deriv_kind);
  h.value = [f, g](const ChartPoint& p) { return f.value(p) * g.value(p); };
  if (f.dz && g.dz)
    h.dz = [f, g](const ChartPoint& p) { return f.dz(p) * g.value(p) + f.value(p) * g.dz(p); };
  if (f.dzbar && g.dzbar)
    h.dzbar = [f, g](const ChartPoint& p) {
      return f.dzbar(p) * g.value(p) + f.value(p) * g.dzbar(p);
    };
  if (f.dzzbar && g.dzzbar && f.dz && g.dz && f.dzbar && g.dzbar)
    h.dzzbar = [f, g](const ChartPoint& p) {
      return f.dzzbar(p) * g.value(p) + f.dz(p) * g.dzbar(p) + f.dzbar(p) * g.dz(p) +
             f.value(p) * g.dzzbar(p);
    };
  return h;
}

// The named library: one, the sphere coordinates x1, x2, x3 and the balanced
// monomials. x1 = 2 Re z/(1+|z|^2), x2 = 2 Im z/(1+|z|^2), x3 = (|z|^2-1)/(1+|z|^2).
inline SmoothFunction standard_function(const std::string& name) {
  if (name == "one") {
    SmoothFunction f = constant(1.0, "one");
    return f;
  }
  if (name == "x1") {
    SmoothFunction f = add(monomial(1, 0), monomial(0, 1));
    f.name = "x1";
    f.is_real = true;
    f.sup_norm = 1.0;
    f.band = 1;
    return f;
  }
  if (name == "x2") {
    SmoothFunction f = add(scale(Complex(0, -1), monomial(1, 0)), scale(Complex(0, 1), monomial(0, 1)));
    f.name = "x2";
    f.is_real = true;
    f.sup_norm = 1.0;
    f.band = 1;
    return f;
  }
  if (name == "x3") {
    SmoothFunction f = add(scale(2.0, monomial(1, 1)), constant(-1.0));
    f.name = "x3";
    f.is_real = true;
    f.sup_norm = 1.0;
    f.band = 1;
    return f;
  }
  int j = -1, k = -1;
  if (std::sscanf(name.c_str(), "monomial(%d,%d)", &j, &k) == 2 && j >= 0 && k >= 0)
    return monomial(j, k);
  throw std::invalid_argument("unknown function name: " + name);
}

// Pullback of a one-factor function along the projection to the given factor.
// Carries no derivative data (the chart calculus here is one-dimensional).
inline SmoothFunction lift(const SmoothFunction& base, int factor, std::string name = {}) {
  if (factor < 0 || factor > 1) throw std::invalid_argument("factor index must be 0 or 1");
  SmoothFunction f;
  f.name = name.empty() ? base.name + (factor == 0 ? "_a" : "_b") : std::move(name);
  f.is_real = base.is_real;
  f.sup_norm = base.sup_norm;
  f.band = base.band;
  f.deriv_kind = DerivativeKind::none;
  f.value = [base, factor](const ChartPoint& p) {
    if (p.factors() != 2) throw std::invalid_argument("lifted function expects a product point");
    const FactorCoord& c = p.factor(factor);
    return base.value(ChartPoint(c.z, c.chart));
  };
  return f;
}

// Test battery used by the inequality and adjointness checks.
inline std::vector<SmoothFunction> standard_battery(const ManifoldModel& model) {
  std::vector<SmoothFunction> fs;
  if (model.complex_dimension() == 1) {
    fs.push_back(standard_function("one"));
    fs.push_back(standard_function("x1"));
    fs.push_back(standard_function("x2"));
    fs.push_back(standard_function("x3"));
    fs.push_back(monomial(1, 1));
    fs.push_back(monomial(2, 0));
    fs.push_back(monomial(2, 1));
    SmoothFunction mix = add(standard_function("x1"), standard_function("x3"));
    mix.name = "x1+x3";
    mix.sup_norm = std::sqrt(2.0);  // max over the sphere of x1+x3
    mix.is_real = true;
    fs.push_back(std::move(mix));
    return fs;
  }
  fs.push_back(constant(1.0, "one"));
  for (const char* n : {"x1", "x2", "x3"}) {
    fs.push_back(lift(standard_function(n), 0));
    fs.push_back(lift(standard_function(n), 1));
  }
  SmoothFunction prod = multiply(lift(standard_function("x3"), 0), lift(standard_function("x3"), 1));
  prod.name = "x3_a*x3_b";
  prod.sup_norm = 1.0;
  prod.is_real = true;
  prod.band = 1;
  fs.push_back(std::move(prod));
  return fs;
}

inline SmoothFunction function_by_name(const ManifoldModel& model, const std::string& name) {
  if (model.complex_dimension() == 1) return standard_function(name);
  if (name == "one") {
    SmoothFunction f = constant(1.0, "one");
    return f;
  }
  if (name.size() > 2 && (name.ends_with("_a") || name.ends_with("_b"))) {
    const int factor = name.ends_with("_a") ? 0 : 1;
    return lift(standard_function(name.substr(0, name.size() - 2)), factor, name);
  }
  throw std::invalid_argument("unknown function name: " + name);
}

// {f,g} = omega(X_f, X_g) with omega(X_f, .) = df. In the chart this is
// i (1+|z|^2)^2 (dzbar(f) dz(g) - dz(f) dzbar(g)). The result carries
// finite-difference-backed derivative fields.
inline SmoothFunction poisson_bracket(const SmoothFunction& f, const SmoothFunction& g) {
  if (!f.has_first_derivatives() || !g.has_first_derivatives())
    throw std::invalid_argument("poisson_bracket requires first-derivative data");
  SmoothFunction h;
  h.name = "{" + f.name + "," + g.name + "}";
  h.is_real = f.is_real && g.is_real;
  h.band = (f.band >= 0 && g.band >= 0) ? f.band + g.band + 2 : -1;
  h.value = [f, g](const ChartPoint& p0) {
    const ChartPoint p = detail::to_affine(p0);
    detail::require_single_factor(p);
    const double s = 1.0 + std::norm(p.z());
    return Complex(0, 1) * s * s * (f.dzbar(p) * g.dz(p) - f.dz(p) * g.dzbar(p));
  };
  attach_fd_derivatives(h);
  return h;
}

// Laplace-Beltrami constant for this metric normalization, pinned against the
// prequantum/Toeplitz identity at one level (see operators::pin_laplace_constant)
// and used globally.
inline constexpr double kLaplaceConstant = 2.0;

inline SmoothFunction laplacian(const SmoothFunction& f, double c = kLaplaceConstant) {
  if (!f.has_mixed_second())
    throw std::invalid_argument("laplacian requires the mixed second derivative");
  SmoothFunction h;
  h.name = "lap(" + f.name + ")";
  h.is_real = f.is_real;
  h.band = f.band >= 0 ? f.band + 2 : -1;
  h.value = [f, c](const ChartPoint& p0) {
    const ChartPoint p = detail::to_affine(p0);
    detail::require_single_factor(p);
    const double s = 1.0 + std::norm(p.z());
    return c * s * s * f.dzzbar(p);
  };
  attach_fd_derivatives(h);
  return h;
}

// Chart coefficient of the (1,0) part of the Hamiltonian field of f:
// X_f = a d/dz + conj. part, a = -i (1+|z|^2)^2 dzbar(f).
inline Complex hamiltonian_coefficient(const SmoothFunction& f, const ChartPoint& p0) {
  if (!f.dzbar) throw std::invalid_argument("hamiltonian field requires dzbar");
  const ChartPoint p = detail::to_affine(p0);
  detail::require_single_factor(p);
  const double s = 1.0 + std::norm(p.z());
  return Complex(0, -1) * s * s * f.dzbar(p);
}

}  // namespace btq
