#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace btq {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// One CP^1 factor coordinate. Chart 0 is the affine chart, chart 1 the chart
// at infinity; the transition is w = 1/z, so every point of the sphere has a
// finite coordinate in at least one chart.
struct FactorCoord {
  int chart = 0;
  Complex z{};
};

class ChartPoint {
 public:
  ChartPoint() { coords_[0] = FactorCoord{}; }
  explicit ChartPoint(Complex z, int chart = 0) : n_(1) {
    coords_[0] = FactorCoord{chart, z};
    check();
  }
  ChartPoint(FactorCoord a, FactorCoord b) : n_(2) {
    coords_[0] = a;
    coords_[1] = b;
    check();
  }

  static ChartPoint affine(Complex z) { return ChartPoint(z, 0); }
  static ChartPoint infinity_chart(Complex w) { return ChartPoint(w, 1); }
  static ChartPoint product(const ChartPoint& a, const ChartPoint& b) {
    if (a.factors() != 1 || b.factors() != 1)
      throw std::invalid_argument("ChartPoint::product expects two one-factor points");
    return ChartPoint(a.coords_[0], b.coords_[0]);
  }

  int factors() const { return n_; }
  const FactorCoord& factor(int i) const { return coords_[static_cast<std::size_t>(i)]; }

  // Single-factor accessors.
  int chart() const { return coords_[0].chart; }
  Complex z() const { return coords_[0].z; }

  ChartPoint with_factor(int i, FactorCoord c) const {
    ChartPoint out = *this;
    out.coords_[static_cast<std::size_t>(i)] = c;
    out.check();
    return out;
  }

  // Express factor i in the requested chart. The origin of either chart has
  // no finite coordinate in the other one.
  ChartPoint to_chart(int target, int i = 0) const {
    const FactorCoord& c = coords_[static_cast<std::size_t>(i)];
    if (c.chart == target) return *this;
    if (c.z == 0.0)
      throw std::domain_error("chart transition undefined at the opposite pole");
    return with_factor(i, FactorCoord{target, 1.0 / c.z});
  }

 private:
  void check() const {
    for (int i = 0; i < n_; ++i) {
      const FactorCoord& c = coords_[static_cast<std::size_t>(i)];
      if (!std::isfinite(c.z.real()) || !std::isfinite(c.z.imag()))
        throw std::invalid_argument("chart coordinate must be finite");
      if (c.chart != 0 && c.chart != 1)
        throw std::invalid_argument("chart id must be 0 or 1");
    }
  }

  std::array<FactorCoord, 2> coords_{};
  int n_ = 1;
};

// Tensor-power multi-level: one integer per factor. Plays the role of 1/hbar.
class Level {
 public:
  static Level single(int m) {
    require_ge1(m);
    Level l;
    l.m_[0] = m;
    l.n_ = 1;
    return l;
  }
  static Level pair(int m1, int m2) {
    require_ge1(m1);
    require_ge1(m2);
    Level l;
    l.m_[0] = m1;
    l.m_[1] = m2;
    l.n_ = 2;
    return l;
  }

  int factors() const { return n_; }
  int operator[](int i) const { return m_[static_cast<std::size_t>(i)]; }

  friend bool operator==(const Level& a, const Level& b) {
    if (a.n_ != b.n_) return false;
    for (int i = 0; i < a.n_; ++i)
      if (a.m_[static_cast<std::size_t>(i)] != b.m_[static_cast<std::size_t>(i)]) return false;
    return true;
  }
  friend bool operator!=(const Level& a, const Level& b) { return !(a == b); }

  std::string str() const {
    std::string s = std::to_string(m_[0]);
    if (n_ == 2) s += "," + std::to_string(m_[1]);
    return s;
  }

 private:
  static void require_ge1(int m) {
    if (m < 1) throw std::invalid_argument("level must be >= 1");
  }
  std::array<int, 2> m_{0, 0};
  int n_ = 1;
};

enum class ManifoldKind { CP1, CP1xCP1 };

// Chart model of the manifold. Normalization: omega = i (1+|z|^2)^-2 dz^dzbar
// on each CP^1 factor, giving per-factor total volume 2*pi and level-1 bundle
// density (1+|z|^2)^-1. On the product everything factors.
class ManifoldModel {
 public:
  static ManifoldModel cp1() { return ManifoldModel(ManifoldKind::CP1); }
  static ManifoldModel cp1xcp1() { return ManifoldModel(ManifoldKind::CP1xCP1); }
  static ManifoldModel named(std::string_view name) {
    if (name == "cp1") return cp1();
    if (name == "cp1xcp1") return cp1xcp1();
    throw std::invalid_argument("unknown manifold: " + std::string(name));
  }

  ManifoldKind kind() const { return kind_; }
  int complex_dimension() const { return kind_ == ManifoldKind::CP1 ? 1 : 2; }
  int factors() const { return complex_dimension(); }
  std::string name() const { return kind_ == ManifoldKind::CP1 ? "cp1" : "cp1xcp1"; }

  void require_point(const ChartPoint& x) const {
    if (x.factors() != factors())
      throw std::invalid_argument("chart point has wrong number of factors for " + name());
  }
  void require_level(Level m) const {
    if (m.factors() != factors())
      throw std::invalid_argument("level has wrong number of factors for " + name());
  }

  double factor_bundle_density(const ChartPoint& x, int i) const {
    return 1.0 / (1.0 + std::norm(x.factor(i).z));
  }
  double bundle_metric_density(const ChartPoint& x) const {
    require_point(x);
    double h = 1.0;
    for (int i = 0; i < factors(); ++i) h *= factor_bundle_density(x, i);
    return h;
  }
  double bundle_metric_density(const ChartPoint& x, Level m) const {
    require_point(x);
    require_level(m);
    double h = 1.0;
    for (int i = 0; i < factors(); ++i) h *= std::pow(factor_bundle_density(x, i), m[i]);
    return h;
  }

  double factor_volume_density(const ChartPoint& x, int i) const {
    const double h = factor_bundle_density(x, i);
    return 2.0 * h * h;
  }
  // Density of Omega = omega^n / n! against Lebesgue measure of the chart.
  double volume_density(const ChartPoint& x) const {
    require_point(x);
    double v = 1.0;
    for (int i = 0; i < factors(); ++i) v *= factor_volume_density(x, i);
    return v;
  }
  double total_volume() const {
    return kind_ == ManifoldKind::CP1 ? kTwoPi : kTwoPi * kTwoPi;
  }

 private:
  explicit ManifoldModel(ManifoldKind k) : kind_(k) {}
  ManifoldKind kind_;
};

// K(x) = sum_i m_i log(1+|z_i|^2), the potential of the level-m bundle metric
// relative to the chart-0 frame; exp(-K) equals the level-m bundle density.
inline double kaehler_potential(const ManifoldModel& model, Level m, const ChartPoint& x) {
  model.require_point(x);
  model.require_level(m);
  double k = 0.0;
  for (int i = 0; i < x.factors(); ++i) {
    if (x.factor(i).chart != 0)
      throw std::invalid_argument("potential defined relative to chart-0 frame");
    k += m[i] * std::log1p(std::norm(x.factor(i).z));
  }
  return k;
}

// Checks the curvature relation: the mixed second derivative of -log(bundle
// density), taken by finite differences, must equal volume_density/2 factor by
// factor, and the cross-factor second derivatives must vanish. Returns the
// maximum absolute deviation over the sample points.
inline double verify_quantization_condition(const ManifoldModel& model,
                                            const std::vector<ChartPoint>& sample_points,
                                            double step = 1e-4) {
  auto logh = [&](const ChartPoint& p) { return std::log(model.bundle_metric_density(p)); };
  auto shift = [](const ChartPoint& p, int i, Complex dz) {
    FactorCoord c = p.factor(i);
    c.z += dz;
    return p.with_factor(i, c);
  };
  const double h = step;
  double worst = 0.0;
  for (const ChartPoint& p : sample_points) {
    model.require_point(p);
    for (int i = 0; i < p.factors(); ++i) {
      // d^2/dz dzbar = (1/4)(d^2/dx^2 + d^2/dy^2) in the chart coordinate
      const double lap = (logh(shift(p, i, {h, 0})) + logh(shift(p, i, {-h, 0})) +
                          logh(shift(p, i, {0, h})) + logh(shift(p, i, {0, -h})) -
                          4.0 * logh(p)) /
                         (h * h);
      const double curv = -0.25 * lap;
      worst = std::max(worst, std::abs(curv - 0.5 * model.factor_volume_density(p, i)));
    }
    if (p.factors() == 2) {
      // cross term d^2 log h / dz_1 dzbar_2 must vanish (densities factor)
      auto cross = [&](Complex d1, Complex d2) {
        return (logh(shift(shift(p, 0, d1), 1, d2)) - logh(shift(shift(p, 0, d1), 1, -d2)) -
                logh(shift(shift(p, 0, -d1), 1, d2)) + logh(shift(shift(p, 0, -d1), 1, -d2))) /
               (4.0 * h * h);
      };
      const double dxx = cross({h, 0}, {h, 0});
      const double dxy = cross({h, 0}, {0, h});
      const double dyx = cross({0, h}, {h, 0});
      const double dyy = cross({0, h}, {0, h});
      // real and imaginary parts of the (1,0)x(0,1) cross derivative
      worst = std::max(worst, std::abs(0.25 * (dxx + dyy)));
      worst = std::max(worst, std::abs(0.25 * (dxy - dyx)));
    }
  }
  return worst;
}

// Moves each factor with |z| > 1 to the other chart. Frame-invariant
// quantities evaluated at the returned point avoid the z^m overflow of the
// wrong chart near the poles.
inline ChartPoint preferred_chart(const ChartPoint& x) {
  ChartPoint out = x;
  for (int i = 0; i < x.factors(); ++i) {
    const FactorCoord& c = out.factor(i);
    if (std::norm(c.z) > 1.0) out = out.to_chart(1 - c.chart, i);
  }
  return out;
}

// Volume-uniform sampling: u = |z|^2/(1+|z|^2) is uniform on [0,1) under
// Omega, the angle is uniform.
template <class Rng>
ChartPoint sample_volume_uniform(const ManifoldModel& model, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  auto one = [&]() {
    const double u = unit(rng);
    const double r = std::sqrt(u / (1.0 - u));
    return FactorCoord{0, std::polar(r, angle(rng))};
  };
  if (model.factors() == 1) return ChartPoint(one().z, 0);
  FactorCoord a = one();
  FactorCoord b = one();
  return ChartPoint(a, b);
}

// Uniform on the chart-0 disk |z| < radius (per factor).
template <class Rng>
ChartPoint sample_disk(const ManifoldModel& model, double radius, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  auto one = [&]() {
    return FactorCoord{0, std::polar(radius * std::sqrt(unit(rng)), angle(rng))};
  };
  if (model.factors() == 1) return ChartPoint(one().z, 0);
  FactorCoord a = one();
  FactorCoord b = one();
  return ChartPoint(a, b);
}

// Deterministic (u, phi) grid on CP^1, optionally with the two poles (the
// chart-1 origin stands in for infinity).
inline std::vector<ChartPoint> sample_grid_cp1(int nu, int nphi, bool include_poles = true) {
  if (nu < 1 || nphi < 1) throw std::invalid_argument("grid orders must be >= 1");
  std::vector<ChartPoint> pts;
  pts.reserve(static_cast<std::size_t>(nu) * nphi + 2);
  for (int j = 0; j < nu; ++j) {
    const double u = (j + 0.5) / nu;
    const double r = std::sqrt(u / (1.0 - u));
    for (int p = 0; p < nphi; ++p)
      pts.push_back(ChartPoint(std::polar(r, kTwoPi * p / nphi), 0));
  }
  if (include_poles) {
    pts.push_back(ChartPoint::affine(0.0));
    pts.push_back(ChartPoint::infinity_chart(0.0));
  }
  return pts;
}

}  // namespace btq
