#pragma once

#include <gsl/gsl_integration.h>

#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "btq/functions.hpp"
#include "btq/geometry.hpp"

namespace btq {

inline constexpr int kDefaultExtraBand = 8;
inline constexpr std::size_t kDefaultNodeCap = 8'000'000;

// Nodes and weights integrating against the volume form Omega. Weights absorb
// the volume density: sum_i w_i f(x_i) approximates (and on the band-limited
// class equals) the integral of f against Omega.
struct QuadratureRule {
  ManifoldKind kind = ManifoldKind::CP1;
  Level level = Level::single(1);
  int extra_band = 0;
  std::vector<ChartPoint> nodes;
  std::vector<double> weights;
  std::array<int, 2> radial_order{0, 0};
  std::array<int, 2> angular_order{0, 0};
  int level_capacity = 0;  // largest level with exact monomial matrix elements

  std::size_t size() const { return nodes.size(); }
};

namespace detail {

struct GlTableDeleter {
  void operator()(gsl_integration_glfixed_table* t) const {
    gsl_integration_glfixed_table_free(t);
  }
};

struct FactorGrid {
  std::vector<FactorCoord> coords;
  std::vector<double> weights;
};

// Substituting u = |z|^2/(1+|z|^2) turns the measure Omega on one factor into
// du dphi on [0,1) x [0,2pi): Gauss-Legendre in u is exact for the polynomial
// radial parts and the uniform angle grid for the trigonometric ones.
inline FactorGrid factor_grid(int n_r, int n_phi) {
  std::unique_ptr<gsl_integration_glfixed_table, GlTableDeleter> table(
      gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n_r)));
  if (!table) throw std::runtime_error("failed to allocate Gauss-Legendre table");
  FactorGrid g;
  g.coords.reserve(static_cast<std::size_t>(n_r) * n_phi);
  g.weights.reserve(static_cast<std::size_t>(n_r) * n_phi);
  for (int i = 0; i < n_r; ++i) {
    double u = 0.0, wu = 0.0;
    gsl_integration_glfixed_point(0.0, 1.0, static_cast<std::size_t>(i), &u, &wu, table.get());
    const double r = std::sqrt(u / (1.0 - u));
    for (int p = 0; p < n_phi; ++p) {
      g.coords.push_back(FactorCoord{0, std::polar(r, kTwoPi * p / n_phi)});
      g.weights.push_back(wu * kTwoPi / n_phi);
    }
  }
  return g;
}

}  // namespace detail

// Builds a rule whose monomial matrix elements are exact through level
// m + extra_band per factor. Radial and angular orders follow the band:
// products of library functions against the level-m weight stay inside it.
inline QuadratureRule build_rule(const ManifoldModel& model, Level m,
                                 int extra_band = kDefaultExtraBand, int oversample = 1,
                                 std::size_t node_cap = kDefaultNodeCap) {
  model.require_level(m);
  if (extra_band < 0) throw std::invalid_argument("extra_band must be >= 0");
  if (oversample < 1) throw std::invalid_argument("oversample must be >= 1");

  QuadratureRule rule;
  rule.kind = model.kind();
  rule.level = m;
  rule.extra_band = extra_band;
  rule.level_capacity = m[0] + extra_band;

  std::array<detail::FactorGrid, 2> grids;
  std::size_t total = 1;
  for (int i = 0; i < m.factors(); ++i) {
    const int band = m[i] + extra_band;
    const int n_r = (band + 4) * oversample;      // exact through radial degree 2 n_r - 1
    const int n_phi = (2 * band + 1) * oversample;  // exact through angular degree n_phi - 1
    rule.radial_order[static_cast<std::size_t>(i)] = n_r;
    rule.angular_order[static_cast<std::size_t>(i)] = n_phi;
    rule.level_capacity = std::min(rule.level_capacity, band);
    total *= static_cast<std::size_t>(n_r) * static_cast<std::size_t>(n_phi);
    if (total > node_cap)
      throw std::runtime_error("quadrature node count " + std::to_string(total) +
                               " exceeds cap " + std::to_string(node_cap));
    grids[static_cast<std::size_t>(i)] = detail::factor_grid(n_r, n_phi);
  }

  rule.nodes.reserve(total);
  rule.weights.reserve(total);
  if (m.factors() == 1) {
    for (std::size_t a = 0; a < grids[0].coords.size(); ++a) {
      rule.nodes.push_back(ChartPoint(grids[0].coords[a].z, 0));
      rule.weights.push_back(grids[0].weights[a]);
    }
  } else {
    for (std::size_t a = 0; a < grids[0].coords.size(); ++a)
      for (std::size_t b = 0; b < grids[1].coords.size(); ++b) {
        rule.nodes.push_back(ChartPoint(grids[0].coords[a], grids[1].coords[b]));
        rule.weights.push_back(grids[0].weights[a] * grids[1].weights[b]);
      }
  }
  return rule;
}

template <class F>
Complex integrate(F&& f, const QuadratureRule& rule) {
  Complex acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const Complex v = f(rule.nodes[i]);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      const FactorCoord& c = rule.nodes[i].factor(0);
      throw std::runtime_error("non-finite integrand at node " + std::to_string(i) + " (z = " +
                               std::to_string(c.z.real()) + (c.z.imag() < 0 ? "" : "+") +
                               std::to_string(c.z.imag()) + "i)");
    }
    acc += rule.weights[i] * v;
  }
  return acc;
}

inline Complex integrate(const SmoothFunction& f, const QuadratureRule& rule) {
  return integrate([&f](const ChartPoint& x) { return f.value(x); }, rule);
}

}  // namespace btq
