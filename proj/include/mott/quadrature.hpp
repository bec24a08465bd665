#pragma once

// Deterministic one-dimensional rules used by the oracles and by the smooth
// (non-oscillatory) inner integrals.

#include "mott/core.hpp"

#include <cstddef>
#include <vector>

namespace mott::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [-1, 1], nodes by Newton iteration on P_n.
inline Rule gauss_legendre(std::size_t n) {
  if (n == 0) throw DomainError("gauss_legendre: n must be positive");
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (std::size_t k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / static_cast<double>(k);
      }
      dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    r.nodes[i] = -z;
    r.nodes[n - 1 - i] = z;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return r;
}

/// Gauss-Legendre rule mapped to [lo, hi].
inline Rule gauss_legendre(std::size_t n, double lo, double hi) {
  Rule r = gauss_legendre(n);
  const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r.nodes[i] = mid + half * r.nodes[i];
    r.weights[i] *= half;
  }
  return r;
}

/// Composite rule: `panels` equal panels on [lo, hi], `per_panel` nodes each.
inline Rule composite_gauss_legendre(std::size_t panels, std::size_t per_panel, double lo, double hi) {
  const Rule base = gauss_legendre(per_panel);
  Rule r;
  r.nodes.reserve(panels * per_panel);
  r.weights.reserve(panels * per_panel);
  const double h = (hi - lo) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double a = lo + h * static_cast<double>(p);
    for (std::size_t i = 0; i < per_panel; ++i) {
      r.nodes.push_back(a + 0.5 * h * (base.nodes[i] + 1.0));
      r.weights.push_back(0.5 * h * base.weights[i]);
    }
  }
  return r;
}

/// Integral of a real or complex functor against a rule.
template <class F>
auto integrate(const Rule& r, F&& f) {
  using T = decltype(f(0.0));
  T acc{};
  for (std::size_t i = 0; i < r.size(); ++i) acc += r.weights[i] * f(r.nodes[i]);
  return acc;
}

} // namespace mott::quad
