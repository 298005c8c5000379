#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spinboson/errors.hpp"

namespace spinboson {

enum class QuadratureRule { gauss_legendre };

inline std::string_view to_string(QuadratureRule rule) {
  switch (rule) {
    case QuadratureRule::gauss_legendre:
      return "gauss-legendre";
  }
  return "unknown";
}

inline QuadratureRule parse_rule(std::string_view name) {
  if (name == "gauss-legendre" || name == "gl") return QuadratureRule::gauss_legendre;
  throw ConfigError("unknown quadrature rule '" + std::string(name) + "'");
}

/// Radial quadrature for integrals of radial functions over R^d.
///
/// The weights already carry the angular factor s_{d-1} r^{d-1}, so
/// sum_i w_i f(r_i) approximates the integral of f(|k|) over the ball of
/// radius r_max.
struct Quadrature {
  int dimension = 1;
  std::vector<double> nodes;
  std::vector<double> weights;
  double r_max = 0.0;
  QuadratureRule rule = QuadratureRule::gauss_legendre;

  std::size_t size() const { return nodes.size(); }
};

/// Surface area of the unit sphere S^{d-1}: 2 pi^{d/2} / Gamma(d/2).
inline double unit_sphere_area(int d) {
  if (d < 1) throw ConfigError("dimension must be >= 1");
  const double half = 0.5 * d;
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

namespace detail {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre_reference(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) <= 1e-16) break;
    }
    // recompute the derivative at the converged node
    double p0 = 1.0;
    double p1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    const double weight = 2.0 / ((1.0 - z * z) * dp * dp);
    x[static_cast<std::size_t>(i)] = -z;
    x[static_cast<std::size_t>(n - 1 - i)] = z;
    w[static_cast<std::size_t>(i)] = weight;
    w[static_cast<std::size_t>(n - 1 - i)] = weight;
  }
  if (n % 2 == 1) x[static_cast<std::size_t>(n / 2)] = 0.0;
}

}  // namespace detail

/// Composite radial rule: `counts[p]` Gauss-Legendre nodes on each panel
/// [breaks[p], breaks[p+1]]. Panels with zero nodes are allowed; the
/// integrand is then assumed to vanish there.
inline Quadrature build_composite_grid(int d, std::span<const double> breaks,
                                       std::span<const int> counts,
                                       QuadratureRule rule = QuadratureRule::gauss_legendre) {
  if (d < 1) throw ConfigError("grid.dimension must be >= 1");
  if (breaks.size() < 2 || counts.size() + 1 != breaks.size())
    throw ConfigError("composite grid needs one node count per panel");
  if (breaks.front() != 0.0) throw ConfigError("composite grid must start at r = 0");
  int total = 0;
  for (std::size_t p = 0; p < counts.size(); ++p) {
    if (!(breaks[p + 1] > breaks[p])) throw ConfigError("panel breakpoints must increase");
    if (counts[p] < 0) throw ConfigError("panel node count must be >= 0");
    total += counts[p];
  }
  if (total < 1) throw ConfigError("grid.n must be >= 1");

  Quadrature q;
  q.dimension = d;
  q.r_max = breaks.back();
  q.rule = rule;
  q.nodes.reserve(static_cast<std::size_t>(total));
  q.weights.reserve(static_cast<std::size_t>(total));
  const double sphere = unit_sphere_area(d);

  std::vector<double> x;
  std::vector<double> w;
  for (std::size_t p = 0; p < counts.size(); ++p) {
    if (counts[p] == 0) continue;
    detail::gauss_legendre_reference(counts[p], x, w);
    const double half = 0.5 * (breaks[p + 1] - breaks[p]);
    const double mid = 0.5 * (breaks[p + 1] + breaks[p]);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = mid + half * x[i];
      q.nodes.push_back(r);
      q.weights.push_back(half * w[i] * sphere * std::pow(r, d - 1));
    }
  }
  return q;
}

/// Single-panel Gauss-Legendre rule on [0, r_max] in d dimensions.
inline Quadrature build_radial_grid(int d, int n, double r_max,
                                    QuadratureRule rule = QuadratureRule::gauss_legendre) {
  if (n < 1) throw ConfigError("grid.n must be >= 1");
  if (!(r_max > 0.0) || !std::isfinite(r_max)) throw ConfigError("grid.r_max must be > 0");
  const double breaks[] = {0.0, r_max};
  const int counts[] = {n};
  return build_composite_grid(d, breaks, counts, rule);
}

/// sum_i w_i * values_i. Works for real or complex value types.
template <typename T>
T integrate(const Quadrature& q, std::span<const T> values) {
  if (values.size() != q.size())
    throw UsageError("integrate: expected " + std::to_string(q.size()) + " values, got " +
                     std::to_string(values.size()));
  T sum{};
  for (std::size_t i = 0; i < values.size(); ++i) sum += q.weights[i] * values[i];
  return sum;
}

template <typename T>
T integrate(const Quadrature& q, const std::vector<T>& values) {
  return integrate(q, std::span<const T>(values));
}

}  // namespace spinboson
