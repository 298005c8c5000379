#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spinboson/errors.hpp"
#include "spinboson/quadrature.hpp"

namespace spinboson {

using cplx = std::complex<double>;

/// Spin branch of the block-diagonalised Hamiltonian.
enum class Sigma : int { plus = 1, minus = -1 };

inline constexpr Sigma kBothBranches[] = {Sigma::plus, Sigma::minus};

inline double sign(Sigma s) { return static_cast<double>(static_cast<int>(s)); }

inline std::string_view to_string(Sigma s) { return s == Sigma::plus ? "+" : "-"; }

struct Dispersion {
  enum class Family { abs_k, tabulated };
  Family family = Family::abs_k;
  std::vector<double> table;
};

struct Coupling {
  enum class Family { sqrt_cutoff, sqrt_gaussian, tabulated, zero };
  Family family = Family::sqrt_cutoff;
  double cutoff = 1.0;  // Lambda
  std::vector<cplx> table;
};

inline std::string_view to_string(Dispersion::Family f) {
  return f == Dispersion::Family::abs_k ? "abs-k" : "tabulated";
}

inline std::string_view to_string(Coupling::Family f) {
  switch (f) {
    case Coupling::Family::sqrt_cutoff:
      return "sqrt-cutoff";
    case Coupling::Family::sqrt_gaussian:
      return "sqrt-gaussian";
    case Coupling::Family::tabulated:
      return "tabulated";
    case Coupling::Family::zero:
      return "zero";
  }
  return "unknown";
}

/// Physical parameters: atomic level eps, coupling constant alpha,
/// dimension d, dispersion omega and form factor lambda.
struct ModelSpec {
  double eps = 1.0;
  double alpha = 0.0;
  int dimension = 1;
  Dispersion dispersion;
  Coupling coupling;

  void validate() const {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("model.eps must be > 0");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("model.alpha must be >= 0");
    if (dimension < 1) throw ConfigError("model.dimension must be >= 1");
    const bool built_in = coupling.family == Coupling::Family::sqrt_cutoff ||
                          coupling.family == Coupling::Family::sqrt_gaussian;
    if (built_in && (!(coupling.cutoff > 0.0) || !std::isfinite(coupling.cutoff)))
      throw ConfigError("model.coupling.lambda_cutoff must be > 0");
  }

  bool has_tables() const {
    return dispersion.family == Dispersion::Family::tabulated ||
           coupling.family == Coupling::Family::tabulated;
  }
};

struct GridSpec {
  int n = 32;
  double r_max = 4.0;
  QuadratureRule rule = QuadratureRule::gauss_legendre;
};

/// Quadrature adapted to the model. A sharp cutoff Lambda < r_max splits the
/// interval at Lambda so no panel straddles the discontinuity.
inline Quadrature make_grid(const ModelSpec& spec, const GridSpec& grid) {
  if (grid.n < 1) throw ConfigError("grid.n must be >= 1");
  if (!(grid.r_max > 0.0) || !std::isfinite(grid.r_max)) throw ConfigError("grid.r_max must be > 0");
  if (spec.coupling.family == Coupling::Family::sqrt_cutoff) {
    const double cut = spec.coupling.cutoff;
    if (cut > grid.r_max)
      throw ConfigError("model.coupling.lambda_cutoff exceeds grid.r_max (coupling would be clipped)");
    if (cut < grid.r_max) {
      // at least two coupled nodes whenever n >= 2
      const int inner = std::max((grid.n + 1) / 2, std::min(grid.n, 2));
      const double breaks[] = {0.0, cut, grid.r_max};
      const int counts[] = {inner, grid.n - inner};
      return build_composite_grid(spec.dimension, breaks, counts, grid.rule);
    }
  }
  return build_radial_grid(spec.dimension, grid.n, grid.r_max, grid.rule);
}

struct Sampled {
  std::vector<double> omega;
  std::vector<cplx> lambda;
};

/// omega(r_i) and lambda(r_i) at the quadrature nodes.
inline Sampled sample(const ModelSpec& spec, const Quadrature& q) {
  spec.validate();
  const std::size_t n = q.size();
  Sampled s;
  s.omega.resize(n);
  s.lambda.resize(n);

  if (spec.dispersion.family == Dispersion::Family::tabulated) {
    if (spec.dispersion.table.size() != n)
      throw ConfigError("model.dispersion.table has " + std::to_string(spec.dispersion.table.size()) +
                        " entries, grid has " + std::to_string(n) + " nodes");
    s.omega = spec.dispersion.table;
  } else {
    s.omega = q.nodes;
  }
  for (double w : s.omega) {
    if (!std::isfinite(w)) throw ModelError("dispersion value is not finite");
    if (w < 0.0) throw ModelError("dispersion must be nonnegative (got " + std::to_string(w) + ")");
  }

  const double cut = spec.coupling.cutoff;
  switch (spec.coupling.family) {
    case Coupling::Family::sqrt_cutoff:
      if (cut > q.r_max)
        throw ConfigError("model.coupling.lambda_cutoff exceeds grid.r_max (coupling would be clipped)");
      for (std::size_t i = 0; i < n; ++i) {
        const double r = q.nodes[i];
        s.lambda[i] = r <= cut ? std::sqrt(r) : 0.0;
      }
      break;
    case Coupling::Family::sqrt_gaussian:
      for (std::size_t i = 0; i < n; ++i) {
        const double r = q.nodes[i];
        s.lambda[i] = std::sqrt(r) * std::exp(-(r * r) / (cut * cut));
      }
      break;
    case Coupling::Family::tabulated:
      if (spec.coupling.table.size() != n)
        throw ConfigError("model.coupling.table has " + std::to_string(spec.coupling.table.size()) +
                          " entries, grid has " + std::to_string(n) + " nodes");
      s.lambda = spec.coupling.table;
      break;
    case Coupling::Family::zero:
      break;
  }
  for (const cplx& l : s.lambda)
    if (!std::isfinite(l.real()) || !std::isfinite(l.imag()))
      throw ModelError("coupling value is not finite");

  if (spec.coupling.family != Coupling::Family::zero &&
      std::all_of(s.lambda.begin(), s.lambda.end(), [](const cplx& l) { return l == 0.0; }))
    throw ModelError("coupling vanishes at every grid node; use the 'zero' family for a decoupled model");
  return s;
}

/// A model sampled on a grid. Every downstream routine consumes this.
///
/// In weighted coordinates a function f is represented by sqrt(w_i) f(r_i);
/// `amplitude` holds sqrt(w_i) lambda_i and `spectral_weight` w_i |lambda_i|^2.
struct DiscreteModel {
  ModelSpec spec;
  Quadrature quad;
  std::optional<GridSpec> grid;  // set when built from a GridSpec (enables refinement)
  std::vector<double> omega;
  std::vector<cplx> lambda;
  std::vector<cplx> amplitude;
  std::vector<double> spectral_weight;

  double eps() const { return spec.eps; }
  double alpha() const { return spec.alpha; }
  std::size_t size() const { return omega.size(); }
  bool decoupled() const { return spec.coupling.family == Coupling::Family::zero; }

  DiscreteModel with_alpha(double alpha) const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be >= 0");
    DiscreteModel copy = *this;
    copy.spec.alpha = alpha;
    return copy;
  }
};

inline DiscreteModel discretize(const ModelSpec& spec, const Quadrature& q) {
  DiscreteModel m;
  m.spec = spec;
  m.quad = q;
  Sampled s = sample(spec, q);
  m.omega = std::move(s.omega);
  m.lambda = std::move(s.lambda);
  m.amplitude.resize(m.size());
  m.spectral_weight.resize(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    m.amplitude[i] = std::sqrt(q.weights[i]) * m.lambda[i];
    m.spectral_weight[i] = q.weights[i] * std::norm(m.lambda[i]);
  }
  return m;
}

inline DiscreteModel discretize(const ModelSpec& spec, const GridSpec& grid) {
  DiscreteModel m = discretize(spec, make_grid(spec, grid));
  m.grid = grid;
  return m;
}

/// Grid value of ||lambda||_2.
inline double lambda_norm(const DiscreteModel& m) {
  double sum = 0.0;
  for (double mu : m.spectral_weight) sum += mu;
  return std::sqrt(sum);
}

namespace detail {

// sum_i w_i |lambda_i|^2 / omega_i^power; +inf if a coupled node has omega = 0.
inline double weighted_inverse_moment(const DiscreteModel& m, int power) {
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.spectral_weight[i] == 0.0) continue;
    if (m.omega[i] == 0.0) return std::numeric_limits<double>::infinity();
    sum += m.spectral_weight[i] / std::pow(m.omega[i], power);
  }
  return sum;
}

// Grows without bound under refinement n -> 4n? Only decidable for
// built-in families on a known grid.
inline bool diverges_under_refinement(const DiscreteModel& m, int power) {
  const double base = weighted_inverse_moment(m, power);
  if (!std::isfinite(base)) return true;
  if (!m.grid || m.spec.has_tables() || base == 0.0) return false;
  GridSpec fine = *m.grid;
  fine.n *= 4;
  const double refined = weighted_inverse_moment(discretize(m.spec, fine), power);
  return !(refined <= base * 1.05);
}

}  // namespace detail

struct IrDiagnostics {
  double ir_norm = 0.0;                // ||lambda / sqrt(omega)||
  double small_alpha_threshold = 0.0;  // sqrt(2 eps) / ir_norm, +inf when not applicable
  bool ir_divergent = false;           // ||lambda / sqrt(omega)|| = inf
  double lambda_over_omega_norm = 0.0;
  bool infrared_regular = true;  // lambda / omega in L^2
};

inline IrDiagnostics ir_diagnostics(const DiscreteModel& m) {
  IrDiagnostics d;
  d.ir_norm = std::sqrt(detail::weighted_inverse_moment(m, 1));
  d.ir_divergent = detail::diverges_under_refinement(m, 1);
  d.lambda_over_omega_norm = std::sqrt(detail::weighted_inverse_moment(m, 2));
  d.infrared_regular = !detail::diverges_under_refinement(m, 2);
  if (d.ir_norm == 0.0 || d.ir_divergent || !std::isfinite(d.ir_norm))
    d.small_alpha_threshold = std::numeric_limits<double>::infinity();
  else
    d.small_alpha_threshold = std::sqrt(2.0 * m.eps()) / d.ir_norm;
  return d;
}

}  // namespace spinboson
