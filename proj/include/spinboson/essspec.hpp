#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "spinboson/errors.hpp"
#include "spinboson/model.hpp"

namespace spinboson {

/// Bottom of the essential spectrum of one spin branch.
struct EssSpecResult {
  enum class Kind { root, convention };

  Sigma sigma = Sigma::plus;
  double value = 0.0;
  Kind kind = Kind::root;
  double residual = 0.0;  // |Phi(value)|, zero for the convention branch
  int iterations = 0;

  bool is_root() const { return kind == Kind::root; }
};

inline std::string_view to_string(EssSpecResult::Kind k) {
  return k == EssSpecResult::Kind::root ? "root" : "convention";
}

struct RootOptions {
  double root_tol = 1e-12;  // bracket width, relative to max(1, |E|)
  double offset = 1e-8;     // first probe sits at sigma*eps - offset*max(1, eps)
  int max_expansions = 200;
};

namespace detail {

inline void require_below_threshold(const DiscreteModel& m, Sigma sigma, double z, const char* what) {
  const double s = sign(sigma) * m.eps();
  if (!(z < s)) {
    std::ostringstream os;
    os << what << ": z = " << z << " must lie below sigma*eps = " << s;
    throw DomainError(os.str());
  }
}

}  // namespace detail

/// Phi(z) = -sigma eps - z - alpha^2 sum_i w_i |lambda_i|^2 / (omega_i + sigma eps - z).
inline double eval_phi(const DiscreteModel& m, Sigma sigma, double z) {
  detail::require_below_threshold(m, sigma, z, "eval_phi");
  const double s = sign(sigma) * m.eps();
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) sum += m.spectral_weight[i] / (m.omega[i] + s - z);
  return -s - z - m.alpha() * m.alpha() * sum;
}

/// Phi'(z) = -1 - alpha^2 sum_i w_i |lambda_i|^2 / (omega_i + sigma eps - z)^2 <= -1.
inline double phi_derivative(const DiscreteModel& m, Sigma sigma, double z) {
  detail::require_below_threshold(m, sigma, z, "phi_derivative");
  const double s = sign(sigma) * m.eps();
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double den = m.omega[i] + s - z;
    sum += m.spectral_weight[i] / (den * den);
  }
  return -1.0 - m.alpha() * m.alpha() * sum;
}

/// Unique zero of Phi on (-inf, sigma eps), or the convention value -eps
/// when the sigma = -1 function has none.
///
/// Phi is strictly decreasing and tends to +inf as z -> -inf, so a zero
/// exists iff Phi is negative just below sigma*eps. The bracket is grown
/// geometrically to the left, bisected, then polished by Newton steps that
/// are kept inside the bracket.
inline EssSpecResult find_phi_root(const DiscreteModel& m, Sigma sigma, const RootOptions& opt = {}) {
  const double eps = m.eps();
  const double s = sign(sigma) * eps;
  const double alpha2 = m.alpha() * m.alpha();
  const double norm = lambda_norm(m);
  EssSpecResult res;
  res.sigma = sigma;

  if (alpha2 * norm * norm == 0.0) {
    // Phi(z) = -sigma eps - z
    if (sigma == Sigma::plus) {
      res.value = -eps;
      res.kind = EssSpecResult::Kind::root;
    } else {
      res.value = -eps;
      res.kind = EssSpecResult::Kind::convention;
    }
    return res;
  }

  double hi = s - opt.offset * std::max(1.0, eps);
  double f_hi = eval_phi(m, sigma, hi);
  ++res.iterations;
  if (f_hi >= 0.0) {
    if (sigma == Sigma::plus) {
      std::ostringstream os;
      os << "Phi(+) is nonnegative just below eps (Phi(" << hi << ") = " << f_hi << ")";
      throw NumericalError(os.str());
    }
    res.value = -eps;
    res.kind = EssSpecResult::Kind::convention;
    return res;
  }

  const double width = std::max(1.0, m.alpha() * norm);
  double lo = hi;
  double f_lo = f_hi;
  double step = width;
  int k = 0;
  for (; k < opt.max_expansions; ++k) {
    lo = hi - step;
    f_lo = eval_phi(m, sigma, lo);
    ++res.iterations;
    if (f_lo >= 0.0) break;
    step *= 4.0;
  }
  if (f_lo < 0.0) {
    std::ostringstream os;
    os << "failed to bracket the zero of Phi(" << to_string(sigma) << ") after " << opt.max_expansions
       << " expansions; last probe z = " << lo << ", Phi = " << f_lo;
    throw NumericalError(os.str());
  }

  if (f_lo == 0.0) {
    res.value = lo;
    res.residual = 0.0;
    return res;
  }

  // Invariant: f_lo > 0 > f_hi.
  while (hi - lo > opt.root_tol * std::max(1.0, std::abs(0.5 * (lo + hi)))) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = eval_phi(m, sigma, mid);
    ++res.iterations;
    if (f_mid == 0.0) {
      lo = hi = mid;
      break;
    }
    if (f_mid > 0.0)
      lo = mid;
    else
      hi = mid;
  }

  double z = 0.5 * (lo + hi);
  double f = eval_phi(m, sigma, z);
  for (int it = 0; it < 4 && f != 0.0; ++it) {
    const double next = z - f / phi_derivative(m, sigma, z);
    if (!(next >= lo && next <= hi)) break;
    const double f_next = eval_phi(m, sigma, next);
    ++res.iterations;
    if (std::abs(f_next) >= std::abs(f)) break;
    z = next;
    f = f_next;
  }

  res.value = z;
  res.residual = std::abs(f);
  const double tol_phi = 1e-10 * std::max(1.0, alpha2 * norm * norm / (s - z));
  if (res.residual > tol_phi) {
    std::ostringstream os;
    os << "Phi(" << to_string(sigma) << ") residual " << res.residual << " exceeds " << tol_phi;
    throw NumericalError(os.str());
  }
  return res;
}

/// Spectral parameter at which the pencil is evaluated for a branch: the
/// root itself, or sigma*eps - guard*eps on the convention branch.
inline double evaluation_point(const EssSpecResult& r, double eps, double guard = 1e-8) {
  if (r.is_root()) return r.value;
  return sign(r.sigma) * eps - guard * eps;
}

struct EssentialBottom {
  EssSpecResult e_plus;
  EssSpecResult e_minus;
  double e_min = 0.0;
};

/// E(alpha) = min(E_eps, E_{-eps}).
inline EssentialBottom bottom_ess_spectrum(const DiscreteModel& m, const RootOptions& opt = {}) {
  EssentialBottom b;
  b.e_plus = find_phi_root(m, Sigma::plus, opt);
  b.e_minus = find_phi_root(m, Sigma::minus, opt);
  b.e_min = std::min(b.e_plus.value, b.e_minus.value);
  const double slack = opt.root_tol * std::max(1.0, m.eps());
  if (b.e_plus.value > -m.eps() + slack) {
    std::ostringstream os;
    os << "E_eps = " << b.e_plus.value << " is not below -eps = " << -m.eps();
    throw NumericalError(os.str());
  }
  return b;
}

struct AsymptoticRow {
  double alpha = 0.0;
  Sigma sigma = Sigma::plus;
  double energy = 0.0;
  EssSpecResult::Kind kind = EssSpecResult::Kind::root;
  double energy_over_alpha = 0.0;
  double constant = 0.0;  // alpha^2 / (2 (sigma eps - E)^2), tends to 1 / (2 ||lambda||^2)
};

inline std::vector<AsymptoticRow> asymptotic_report(const DiscreteModel& m, std::span<const double> alphas,
                                                    const RootOptions& opt = {}) {
  std::vector<AsymptoticRow> rows;
  double prev = 0.0;
  for (double a : alphas) {
    if (!(a > prev)) throw ConfigError("asymptotic_report: alphas must be positive and increasing");
    prev = a;
    const DiscreteModel ma = m.with_alpha(a);
    for (Sigma sigma : kBothBranches) {
      const EssSpecResult r = find_phi_root(ma, sigma, opt);
      AsymptoticRow row;
      row.alpha = a;
      row.sigma = sigma;
      row.energy = r.value;
      row.kind = r.kind;
      row.energy_over_alpha = r.value / a;
      const double gap = sign(sigma) * m.eps() - r.value;
      row.constant = gap > 0.0 ? a * a / (2.0 * gap * gap) : std::numeric_limits<double>::infinity();
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace spinboson
