#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spinboson/errors.hpp"
#include "spinboson/essspec.hpp"
#include "spinboson/hooks.hpp"
#include "spinboson/model.hpp"

namespace spinboson {

using HermitianMatrix = Eigen::MatrixXcd;

/// Discretised Schur-complement pencil R(z) = diag(Delta) - alpha^2 (K1 + K2)
/// in weighted node coordinates.
struct PencilAssembly {
  Sigma sigma = Sigma::plus;
  double z = 0.0;
  Eigen::VectorXd delta;
  HermitianMatrix k1;
  HermitianMatrix k2;
  HermitianMatrix r;
};

/// Matrix of K1 on span{conj(lambda), conj(lambda) / (omega + c)}.
struct RankTwoMatrix {
  double m11 = 0.0;
  double m12 = 0.0;
  double m21 = 0.0;
  double m22 = 0.0;

  double det() const { return m11 * m22 - m12 * m21; }
  double trace() const { return m11 + m22; }

  // The matrix is not symmetric, but det <= 0 keeps the spectrum real.
  std::pair<double, double> eigenvalues() const {
    const double half = 0.5 * trace();
    const double disc = std::sqrt(std::max(0.0, half * half - det()));
    return {half - disc, half + disc};
  }
};

/// Outcome of counting negative eigenvalues of a Hermitian matrix.
struct CountReport {
  int count = 0;                    // eigenvalues < -tol
  std::vector<double> eigenvalues;  // ascending
  double tol = 0.0;                 // band (-tol, tol)
  int flagged = 0;                  // eigenvalues inside the band
};

inline double max_abs_entry(const HermitianMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

/// Counting band eig_tol * (1 + max|a_ij|).
inline double count_tolerance(const HermitianMatrix& a, double eig_tol = 1e-9) {
  return eig_tol * (1.0 + max_abs_entry(a));
}

inline bool is_hermitian(const HermitianMatrix& a, double rel_tol = 1e-14) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1e-300, max_abs_entry(a));
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

inline std::vector<double> hermitian_eigenvalues(const HermitianMatrix& a) {
  if (a.rows() == 0) return {};
  Eigen::SelfAdjointEigenSolver<HermitianMatrix> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed to converge");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

/// N(0; a): number of eigenvalues below -tol, with the (-tol, tol) band
/// reported separately.
inline CountReport count_negative_eigs(const HermitianMatrix& a, double tol) {
  if (!is_hermitian(a)) throw UsageError("count_negative_eigs: matrix is not Hermitian");
  CountReport rep;
  rep.tol = tol;
  rep.eigenvalues = hermitian_eigenvalues(a);
  for (double e : rep.eigenvalues) {
    if (e < -tol)
      ++rep.count;
    else if (e < tol)
      ++rep.flagged;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Scalar kernels. c = sigma*eps - z > 0 throughout.

namespace detail {
inline void require_positive_gap(double c, const char* what) {
  if (!(c > 0.0)) {
    std::ostringstream os;
    os << what << ": gap c = " << c << " must be positive";
    throw DomainError(os.str());
  }
}
}  // namespace detail

/// Psi1 = 1/(w1 + c) + 1/(w2 + c) - 1/c.
inline double kernel_psi1(double c, double w1, double w2) {
  detail::require_positive_gap(c, "kernel_psi1");
  return 1.0 / (w1 + c) + 1.0 / (w2 + c) - 1.0 / c;
}

/// Psi2 = 1/(w1 + w2 + c) - Psi1, evaluated in the cancellation-free form
/// w1 w2 (w1 + w2 + 2c) / (c (w1 + c)(w2 + c)(w1 + w2 + c)).
inline double kernel_psi2(double c, double w1, double w2) {
  detail::require_positive_gap(c, "kernel_psi2");
  const double v = w1 * w2 * (w1 + w2 + 2.0 * c) / (c * (w1 + c) * (w2 + c) * (w1 + w2 + c));
  assert(v >= 0.0 && v <= std::sqrt(w1 * w2) / (2.0 * c * c) * (1.0 + 1e-12));
  return v;
}

/// Gaps of 0 <= 1/(a+b+c) - 1/(a+c) - 1/(b+c) + 1/c <= sqrt(ab)/(2c^2):
/// (middle, bound - middle). The middle term is evaluated literally.
inline std::pair<double, double> elementary_inequality_gap(double a, double b, double c) {
  detail::require_positive_gap(c, "elementary_inequality_gap");
  const double middle = (1.0 / (a + b + c) - 1.0 / (b + c)) - (1.0 / (a + c) - 1.0 / c);
  const double bound = std::sqrt(a * b) / (2.0 * c * c);
  return {middle, bound - middle};
}

// ---------------------------------------------------------------------------
// Pencil assembly.

/// Delta(r_i; z) = omega_i - sigma eps - z - alpha^2 sum_q w_q|lambda_q|^2 / (omega_i + omega_q + c),
/// cross-checked against Phi(z - omega_i).
inline Eigen::VectorXd delta_values(const DiscreteModel& m, Sigma sigma, double z) {
  detail::require_below_threshold(m, sigma, z, "delta_values");
  const double s = sign(sigma) * m.eps();
  const double c = s - z;
  const double alpha2 = m.alpha() * m.alpha();
  const std::size_t n = m.size();
  Eigen::VectorXd delta(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t q = 0; q < n; ++q) sum += m.spectral_weight[q] / (m.omega[i] + m.omega[q] + c);
    const double direct = m.omega[i] - s - z - alpha2 * sum;
    const double via_phi = eval_phi(m, sigma, z - m.omega[i]);
    const double scale = m.omega[i] + std::abs(s) + std::abs(z) + alpha2 * sum;
    if (std::abs(direct - via_phi) > 1e-12 * std::max(1.0, scale))
      throw NumericalError("delta_values: direct and Phi-shifted evaluations disagree");
    delta(static_cast<Eigen::Index>(i)) = direct;
  }
  return delta;
}

namespace detail {
template <typename Kernel>
HermitianMatrix weighted_kernel_matrix(const DiscreteModel& m, Kernel&& kernel) {
  const auto n = static_cast<Eigen::Index>(m.size());
  HermitianMatrix k(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      const auto ua = static_cast<std::size_t>(a);
      const auto ub = static_cast<std::size_t>(b);
      const cplx v = std::conj(m.amplitude[ua]) * m.amplitude[ub] * kernel(m.omega[ua], m.omega[ub]);
      k(a, b) = v;
      k(b, a) = std::conj(v);
    }
    k(a, a) = k(a, a).real();
  }
  return k;
}
}  // namespace detail

/// [K1]_mn = sqrt(w_m w_n) conj(lambda_m) lambda_n (1/(omega_m + c) + 1/(omega_n + c)).
inline HermitianMatrix assemble_k1(const DiscreteModel& m, Sigma sigma, double z) {
  detail::require_below_threshold(m, sigma, z, "assemble_k1");
  const double c = sign(sigma) * m.eps() - z;
  return detail::weighted_kernel_matrix(m, [c](double w1, double w2) { return 1.0 / (w1 + c) + 1.0 / (w2 + c); });
}

/// [K2]_mn = sqrt(w_m w_n) conj(lambda_m) lambda_n Psi2(omega_m, omega_n).
inline HermitianMatrix assemble_k2(const DiscreteModel& m, Sigma sigma, double z) {
  detail::require_below_threshold(m, sigma, z, "assemble_k2");
  const double c = sign(sigma) * m.eps() - z;
  const double scale = hooks::kernel_tampered() ? 1.5 : 1.0;
  return detail::weighted_kernel_matrix(m, [c, scale](double w1, double w2) { return scale * kernel_psi2(c, w1, w2); });
}

/// Weighted matrix of the undecomposed kernel
/// conj(lambda_1) lambda_2 [1/(omega_1 + omega_2 + c) + 1/c].
inline HermitianMatrix assemble_phat(const DiscreteModel& m, Sigma sigma, double z) {
  detail::require_below_threshold(m, sigma, z, "assemble_phat");
  const double c = sign(sigma) * m.eps() - z;
  return detail::weighted_kernel_matrix(m, [c](double w1, double w2) { return 1.0 / (w1 + w2 + c) + 1.0 / c; });
}

inline PencilAssembly assemble_r(const DiscreteModel& m, Sigma sigma, double z) {
  PencilAssembly p;
  p.sigma = sigma;
  p.z = z;
  p.delta = delta_values(m, sigma, z);
  p.k1 = assemble_k1(m, sigma, z);
  p.k2 = assemble_k2(m, sigma, z);
  const double alpha2 = m.alpha() * m.alpha();
  p.r = -alpha2 * (p.k1 + p.k2);
  p.r.diagonal() += p.delta.cast<cplx>();
  return p;
}

/// Analytic dR/dz; every term is negative definite.
inline HermitianMatrix pencil_derivative(const DiscreteModel& m, Sigma sigma, double z) {
  detail::require_below_threshold(m, sigma, z, "pencil_derivative");
  const double c = sign(sigma) * m.eps() - z;
  const double alpha2 = m.alpha() * m.alpha();
  HermitianMatrix d = -alpha2 * detail::weighted_kernel_matrix(m, [c](double w1, double w2) {
    const double den = w1 + w2 + c;
    return 1.0 / (den * den) + 1.0 / (c * c);
  });
  for (std::size_t i = 0; i < m.size(); ++i) {
    double sum = 0.0;
    for (std::size_t q = 0; q < m.size(); ++q) {
      const double den = m.omega[i] + m.omega[q] + c;
      sum += m.spectral_weight[q] / (den * den);
    }
    d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += -1.0 - alpha2 * sum;
  }
  return d;
}

/// 2x2 matrix of K1(E) on span{conj(lambda), conj(lambda)/(omega + c)}.
inline RankTwoMatrix rank_two_matrix(const DiscreteModel& m, Sigma sigma, double energy) {
  detail::require_below_threshold(m, sigma, energy, "rank_two_matrix");
  const double c = sign(sigma) * m.eps() - energy;
  RankTwoMatrix r;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double den = m.omega[i] + c;
    r.m11 += m.spectral_weight[i] / den;
    r.m12 += m.spectral_weight[i] / (den * den);
    r.m21 += m.spectral_weight[i];
  }
  r.m22 = r.m11;
  return r;
}

/// Smallest eigenvalue of diag(Delta(E)) - alpha^2 K2(E).
inline double positivity_margin(const DiscreteModel& m, Sigma sigma, double energy) {
  HermitianMatrix a = -(m.alpha() * m.alpha()) * assemble_k2(m, sigma, energy);
  a.diagonal() += delta_values(m, sigma, energy).cast<cplx>();
  if (a.rows() == 0) return 0.0;
  return hermitian_eigenvalues(a).front();
}

/// Central finite-difference slope of <R(z) phi, phi> with step 1e-5 (sigma eps - z).
inline double pencil_slope_check(const DiscreteModel& m, Sigma sigma, double z, const Eigen::VectorXcd& probe) {
  detail::require_below_threshold(m, sigma, z, "pencil_slope_check");
  if (probe.size() != static_cast<Eigen::Index>(m.size()))
    throw UsageError("pencil_slope_check: probe length does not match the grid");
  const double h = 1e-5 * (sign(sigma) * m.eps() - z);
  auto form = [&](double zz) { return probe.dot(assemble_r(m, sigma, zz).r * probe).real(); };
  return (form(z + h) - form(z - h)) / (2.0 * h);
}

}  // namespace spinboson
