#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spinboson/errors.hpp"
#include "spinboson/essspec.hpp"
#include "spinboson/model.hpp"
#include "spinboson/pencil.hpp"

namespace spinboson {

/// Brute-force discretisation of the 3x3 operator matrix of one branch on
/// C + (one-photon grid) + (symmetric two-photon grid).
///
/// Coordinates: vacuum amplitude as-is; one-photon u_i = sqrt(w_i) f1(r_i);
/// two-photon v_ij = sqrt(w_i w_j) f2(r_i, r_j) for i < j and
/// v_ii = (w_i / sqrt 2) f2(r_i, r_i). With these the half-weighted
/// symmetric inner product is the plain dot product.
struct BlockOperator {
  Sigma sigma = Sigma::plus;
  double eps = 1.0;
  int n = 0;
  HermitianMatrix matrix;
  std::vector<std::pair<int, int>> pairs;  // two-photon index -> (i, j), i <= j

  Eigen::Index dim() const { return matrix.rows(); }
  static constexpr Eigen::Index vacuum() { return 0; }
  Eigen::Index one_photon(int i) const { return 1 + i; }
  Eigen::Index two_photon(std::size_t p) const { return 1 + n + static_cast<Eigen::Index>(p); }
};

inline constexpr int kOracleMaxNodes = 48;

inline BlockOperator assemble_block(const DiscreteModel& m, Sigma sigma, int max_nodes = kOracleMaxNodes) {
  const int n = static_cast<int>(m.size());
  if (n > max_nodes)
    throw ConfigError("oracle: grid of " + std::to_string(n) + " nodes exceeds the direct-solve cap of " +
                      std::to_string(max_nodes));
  BlockOperator b;
  b.sigma = sigma;
  b.eps = m.eps();
  b.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) b.pairs.emplace_back(i, j);

  const double s = sign(sigma) * m.eps();
  const double alpha = m.alpha();
  const Eigen::Index dim = 1 + n + static_cast<Eigen::Index>(b.pairs.size());
  b.matrix = HermitianMatrix::Zero(dim, dim);
  auto set = [&](Eigen::Index row, Eigen::Index col, cplx v) {
    b.matrix(row, col) += v;
    b.matrix(col, row) += std::conj(v);
  };

  b.matrix(0, 0) = s;
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    b.matrix(b.one_photon(i), b.one_photon(i)) = -s + m.omega[ui];
    // (H10 f0)(k) = f0 conj(lambda(k))
    set(b.one_photon(i), BlockOperator::vacuum(), alpha * std::conj(m.amplitude[ui]));
  }
  const double root2 = std::sqrt(2.0);
  for (std::size_t p = 0; p < b.pairs.size(); ++p) {
    const auto [i, j] = b.pairs[p];
    const auto ui = static_cast<std::size_t>(i);
    const auto uj = static_cast<std::size_t>(j);
    const Eigen::Index row = b.two_photon(p);
    b.matrix(row, row) = s + m.omega[ui] + m.omega[uj];
    // (H21 f)(k1, k2) = conj(lambda(k1)) f(k2) + conj(lambda(k2)) f(k1)
    if (i == j) {
      set(row, b.one_photon(i), alpha * root2 * std::conj(m.amplitude[ui]));
    } else {
      set(row, b.one_photon(j), alpha * std::conj(m.amplitude[ui]));
      set(row, b.one_photon(i), alpha * std::conj(m.amplitude[uj]));
    }
  }
  return b;
}

/// Schur complement of (H - z) onto the one-photon sector, computed by a
/// dense LDL^T solve on the outer (vacuum + two-photon) block.
inline HermitianMatrix schur_onto_one_photon(const BlockOperator& b, double z) {
  if (!(z < sign(b.sigma) * b.eps)) throw DomainError("schur_onto_one_photon: z must lie below sigma*eps");
  const Eigen::Index n = b.n;
  const Eigen::Index dim = b.dim();
  std::vector<Eigen::Index> outer;
  outer.push_back(0);
  for (Eigen::Index k = 1 + n; k < dim; ++k) outer.push_back(k);
  const auto no = static_cast<Eigen::Index>(outer.size());

  HermitianMatrix oo(no, no);
  HermitianMatrix io(n, no);
  for (Eigen::Index a = 0; a < no; ++a) {
    for (Eigen::Index c = 0; c < no; ++c) oo(a, c) = b.matrix(outer[a], outer[c]);
    oo(a, a) -= z;
    for (Eigen::Index i = 0; i < n; ++i) io(i, a) = b.matrix(1 + i, outer[a]);
  }
  HermitianMatrix s = b.matrix.block(1, 1, n, n);
  s.diagonal().array() -= z;
  Eigen::LDLT<HermitianMatrix> ldlt(oo);
  if (ldlt.info() != Eigen::Success) throw NumericalError("oracle: outer block factorisation failed");
  s -= io * ldlt.solve(io.adjoint());
  return 0.5 * (s + s.adjoint());
}

/// N(z; H): eigenvalues of the block below z, i.e. negative eigenvalues of H - z.
inline CountReport eig_below(const BlockOperator& b, double z, double eig_tol = 1e-9) {
  if (!(z < sign(b.sigma) * b.eps)) throw DomainError("eig_below: z must lie below sigma*eps");
  if (!is_hermitian(b.matrix)) throw NumericalError("oracle: block matrix is not Hermitian");
  HermitianMatrix shifted = b.matrix;
  shifted.diagonal().array() -= z;
  return count_negative_eigs(shifted, count_tolerance(shifted, eig_tol));
}

struct CountOptions {
  RootOptions root;
  double eig_tol = 1e-9;
  double guard = 1e-8;
};

struct BranchCount {
  EssSpecResult threshold;
  double z = 0.0;
  CountReport report;
  bool informational = false;  // convention branch: the counting identity is outside its regime
};

struct TotalCount {
  std::array<BranchCount, 2> branches;  // [0] = plus, [1] = minus
  int total = 0;
  int flagged = 0;
};

/// Bound states of the full Hamiltonian below each branch threshold, by
/// direct diagonalisation of both blocks.
inline TotalCount total_count(const DiscreteModel& m, const CountOptions& opt = {}) {
  TotalCount t;
  for (std::size_t k = 0; k < 2; ++k) {
    const Sigma sigma = kBothBranches[k];
    BranchCount& bc = t.branches[k];
    bc.threshold = find_phi_root(m, sigma, opt.root);
    bc.z = evaluation_point(bc.threshold, m.eps(), opt.guard);
    bc.informational = !bc.threshold.is_root();
    bc.report = eig_below(assemble_block(m, sigma), bc.z, opt.eig_tol);
    t.total += bc.report.count;
    t.flagged += bc.report.flagged;
  }
  return t;
}

}  // namespace spinboson
