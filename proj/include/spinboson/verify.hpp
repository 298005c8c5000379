#pragma once

#include <chrono>
#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinboson/config.hpp"
#include "spinboson/essspec.hpp"
#include "spinboson/model.hpp"
#include "spinboson/oracle.hpp"
#include "spinboson/pencil.hpp"

namespace spinboson::verify {

struct CheckResult {
  std::string name;
  bool passed = true;
  std::string detail;
  double seconds = 0.0;
};

/// Model/grid/tolerance source for the property checks. Grid sizes named
/// by a check override the configured n unless the model is tabulated.
class Context {
 public:
  explicit Context(RunConfig cfg) : cfg_(std::move(cfg)) {}

  const RunConfig& config() const { return cfg_; }

  DiscreteModel model(double alpha, int n = 0) const {
    ModelSpec spec = cfg_.model;
    spec.alpha = alpha;
    GridSpec g = cfg_.grid;
    if (n > 0 && !spec.has_tables()) g.n = n;
    return discretize(spec, g);
  }

  std::vector<int> sizes(std::initializer_list<int> wanted) const {
    if (cfg_.model.has_tables()) return {cfg_.grid.n};
    return wanted;
  }

  RootOptions root_options() const {
    RootOptions o;
    o.root_tol = cfg_.tolerances.root_tol;
    return o;
  }

  EssSpecResult root(const DiscreteModel& m, Sigma sigma) const { return find_phi_root(m, sigma, root_options()); }

  double eval_z(const DiscreteModel& m, const EssSpecResult& r) const {
    return evaluation_point(r, m.eps(), cfg_.tolerances.guard);
  }

  double eig_tol() const { return cfg_.tolerances.eig_tol; }

 private:
  RunConfig cfg_;
};

namespace detail {

// Collects failures; the first few are kept for the report.
class Failures {
 public:
  void add(const std::string& what) {
    ++count_;
    if (count_ <= 3) {
      if (!text_.empty()) text_ += "; ";
      text_ += what;
    }
  }
  bool any() const { return count_ > 0; }
  std::string summary(const std::string& ok_text) const {
    if (!any()) return ok_text;
    return std::to_string(count_) + " failure(s): " + text_;
  }

 private:
  int count_ = 0;
  std::string text_;
};

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline std::string case_tag(int n, double alpha, Sigma sigma) {
  return "n=" + std::to_string(n) + " alpha=" + fmt(alpha) + " sigma=" + std::string(to_string(sigma));
}

}  // namespace detail

/// 0 <= 1/(a+b+c) - 1/(a+c) - 1/(b+c) + 1/c <= sqrt(ab)/(2c^2) on random triples.
inline CheckResult elementary_inequality(const Context&, int samples = 100000) {
  CheckResult res{"elementary-inequality"};
  std::mt19937_64 rng(20190225);
  std::uniform_real_distribution<double> ab(0.0, 100.0);
  std::uniform_real_distribution<double> cc(0.0, 100.0);
  detail::Failures f;
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const double a = ab(rng), b = ab(rng);
    double c = cc(rng);
    if (c == 0.0) c = 100.0;
    const auto [lower, upper] = elementary_inequality_gap(a, b, c);
    const double slack = -1e-12 / c;
    worst = std::min({worst, lower * c, upper * c});
    if (lower < slack || upper < slack)
      f.add("a=" + detail::fmt(a) + " b=" + detail::fmt(b) + " c=" + detail::fmt(c));
  }
  res.passed = !f.any();
  res.detail = f.summary(std::to_string(samples) + " triples, min scaled gap " + detail::fmt(worst));
  return res;
}

/// Closed forms of the one-node toy grid.
inline CheckResult toy_closed_forms(const Context&) {
  CheckResult res{"toy-closed-forms"};
  ModelSpec s;
  s.alpha = 1.0;
  s.coupling.family = Coupling::Family::tabulated;
  s.coupling.table = {1.0};
  const DiscreteModel m = discretize(s, build_radial_grid(1, 1, 2.0));
  detail::Failures f;
  auto expect = [&](const char* what, double got, double want, double tol) {
    if (!(std::abs(got - want) <= tol)) f.add(std::string(what) + "=" + detail::fmt(got) + " want " + detail::fmt(want));
  };
  expect("Phi(0)", eval_phi(m, Sigma::plus, 0.0), -3.0, 1e-14);
  expect("Phi'(-2)", phi_derivative(m, Sigma::plus, -2.0), -1.25, 1e-14);
  expect("E+", find_phi_root(m, Sigma::plus).value, -2.0, 1e-12);
  expect("E-", find_phi_root(m, Sigma::minus).value, (1.0 - std::sqrt(17.0)) / 2.0, 1e-12);
  expect("Delta(-2)", delta_values(m, Sigma::plus, -2.0)(0), 1.2, 1e-14);
  const PencilAssembly p = assemble_r(m, Sigma::plus, -2.0);
  expect("K1", p.k1(0, 0).real(), 2.0, 1e-14);
  expect("R", p.r(0, 0).real(), 1.2 - 2.0 - 2.0 / 15.0, 1e-13);
  expect("detM", rank_two_matrix(m, Sigma::plus, -2.0).det(), 0.0, 1e-15);
  const int direct = eig_below(assemble_block(m, Sigma::plus), -2.0).count;
  if (direct != 1) f.add("3x3 block count " + std::to_string(direct) + " want 1");
  res.passed = !f.any();
  res.detail = f.summary("one-node grid matches hand computations");
  return res;
}

/// 0 <= Psi2 <= sqrt(omega_1 omega_2) / (2 c^2) at the branch threshold.
inline CheckResult psi2_bounds(const Context& ctx) {
  CheckResult res{"psi2-bounds"};
  detail::Failures f;
  std::size_t pairs = 0;
  for (double alpha : {1.0, 10.0, 100.0}) {
    const DiscreteModel m = ctx.model(alpha);
    for (Sigma sigma : kBothBranches) {
      const double z = ctx.eval_z(m, ctx.root(m, sigma));
      const double c = sign(sigma) * m.eps() - z;
      for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j) {
          ++pairs;
          const double v = kernel_psi2(c, m.omega[i], m.omega[j]);
          const double bound = std::sqrt(m.omega[i] * m.omega[j]) / (2.0 * c * c);
          if (v < -1e-12 || v > bound + 1e-12) f.add(detail::case_tag(static_cast<int>(m.size()), alpha, sigma));
        }
    }
  }
  res.passed = !f.any();
  res.detail = f.summary(std::to_string(pairs) + " node pairs within bounds");
  return res;
}

/// Delta(r_i; E) >= omega(r_i).
inline CheckResult delta_pointwise(const Context& ctx) {
  CheckResult res{"delta-pointwise"};
  detail::Failures f;
  double worst = std::numeric_limits<double>::infinity();
  for (double alpha : {1.0, 10.0, 100.0, 1000.0}) {
    const DiscreteModel m = ctx.model(alpha);
    for (Sigma sigma : kBothBranches) {
      const double z = ctx.eval_z(m, ctx.root(m, sigma));
      const Eigen::VectorXd d = delta_values(m, sigma, z);
      for (std::size_t i = 0; i < m.size(); ++i) {
        const double gap = d(static_cast<Eigen::Index>(i)) - m.omega[i];
        worst = std::min(worst, gap);
        if (gap < -1e-10) f.add(detail::case_tag(static_cast<int>(m.size()), alpha, sigma) + " node " + std::to_string(i));
      }
    }
  }
  res.passed = !f.any();
  res.detail = f.summary("min(Delta - omega) = " + detail::fmt(worst));
  return res;
}

/// rank K1 <= 2, det M <= 0 (strict with two effective nodes) with inertia
/// (+, -), and exactly one negative eigenvalue of -alpha^2 K1.
inline CheckResult rank_two_structure(const Context& ctx) {
  CheckResult res{"rank-two"};
  detail::Failures f;
  int cases = 0;
  for (int n : ctx.sizes({2, 4, 8, 16, 32})) {
    for (double alpha : {5.0, 50.0, 500.0}) {
      const DiscreteModel m = ctx.model(alpha, n);
      std::vector<double> coupled_omegas;
      for (std::size_t i = 0; i < m.size(); ++i)
        if (m.spectral_weight[i] > 0.0) coupled_omegas.push_back(m.omega[i]);
      std::sort(coupled_omegas.begin(), coupled_omegas.end());
      const bool effective = std::adjacent_find(coupled_omegas.begin(), coupled_omegas.end(),
                                                [](double a, double b) { return a != b; }) != coupled_omegas.end();
      for (Sigma sigma : kBothBranches) {
        ++cases;
        const std::string tag = detail::case_tag(n, alpha, sigma);
        const EssSpecResult e = ctx.root(m, sigma);
        const double z = ctx.eval_z(m, e);
        const HermitianMatrix k1 = assemble_k1(m, sigma, z);
        if (k1.rows() >= 3) {
          Eigen::JacobiSVD<HermitianMatrix> svd(k1);
          const auto& sv = svd.singularValues();
          if (sv(2) > 1e-10 * sv(0)) f.add(tag + " rank(K1) > 2");
        }
        const RankTwoMatrix mm = rank_two_matrix(m, sigma, z);
        if (mm.det() > 0.0) f.add(tag + " det M > 0");
        if (effective) {
          const auto [lo, hi] = mm.eigenvalues();
          if (!(mm.det() < 0.0) || !(lo < 0.0) || !(hi > 0.0)) f.add(tag + " det M not negative / inertia not (+,-)");
          const HermitianMatrix neg = -(alpha * alpha) * k1;
          const int cnt = count_negative_eigs(neg, count_tolerance(neg, ctx.eig_tol())).count;
          if (cnt != 1) f.add(tag + " N(0; -alpha^2 K1) = " + std::to_string(cnt));
        }
      }
    }
  }
  res.passed = !f.any();
  res.detail = f.summary(std::to_string(cases) + " cases");
  return res;
}

/// N(E; H_block) == N(0; R(E)) as exact integers; flagged eigenvalues fail.
inline CheckResult inertia_equivalence(const Context& ctx, std::initializer_list<int> sizes = {4, 8, 16}) {
  CheckResult res{"inertia-equivalence"};
  detail::Failures f;
  int cases = 0;
  std::vector<int> ns = ctx.config().model.has_tables() ? std::vector<int>{ctx.config().grid.n} : std::vector<int>(sizes);
  for (int n : ns) {
    for (double alpha : {0.5, 1.0, 2.0, 5.0, 10.0, 50.0}) {
      const DiscreteModel m = ctx.model(alpha, n);
      for (Sigma sigma : kBothBranches) {
        ++cases;
        const std::string tag = detail::case_tag(n, alpha, sigma);
        const double z = ctx.eval_z(m, ctx.root(m, sigma));
        const CountReport direct = eig_below(assemble_block(m, sigma), z, ctx.eig_tol());
        const PencilAssembly p = assemble_r(m, sigma, z);
        const CountReport schur = count_negative_eigs(p.r, count_tolerance(p.r, ctx.eig_tol()));
        if (direct.flagged || schur.flagged)
          f.add(tag + " flagged eigenvalues (block " + std::to_string(direct.flagged) + ", pencil " +
                std::to_string(schur.flagged) + ")");
        else if (direct.count != schur.count)
          f.add(tag + " block " + std::to_string(direct.count) + " != pencil " + std::to_string(schur.count));
      }
    }
  }
  res.passed = !f.any();
  res.detail = f.summary(std::to_string(cases) + " cases agree");
  return res;
}

/// Dense Schur complement of the block equals assemble_r entrywise.
inline CheckResult schur_reproduction(const Context& ctx) {
  CheckResult res{"schur-reproduction"};
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> log_gap(-4.0, 2.0);
  detail::Failures f;
  double worst = 0.0;
  const int n = ctx.sizes({8}).front();
  for (double alpha : {0.5, 5.0, 50.0}) {
    const DiscreteModel m = ctx.model(alpha, n);
    for (Sigma sigma : kBothBranches) {
      const BlockOperator b = assemble_block(m, sigma);
      for (int k = 0; k < 20; ++k) {
        const double z = sign(sigma) * m.eps() - std::pow(10.0, log_gap(rng));
        const HermitianMatrix r = assemble_r(m, sigma, z).r;
        const double err = (schur_onto_one_photon(b, z) - r).cwiseAbs().maxCoeff() / max_abs_entry(r);
        worst = std::max(worst, err);
        if (!(err <= 1e-12)) f.add(detail::case_tag(n, alpha, sigma) + " z=" + detail::fmt(z) + " err=" + detail::fmt(err));
      }
    }
  }
  res.passed = !f.any();
  res.detail = f.summary("max relative deviation " + detail::fmt(worst));
  return res;
}

/// N(0; R(E)) <= 1 per branch, total <= 2, same counts on n = 16 and 32.
inline CheckResult strong_coupling(const Context& ctx) {
  CheckResult res{"strong-coupling"};
  detail::Failures f;
  std::string counts;
  for (double alpha : {50.0, 100.0, 500.0}) {
    int per_grid[2][2] = {{0, 0}, {0, 0}};
    const auto ns = ctx.sizes({16, 32});
    for (std::size_t g = 0; g < ns.size(); ++g) {
      const DiscreteModel m = ctx.model(alpha, ns[g]);
      int total = 0;
      for (int k = 0; k < 2; ++k) {
        const Sigma sigma = kBothBranches[k];
        const double z = ctx.eval_z(m, ctx.root(m, sigma));
        const PencilAssembly p = assemble_r(m, sigma, z);
        const CountReport rep = count_negative_eigs(p.r, count_tolerance(p.r, ctx.eig_tol()));
        if (rep.count > 1) f.add(detail::case_tag(ns[g], alpha, sigma) + " count " + std::to_string(rep.count));
        if (rep.flagged) f.add(detail::case_tag(ns[g], alpha, sigma) + " flagged");
        per_grid[g][k] = rep.count;
        total += rep.count;
      }
      if (total > 2) f.add("alpha=" + detail::fmt(alpha) + " total " + std::to_string(total));
    }
    if (ns.size() == 2 && (per_grid[0][0] != per_grid[1][0] || per_grid[0][1] != per_grid[1][1]))
      f.add("alpha=" + detail::fmt(alpha) + " counts change between n=16 and n=32");
    counts += (counts.empty() ? "" : " ") + std::string("alpha=") + detail::fmt(alpha) + ":" +
              std::to_string(per_grid[0][0]) + "+" + std::to_string(per_grid[0][1]);
  }
  res.passed = !f.any();
  res.detail = f.summary(counts);
  return res;
}

/// E/alpha -> -||lambda|| and alpha^2 / (2 (sigma eps - E)^2) -> 1/(2 ||lambda||^2) at alpha = 1000.
inline CheckResult asymptotics(const Context& ctx) {
  CheckResult res{"asymptotics"};
  detail::Failures f;
  const double alpha = 1000.0;
  const DiscreteModel m = ctx.model(alpha);
  const double norm = lambda_norm(m);
  std::string info;
  for (Sigma sigma : kBothBranches) {
    const EssSpecResult e = ctx.root(m, sigma);
    const double slope_err = std::abs(e.value / alpha + norm) / norm;
    const double gap = sign(sigma) * m.eps() - e.value;
    const double const_err = std::abs(alpha * alpha / (2.0 * gap * gap) * 2.0 * norm * norm - 1.0);
    if (!e.is_root() || !(slope_err <= 0.02)) f.add(std::string("sigma=") + std::string(to_string(sigma)) + " slope error " + detail::fmt(slope_err));
    if (!(const_err <= 0.05)) f.add(std::string("sigma=") + std::string(to_string(sigma)) + " constant error " + detail::fmt(const_err));
    info += std::string(info.empty() ? "" : " ") + "sigma" + std::string(to_string(sigma)) + ": slope " +
            detail::fmt(slope_err) + ", const " + detail::fmt(const_err);
  }
  res.passed = !f.any();
  res.detail = f.summary(info);
  return res;
}

/// lambda_min(diag(Delta) - alpha^2 K2) >= -1e-8 alpha at the threshold.
inline CheckResult positivity(const Context& ctx) {
  CheckResult res{"positivity"};
  detail::Failures f;
  std::string info;
  for (double alpha : {100.0, 500.0}) {
    const DiscreteModel m = ctx.model(alpha);
    for (Sigma sigma : kBothBranches) {
      const double z = ctx.eval_z(m, ctx.root(m, sigma));
      const double margin = positivity_margin(m, sigma, z);
      if (!(margin >= -1e-8 * alpha)) f.add(detail::case_tag(static_cast<int>(m.size()), alpha, sigma) + " margin " + detail::fmt(margin));
      info += std::string(info.empty() ? "" : " ") + detail::fmt(margin);
    }
  }
  res.passed = !f.any();
  res.detail = f.summary("margins " + info);
  return res;
}

/// d/dz <R(z) phi, phi> <= -|phi|^2 and sorted eigenvalues of R decrease in z.
inline CheckResult pencil_monotonicity(const Context& ctx) {
  CheckResult res{"pencil-monotonicity"};
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> log_gap(-2.0, 2.0);
  std::normal_distribution<double> gauss;
  detail::Failures f;
  int probes = 0;
  for (double alpha : {1.0, 10.0}) {
    const DiscreteModel m = ctx.model(alpha);
    const auto n = static_cast<Eigen::Index>(m.size());
    for (Sigma sigma : kBothBranches) {
      const double top = sign(sigma) * m.eps();
      std::vector<double> zs;
      for (int k = 0; k < 5; ++k) zs.push_back(top - std::pow(10.0, log_gap(rng)));
      std::sort(zs.begin(), zs.end());
      for (double z : zs) {
        for (int p = 0; p < 10; ++p) {
          Eigen::VectorXcd phi(n);
          for (Eigen::Index i = 0; i < n; ++i) phi(i) = cplx(gauss(rng), gauss(rng));
          ++probes;
          const double slope = pencil_slope_check(m, sigma, z, phi);
          if (!(slope <= -phi.squaredNorm() * (1.0 - 1e-6)))
            f.add(detail::case_tag(static_cast<int>(n), alpha, sigma) + " slope " + detail::fmt(slope / phi.squaredNorm()));
        }
      }
      for (std::size_t k = 1; k < zs.size(); ++k) {
        const auto lo = hermitian_eigenvalues(assemble_r(m, sigma, zs[k - 1]).r);
        const auto hi = hermitian_eigenvalues(assemble_r(m, sigma, zs[k]).r);
        for (std::size_t i = 0; i < lo.size(); ++i)
          if (hi[i] > lo[i] + 1e-12 * (1.0 + std::abs(lo[i])))
            f.add(detail::case_tag(static_cast<int>(n), alpha, sigma) + " eigenvalue " + std::to_string(i) + " increases");
      }
    }
  }
  res.passed = !f.any();
  res.detail = f.summary(std::to_string(probes) + " probes");
  return res;
}

/// sigma = -1 branch: convention below the small-alpha threshold, root above.
inline CheckResult branch_logic(const Context& ctx) {
  CheckResult res{"branch-logic"};
  const DiscreteModel m = ctx.model(1.0);
  const IrDiagnostics ir = ir_diagnostics(m);
  if (!std::isfinite(ir.small_alpha_threshold)) {
    res.passed = true;
    res.detail = "not applicable: lambda/sqrt(omega) is not square integrable on this model";
    return res;
  }
  const double t = ir.small_alpha_threshold;
  const EssSpecResult below = ctx.root(m.with_alpha(0.99 * t), Sigma::minus);
  const EssSpecResult above = ctx.root(m.with_alpha(1.01 * t), Sigma::minus);
  res.passed = below.kind == EssSpecResult::Kind::convention && above.kind == EssSpecResult::Kind::root;
  res.detail = "threshold " + detail::fmt(t) + ": 0.99x -> " + std::string(to_string(below.kind)) + ", 1.01x -> " +
               std::string(to_string(above.kind));
  return res;
}

/// Runs `check`, timing it and converting exceptions into failures.
inline CheckResult run_check(const std::string& name, const std::function<CheckResult()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r;
  try {
    r = check();
  } catch (const std::exception& e) {
    r.name = name;
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.name.empty()) r.name = name;
  return r;
}

/// Inequality sweeps, toy closed forms and the inertia identity on small grids.
inline std::vector<CheckResult> run_quick(const Context& ctx) {
  return {
      run_check("elementary-inequality", [&] { return elementary_inequality(ctx); }),
      run_check("toy-closed-forms", [&] { return toy_closed_forms(ctx); }),
      run_check("inertia-equivalence", [&] { return inertia_equivalence(ctx, {2, 4}); }),
  };
}

/// Every numerical property; the I/O contract is added by the CLI layer.
inline std::vector<CheckResult> run_full_numeric(const Context& ctx) {
  return {
      run_check("elementary-inequality", [&] { return elementary_inequality(ctx); }),
      run_check("psi2-bounds", [&] { return psi2_bounds(ctx); }),
      run_check("delta-pointwise", [&] { return delta_pointwise(ctx); }),
      run_check("rank-two", [&] { return rank_two_structure(ctx); }),
      run_check("inertia-equivalence", [&] { return inertia_equivalence(ctx); }),
      run_check("schur-reproduction", [&] { return schur_reproduction(ctx); }),
      run_check("strong-coupling", [&] { return strong_coupling(ctx); }),
      run_check("asymptotics", [&] { return asymptotics(ctx); }),
      run_check("positivity", [&] { return positivity(ctx); }),
      run_check("pencil-monotonicity", [&] { return pencil_monotonicity(ctx); }),
      run_check("branch-logic", [&] { return branch_logic(ctx); }),
      run_check("toy-closed-forms", [&] { return toy_closed_forms(ctx); }),
  };
}

}  // namespace spinboson::verify
