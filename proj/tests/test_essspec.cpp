#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "spinboson/essspec.hpp"
#include "test_support.hpp"

using namespace spinboson;
using spinboson::testing::default_model;
using spinboson::testing::gaussian_model;
using spinboson::testing::toy_model;

TEST(EvalPhi, ToyClosedForms) {
  const DiscreteModel m = toy_model();
  EXPECT_DOUBLE_EQ(m.spectral_weight[0], 4.0);
  EXPECT_DOUBLE_EQ(eval_phi(m, Sigma::plus, 0.0), -3.0);
  EXPECT_NEAR(eval_phi(m, Sigma::plus, -2.0), 0.0, 1e-15);
}

TEST(EvalPhi, DecoupledIsLinear) {
  const DiscreteModel m = default_model(0.0);
  for (double z : {-5.0, -1.0, 0.5}) EXPECT_DOUBLE_EQ(eval_phi(m, Sigma::plus, z), -1.0 - z);
  for (double z : {-5.0, -1.5}) EXPECT_DOUBLE_EQ(eval_phi(m, Sigma::minus, z), 1.0 - z);
}

TEST(EvalPhi, DomainErrors) {
  const DiscreteModel m = toy_model();
  EXPECT_THROW(eval_phi(m, Sigma::plus, 1.0), DomainError);
  EXPECT_THROW(eval_phi(m, Sigma::minus, -1.0), DomainError);
  EXPECT_THROW(phi_derivative(m, Sigma::plus, 2.0), DomainError);
}

TEST(PhiDerivative, ToyClosedForm) {
  // Phi(z) = -1 - z - 4/(2 - z)  =>  Phi'(-2) = -1 - 4/16
  const DiscreteModel m = toy_model();
  EXPECT_DOUBLE_EQ(phi_derivative(m, Sigma::plus, -2.0), -1.25);
  EXPECT_DOUBLE_EQ(phi_derivative(default_model(0.0), Sigma::plus, -3.0), -1.0);
}

TEST(PhiDerivative, MatchesCentralDifference) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> gap(1e-3, 50.0);
  for (double alpha : {0.3, 1.0, 7.0, 120.0}) {
    const DiscreteModel m = default_model(alpha);
    for (Sigma sigma : kBothBranches) {
      for (int k = 0; k < 10; ++k) {
        const double z = sign(sigma) - gap(rng);
        const double h = 1e-5 * (sign(sigma) - z);
        const double fd = (eval_phi(m, sigma, z + h) - eval_phi(m, sigma, z - h)) / (2 * h);
        const double an = phi_derivative(m, sigma, z);
        EXPECT_LE(an, -1.0);
        EXPECT_NEAR(fd / an, 1.0, 1e-6) << "alpha=" << alpha << " z=" << z;
      }
    }
  }
}

TEST(EvalPhi, StrictlyDecreasing) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> gap(1e-6, 100.0);
  const DiscreteModel m = gaussian_model(4.0);
  for (Sigma sigma : kBothBranches) {
    for (int k = 0; k < 200; ++k) {
      double a = sign(sigma) - gap(rng);
      double b = sign(sigma) - gap(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      EXPECT_GT(eval_phi(m, sigma, a), eval_phi(m, sigma, b));
    }
  }
}

TEST(FindPhiRoot, ToyQuadratics) {
  const DiscreteModel m = toy_model();
  const EssSpecResult plus = find_phi_root(m, Sigma::plus);
  EXPECT_TRUE(plus.is_root());
  EXPECT_NEAR(plus.value, -2.0, 1e-12);  // z^2 - z - 6 = 0
  const EssSpecResult minus = find_phi_root(m, Sigma::minus);
  EXPECT_TRUE(minus.is_root());
  EXPECT_NEAR(minus.value, (1.0 - std::sqrt(17.0)) / 2.0, 1e-12);  // z^2 - z - 4 = 0
}

TEST(FindPhiRoot, Decoupled) {
  const DiscreteModel m = default_model(0.0);
  const EssSpecResult plus = find_phi_root(m, Sigma::plus);
  EXPECT_TRUE(plus.is_root());
  EXPECT_EQ(plus.value, -1.0);
  const EssSpecResult minus = find_phi_root(m, Sigma::minus);
  EXPECT_EQ(minus.kind, EssSpecResult::Kind::convention);
  EXPECT_EQ(minus.value, -1.0);
}

TEST(FindPhiRoot, ResultInvariants) {
  for (double alpha : {0.01, 0.5, 1.5, 10.0, 1e3, 1e5}) {
    const DiscreteModel m = default_model(alpha);
    for (Sigma sigma : kBothBranches) {
      const EssSpecResult r = find_phi_root(m, sigma);
      if (r.is_root())
        EXPECT_LT(r.value, sign(sigma) * m.eps());
      else
        EXPECT_EQ(r.value, -m.eps());
      if (sigma == Sigma::plus) EXPECT_TRUE(r.is_root());
      if (r.is_root()) {
        const double norm = lambda_norm(m);
        const double tol = 1e-10 * std::max(1.0, alpha * alpha * norm * norm / (sign(sigma) - r.value));
        EXPECT_LE(r.residual, tol);
        EXPECT_LE(std::abs(eval_phi(m, sigma, r.value)), tol);
      }
    }
  }
}

TEST(FindPhiRoot, SignChangesOnceOnBracket) {
  for (double alpha : {0.5, 2.0, 50.0}) {
    const DiscreteModel m = gaussian_model(alpha);
    for (Sigma sigma : kBothBranches) {
      const EssSpecResult r = find_phi_root(m, sigma);
      if (!r.is_root()) continue;
      const double hi = sign(sigma) - 1e-8;
      const double lo = r.value - 4.0 * std::max(1.0, alpha * lambda_norm(m));
      int changes = 0;
      double prev = eval_phi(m, sigma, lo);
      for (int k = 1; k < 64; ++k) {
        const double f = eval_phi(m, sigma, lo + (hi - lo) * k / 63.0);
        changes += (prev > 0) != (f > 0);
        prev = f;
      }
      EXPECT_EQ(changes, 1);
    }
  }
}

TEST(FindPhiRoot, NonincreasingInAlpha) {
  for (Sigma sigma : kBothBranches) {
    double prev = sign(sigma);
    for (double alpha = 0.05; alpha < 2000.0; alpha *= 1.7) {
      const double e = find_phi_root(default_model(alpha), sigma).value;
      EXPECT_LE(e, prev + 1e-12 * std::max(1.0, std::abs(e)));
      prev = e;
    }
  }
}

TEST(FindPhiRoot, ThresholdConsistency) {
  for (auto model : {default_model(1.0), gaussian_model(1.0, 64, 8.0)}) {
    const double threshold = ir_diagnostics(model).small_alpha_threshold;
    ASSERT_TRUE(std::isfinite(threshold));
    for (double f : {0.5, 0.99, 1.0 - 1e-3 - 1e-6}) {
      EXPECT_EQ(find_phi_root(model.with_alpha(f * threshold), Sigma::minus).kind,
                EssSpecResult::Kind::convention)
          << f;
    }
    for (double f : {1.0 + 1e-3 + 1e-6, 1.01, 2.0}) {
      EXPECT_EQ(find_phi_root(model.with_alpha(f * threshold), Sigma::minus).kind, EssSpecResult::Kind::root)
          << f;
    }
  }
}

TEST(BottomEssSpectrum, DecoupledAndToy) {
  const EssentialBottom b0 = bottom_ess_spectrum(default_model(0.0));
  EXPECT_EQ(b0.e_plus.value, -1.0);
  EXPECT_EQ(b0.e_minus.kind, EssSpecResult::Kind::convention);
  EXPECT_EQ(b0.e_min, -1.0);

  const EssentialBottom toy = bottom_ess_spectrum(toy_model());
  EXPECT_NEAR(toy.e_min, -2.0, 1e-12);
}

TEST(BottomEssSpectrum, StrongCouplingScale) {
  const DiscreteModel m = default_model(100.0);
  const EssentialBottom b = bottom_ess_spectrum(m);
  EXPECT_NEAR(b.e_min / (-100.0 * lambda_norm(m)), 1.0, 0.02);
  EXPECT_LT(b.e_plus.value, -1.0);
}

TEST(AsymptoticReport, LargeCoupling) {
  const DiscreteModel m = default_model(1.0);
  const double norm = lambda_norm(m);
  const std::vector<double> alphas = {10.0, 100.0, 1000.0};
  const auto rows = asymptotic_report(m, alphas);
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& row : rows) {
    if (row.alpha != 1000.0) continue;
    EXPECT_LE(std::abs(row.energy_over_alpha + norm) / norm, 0.02);
    EXPECT_LE(std::abs(row.constant * 2.0 * norm * norm - 1.0), 0.05);
  }
  const std::vector<double> bad = {10.0, 5.0};
  EXPECT_THROW(asymptotic_report(m, bad), ConfigError);
}

TEST(AsymptoticReport, WeakCouplingRowReportsDivergingSlope) {
  const std::vector<double> alphas = {1e-4};
  const auto rows = asymptotic_report(default_model(1.0), alphas);
  EXPECT_LT(rows[0].energy_over_alpha, -9000.0);  // ~ -eps / alpha
}
