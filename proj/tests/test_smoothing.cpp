#include <gtest/gtest.h>

#include "sgdva/smoothing.hpp"
#include "support/oracles.hpp"

using namespace sgdva;

TEST(Smoothing, QuadratureMatchesTrapezoid) {
  for (double rho : {0.2, 0.7, 0.95})
    for (double x : {-1.0, 0.3, 2.2}) {
      EXPECT_NEAR(ou_apply_quadrature(oracle::sigmoid, rho, x), oracle::ou(oracle::sigmoid, rho, x), 1e-9);
      auto relu = [](double z) { return std::max(z, 0.0); };
      EXPECT_NEAR(ou_apply_quadrature(relu, rho, x, {0.0}), oracle::ou(relu, rho, x, 1e-4), 1e-7);
    }
}

TEST(Smoothing, HermiteEigenfunctions) {
  for (int i = 0; i <= 6; ++i)
    for (double rho : {0.3, 0.8}) {
      auto he = [i](double z) { return oracle::hermite(i, z); };
      EXPECT_NEAR(ou_apply_quadrature(he, rho, 0.9), std::pow(rho, i) * he(0.9), 1e-9);
      const Estimate e = ou_apply(he, rho, 0.9, 20000, 3 + i);
      EXPECT_LE(std::abs(e.value - std::pow(rho, i) * he(0.9)), 5 * e.std_error + 1e-12);
    }
}

TEST(Smoothing, StaircaseClosedForms) {
  const StaircaseFunction phi{(Vector(3) << 0.5, 1.0, 0.25).finished(), (Vector(3) << -1.0, 0.2, 1.5).finished(), 0.1, 1.5};
  const oracle::Staircase ref{{0.5, 1.0, 0.25}, {-1.0, 0.2, 1.5}, 0.1};
  for (double rho : {0.3, 0.6, 0.9}) {
    EXPECT_NEAR(staircase_ou_deriv_norm_sq(phi, rho), oracle::staircase_norm_quad(ref, rho), 1e-8);
    for (double z : {-1.0, 0.5, 2.0}) {
      EXPECT_NEAR(staircase_ou_value(phi, rho, z), oracle::ou_split(ref, ref.thresholds, rho, z), 1e-9);
      const double h = 1e-4;
      const double fd = (staircase_ou_value(phi, rho, z + h) - staircase_ou_value(phi, rho, z - h)) / (2 * h);
      // d/dz T_rho Phi = rho T_rho Phi'
      EXPECT_NEAR(rho * staircase_ou_deriv(phi, rho, z), fd, 1e-6);
    }
  }
  const StaircaseFunction step{Vector::Ones(1), Vector::Zero(1), 0.0, 1.0};
  for (double rho : {0.1, 0.5, 0.99})
    EXPECT_NEAR(staircase_ou_deriv_norm_sq(step, rho), 1 / (2 * std::numbers::pi * std::sqrt(1 - std::pow(rho, 4))), 1e-14);
}

TEST(Smoothing, NormEstimatorsAgree) {
  const Activation sig = builtin("sigmoid");
  for (double rho : {0.3, 0.8}) {
    const double ref = oracle::smoothed_norm(oracle::sigmoid_prime, rho);
    EXPECT_NEAR(smoothed_deriv_norm_sq_quadrature(sig, rho), ref, 1e-8);
    const Estimate mc = smoothed_deriv_norm_sq(sig, rho, {20000, 32}, 9);
    EXPECT_LE(std::abs(mc.value - ref), 5 * mc.std_error);
  }
  const Activation clip = builtin("clipped_identity");
  const double ref = oracle::gauss_mean([](double z) {
    const double v = oracle::ou_split([](double u) { return std::abs(u) <= 1 ? 1.0 : 0.0; }, {-1.0, 1.0}, 0.6, z);
    return v * v;
  }, 2e-3);
  EXPECT_NEAR(smoothed_deriv_norm_sq_quadrature(clip, 0.6), ref, 1e-7);
  try {
    smoothed_deriv_norm_sq(lipschitz_custom([](double z) { return z; }, {}, 1.0, true), 0.5, {}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnavailableDerivative);
  }
}

TEST(Smoothing, PsiAndCriticalPoint) {
  const Activation id = builtin("identity");
  EXPECT_DOUBLE_EQ(psi_sigma(id, 0.0, {}, 1).value, 0.0);
  EXPECT_NEAR(psi_sigma_quadrature(id, 0.7), std::sin(0.7), 1e-12);
  const Activation he2 = builtin("hermite", {{"i", {2.0}}});
  EXPECT_NEAR(psi_sigma_quadrature(he2, 0.5), std::sin(0.5) * std::sqrt(2.0) * std::cos(0.5), 1e-9);

  // psi = sin(theta): largest grid point <= theta0 with sin(theta) <= sqrt(eps)
  const CriticalPoint c = critical_point([](double t) { return std::sin(t); }, 1.0, 0.01, 1000);
  EXPECT_LE(std::sin(c.theta), 0.1 + 1e-12);
  EXPECT_GT(std::sin(c.theta + 1.0 / 1000 + 1e-9), 0.1);
  EXPECT_THROW(critical_point([](double) { return 1.0; }, 1.0, 0.01, 100), Error);
}

TEST(Smoothing, Admissibility) {
  const StaircaseFunction phi{Vector::Ones(1), Vector::Constant(1, 2.0), 0.0, 2.0};
  EXPECT_TRUE(smoothing_admissible(phi, std::sqrt(0.75) + 1e-9));
  EXPECT_FALSE(smoothing_admissible(phi, 0.5));
  try {
    smoothing_gap_sq(phi, 0.5, 100, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPreconditionViolation);
  }
  const oracle::Staircase ref{{1.0}, {2.0}, 0.0};
  const double rho = 0.95;
  const double exact = oracle::gauss_mean([&](double z) {
    const double d = oracle::ou(ref, rho, z, 1e-3) - ref(z);
    return d * d;
  }, 2e-3);
  const Estimate gap = smoothing_gap_sq(phi, rho, 200000, 4);
  EXPECT_LE(std::abs(gap.value - exact), 5 * gap.std_error);
}

TEST(Smoothing, CurvesAndDecrease) {
  const Vector rhos = Vector::LinSpaced(8, 0.1, 0.9);
  const SmoothedNormCurve c = smoothed_norm_curve(builtin("sigmoid"), rhos, {4000, 16}, 3);
  EXPECT_EQ(c.norms_sq.size(), 8);
  EXPECT_DOUBLE_EQ(worst_decrease(c.norms_sq, c.std_errors, 3.0), 0.0);
  const Vector v = (Vector(3) << 1.0, 0.5, 2.0).finished();
  EXPECT_NEAR(worst_decrease(v, Vector::Zero(3), 3.0), 0.5, 1e-15);
  EXPECT_NEAR(worst_decrease(v, Vector::Constant(3, 0.1), 1.0), 0.5 - 0.1 * std::sqrt(2.0), 1e-15);
}
