#pragma once

#include <functional>
#include <vector>

#include "sgdva/activation.hpp"

namespace sgdva {

// Module constant C in the admissibility condition rho^2 >= 1 - C / M^2.
constexpr double kAdmissibilityC = 1.0;
// Stand-in for rho at theta = pi/2.
constexpr double kRhoFloor = 1e-6;

struct NestedBudget {
  std::int64_t outer = 10000;
  std::int64_t inner = 100;
};

// Monte-Carlo T_rho f(x) = E f(rho x + sqrt(1 - rho^2) z).
Estimate ou_apply(const std::function<double(double)>& f, double rho, double x, std::int64_t mc_samples,
                  std::uint64_t seed);

// Deterministic T_rho f(x) by quadrature over the smoothing variable.
double ou_apply_quadrature(const std::function<double(double)>& f, double rho, double x,
                           const std::vector<double>& breakpoints = {});

// T_rho sigma'(z): closed form when the activation has one, otherwise quadrature.
double smoothed_derivative_at(const Activation& act, double rho, double z);

// ||T_rho sigma'||^2 by nested Monte Carlo; staircases use the exact closed form (std_error 0).
Estimate smoothed_deriv_norm_sq(const Activation& act, double rho, const NestedBudget& budget, std::uint64_t seed);

// ||T_rho sigma'||^2 by deterministic quadrature.
double smoothed_deriv_norm_sq_quadrature(const Activation& act, double rho);

// Exact sum_{i,j} A_i A_j / (2 pi sqrt(1 - rho^4)) exp(...) for staircase derivatives.
double staircase_ou_deriv_norm_sq(const StaircaseFunction& phi, double rho);
// T_rho Phi'(z) = sum_i A_i exp(-(rho z - t_i)^2 / (2(1 - rho^2))) / sqrt(2 pi (1 - rho^2))
double staircase_ou_deriv(const StaircaseFunction& phi, double rho, double z);
// T_rho Phi(z) = A_0 + sum_i A_i Phi_N((rho z - t_i) / sqrt(1 - rho^2))
double staircase_ou_value(const StaircaseFunction& phi, double rho, double z);

// psi(theta) = sin(theta) ||T_{cos theta} sigma'||. Standard error by the delta method.
Estimate psi_sigma(const Activation& act, double theta, const NestedBudget& budget, std::uint64_t seed);
double psi_sigma_quadrature(const Activation& act, double theta);

using PsiEvaluator = std::function<double(double theta)>;

struct CriticalPoint {
  double theta = 0.0;
  double psi = 0.0;
};

constexpr int kDefaultCriticalGrid = 2048;

// Largest grid point theta <= theta0 with psi(theta) <= sqrt(eps), scanning down from theta0.
// Throws kEmptyRegion when even the smallest positive grid point fails.
CriticalPoint critical_point(const PsiEvaluator& psi, double theta0, double eps, int grid_size = kDefaultCriticalGrid);
CriticalPoint critical_point(const Activation& act, double theta0, double eps, int grid_size,
                             const NestedBudget& budget, std::uint64_t seed);

// True when rho^2 >= 1 - C / M^2 for M = max |t_i|.
bool smoothing_admissible(const StaircaseFunction& phi, double rho);

// E (T_rho Phi(z) - Phi(z))^2 by Monte Carlo over z; throws kPreconditionViolation outside the admissible range.
Estimate smoothing_gap_sq(const StaircaseFunction& phi, double rho, std::int64_t mc_samples, std::uint64_t seed);

struct SmoothedNormCurve {
  Vector rhos;
  Vector norms_sq;
  Vector std_errors;
  NestedBudget budget;
  std::uint64_t seed = 0;
};

// Every grid point shares `seed` (common random numbers) so differences along the curve are low-noise.
SmoothedNormCurve smoothed_norm_curve(const Activation& act, const Vector& rhos, const NestedBudget& budget,
                                      std::uint64_t seed);

struct PsiCurve {
  Vector thetas;
  Vector psi;
  Vector std_errors;
};

PsiCurve psi_curve(const Activation& act, const Vector& thetas, const NestedBudget& budget, std::uint64_t seed);

// Largest decrease along the curve beyond `k` combined standard errors (0 when monotone within noise).
double worst_decrease(const Vector& values, const Vector& std_errors, double k);

}  // namespace sgdva
