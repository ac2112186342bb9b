#include "sgdva/smoothing.hpp"

#include <algorithm>

#include "sgdva/quadrature.hpp"

namespace sgdva {

namespace {

double noise_scale(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::kInvalidArgument, "rho must lie in (0, 1)");
  return std::sqrt(1.0 - rho * rho);
}

}  // namespace

Estimate ou_apply(const std::function<double(double)>& f, double rho, double x, std::int64_t mc_samples,
                  std::uint64_t seed) {
  const double s = noise_scale(rho);
  Rng rng(seed);
  MeanAccumulator acc;
  for (std::int64_t k = 0; k < mc_samples; ++k) acc.add(f(rho * x + s * rng.normal()));
  return acc.estimate();
}

double ou_apply_quadrature(const std::function<double(double)>& f, double rho, double x,
                           const std::vector<double>& breakpoints) {
  const double s = noise_scale(rho);
  std::vector<double> cuts;
  for (double b : breakpoints) cuts.push_back((b - rho * x) / s);
  return gaussian_expectation([&](double u) { return f(rho * x + s * u); }, cuts);
}

double smoothed_derivative_at(const Activation& act, double rho, double z) {
  if (act.smoothed_derivative) return act.smoothed_derivative(rho, z);
  if (!act.derivative) throw Error(ErrorCode::kUnavailableDerivative, "activation exposes no derivative");
  return ou_apply_quadrature(act.derivative, rho, z, act.breakpoints);
}

Estimate smoothed_deriv_norm_sq(const Activation& act, double rho, const NestedBudget& budget, std::uint64_t seed) {
  if (act.staircase) return {staircase_ou_deriv_norm_sq(*act.staircase, rho), 0.0};
  if (!act.derivative) throw Error(ErrorCode::kUnavailableDerivative, "activation exposes no derivative");
  const double s = noise_scale(rho);
  const std::int64_t half = std::max<std::int64_t>(1, budget.inner / 2);
  Rng rng(seed);
  MeanAccumulator acc;
  for (std::int64_t k = 0; k < budget.outer; ++k) {
    const double c = rho * rng.normal();
    // Two independent inner means; their product is unbiased for (T_rho sigma'(z))^2.
    double a = 0.0, b = 0.0;
    for (std::int64_t j = 0; j < half; ++j) a += act.derivative(c + s * rng.normal());
    for (std::int64_t j = 0; j < half; ++j) b += act.derivative(c + s * rng.normal());
    acc.add((a / half) * (b / half));
  }
  return acc.estimate();
}

double smoothed_deriv_norm_sq_quadrature(const Activation& act, double rho) {
  if (act.staircase) return staircase_ou_deriv_norm_sq(*act.staircase, rho);
  const double s = noise_scale(rho);
  std::vector<double> cuts;
  for (double b : act.breakpoints) cuts.push_back(b / rho);
  return gaussian_expectation([&](double z) {
    const double v = smoothed_derivative_at(act, rho, z);
    return v * v;
  }, cuts, act.breakpoints.empty() ? 0.5 : std::clamp(s / rho, 0.02, 0.5));
}

double staircase_ou_deriv_norm_sq(const StaircaseFunction& phi, double rho) {
  const double r2 = rho * rho, q = 1.0 - r2 * r2;
  if (!(q > 0.0)) throw Error(ErrorCode::kInvalidArgument, "rho must lie in (0, 1)");
  double total = 0.0;
  for (Index i = 0; i < phi.steps(); ++i) {
    for (Index j = 0; j < phi.steps(); ++j) {
      const double ti = phi.thresholds(i), tj = phi.thresholds(j);
      total += phi.jumps(i) * phi.jumps(j) * std::exp(-(ti * ti + tj * tj) / (2.0 * q) + r2 * ti * tj / q);
    }
  }
  return total / (2.0 * std::numbers::pi * std::sqrt(q));
}

double staircase_ou_deriv(const StaircaseFunction& phi, double rho, double z) {
  const double s = noise_scale(rho);
  double v = 0.0;
  for (Index i = 0; i < phi.steps(); ++i) v += phi.jumps(i) * normal_pdf((rho * z - phi.thresholds(i)) / s) / s;
  return v;
}

double staircase_ou_value(const StaircaseFunction& phi, double rho, double z) {
  const double s = noise_scale(rho);
  double v = phi.offset;
  for (Index i = 0; i < phi.steps(); ++i) v += phi.jumps(i) * normal_cdf((rho * z - phi.thresholds(i)) / s);
  return v;
}

namespace {

double psi_rho(double theta) {
  if (theta < 0.0 || theta > std::numbers::pi / 2 + 1e-12)
    throw Error(ErrorCode::kInvalidArgument, "theta must lie in [0, pi/2]");
  return std::max(std::cos(theta), kRhoFloor);
}

}  // namespace

Estimate psi_sigma(const Activation& act, double theta, const NestedBudget& budget, std::uint64_t seed) {
  const double rho = psi_rho(theta);
  if (theta == 0.0) return {0.0, 0.0};
  const Estimate n = smoothed_deriv_norm_sq(act, rho, budget, seed);
  const double st = std::sin(theta);
  if (n.value <= 0.0) return {0.0, st * std::sqrt(n.std_error)};
  const double root = std::sqrt(n.value);
  return {st * root, st * n.std_error / (2.0 * root)};
}

double psi_sigma_quadrature(const Activation& act, double theta) {
  const double rho = psi_rho(theta);
  if (theta == 0.0) return 0.0;
  return std::sin(theta) * std::sqrt(std::max(smoothed_deriv_norm_sq_quadrature(act, rho), 0.0));
}

CriticalPoint critical_point(const PsiEvaluator& psi, double theta0, double eps, int grid_size) {
  if (!(theta0 > 0.0 && theta0 <= std::numbers::pi / 2 + 1e-12))
    throw Error(ErrorCode::kInvalidArgument, "critical_point: theta0 must lie in (0, pi/2]");
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "critical_point: eps must be positive");
  if (grid_size < 1) throw Error(ErrorCode::kInvalidArgument, "critical_point: grid_size must be >= 1");
  const double level = std::sqrt(eps);
  double last = 0.0;
  for (int k = grid_size; k >= 1; --k) {
    const double theta = theta0 * k / grid_size;
    last = psi(theta);
    if (last <= level) return {theta, last};
  }
  char msg[160];
  std::snprintf(msg, sizeof msg, "critical_point: psi(%.6g) = %.6g exceeds sqrt(eps) = %.6g", theta0 / grid_size,
                last, level);
  throw Error(ErrorCode::kEmptyRegion, msg);
}

CriticalPoint critical_point(const Activation& act, double theta0, double eps, int grid_size,
                             const NestedBudget& budget, std::uint64_t seed) {
  return critical_point([&](double theta) { return psi_sigma(act, theta, budget, seed).value; }, theta0, eps,
                        grid_size);
}

bool smoothing_admissible(const StaircaseFunction& phi, double rho) {
  const double M = phi.max_abs_threshold();
  if (M == 0.0) return true;
  return rho * rho >= 1.0 - kAdmissibilityC / (M * M);
}

Estimate smoothing_gap_sq(const StaircaseFunction& phi, double rho, std::int64_t mc_samples, std::uint64_t seed) {
  noise_scale(rho);
  if (!smoothing_admissible(phi, rho))
    throw Error(ErrorCode::kPreconditionViolation, "smoothing_gap_sq: rho below the admissible range");
  Rng rng(seed);
  MeanAccumulator acc;
  for (std::int64_t k = 0; k < mc_samples; ++k) {
    const double z = rng.normal();
    const double d = staircase_ou_value(phi, rho, z) - phi.value(z);
    acc.add(d * d);
  }
  return acc.estimate();
}

SmoothedNormCurve smoothed_norm_curve(const Activation& act, const Vector& rhos, const NestedBudget& budget,
                                      std::uint64_t seed) {
  SmoothedNormCurve curve;
  curve.rhos = rhos;
  curve.budget = budget;
  curve.seed = seed;
  curve.norms_sq.resize(rhos.size());
  curve.std_errors.resize(rhos.size());
  for (Index i = 0; i < rhos.size(); ++i) {
    const Estimate e = smoothed_deriv_norm_sq(act, rhos(i), budget, seed);
    curve.norms_sq(i) = e.value;
    curve.std_errors(i) = e.std_error;
  }
  return curve;
}

PsiCurve psi_curve(const Activation& act, const Vector& thetas, const NestedBudget& budget, std::uint64_t seed) {
  PsiCurve curve;
  curve.thetas = thetas;
  curve.psi.resize(thetas.size());
  curve.std_errors.resize(thetas.size());
  for (Index i = 0; i < thetas.size(); ++i) {
    const Estimate e = psi_sigma(act, thetas(i), budget, seed);
    curve.psi(i) = e.value;
    curve.std_errors(i) = e.std_error;
  }
  return curve;
}

double worst_decrease(const Vector& values, const Vector& std_errors, double k) {
  double worst = 0.0;
  for (Index i = 0; i < values.size(); ++i)
    for (Index j = i + 1; j < values.size(); ++j) {
      const double slack = k * std::hypot(std_errors(i), std_errors(j));
      worst = std::max(worst, values(i) - values(j) - slack);
    }
  return worst;
}

}  // namespace sgdva
