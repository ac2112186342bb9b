#include "sgdva/core.hpp"

#include <algorithm>

namespace sgdva {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegreeOverflow: return "degree-overflow";
    case ErrorCode::kUnavailableDerivative: return "unavailable-derivative";
    case ErrorCode::kEmptyRegion: return "empty-region";
    case ErrorCode::kPreconditionViolation: return "precondition-violation";
    case ErrorCode::kUnknownActivation: return "unknown-activation";
    case ErrorCode::kEpsTooLarge: return "eps-too-large";
    case ErrorCode::kNonMonotone: return "non-monotone";
    case ErrorCode::kNonUnitVector: return "non-unit-vector";
    case ErrorCode::kStall: return "stall";
    case ErrorCode::kThresholdDegenerate: return "threshold-degenerate";
    case ErrorCode::kEmptyCandidates: return "empty-candidates";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

// Acklam's rational approximation followed by one Halley step on erfc.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::kInvalidArgument, "normal_quantile: p outside [0,1]");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

Vector random_orthogonal_unit(const Vector& w, Rng& rng) {
  for (;;) {
    Vector v = orthogonal_part(rng.normal_vector(w.size()), w);
    const double n = v.norm();
    if (n > 1e-8) return v / n;
  }
}

Vector rotate_towards_random(const Vector& w, double theta, Rng& rng) {
  const Vector v = random_orthogonal_unit(w, rng);
  return std::cos(theta) * w + std::sin(theta) * v;
}

}  // namespace sgdva
