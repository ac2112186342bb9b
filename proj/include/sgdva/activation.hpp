#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sgdva/core.hpp"

namespace sgdva {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Phi(z) = offset + sum_i jumps[i] * 1{z >= thresholds[i]}
struct StaircaseFunction {
  Vector jumps;
  Vector thresholds;
  double offset = 0.0;
  double M = 1.0;

  Index steps() const { return jumps.size(); }
  double value(double z) const;
  double max_abs_threshold() const;
  // Throws kPreconditionViolation if jumps are not positive, thresholds not increasing or outside [-M, M].
  void validate() const;
};

struct Activation {
  std::string name;
  std::function<double(double)> value;
  // Empty when no pointwise derivative exists. For staircases this is the mollified difference quotient.
  std::function<double(double)> derivative;
  bool derivative_mollified = false;
  double mollifier = 0.0;
  std::optional<StaircaseFunction> staircase;
  // (rho, z) -> T_rho sigma'(z) when a closed form is known.
  std::function<double(double, double)> smoothed_derivative;
  // Points where sigma or sigma' is not smooth; used to place quadrature panels.
  std::vector<double> breakpoints;
  double B = kInf;               // sup |sigma|
  double L = 0.0;                // ||sigma'||_{L2}
  std::optional<double> M;       // sigma' vanishes outside [-M, M]
  bool monotone = false;
  // When set, sigma'(z) = 1{lo <= z <= hi}; lets truncation keep a closed-form smoothed derivative.
  std::optional<std::pair<double, double>> unit_slope_interval;

  double operator()(double z) const { return value(z); }
  bool bounded() const { return std::isfinite(B); }
  bool has_derivative() const { return static_cast<bool>(derivative); }
};

using ParamMap = std::map<std::string, std::vector<double>>;

// Serialized form of an activation choice: name, parameters, accuracy and whether to truncate.
struct ActivationSpec {
  std::string name;
  ParamMap params;
  double eps = 0.01;
  std::optional<bool> truncate;  // unset: truncate when the builtin is unbounded or its derivative has unbounded support
};

constexpr double kDefaultMollifier = 1e-3;

// Zoo: identity, relu(shift), sigmoid, sign(threshold), hermite(i), staircase(jumps, thresholds, offset, M),
// smoothed_staircase(..., h), clipped_identity(clip), constant(c).
Activation builtin(const std::string& name, const ParamMap& params = {});
Activation make_staircase(const StaircaseFunction& phi, double mollifier = kDefaultMollifier);
Activation make_smoothed_staircase(const StaircaseFunction& phi, double h);
// A b-Lipschitz activation from callables.
Activation lipschitz_custom(std::function<double(double)> value, std::function<double(double)> derivative,
                            double b, bool monotone, std::vector<double> breakpoints = {});

// builtin + optional truncation at support_bound(B_eff, eps).
Activation make_activation(const ActivationSpec& spec);

ActivationSpec parse_activation_shorthand(const std::string& text);  // "relu:shift=1"
std::string activation_shorthand(const ActivationSpec& spec);

double truncate_labels(double y, double B);

// sqrt(2 ln(4B^2/eps) - ln ln(4B^2/eps)); throws kEpsTooLarge unless 4B^2/eps > e.
double support_bound(double B, double eps);

Activation truncate_activation(const Activation& act, double M);

// sqrt(E[sigma^4] / eps) with the fourth moment estimated by Monte Carlo and padded by 3 stderr.
double fourth_moment_bound(const Activation& act, double eps, std::int64_t mc_samples = 200000,
                           std::uint64_t seed = 17);

struct MomentMode {
  double zeta;
  double B_sigma;
};
struct LipschitzMode {
  double b;
};
struct RegularParams {
  double B;
  double L;
};
RegularParams extended_regular_params(double eps, const MomentMode& mode);
RegularParams extended_regular_params(double eps, const LipschitzMode& mode, double c = 1.0);

// Uniform sqrt(eps)-approximation of a monotone activation truncated at M.
StaircaseFunction staircase_approx(const Activation& act, double eps);

// m = ceil((sigma(M) - sigma(-M)) / sqrt(eps)) + 1
int staircase_step_count(const Activation& act, double eps);

// Checks monotonicity on a grid over [-M, M] (or [-8, 8] when M is unset).
bool is_monotone_on_grid(const Activation& act, int points = 4001);

// ||sigma'||^2 by quadrature over the support, or the mollified jump mass for staircases.
double deriv_norm_sq(const Activation& act);

}  // namespace sgdva
