#include "sgdva/activation.hpp"

#include <algorithm>
#include <sstream>

#include "sgdva/hermite.hpp"
#include "sgdva/quadrature.hpp"

namespace sgdva {

double StaircaseFunction::value(double z) const {
  double v = offset;
  for (Index i = 0; i < jumps.size(); ++i)
    if (z >= thresholds(i)) v += jumps(i);
  return v;
}

double StaircaseFunction::max_abs_threshold() const {
  return thresholds.size() == 0 ? 0.0 : thresholds.cwiseAbs().maxCoeff();
}

void StaircaseFunction::validate() const {
  if (jumps.size() != thresholds.size())
    throw Error(ErrorCode::kPreconditionViolation, "staircase: jumps and thresholds differ in length");
  for (Index i = 0; i < jumps.size(); ++i) {
    if (!(jumps(i) > 0.0)) throw Error(ErrorCode::kPreconditionViolation, "staircase: jumps must be positive");
    if (std::abs(thresholds(i)) > M + 1e-12)
      throw Error(ErrorCode::kPreconditionViolation, "staircase: threshold outside [-M, M]");
    if (i > 0 && !(thresholds(i) > thresholds(i - 1)))
      throw Error(ErrorCode::kPreconditionViolation, "staircase: thresholds must be strictly increasing");
  }
}

namespace {

std::function<double(double, double)> interval_smoother(double lo, double hi) {
  return [lo, hi](double rho, double z) {
    const double s = std::sqrt(1.0 - rho * rho);
    const double c = rho * z;
    const double upper = std::isinf(hi) ? 1.0 : normal_cdf((hi - c) / s);
    const double lower = std::isinf(lo) ? 0.0 : normal_cdf((lo - c) / s);
    return upper - lower;
  };
}

double param(const ParamMap& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  if (it->second.size() != 1) throw Error(ErrorCode::kInvalidArgument, "parameter '" + key + "' must be a scalar");
  return it->second.front();
}

void check_keys(const std::string& name, const ParamMap& p, std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : p) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorCode::kInvalidArgument, "activation '" + name + "' has no parameter '" + key + "'");
  }
}

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), v.size()); }

StaircaseFunction staircase_from_params(const ParamMap& p) {
  StaircaseFunction phi;
  auto get = [&](const char* k) { auto it = p.find(k); return it == p.end() ? std::vector<double>{} : it->second; };
  phi.jumps = to_vector(get("jumps"));
  phi.thresholds = to_vector(get("thresholds"));
  phi.offset = param(p, "offset", 0.0);
  phi.M = param(p, "M", std::max(1.0, phi.max_abs_threshold()));
  return phi;
}

double sup_on_grid(const std::function<double(double)>& f, double lo, double hi, int points = 4001) {
  double best = 0.0;
  for (int k = 0; k < points; ++k) best = std::max(best, std::abs(f(lo + (hi - lo) * k / (points - 1))));
  return best;
}

StaircaseFunction truncate_staircase(const StaircaseFunction& phi, double M) {
  StaircaseFunction out;
  out.M = M;
  out.offset = phi.offset;
  std::vector<double> a, t;
  for (Index i = 0; i < phi.steps(); ++i) {
    if (phi.thresholds(i) <= -M) {
      out.offset += phi.jumps(i);
    } else if (phi.thresholds(i) <= M) {
      a.push_back(phi.jumps(i));
      t.push_back(phi.thresholds(i));
    }
  }
  out.jumps = to_vector(a);
  out.thresholds = to_vector(t);
  return out;
}

}  // namespace

Activation make_staircase(const StaircaseFunction& phi, double mollifier) {
  phi.validate();
  Activation act;
  act.name = "staircase";
  act.staircase = phi;
  act.value = [phi](double z) { return phi.value(z); };
  act.derivative = [phi, mollifier](double z) {
    return (phi.value(z + 0.5 * mollifier) - phi.value(z - 0.5 * mollifier)) / mollifier;
  };
  act.derivative_mollified = true;
  act.mollifier = mollifier;
  act.smoothed_derivative = [phi](double rho, double z) {
    const double s = std::sqrt(1.0 - rho * rho);
    double v = 0.0;
    for (Index i = 0; i < phi.steps(); ++i) v += phi.jumps(i) * normal_pdf((rho * z - phi.thresholds(i)) / s) / s;
    return v;
  };
  act.breakpoints.assign(phi.thresholds.data(), phi.thresholds.data() + phi.steps());
  act.B = std::max(std::abs(phi.offset), std::abs(phi.offset + phi.jumps.sum()));
  act.M = phi.M;
  act.monotone = true;
  act.L = std::sqrt(deriv_norm_sq(act));
  return act;
}

Activation make_smoothed_staircase(const StaircaseFunction& phi, double h) {
  phi.validate();
  if (!(h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "smoothed_staircase: h must be positive");
  Activation act;
  act.name = "smoothed_staircase";
  act.value = [phi, h](double z) {
    double v = phi.offset;
    for (Index i = 0; i < phi.steps(); ++i) v += phi.jumps(i) * normal_cdf((z - phi.thresholds(i)) / h);
    return v;
  };
  act.derivative = [phi, h](double z) {
    double v = 0.0;
    for (Index i = 0; i < phi.steps(); ++i) v += phi.jumps(i) * normal_pdf((z - phi.thresholds(i)) / h) / h;
    return v;
  };
  // Gaussian bumps convolve in closed form: T_rho sigma'(z) = sum A_i N(rho z; t_i, h^2 + 1 - rho^2).
  act.smoothed_derivative = [phi, h](double rho, double z) {
    const double sd = std::sqrt(h * h + 1.0 - rho * rho);
    double v = 0.0;
    for (Index i = 0; i < phi.steps(); ++i) v += phi.jumps(i) * normal_pdf((rho * z - phi.thresholds(i)) / sd) / sd;
    return v;
  };
  act.breakpoints.assign(phi.thresholds.data(), phi.thresholds.data() + phi.steps());
  act.B = std::max(std::abs(phi.offset), std::abs(phi.offset + phi.jumps.sum()));
  act.monotone = true;
  act.L = std::sqrt(deriv_norm_sq(act));
  return act;
}

Activation lipschitz_custom(std::function<double(double)> value, std::function<double(double)> derivative,
                            double b, bool monotone, std::vector<double> breakpoints) {
  Activation act;
  act.name = "lipschitz_custom";
  act.value = std::move(value);
  act.derivative = std::move(derivative);
  act.breakpoints = std::move(breakpoints);
  act.monotone = monotone;
  act.B = sup_on_grid(act.value, -12.0, 12.0);
  // A b-Lipschitz function grows at most linearly, so its sup is finite only if it flattens out.
  if (std::abs(act.value(1e6)) > act.B + 1.0 || std::abs(act.value(-1e6)) > act.B + 1.0) act.B = kInf;
  act.L = std::min(b, std::sqrt(deriv_norm_sq(act)));
  return act;
}

Activation builtin(const std::string& name, const ParamMap& params) {
  Activation act;
  act.name = name;
  if (name == "identity") {
    check_keys(name, params, {});
    act.value = [](double z) { return z; };
    act.derivative = [](double) { return 1.0; };
    act.unit_slope_interval = {{-kInf, kInf}};
    act.smoothed_derivative = [](double, double) { return 1.0; };
    act.L = 1.0;
    act.monotone = true;
    return act;
  }
  if (name == "relu") {
    check_keys(name, params, {"shift"});
    const double t = param(params, "shift", 0.0);
    act.value = [t](double z) { return std::max(z - t, 0.0); };
    act.derivative = [t](double z) { return z >= t ? 1.0 : 0.0; };
    act.unit_slope_interval = {{t, kInf}};
    act.smoothed_derivative = interval_smoother(t, kInf);
    act.breakpoints = {t};
    act.L = std::sqrt(1.0 - normal_cdf(t));
    act.monotone = true;
    return act;
  }
  if (name == "sigmoid") {
    check_keys(name, params, {});
    act.value = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    act.derivative = [](double z) {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    };
    act.B = 1.0;
    act.monotone = true;
    act.L = std::sqrt(deriv_norm_sq(act));
    return act;
  }
  if (name == "sign") {
    check_keys(name, params, {"threshold"});
    const double t = param(params, "threshold", 0.0);
    StaircaseFunction phi;
    phi.jumps = Vector::Constant(1, 2.0);
    phi.thresholds = Vector::Constant(1, t);
    phi.offset = -1.0;
    phi.M = std::max(1.0, std::abs(t));
    Activation s = make_staircase(phi);
    s.name = name;
    return s;
  }
  if (name == "hermite") {
    check_keys(name, params, {"i"});
    const double di = param(params, "i", 2.0);
    const int i = static_cast<int>(di);
    if (i < 0 || i != di) throw Error(ErrorCode::kInvalidArgument, "hermite: i must be a non-negative integer");
    act.value = [i](double z) { return hermite_he(i, z); };
    act.derivative = [i](double z) { return hermite_he_derivative(i, z); };
    act.smoothed_derivative = [i](double rho, double z) {
      return i == 0 ? 0.0 : std::sqrt(static_cast<double>(i)) * std::pow(rho, i - 1) * hermite_he(i - 1, z);
    };
    act.B = i == 0 ? 1.0 : kInf;
    act.L = std::sqrt(static_cast<double>(i));
    act.monotone = i <= 1;
    return act;
  }
  if (name == "staircase" || name == "smoothed_staircase") {
    const StaircaseFunction phi = staircase_from_params(params);
    if (name == "staircase") {
      check_keys(name, params, {"jumps", "thresholds", "offset", "M", "mollifier"});
      return make_staircase(phi, param(params, "mollifier", kDefaultMollifier));
    }
    check_keys(name, params, {"jumps", "thresholds", "offset", "M", "h"});
    return make_smoothed_staircase(phi, param(params, "h", 0.25));
  }
  if (name == "clipped_identity") {
    check_keys(name, params, {"clip"});
    const double c = param(params, "clip", 1.0);
    if (!(c > 0.0)) throw Error(ErrorCode::kInvalidArgument, "clipped_identity: clip must be positive");
    act.value = [c](double z) { return std::clamp(z, -c, c); };
    act.derivative = [c](double z) { return std::abs(z) <= c ? 1.0 : 0.0; };
    act.unit_slope_interval = {{-c, c}};
    act.smoothed_derivative = interval_smoother(-c, c);
    act.breakpoints = {-c, c};
    act.B = c;
    act.M = c;
    act.L = std::sqrt(2.0 * normal_cdf(c) - 1.0);
    act.monotone = true;
    return act;
  }
  if (name == "constant") {
    check_keys(name, params, {"c"});
    const double c = param(params, "c", 0.0);
    act.value = [c](double) { return c; };
    act.derivative = [](double) { return 0.0; };
    act.smoothed_derivative = [](double, double) { return 0.0; };
    act.B = std::abs(c);
    act.L = 0.0;
    act.M = 1.0;
    act.monotone = true;
    return act;
  }
  if (name == "lipschitz_custom")
    throw Error(ErrorCode::kUnknownActivation, "lipschitz_custom needs callables; construct it in code");
  throw Error(ErrorCode::kUnknownActivation, "unknown activation '" + name + "'");
}

Activation make_activation(const ActivationSpec& spec) {
  Activation act = builtin(spec.name, spec.params);
  if (spec.truncate.value_or(!act.bounded() || !act.M)) {
    const double b_eff = act.bounded() ? act.B : fourth_moment_bound(act, spec.eps);
    act = truncate_activation(act, support_bound(std::max(b_eff, 1e-12), spec.eps));
  }
  return act;
}

ActivationSpec parse_activation_shorthand(const std::string& text) {
  ActivationSpec spec;
  const auto colon = text.find(':');
  spec.name = text.substr(0, colon);
  if (spec.name.empty()) throw Error(ErrorCode::kInvalidArgument, "empty activation name");
  if (colon == std::string::npos) return spec;
  std::stringstream items(text.substr(colon + 1));
  std::string item;
  while (std::getline(items, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "expected key=value in '" + item + "'");
    std::vector<double> values;
    std::stringstream vs(item.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, '|')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(v, &used));
        if (used != v.size()) throw std::invalid_argument(v);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidArgument, "bad number '" + v + "' in activation spec");
      }
    }
    spec.params[item.substr(0, eq)] = values;
  }
  return spec;
}

std::string activation_shorthand(const ActivationSpec& spec) {
  std::string out = spec.name;
  char sep = ':';
  for (const auto& [key, values] : spec.params) {
    out += sep;
    out += key + "=";
    for (std::size_t i = 0; i < values.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", values[i]);
      out += (i ? "|" : "") + std::string(buf);
    }
    sep = ',';
  }
  return out;
}

double truncate_labels(double y, double B) {
  if (!(B > 0.0)) throw Error(ErrorCode::kInvalidArgument, "truncate_labels: B must be positive");
  return std::clamp(y, -B, B);
}

double support_bound(double B, double eps) {
  const double x = 4.0 * B * B / eps;
  if (!(eps > 0.0) || !(x > std::numbers::e))
    throw Error(ErrorCode::kEpsTooLarge, "support_bound: need 4B^2/eps > e");
  return std::sqrt(2.0 * std::log(x) - std::log(std::log(x)));
}

Activation truncate_activation(const Activation& act, double M) {
  if (!(M > 0.0)) throw Error(ErrorCode::kInvalidArgument, "truncate_activation: M must be positive");
  if (act.M && *act.M <= M) return act;
  if (act.staircase) {
    Activation out = make_staircase(truncate_staircase(*act.staircase, M), act.mollifier);
    out.name = act.name;
    return out;
  }
  Activation out = act;
  out.value = [v = act.value, M](double z) { return v(std::clamp(z, -M, M)); };
  if (act.derivative)
    out.derivative = [d = act.derivative, M](double z) { return std::abs(z) > M ? 0.0 : d(z); };
  out.M = M;
  out.breakpoints.push_back(-M);
  out.breakpoints.push_back(M);
  if (act.unit_slope_interval) {
    const double lo = std::max(act.unit_slope_interval->first, -M);
    const double hi = std::min(act.unit_slope_interval->second, M);
    out.unit_slope_interval = {{lo, hi}};
    out.smoothed_derivative = hi > lo ? interval_smoother(lo, hi) : [](double, double) { return 0.0; };
  } else {
    out.smoothed_derivative = nullptr;
  }
  out.B = sup_on_grid(out.value, -M, M);
  out.L = std::sqrt(deriv_norm_sq(out));
  return out;
}

double fourth_moment_bound(const Activation& act, double eps, std::int64_t mc_samples, std::uint64_t seed) {
  Rng rng(seed);
  MeanAccumulator acc;
  for (std::int64_t s = 0; s < mc_samples; ++s) {
    const double v = act.value(rng.normal());
    acc.add(v * v * v * v);
  }
  const Estimate m4 = acc.estimate();
  return std::sqrt((m4.value + 3.0 * m4.std_error) / eps);
}

RegularParams extended_regular_params(double eps, const MomentMode& mode) {
  if (!(eps > 0.0 && mode.zeta > 0.0 && mode.B_sigma > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "extended_regular_params: parameters must be positive");
  const double D = std::pow(mode.B_sigma / (4.0 * eps), 1.0 / mode.zeta);
  return {2.0 * D, 256.0 * std::pow(D, 4) / (eps * eps)};
}

RegularParams extended_regular_params(double eps, const LipschitzMode& mode, double c) {
  if (!(eps > 0.0 && mode.b > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "extended_regular_params: parameters must be positive");
  return {c * mode.b * std::sqrt(std::max(std::log(mode.b / eps), 0.0)), mode.b};
}

bool is_monotone_on_grid(const Activation& act, int points) {
  const double M = act.M.value_or(8.0);
  double prev = act.value(-M);
  for (int k = 1; k < points; ++k) {
    const double v = act.value(-M + 2.0 * M * k / (points - 1));
    if (v < prev - 1e-12) return false;
    prev = v;
  }
  return true;
}

StaircaseFunction staircase_approx(const Activation& act, double eps) {
  if (!act.M) throw Error(ErrorCode::kPreconditionViolation, "staircase_approx: activation must be truncated");
  if (!is_monotone_on_grid(act)) throw Error(ErrorCode::kNonMonotone, "staircase_approx: activation not monotone");
  const double M = *act.M;
  if (act.staircase) return truncate_staircase(*act.staircase, M);

  const double delta = std::sqrt(eps);
  const double tol = 1e-8 * std::max(1.0, delta);
  std::vector<double> a, t;
  double left = -M;
  double level = act.value(-M);
  while (act.value(M) >= level + delta - tol) {
    const double target = level + delta - tol;
    double lo = left, hi = M;
    if (act.value(lo) >= target) {
      hi = lo;
    } else {
      while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (act.value(mid) >= target ? hi : lo) = mid;
      }
    }
    // A zero-width first step at -M is already part of the offset.
    if (hi <= -M) break;
    const double reached = act.value(hi);
    a.push_back(reached - level);
    t.push_back(hi);
    level = reached;
    left = hi;
    if (hi >= M) break;
  }
  StaircaseFunction phi;
  phi.M = M;
  phi.offset = act.value(-M);
  phi.jumps = to_vector(a);
  phi.thresholds = to_vector(t);
  return phi;
}

int staircase_step_count(const Activation& act, double eps) {
  if (!act.M) throw Error(ErrorCode::kPreconditionViolation, "staircase_step_count: activation must be truncated");
  const double range = act.value(*act.M) - act.value(-*act.M);
  return static_cast<int>(std::ceil(range / std::sqrt(eps) - 1e-9)) + 1;
}

double deriv_norm_sq(const Activation& act) {
  if (act.staircase) {
    // Mollified jumps: each step contributes A_i^2 pdf(t_i) / h.
    const StaircaseFunction& phi = *act.staircase;
    double s = 0.0;
    for (Index i = 0; i < phi.steps(); ++i) s += phi.jumps(i) * phi.jumps(i) * normal_pdf(phi.thresholds(i));
    return s / act.mollifier;
  }
  if (!act.derivative) throw Error(ErrorCode::kUnavailableDerivative, "activation has no derivative");
  const double lo = act.M ? -*act.M : -12.0, hi = act.M ? *act.M : 12.0;
  return integrate([&](double z) {
    const double d = act.derivative(z);
    return d * d * normal_pdf(z);
  }, lo, hi, act.breakpoints, 0.25);
}

}  // namespace sgdva
