#include "sgdva/learner.hpp"

#include "sgdva/hermite.hpp"
#include "sgdva/quadrature.hpp"

namespace sgdva {

namespace {

constexpr std::uint64_t kBatchStream = 1;
constexpr std::uint64_t kAugmentStream = 2;

// Per-sample gradient coefficients c_i = y_i sigma'(w.x~_i) and the augmented margins.
void gradient_terms(const LearnerState& state, const Activation& act, const SampleBatch& aug, Vector& coef,
                    Vector& margins) {
  if (!act.derivative) throw Error(ErrorCode::kUnavailableDerivative, "activation exposes no derivative");
  margins = aug.xs * state.w;
  coef.resize(aug.size());
  for (Index i = 0; i < aug.size(); ++i) coef(i) = aug.ys(i) * act.derivative(margins(i));
}

Vector assemble(const LearnerState& state, const SampleBatch& aug, const Vector& coef, const Vector& margins) {
  const double n = static_cast<double>(aug.size());
  Vector g = -(aug.xs.transpose() * coef - coef.dot(margins) * state.w) / (state.rho * n);
  g -= g.dot(state.w) * state.w;
  return g;
}

Vector halfspace_labels(const SampleBatch& batch, double threshold) {
  return batch.ys.unaryExpr([threshold](double y) { return y >= threshold ? 1.0 : 0.0; });
}

InitResult fit_halfspace(const Activation& act, const SampleBatch& batch, double threshold, double c_init,
                         const HalfspaceLearner& learner) {
  const Vector labels = halfspace_labels(batch, threshold);
  const double ones = labels.sum();
  if (ones == 0.0 || ones == static_cast<double>(labels.size()))
    throw Error(ErrorCode::kThresholdDegenerate, "initialize: transformed labels are constant");
  Vector w = learner(batch.xs, labels);
  const double norm = w.norm();
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw Error(ErrorCode::kThresholdDegenerate, "initialize: halfspace learner returned a zero vector");
  InitResult r;
  r.w0 = w / norm;
  r.threshold = threshold;
  r.theta_bar = std::min(c_init / *act.M, kMaxThetaBar);
  return r;
}

void require_truncated_monotone(const Activation& act) {
  if (!act.M) throw Error(ErrorCode::kPreconditionViolation, "initialize: activation must be truncated");
  if (!act.monotone) throw Error(ErrorCode::kNonMonotone, "initialize: activation must be monotone");
}

}  // namespace

LearnerState initial_state(const Vector& w0, double theta_bar) {
  require_unit(w0, 1e-10);
  if (!(theta_bar > 0.0 && theta_bar < std::numbers::pi / 2))
    throw Error(ErrorCode::kInvalidArgument, "theta_bar must lie in (0, pi/2)");
  LearnerState s;
  s.w = w0;
  s.rho = std::cos(theta_bar);
  s.phi = std::sqrt((1.0 - s.rho) / 2.0);
  return s;
}

double next_rho(double rho, double beta) { return 1.0 - (1.0 - beta) * (1.0 - beta) * (1.0 - rho); }

double step_size(double rho, double g_norm) { return std::sqrt((1.0 - rho) / 2.0) / (4.0 * g_norm); }

double schedule_phi(double phi0, double beta, Index t) { return std::pow(1.0 - beta, static_cast<double>(t)) * phi0; }

int default_iterations(double L, double eps) {
  return std::max(1, static_cast<int>(std::ceil(32.0 * std::log(std::max(L / eps, 1.0)))));
}

Index default_batch_size(Index d, double B, double eps) {
  const double n = std::ceil(static_cast<double>(d) * B * B / eps);
  return static_cast<Index>(std::clamp(n, 1.0, 1e5));
}

Index default_test_samples(double B, int T, double eps) {
  const double m = std::ceil(std::pow(B, 4) * std::log(std::max(T, 1)) / (eps * eps));
  return static_cast<Index>(std::max(2000.0, std::min(m, 1e6)));
}

std::vector<double> opt_guess_grid(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "opt_guess_grid: eps must be in (0, 1]");
  const int top = static_cast<int>(std::ceil(std::log2(1.0 / eps) - 1e-12));
  std::vector<double> grid;
  for (int k = 0; k <= top; ++k) grid.push_back(std::ldexp(eps, k));
  return grid;
}

Vector grad_estimate(const LearnerState& state, const Activation& act, const SampleBatch& batch, std::uint64_t seed) {
  const SampleBatch aug = augment(batch, state.rho, 1, seed);
  Vector coef, margins;
  gradient_terms(state, act, aug, coef, margins);
  return assemble(state, aug, coef, margins);
}

GradientProbe grad_estimate_probe(const LearnerState& state, const Activation& act, const SampleBatch& batch,
                                  std::uint64_t seed, const Vector& u) {
  const SampleBatch aug = augment(batch, state.rho, 1, seed);
  Vector coef, margins;
  gradient_terms(state, act, aug, coef, margins);
  GradientProbe p;
  p.g = assemble(state, aug, coef, margins);
  const Vector proj = aug.xs * u;
  const double wu = state.w.dot(u);
  MeanAccumulator acc;
  double second = 0.0;
  for (Index i = 0; i < aug.size(); ++i) {
    acc.add(-coef(i) * (proj(i) - margins(i) * wu) / state.rho);
    const double perp_sq = aug.xs.row(i).squaredNorm() - margins(i) * margins(i);
    second += coef(i) * coef(i) * perp_sq;
  }
  p.along = acc.estimate();
  const double n = static_cast<double>(aug.size());
  const double var_trace = second / (n * state.rho * state.rho) - p.g.squaredNorm();
  p.noise_norm = std::sqrt(std::max(var_trace, 0.0) / n);
  return p;
}

LearnerState step(const LearnerState& state, const Vector& g_hat, double beta) {
  const double g_norm = g_hat.norm();
  if (!(g_norm > 0.0)) throw Error(ErrorCode::kStall, "step: zero gradient");
  LearnerState next = state;
  const double eta = step_size(state.rho, g_norm);
  const Vector moved = state.w - eta * g_hat;
  next.w = moved / moved.norm();
  next.rho = next_rho(state.rho, beta);
  next.phi = std::sqrt((1.0 - next.rho) / 2.0);
  next.t = state.t + 1;
  return next;
}

LearnerState advance_schedule(const LearnerState& state, double beta) {
  LearnerState next = state;
  next.rho = next_rho(state.rho, beta);
  next.phi = std::sqrt((1.0 - next.rho) / 2.0);
  next.t = state.t + 1;
  return next;
}

RunResult run(const LearnerConfig& config, const Activation& act, const DataSource& source, const Vector& w0,
              double theta_bar, const std::optional<Vector>& w_star) {
  if (!(config.eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "run: eps must be positive");
  if (!(config.beta > 0.0 && config.beta < 1.0)) throw Error(ErrorCode::kInvalidArgument, "run: beta outside (0, 1)");
  const int T = config.T.value_or(default_iterations(act.L, config.eps));
  if (T < 0) throw Error(ErrorCode::kInvalidArgument, "run: T must be >= 0");
  const Index n = config.batch_size > 0 ? config.batch_size
                                        : default_batch_size(w0.size(), act.bounded() ? act.B : 1.0, config.eps);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  LearnerState state = initial_state(w0, theta_bar);
  RunResult result;
  result.candidates.push_back(state.w);
  for (int t = 0; t < T; ++t) {
    SampleBatch batch = source(n, derive_seed(derive_seed(config.seed, kBatchStream), t));
    if (act.bounded()) batch = truncate_batch_labels(batch, act.B);
    const Vector g = grad_estimate(state, act, batch, derive_seed(derive_seed(config.seed, kAugmentStream), t));
    TraceRecord rec;
    rec.t = state.t;
    rec.rho = state.rho;
    rec.g_norm = g.norm();
    rec.eta = rec.g_norm > 0.0 ? step_size(state.rho, rec.g_norm) : 0.0;
    rec.emp_loss = empirical_loss(act, state.w, batch).value;
    rec.angle = w_star ? angle_between(state.w, *w_star) : nan;
    result.trace.push_back(rec);
    try {
      state = step(state, g, config.beta);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kStall) throw;
      state = advance_schedule(state, config.beta);
    }
    result.candidates.push_back(state.w);
  }
  TraceRecord last;
  last.t = state.t;
  last.rho = state.rho;
  last.eta = last.g_norm = last.emp_loss = nan;
  last.angle = w_star ? angle_between(state.w, *w_star) : nan;
  result.trace.push_back(last);
  return result;
}

Index test_select(const std::vector<Vector>& candidates, const Activation& act, const SampleBatch& batch) {
  if (candidates.empty()) throw Error(ErrorCode::kEmptyCandidates, "test_select: no candidates");
  const Index count = static_cast<Index>(candidates.size());
  constexpr Index kBlock = 32;  // bounds the margin matrix to n x kBlock
  Index best = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (Index start = 0; start < count; start += kBlock) {
    const Index width = std::min(kBlock, count - start);
    Matrix W(batch.dim(), width);
    for (Index k = 0; k < width; ++k) W.col(k) = candidates[static_cast<std::size_t>(start + k)];
    const Matrix margins = batch.xs * W;
    for (Index k = 0; k < width; ++k) {
      double s = 0.0;
      for (Index i = 0; i < batch.size(); ++i) {
        const double r = act.value(margins(i, k)) - batch.ys(i);
        s += r * r;
      }
      if (s < best_loss) {
        best_loss = s;
        best = start + k;
      }
    }
  }
  return best;
}

Vector chow_vector(const RowMatrix& xs, const Vector& labels) {
  const double p = labels.mean();
  return xs.transpose() * (labels.array() - p).matrix() / static_cast<double>(xs.rows());
}

double init_threshold(const Activation& act, double eps, double opt_guess) {
  require_truncated_monotone(act);
  const StaircaseFunction phi = staircase_approx(act, eps);
  const int m = staircase_step_count(act, eps);
  const double M = *act.M;
  double level = phi.offset;
  for (Index i = 0; i < std::min<Index>(m - 1, phi.steps()); ++i) level += phi.jumps(i);
  const double top = std::sqrt((eps + opt_guess) * M * std::exp(0.5 * M * M));
  return level + 0.5 * top;
}

InitResult initialize(const Activation& act, const SampleBatch& batch, double eps, double opt_guess, double c_init,
                      const HalfspaceLearner& learner) {
  const double threshold = init_threshold(act, eps, opt_guess);
  InitResult r = fit_halfspace(act, batch, threshold, c_init, learner);
  r.staircase = staircase_approx(act, eps);
  return r;
}

InitResult initialize_central(const Activation& act, const SampleBatch& batch, double eps, double c_init,
                              const HalfspaceLearner& learner) {
  require_truncated_monotone(act);
  const StaircaseFunction phi = staircase_approx(act, eps);
  if (phi.steps() == 0) throw Error(ErrorCode::kThresholdDegenerate, "initialize: activation has no steps");
  Index best = 0;
  for (Index i = 1; i < phi.steps(); ++i)
    if (std::abs(phi.thresholds(i)) < std::abs(phi.thresholds(best))) best = i;
  const double below = phi.offset + phi.jumps.head(best).sum();
  InitResult r = fit_halfspace(act, batch, below + 0.5 * phi.jumps(best), c_init, learner);
  r.staircase = phi;
  return r;
}

double scale_search(const Activation& act, const Vector& w, double r, double W, const SampleBatch& batch) {
  if (!(r > 0.0)) throw Error(ErrorCode::kInvalidArgument, "scale_search: r must be positive");
  if (!(W >= 1.0)) throw Error(ErrorCode::kInvalidArgument, "scale_search: W must be >= 1");
  const int top = static_cast<int>(std::floor(std::log(W) / std::log1p(r) + 1e-9));
  const Vector margins = batch.xs * w;
  double best_lambda = 1.0, best_loss = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= top; ++k) {
    const double lambda = std::pow(1.0 + r, k);
    double s = 0.0;
    for (Index i = 0; i < batch.size(); ++i) {
      const double res = act.value(lambda * margins(i)) - batch.ys(i);
      s += res * res;
    }
    if (s < best_loss) {
      best_loss = s;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

ErrorDecomposition error_decomposition(const Activation& act, double theta, int k) {
  if (theta < 0.0 || theta > std::numbers::pi / 2 + 1e-12)
    throw Error(ErrorCode::kInvalidArgument, "error_decomposition: theta outside [0, pi/2]");
  if (k < 0) throw Error(ErrorCode::kInvalidArgument, "error_decomposition: k must be >= 0");
  const HermiteExpansion e = expand_quadrature(act.value, k + 1, act.breakpoints);
  const double total = gaussian_expectation([&](double z) {
    const double v = act.value(z);
    return v * v;
  }, act.breakpoints);
  // Coefficients of sigma' are sqrt(i+1) a(i+1).
  double deriv_head = 0.0;
  for (int i = 0; i <= k; ++i) deriv_head += (i + 1.0) * e.coeffs(i + 1) * e.coeffs(i + 1);
  ErrorDecomposition d;
  d.alignment_term = 4.0 * theta * theta * deriv_head;
  d.tail_term = 4.0 * tail_norm_sq(e, k, total);
  d.bound = d.alignment_term + d.tail_term;
  return d;
}

}  // namespace sgdva
