#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "sgdva/synth.hpp"

namespace sgdva {

constexpr double kBeta = 1.0 / 256.0;
constexpr double kMaxThetaBar = 1.5;

struct TraceRecord {
  Index t = 0;
  double rho = 0.0;
  double eta = 0.0;
  double g_norm = 0.0;
  double emp_loss = 0.0;
  double angle = std::numeric_limits<double>::quiet_NaN();
};

struct LearnerConfig {
  double eps = 0.01;
  std::optional<int> T;     // unset: default_iterations
  Index batch_size = 0;     // 0: default_batch_size
  double beta = kBeta;
  double mollifier = kDefaultMollifier;
  std::uint64_t seed = 0;
};

struct LearnerState {
  Vector w;
  double rho = 0.5;
  double phi = 0.5;  // sqrt((1 - rho) / 2)
  Index t = 0;
};

// rho_0 = cos(theta_bar), phi_0 = sin(theta_bar / 2).
LearnerState initial_state(const Vector& w0, double theta_bar);

double next_rho(double rho, double beta = kBeta);
double step_size(double rho, double g_norm);
// phi_t = (1 - beta)^t phi_0
double schedule_phi(double phi0, double beta, Index t);

int default_iterations(double L, double eps);
Index default_batch_size(Index d, double B, double eps);
Index default_test_samples(double B, int T, double eps);
// 2^k eps for k = 0 .. ceil(log2(1/eps))
std::vector<double> opt_guess_grid(double eps);

// -(1/rho) mean[ y sigma'(w.x~) x~^{perp w} ] over one augmented copy of `batch`.
Vector grad_estimate(const LearnerState& state, const Activation& act, const SampleBatch& batch, std::uint64_t seed);

struct GradientProbe {
  Vector g;
  Estimate along;     // g.u with its standard error
  double noise_norm;  // sqrt(trace of the covariance of g)
};
GradientProbe grad_estimate_probe(const LearnerState& state, const Activation& act, const SampleBatch& batch,
                                  std::uint64_t seed, const Vector& u);

// One update. Throws kStall on a zero gradient; callers then use advance_schedule.
LearnerState step(const LearnerState& state, const Vector& g_hat, double beta = kBeta);
LearnerState advance_schedule(const LearnerState& state, double beta = kBeta);

using DataSource = std::function<SampleBatch(Index n, std::uint64_t seed)>;

struct RunResult {
  std::vector<Vector> candidates;  // w^(0) .. w^(T)
  std::vector<TraceRecord> trace;  // one row per iterate; the last row has no gradient
};

// Draws a fresh batch per iteration, truncates labels to act.B, and records angle to w_star when given.
RunResult run(const LearnerConfig& config, const Activation& act, const DataSource& source, const Vector& w0,
              double theta_bar, const std::optional<Vector>& w_star = std::nullopt);

// Index of the candidate with the smallest empirical loss; lowest index wins ties.
Index test_select(const std::vector<Vector>& candidates, const Activation& act, const SampleBatch& batch);

// Learns a halfspace direction from x and 0/1 labels.
using HalfspaceLearner = std::function<Vector(const RowMatrix& xs, const Vector& labels)>;
// w ~ mean((l - mean l) x)
Vector chow_vector(const RowMatrix& xs, const Vector& labels);

struct InitResult {
  Vector w0;
  double theta_bar = 0.0;
  double threshold = 0.0;
  StaircaseFunction staircase;
};

// t' = sum_{i<m} A_i + A_m / 2 with A_m = sqrt((eps + opt) M exp(M^2 / 2)).
double init_threshold(const Activation& act, double eps, double opt_guess);

// Thresholds labels at init_threshold and fits a halfspace. theta_bar = min(c_init / M, 1.5).
// Throws kThresholdDegenerate when every transformed label is equal.
InitResult initialize(const Activation& act, const SampleBatch& batch, double eps, double opt_guess,
                      double c_init = 1.0, const HalfspaceLearner& learner = chow_vector);

// Same, but thresholds halfway up the staircase step closest to the origin.
InitResult initialize_central(const Activation& act, const SampleBatch& batch, double eps, double c_init = 1.0,
                              const HalfspaceLearner& learner = chow_vector);

// Minimizer of the empirical loss of sigma(lambda w.x) over lambda = (1+r)^k <= W, k >= 0.
double scale_search(const Activation& act, const Vector& w, double r, double W, const SampleBatch& batch);

struct ErrorDecomposition {
  double bound = 0.0;           // alignment + tail
  double alignment_term = 0.0;  // 4 theta^2 ||P_k sigma'||^2
  double tail_term = 0.0;       // 4 ||P_{>k} sigma||^2
};
ErrorDecomposition error_decomposition(const Activation& act, double theta, int k);

}  // namespace sgdva
