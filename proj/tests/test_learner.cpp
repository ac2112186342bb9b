#include <gtest/gtest.h>

#include "sgdva/learner.hpp"
#include "support/oracles.hpp"

using namespace sgdva;

TEST(Schedule, Formulas) {
  EXPECT_NEAR(next_rho(0.5), 1 - std::pow(255.0 / 256, 2) * 0.5, 1e-15);
  EXPECT_NEAR(step_size(0.5, 2.0), 0.5 / 8.0, 1e-15);
  const LearnerState s = initial_state(Vector::Unit(2, 0), 0.6);
  EXPECT_NEAR(s.rho, std::cos(0.6), 1e-15);
  EXPECT_NEAR(s.phi, std::sin(0.3), 1e-15);
  LearnerState t = s;
  for (int k = 0; k < 40; ++k) t = advance_schedule(t);
  EXPECT_NEAR(t.phi, schedule_phi(s.phi, kBeta, 40), 1e-15);
  EXPECT_EQ(t.t, 40);
  EXPECT_THROW(initial_state(Vector::Unit(2, 0), 1.6), Error);
  EXPECT_THROW(initial_state(Vector::Ones(2), 0.5), Error);
}

TEST(Schedule, Defaults) {
  EXPECT_EQ(default_iterations(1.0, 0.01), static_cast<int>(std::ceil(32 * std::log(100.0))));
  EXPECT_EQ(default_batch_size(20, 1.0, 0.01), 2000);
  EXPECT_EQ(default_batch_size(2000, 10.0, 0.01), 100000);
  EXPECT_EQ(default_test_samples(0.1, 10, 0.01), 2000);
  EXPECT_EQ(default_test_samples(1.0, 100, 0.01), static_cast<Index>(std::ceil(std::log(100.0) / 1e-4)));
  const auto grid = opt_guess_grid(0.01);
  ASSERT_EQ(grid.size(), 8u);
  EXPECT_DOUBLE_EQ(grid.front(), 0.01);
  EXPECT_DOUBLE_EQ(grid.back(), 1.28);
}

// Identity activation, clean labels: -(1/rho) E[y x~^perp] = -sin(theta) v, so g.w* = -sin^2(theta).
TEST(Gradient, IdentityClosedForm) {
  const Index d = 6;
  const Vector w_star = Vector::Unit(d, 0);
  const double theta = std::numbers::pi / 4;
  Vector w = std::cos(theta) * w_star + std::sin(theta) * Vector::Unit(d, 1);
  const SampleBatch batch = generate(d, 400000, builtin("identity"), w_star, {}, 5).batch;
  const LearnerState state{w, 0.7, std::sqrt(0.15), 0};
  const GradientProbe p = grad_estimate_probe(state, builtin("identity"), batch, 6, w_star);
  EXPECT_LE(std::abs(p.along.value + 0.5), 5 * p.along.std_error);
  EXPECT_NEAR(p.g.norm(), std::sqrt(0.5), 0.02);
  EXPECT_NEAR(p.g.dot(w), 0.0, 1e-12);
  EXPECT_EQ(p.g, grad_estimate(state, builtin("identity"), batch, 6));
}

TEST(Gradient, StepKeepsUnitNormAndStallsOnZero) {
  const LearnerState s = initial_state(Vector::Unit(3, 0), 0.4);
  const Vector g = (Vector(3) << 0.0, -1.0, 0.5).finished();
  const LearnerState n = step(s, g);
  EXPECT_NEAR(n.w.norm(), 1.0, 1e-15);
  EXPECT_GT(n.rho, s.rho);
  EXPECT_GT(n.w(1), 0.0);
  // The step moves the iterate by an angle of atan(phi / 4) when g is orthogonal to w.
  EXPECT_NEAR(angle_between(n.w, s.w), std::atan(s.phi / 4), 1e-12);
  try {
    step(s, Vector::Zero(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStall);
  }
}

TEST(Learner, RunRecoversDirectionAndTraces) {
  const Activation act = make_activation({"sigmoid", {}, 0.01, std::nullopt});
  const Index d = 10;
  const Vector w_star = Rng(3).unit_vector(d);
  Rng rng(4);
  const Vector w0 = rotate_towards_random(w_star, 0.25, rng);
  LearnerConfig cfg;
  cfg.T = 60;
  cfg.batch_size = 4000;
  cfg.seed = 8;
  const DataSource src = [&](Index n, std::uint64_t s) { return generate(d, n, builtin("sigmoid"), w_star, {}, s).batch; };
  const RunResult r = run(cfg, act, src, w0, 0.3, w_star);
  ASSERT_EQ(r.candidates.size(), 61u);
  ASSERT_EQ(r.trace.size(), 61u);
  EXPECT_TRUE(std::isnan(r.trace.back().eta));
  for (std::size_t t = 1; t < r.trace.size(); ++t) EXPECT_GT(r.trace[t].rho, r.trace[t - 1].rho);
  EXPECT_LT(angle_between(r.candidates.back(), w_star), 0.1);
  EXPECT_NEAR(r.trace.back().angle, angle_between(r.candidates.back(), w_star), 1e-12);
  const RunResult again = run(cfg, act, src, w0, 0.3, w_star);
  EXPECT_EQ(again.candidates.back(), r.candidates.back());
}

TEST(Learner, TestSelect) {
  const Activation id = builtin("identity");
  const Vector w_star = Vector::Unit(3, 0);
  const SampleBatch b = generate(3, 2000, id, w_star, {}, 1).batch;
  std::vector<Vector> cands = {Vector::Unit(3, 1), w_star, Vector::Unit(3, 2), w_star};
  EXPECT_EQ(test_select(cands, id, b), 1);
  EXPECT_THROW(test_select({}, id, b), Error);
  std::vector<Vector> many(100, Vector::Unit(3, 1));
  many[77] = w_star;
  EXPECT_EQ(test_select(many, id, b), 77);
}

TEST(Learner, ChowVectorAndInitialization) {
  const Index d = 8;
  const Vector w_star = Rng(6).unit_vector(d);
  const Activation sig = make_activation({"sigmoid", {}, 0.01, std::nullopt});
  const SampleBatch b = generate(d, 40000, builtin("sigmoid"), w_star, {}, 2).batch;
  const InitResult r = initialize_central(sig, b, 0.01);
  EXPECT_LT(angle_between(r.w0, w_star), 0.1);
  EXPECT_NEAR(r.theta_bar, 1.0 / *sig.M, 1e-12);
  EXPECT_NEAR(r.w0.norm(), 1.0, 1e-12);
  // Faithful threshold overshoots the bounded range of a sigmoid.
  try {
    initialize(sig, b, 0.01, 0.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kThresholdDegenerate);
  }
  EXPECT_THROW(initialize_central(builtin("sigmoid"), b, 0.01), Error);
}

TEST(Learner, ScaleSearchAndErrorDecomposition) {
  const Activation id = builtin("identity");
  const Vector w_star = Vector::Unit(2, 0);
  SampleBatch b = generate(2, 5000, id, w_star, {}, 4).batch;
  b.ys *= 4.0;  // labels 4 w*.x
  EXPECT_NEAR(scale_search(id, w_star, 1.0, 10.0, b), 4.0, 1e-12);
  EXPECT_DOUBLE_EQ(scale_search(id, w_star, 1.0, 1.0, b), 1.0);
  EXPECT_THROW(scale_search(id, w_star, 1.0, 0.5, b), Error);

  const Activation sig = builtin("sigmoid");
  const ErrorDecomposition e = error_decomposition(sig, 0.2, 8);
  EXPECT_NEAR(e.bound, e.alignment_term + e.tail_term, 1e-15);
  // Measured alignment error between w and w* at angle 0.2 stays under the bound.
  const double rho = std::cos(0.2);
  const double measured = oracle::gauss_mean([&](double x) {
    return oracle::gauss_mean([&](double z) {
      const double v = oracle::sigmoid(x) - oracle::sigmoid(rho * x + std::sqrt(1 - rho * rho) * z);
      return v * v;
    }, 5e-3);
  }, 5e-3);
  EXPECT_LE(measured, e.bound);
}

TEST(Learner, ZeroIterationsKeepsInitialPoint) {
  const Activation id = builtin("identity");
  const Vector w_star = Vector::Unit(3, 0);
  const Vector w0 = Vector::Unit(3, 1);
  LearnerConfig cfg;
  cfg.T = 0;
  cfg.batch_size = 10;
  const DataSource src = [&](Index n, std::uint64_t s) { return generate(3, n, id, w_star, {}, s).batch; };
  const RunResult r = run(cfg, id, src, w0, 0.5, std::nullopt);
  ASSERT_EQ(r.candidates.size(), 1u);
  EXPECT_EQ(r.candidates.front(), w0);
  cfg.T = -1;
  EXPECT_THROW(run(cfg, id, src, w0, 0.5, std::nullopt), Error);
}
