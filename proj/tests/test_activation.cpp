#include <gtest/gtest.h>

#include "sgdva/activation.hpp"
#include "support/oracles.hpp"

using namespace sgdva;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::kIo;
}

}  // namespace

TEST(Activation, Builtins) {
  EXPECT_DOUBLE_EQ(builtin("relu", {{"shift", {1.0}}})(3.0), 2.0);
  EXPECT_DOUBLE_EQ(builtin("sigmoid")(0.0), 0.5);
  EXPECT_DOUBLE_EQ(builtin("sign")(0.0), 1.0);
  EXPECT_DOUBLE_EQ(builtin("sign")(-0.1), -1.0);
  EXPECT_DOUBLE_EQ(builtin("clipped_identity", {{"clip", {2.0}}})(5.0), 2.0);
  EXPECT_DOUBLE_EQ(builtin("constant", {{"c", {0.3}}})(9.0), 0.3);
  EXPECT_NEAR(builtin("hermite", {{"i", {3.0}}})(1.5), oracle::hermite(3, 1.5), 1e-12);
  const Activation s = builtin("staircase", {{"jumps", {1.0, 2.0}}, {"thresholds", {-1.0, 1.0}}, {"offset", {0.5}}});
  EXPECT_DOUBLE_EQ(s(-2.0), 0.5);
  EXPECT_DOUBLE_EQ(s(0.0), 1.5);
  EXPECT_DOUBLE_EQ(s(1.0), 3.5);
  EXPECT_TRUE(s.monotone);
  EXPECT_FALSE(builtin("hermite", {{"i", {2.0}}}).monotone);
}

TEST(Activation, Errors) {
  EXPECT_EQ(code_of([] { builtin("softplus"); }), ErrorCode::kUnknownActivation);
  EXPECT_EQ(code_of([] { builtin("lipschitz_custom"); }), ErrorCode::kUnknownActivation);
  EXPECT_EQ(code_of([] { builtin("relu", {{"bogus", {1.0}}}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { builtin("staircase", {{"jumps", {-1.0}}, {"thresholds", {0.0}}}); }),
            ErrorCode::kPreconditionViolation);
  EXPECT_EQ(code_of([] { support_bound(1.0, 3.0); }), ErrorCode::kEpsTooLarge);
  EXPECT_EQ(code_of([] { staircase_approx(builtin("hermite", {{"i", {2.0}}, }), 0.01); }), ErrorCode::kPreconditionViolation);
  EXPECT_EQ(code_of([] { staircase_approx(truncate_activation(builtin("hermite", {{"i", {2.0}}}), 2.0), 0.01); }),
            ErrorCode::kNonMonotone);
}

TEST(Activation, ShorthandRoundTrip) {
  const ActivationSpec s = parse_activation_shorthand("staircase:jumps=0.5|0.25,thresholds=-1|1,offset=0.1");
  EXPECT_EQ(s.name, "staircase");
  EXPECT_EQ(s.params.at("jumps"), (std::vector<double>{0.5, 0.25}));
  const ActivationSpec back = parse_activation_shorthand(activation_shorthand(s));
  EXPECT_EQ(back.name, s.name);
  EXPECT_EQ(back.params, s.params);
  EXPECT_EQ(parse_activation_shorthand("sigmoid").params.size(), 0u);
}

TEST(Activation, SupportBoundAndTruncation) {
  const double x = 4.0 / 0.01;
  EXPECT_NEAR(support_bound(1.0, 0.01), std::sqrt(2 * std::log(x) - std::log(std::log(x))), 1e-12);

  const Activation sig = make_activation({"sigmoid", {}, 0.01, std::nullopt});
  ASSERT_TRUE(sig.M.has_value());
  EXPECT_NEAR(*sig.M, support_bound(1.0, 0.01), 1e-12);
  // Tail mass beyond M is at most eps / (4 B^2).
  EXPECT_LE(2 * (1 - oracle::cdf(*sig.M)), 0.01 / (4 * sig.B * sig.B));
  EXPECT_DOUBLE_EQ(sig(10.0), oracle::sigmoid(*sig.M));
  EXPECT_DOUBLE_EQ(sig.derivative(10.0), 0.0);

  const Activation relu = make_activation({"relu", {}, 0.01, std::nullopt});
  ASSERT_TRUE(relu.M && relu.bounded());
  EXPECT_NEAR(relu(100.0), *relu.M, 1e-12);
  EXPECT_NEAR(relu.L * relu.L, 0.5 - (1 - oracle::cdf(*relu.M)), 1e-6);

  const Activation kept = make_activation({"clipped_identity", {}, 0.01, std::nullopt});
  EXPECT_EQ(*kept.M, 1.0);
  EXPECT_DOUBLE_EQ(truncate_labels(3.0, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(truncate_labels(-3.0, 2.0), -2.0);
}

TEST(Activation, StaircaseApproxOfClippedIdentity) {
  const Activation clip = builtin("clipped_identity");
  EXPECT_EQ(staircase_step_count(clip, 0.01), 21);
  const StaircaseFunction phi = staircase_approx(clip, 0.01);
  EXPECT_EQ(phi.steps(), 20);
  double sup = 0.0;
  for (int k = 0; k <= 2000; ++k) {
    const double z = -1 + 2.0 * k / 2000;
    sup = std::max(sup, std::abs(phi.value(z) - clip(z)));
  }
  EXPECT_LE(sup, 0.1 + 1e-9);
  for (Index i = 0; i < phi.steps(); ++i) EXPECT_NEAR(phi.jumps(i), 0.1, 1e-6);
}

TEST(Activation, StaircaseApproxOfSigmoid) {
  const Activation sig = make_activation({"sigmoid", {}, 0.01, std::nullopt});
  const StaircaseFunction phi = staircase_approx(sig, 0.01);
  phi.validate();
  double sup = 0.0;
  for (int k = 0; k <= 4000; ++k) {
    const double z = -*sig.M + 2 * *sig.M * k / 4000;
    sup = std::max(sup, std::abs(phi.value(z) - sig(z)));
  }
  EXPECT_LE(sup, 0.1 + 1e-9);
}

TEST(Activation, RegularityParameters) {
  const RegularParams lip = extended_regular_params(0.01, LipschitzMode{1.0});
  EXPECT_DOUBLE_EQ(lip.L, 1.0);
  EXPECT_NEAR(lip.B, std::sqrt(std::log(100.0)), 1e-12);
  const RegularParams mom = extended_regular_params(0.01, MomentMode{1.0, 1.0});
  const double D = 1.0 / (4 * 0.01);
  EXPECT_NEAR(mom.B, 2 * D, 1e-9);
  EXPECT_NEAR(mom.L, 256 * std::pow(D, 4) / 1e-4, 1e-3);
}

TEST(Activation, DerivativeNorms) {
  EXPECT_NEAR(deriv_norm_sq(builtin("clipped_identity")), 2 * oracle::cdf(1) - 1, 1e-9);
  const double ref = oracle::gauss_mean([](double z) { return std::pow(oracle::sigmoid_prime(z), 2); });
  EXPECT_NEAR(deriv_norm_sq(builtin("sigmoid")), ref, 1e-8);
  EXPECT_TRUE(is_monotone_on_grid(builtin("sigmoid")));
  EXPECT_FALSE(is_monotone_on_grid(builtin("hermite", {{"i", {2.0}}})));
}

TEST(Activation, LipschitzCustom) {
  const Activation a = lipschitz_custom([](double z) { return std::tanh(z); },
                                        [](double z) { return 1 - std::tanh(z) * std::tanh(z); }, 1.0, true);
  EXPECT_TRUE(a.monotone);
  EXPECT_DOUBLE_EQ(a(0.5), std::tanh(0.5));
  EXPECT_GT(a.L, 0.0);
}
