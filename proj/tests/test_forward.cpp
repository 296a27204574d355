#include <gtest/gtest.h>

#include <cmath>

#include "selfsim/error.hpp"
#include "selfsim/forward.hpp"
#include "selfsim/params.hpp"

using namespace selfsim;

TEST(Forward, SlowProfileHasCompactSupport) {
  ModelParams P = derive_params(1, 3.0, 1.0);
  ForwardProfile fp = solve_forward(P, 1.0);
  ASSERT_TRUE(fp.support_radius.has_value());
  EXPECT_EQ(fp.tail.kind, TailKind::Compact);
  SupportRadius s = support_radius(fp);
  // Frozen from an independent DOP853 run.
  EXPECT_NEAR(s.R0, 2.475642388418734, 1e-8);
  EXPECT_LT(s.terminal_u_slope, 0.0);
  EXPECT_LT(std::abs(s.terminal_phi_slope), 1e-5);
  EXPECT_GE(s.R0, s.lower_bound);
  EXPECT_LE(s.R0, s.upper_bound);
  EXPECT_EQ(fp.monotonicity_violation, 0.0);
}

TEST(Forward, SlowTwoDimensionalSupport) {
  ForwardProfile fp = solve_forward(derive_params(2, 3.0, 1.0), 1.0);
  EXPECT_NEAR(support_radius(fp).R0, 2.9855946341389235, 1e-8);
}

TEST(Forward, LinearDecayRate) {
  ModelParams P = derive_params(2, 2.0, 1.0);
  ForwardProfile fp = solve_forward(P, 0.0);
  EXPECT_EQ(fp.tail.kind, TailKind::LogQuadratic);
  DecayFit f = fit_decay_rate(fp, 30.0);
  EXPECT_DOUBLE_EQ(f.target, -0.25);
  EXPECT_LT(std::abs(f.estimate / f.target - 1), 0.02);
  EXPECT_LT(std::abs(f.extrapolated / f.target - 1), 0.005);
  EXPECT_EQ(envelope_violation(fp), 0.0);
}

TEST(Forward, FastDecayRate) {
  ModelParams P = derive_params(3, 1.8, 1.0);
  ForwardProfile fp = solve_forward(P, 1.0);
  EXPECT_EQ(fp.tail.kind, TailKind::Power);
  EXPECT_NEAR(fp.tail.exponent, -9.0, 1e-12);
  EXPECT_NEAR(forward_K(P), 0.08846692520410801, 1e-14);
  DecayFit f = fit_decay_rate(fp);
  EXPECT_NEAR(f.target, 16325.867520000056, 1e-8);
  EXPECT_LT(std::abs(f.estimate / f.target - 1), 0.02);
  EXPECT_EQ(envelope_violation(fp), 0.0);
}

TEST(Forward, Errors) {
  ModelParams slow = derive_params(1, 3.0, 1.0);
  EXPECT_THROW(solve_forward(slow, 0.0), Error);
  ForwardProfile fp = solve_forward(slow, 1.0);
  EXPECT_THROW(fit_decay_rate(fp), Error);

  ModelParams lin = derive_params(2, 2.0, 1.0);
  ForwardOptions short_run = forward_defaults(lin);
  short_run.integrator.r_max = 5.0;
  ForwardProfile small = solve_forward(lin, 0.0, short_run);
  try {
    fit_decay_rate(small);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientRange);
  }
  EXPECT_THROW(support_radius(small), Error);
}
