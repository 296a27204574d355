#include <gtest/gtest.h>

#include <cmath>

#include "selfsim/backward.hpp"
#include "selfsim/error.hpp"
#include "selfsim/params.hpp"

using namespace selfsim;

namespace {

double closed_form_ac(const ModelParams& P) {
  return std::pow((P.q() + 1.0) / (P.m() * P.chi()), 1.0 / P.q());
}

}  // namespace

TEST(Classify, BelowEquilibriumIsPositive) {
  ModelParams P = derive_params(2, 3.0, 1.0);
  Classification c = classify(P, 0.5 * P.u_star());
  EXPECT_EQ(c.set, SetLabel::P);
  EXPECT_FALSE(c.R_of_a.has_value());
}

TEST(Classify, LargeHeightVanishes) {
  ModelParams P = derive_params(2, 3.0, 1.0);
  Classification c = classify(P, 10.0);
  EXPECT_EQ(c.set, SetLabel::N);
  ASSERT_TRUE(c.R_of_a.has_value());
  ASSERT_TRUE(c.terminal_slope.has_value());
  EXPECT_LT(*c.terminal_slope, -1e-6);
}

TEST(Classify, OneDimensionalSplitsAtClosedForm) {
  ModelParams P = derive_params(1, 3.0, 1.0);
  double ac = closed_form_ac(P);
  EXPECT_EQ(classify(P, ac * (1 - 1e-4)).set, SetLabel::P);
  EXPECT_EQ(classify(P, ac * (1 + 1e-4)).set, SetLabel::N);
}

TEST(Classify, RequiresSlowRegime) {
  EXPECT_THROW(classify(derive_params(2, 2.0, 1.0), 1.0), Error);
}

TEST(FindCritical, ClosedFormInOneDimension) {
  ModelParams P = derive_params(1, 3.0, 1.0);
  CriticalResult cr = find_critical_a(P, {P.u_star(), 2.0});
  // (9/4)^{1/8}
  EXPECT_NEAR(cr.a_c, 1.1066819197003215, 1e-6 * 1.1066819197003215);
  EXPECT_EQ(cr.lo_class.set, SetLabel::P);
  EXPECT_NE(cr.hi_class.set, SetLabel::P);
  EXPECT_LT(cr.bracket_width, 1e-9);
  // Contact profile: u and u' nearly vanish at R_c.
  EXPECT_LT(std::abs(cr.u_at_R_c), 1e-3);
  EXPECT_GT(cr.R_c, 0.0);
}

TEST(FindCritical, TwoDimensionalStraddle) {
  ModelParams P = derive_params(2, 3.0, 1.0);
  CriticalResult cr = find_critical_a(P, default_bracket(P));
  EXPECT_EQ(classify(P, cr.a_lo).set, SetLabel::P);
  EXPECT_NE(classify(P, cr.a_hi).set, SetLabel::P);
  EXPECT_GT(cr.a_c, P.u_star());
}

TEST(FindCritical, ErrorKinds) {
  ModelParams P = derive_params(1, 3.0, 1.0);
  try {
    find_critical_a(P, {2.0, 3.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BadBracket);
  }
  try {
    find_critical_a(derive_params(3, 2.1, 1.0), {0.5, 5.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
}

TEST(Sweep, PrefixThenTail) {
  ModelParams P = derive_params(3, 2.5, 1.0);
  std::vector<double> grid;
  for (int i = 0; i < 30; ++i) grid.push_back(0.01 * std::pow(1e4, i / 29.0));
  SweepResult sr = sweep_a(P, grid);
  ASSERT_EQ(sr.items.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(sr.items[i].a, grid[i]);
  ASSERT_TRUE(sr.a1 && sr.a2);
  EXPECT_GE(*sr.a1, P.u_star() * 0.5);
  EXPECT_LT(*sr.a1, *sr.a2);
}

TEST(Sweep, DeterministicAcrossThreadCounts) {
  ModelParams P = derive_params(2, 3.0, 1.0);
  std::vector<double> grid{0.1, 0.5, 1.0, 2.0, 5.0};
  BackwardOptions one, many;
  one.threads = 1;
  many.threads = 4;
  SweepResult a = sweep_a(P, grid, one), b = sweep_a(P, grid, many);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(a.items[i].set, b.items[i].set);
    EXPECT_EQ(a.items[i].R_of_a, b.items[i].R_of_a);
  }
}

TEST(RescaledLimit, ImprovesWithHeight) {
  ModelParams P = derive_params(2, 3.0, 1.0);
  RescaledLimitResult lo = rescaled_limit_check(P, 1e3);
  RescaledLimitResult hi = rescaled_limit_check(P, 1e4);
  EXPECT_LT(hi.sup_deviation, lo.sup_deviation);
  EXPECT_LT(lo.sup_deviation, 1e-8);
}

TEST(MultiBubble, KeepsRequestedIntervals) {
  ModelParams P = derive_params(1, 3.0, 1.0);
  IntegratorOptions o = backward_integrator_defaults(P);
  o.r_max = 30.0;
  ProfileSolution s = solve_backward(P, 1.5, o);
  MultiBubbleProfile mb = build_multi_bubble(s, {0, 2}, P);
  ASSERT_EQ(mb.kept_intervals.size(), 2u);
  EXPECT_EQ(mb.kept_intervals[0].first, 0.0);
  for (std::size_t i = 0; i < mb.r.size(); ++i) EXPECT_GE(mb.phi[i], 0.0);
  try {
    build_multi_bubble(s, {100}, P);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotEnoughZeros);
  }
}
