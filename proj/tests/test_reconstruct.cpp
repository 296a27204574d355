#include <gtest/gtest.h>

#include <cmath>

#include "selfsim/backward.hpp"
#include "selfsim/error.hpp"
#include "selfsim/forward.hpp"
#include "selfsim/params.hpp"
#include "selfsim/reconstruct.hpp"

using namespace selfsim;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected selfsim::Error";
  return ErrorKind::Solver;
}

}  // namespace

TEST(Reconstruct, ForwardMassMatchesOracle) {
  ModelParams P = derive_params(1, 3.0, 1.0);
  SelfSimilarSolution ss = forward_solution(P, 1.0);
  const PhiProfile& phi = ss.phi;
  // Frozen from adaptive Gauss-Kronrod on an independent DOP853 profile.
  EXPECT_NEAR(mass(phi, P), 2.0122712156347915, 1e-8);
  EXPECT_DOUBLE_EQ(ss.mass, mass(phi, P));
  EXPECT_EQ(phi.r.front(), 0.0);
  EXPECT_DOUBLE_EQ(phi.phi.front(), 1.0);
  EXPECT_EQ(phi.at(*phi.support_radius + 1.0), 0.0);
}

TEST(Reconstruct, ExteriorPotentialLaw) {
  ModelParams P = derive_params(3, 2.5, 1.0);
  PhiProfile phi = phi_from_forward(solve_forward(P, 1.0));
  PsiProfile psi = psi_from_phi(phi, P);
  double R = *phi.support_radius;
  double ref = psi.at(1.2 * R) * 1.2 * R;
  for (double f : {1.5, 2.0, 5.0, 50.0}) {
    EXPECT_NEAR(psi.at(f * R) * f * R / ref, 1.0, 1e-8);
  }
}

TEST(Reconstruct, PoissonResidualOnForwardProfiles) {
  for (auto [N, p, a] : {std::tuple{1, 3.0, 1.0}, {2, 2.0, 0.0}, {3, 1.8, 1.0}}) {
    SelfSimilarSolution ss = forward_solution(derive_params(N, p, 1.0), a);
    SystemResidual r = system_residual(ss.phi, ss.psi, ss.params, Direction::Forward);
    EXPECT_LT(r.res1, 1e-6) << N << " " << p;
    EXPECT_LT(r.res2, 1e-6) << N << " " << p;
    EXPECT_LT(r.identity, 1e-6) << N << " " << p;
  }
}

TEST(Reconstruct, EquilibriumProfileHasZeroResidual) {
  ModelParams P = derive_params(1, 3.0, 1.0);
  double level = std::pow(1.0 / (P.chi() * P.m()), 1.0 / P.m());
  PhiProfile phi;
  for (int i = 0; i <= 400; ++i) {
    phi.r.push_back(i / 400.0);
    phi.phi.push_back(level);
  }
  phi.support_radius = 1.0;
  PsiProfile psi = psi_from_phi(phi, P);
  SystemResidual r = system_residual(phi, psi, P, Direction::Backward, std::pair{0.1, 0.9});
  EXPECT_LT(r.res1, 1e-12);
  EXPECT_LT(r.res2, 1e-8);
}

TEST(Reconstruct, IllPosedPotentialBelowThreshold) {
  ModelParams P = derive_params(3, 1.6, 1.0);
  ASSERT_LT(P.p(), potential_threshold(3));
  PhiProfile phi = phi_from_forward(solve_forward(P, 1.0));
  EXPECT_EQ(kind_of([&] { psi_from_phi(phi, P); }), ErrorKind::IllPosedPotential);
  PsiProfile psi = psi_from_phi(phi, P, true);
  EXPECT_FALSE(psi.well_posed);
  EXPECT_TRUE(std::isfinite(psi.dpsi[10]));
}

TEST(Reconstruct, NonDecayingProfileHasInfiniteMass) {
  ModelParams P = derive_params(2, 3.0, 1.0);
  ProfileSolution s = solve_backward(P, 0.5);
  PhiProfile phi = phi_from_u(s, P);
  EXPECT_EQ(kind_of([&] { mass(phi, P); }), ErrorKind::InfiniteMass);
}

TEST(Reconstruct, NegativeBaseInFastRegime) {
  ModelParams P = derive_params(3, 1.8, 1.0);
  ProfileSolution s;
  s.r = {1e-6, 0.5, 1.0};
  s.u = {1.0, 0.2, -0.1};
  s.w = {0.0, -0.1, -0.2};
  s.energy = {0.0, 0.0, 0.0};
  s.u0 = 1.0;
  EXPECT_EQ(kind_of([&] { phi_from_u(s, P); }), ErrorKind::NegativeBase);
}

TEST(SpaceTime, MassIsTimeIndependent) {
  SelfSimilarSolution ss = forward_solution(derive_params(1, 2.1, 1.0), 1.0);
  for (double t : {1e-3, 1e-2, 0.1, 1.0, 10.0}) {
    EXPECT_NEAR(mass_at_time(ss, t) / ss.mass, 1.0, 1e-8);
  }
}

TEST(SpaceTime, ScalingOfDensity) {
  SelfSimilarSolution ss = forward_solution(derive_params(1, 3.0, 1.0), 1.0);
  double t = 0.3, th = length_scale(ss, t);
  EXPECT_NEAR(th, std::pow(t, ss.params.beta()), 1e-15);
  double x[1] = {0.4};
  Fields f = evaluate(ss, x, t);
  EXPECT_NEAR(f.rho, ss.phi.at(0.4 / th) / th, 1e-12);
  Fields g = evaluate_radial(ss, 0.4, t);
  EXPECT_DOUBLE_EQ(f.rho, g.rho);
  EXPECT_DOUBLE_EQ(f.c, g.c);
}

TEST(SpaceTime, TimeDomain) {
  ModelParams P = derive_params(1, 3.0, 1.0);
  CriticalResult cr = find_critical_a(P, {P.u_star(), 2.0});
  SelfSimilarSolution ss = backward_critical_solution(P, cr, 1.0);
  EXPECT_EQ(kind_of([&] { length_scale(ss, 1.0); }), ErrorKind::OutOfTimeDomain);
  EXPECT_EQ(kind_of([&] { length_scale(ss, 2.0); }), ErrorKind::OutOfTimeDomain);
  EXPECT_NEAR(length_scale(ss, 0.75), std::pow(0.25, P.beta()), 1e-15);
}

TEST(DeltaTest, ConstantTestFunctionGivesZero) {
  SelfSimilarSolution ss = forward_solution(derive_params(1, 3.0, 1.0), 1.0);
  auto one = TestFunction::of_radius([](double) { return 1.0; });
  for (const DeltaSample& d : delta_test(ss, one, {1e-3, 1e-2, 0.1})) {
    EXPECT_LT(d.deviation, 1e-12 * ss.mass);
  }
}

TEST(DeltaTest, LipschitzBound) {
  SelfSimilarSolution ss = forward_solution(derive_params(2, 3.0, 1.0), 1.0);
  auto norm = TestFunction::of_point(
      [](std::span<const double> x) { return std::hypot(x[0], x[1]); });
  double R = *ss.phi.support_radius;
  for (const DeltaSample& d : delta_test(ss, norm, {1e-4, 1e-3, 1e-2})) {
    EXPECT_LE(d.deviation, length_scale(ss, d.t) * R * ss.mass);
    EXPECT_GT(d.deviation, 0.0);
  }
}

TEST(DeltaTest, GaussianDeviationDecreases) {
  SelfSimilarSolution ss = forward_solution(derive_params(1, 2.1, 1.0), 1.0);
  auto gauss = TestFunction::of_radius([](double r) { return std::exp(-r * r); });
  std::vector<double> times;
  for (int j = 0; j < 5; ++j) times.push_back(1e-2 * std::pow(0.25, j));
  auto dev = delta_test(ss, gauss, times);
  for (std::size_t i = 1; i < dev.size(); ++i) EXPECT_LT(dev[i].deviation, dev[i - 1].deviation);
}
