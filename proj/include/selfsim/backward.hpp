#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "selfsim/odecore.hpp"
#include "selfsim/params.hpp"

namespace selfsim {

enum class SetLabel { P, N, N0, Inconclusive };

std::string_view to_string(SetLabel label);

struct BackwardOptions {
  /// r_max doubles as the scan radius R_scan for positivity certificates.
  IntegratorOptions integrator{};
  double slope_tol = 1e-6;
  /// Relative bisection width at which find_critical_a stops.
  double a_tol = 1e-10;
  /// Early P acceptance once |u - u*| and |w| both drop below this.
  double near_tol = 1e-8;
  int max_bisections = 400;
  /// Worker threads for sweep_a; 0 picks hardware_concurrency.
  unsigned threads = 0;
};

struct Classification {
  double a = 0.0;
  SetLabel set = SetLabel::Inconclusive;
  std::optional<double> R_of_a;
  std::optional<double> terminal_slope;
  /// How membership was decided: "interior-minimum", "negative-energy",
  /// "near-equilibrium", "scan-radius", "vanishing" or a failure reason.
  std::string certificate;
  /// u at the first interior minimum when that certificate fired.
  std::optional<double> first_min_u;
  Termination termination = Termination::ReachedRmax;
};

struct CriticalResult {
  double a_c = 0.0;
  double a_lo = 0.0;
  double a_hi = 0.0;
  double bracket_width = 0.0;
  /// Radius of tangential contact u = u' = 0 on the P side of the bracket.
  double R_c = 0.0;
  /// u and u' at R_c (u is the residual height left by the finite bracket).
  double u_at_R_c = 0.0;
  double terminal_slope = 0.0;
  /// Vanishing radius and slope of the N-side endpoint.
  double R_hi = 0.0;
  double slope_hi = 0.0;
  Classification lo_class;
  Classification hi_class;
  int iterations = 0;
  /// Profile from the P-side endpoint, stopped at the contact radius.
  ProfileSolution profile;
};

struct SweepResult {
  std::vector<Classification> items;
  /// Last grid value of the leading run of P classifications.
  std::optional<double> a1;
  /// First grid value of the trailing run of N/N0 classifications.
  std::optional<double> a2;
};

struct RescaledLimitResult {
  double sup_deviation = 0.0;
  /// Same quantity from two independent trajectories compared directly;
  /// limited by integration noise, kept as a reference floor.
  double direct_deviation = 0.0;
  double epsilon = 0.0;
  double lambda = 0.0;
  double z1 = 0.0;
  double r_end = 0.0;
  std::optional<double> R_of_a;
};

struct MultiBubbleProfile {
  std::vector<double> zeros;
  std::vector<std::pair<double, double>> kept_intervals;
  std::vector<double> r;
  std::vector<double> phi;
};

RadialODE backward_ode(const ModelParams& params);

IntegratorOptions backward_integrator_defaults(const ModelParams& params);

ProfileSolution solve_backward(const ModelParams& params, double a);
ProfileSolution solve_backward(const ModelParams& params, double a,
                               const IntegratorOptions& opts);

Classification classify(const ModelParams& params, double a,
                        const BackwardOptions& opts = {});

CriticalResult find_critical_a(const ModelParams& params,
                               std::pair<double, double> bracket,
                               const BackwardOptions& opts = {});

/// Bracket [u*, a_hi] with a_hi found by doubling until classify gives N.
std::pair<double, double> default_bracket(const ModelParams& params,
                                          const BackwardOptions& opts = {});

SweepResult sweep_a(const ModelParams& params, const std::vector<double>& grid,
                    const BackwardOptions& opts = {});

RescaledLimitResult rescaled_limit_check(const ModelParams& params, double a,
                                         const BackwardOptions& opts = {});

MultiBubbleProfile build_multi_bubble(const ProfileSolution& profile,
                                      const std::vector<int>& kept,
                                      const ModelParams& params);

}  // namespace selfsim
