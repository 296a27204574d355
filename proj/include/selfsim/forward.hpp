#pragma once

#include <optional>
#include <string_view>

#include "selfsim/odecore.hpp"
#include "selfsim/params.hpp"

namespace selfsim {

enum class TailKind { Compact, Power, LogQuadratic };

std::string_view to_string(TailKind kind);

/// Behaviour of phi beyond the integrated grid.
/// Power:        phi ~ coefficient * r^exponent
/// LogQuadratic: ln phi ~ coefficient * r^2
struct TailModel {
  TailKind kind = TailKind::Compact;
  double exponent = 0.0;
  double coefficient = 0.0;
};

struct ForwardOptions {
  IntegratorOptions integrator{};
  /// Stop level for p = 2 (u decreases without bound).
  double u_floor = -1e3;
  /// Stop level for p < 2 (u increases without bound).
  double u_stop_above = 1e6;
};

/// Defaults tuned per regime; the fast regime needs a long radius to reach
/// its stop level.
ForwardOptions forward_defaults(const ModelParams& params);

struct ForwardProfile {
  ModelParams params;
  double a_or_b = 0.0;
  ProfileSolution sol;
  std::optional<double> support_radius;
  TailModel tail;
  /// Largest step-to-step move against the expected monotone direction.
  double monotonicity_violation = 0.0;

  Regime regime() const { return params.regime(); }
};

RadialODE forward_ode(const ModelParams& params);

ForwardProfile solve_forward(const ModelParams& params, double a_or_b);
ForwardProfile solve_forward(const ModelParams& params, double a_or_b,
                             const ForwardOptions& opts);

struct SupportRadius {
  double R0 = 0.0;
  double terminal_u_slope = 0.0;
  double terminal_phi_slope = 0.0;
  /// R0 <= upper_bound follows from g >= 1/m while u >= 0.
  double upper_bound = 0.0;
  /// R0 >= lower_bound follows from g <= 1/m + chi a^q while 0 <= u <= a.
  double lower_bound = 0.0;
};

SupportRadius support_radius(const ForwardProfile& fp, double eps = 1e-6);

struct DecayFit {
  double r_eval = 0.0;
  /// Raw limit quantity at r_eval.
  double estimate = 0.0;
  /// Extrapolation in h = 1/r from samples at r_eval * 2^-j: Neville over
  /// four samples for p < 2, the exact three-term tail basis for p = 2.
  double extrapolated = 0.0;
  double target = 0.0;
  /// p < 2 only: u(r)/r^{p/(p-1)} and its limit K.
  double u_ratio = 0.0;
  double u_ratio_target = 0.0;
};

/// Minimum radius the fit accepts, per regime.
double decay_fit_min_radius(const ModelParams& params);

/// Fits the tail law at r_eval (default: the last grid point).
DecayFit fit_decay_rate(const ForwardProfile& fp,
                        std::optional<double> r_eval = std::nullopt);

/// K = (1/(BNm))^{1/(p-1)} (p-1)/p for p != 2.
double forward_K(const ModelParams& params);

/// Worst relative violation of the regime's analytic envelope over the grid
/// (p < 2: two-sided bound; p = 2: quadratic lower bound and u' <= -r/(mN)).
/// Zero means every grid point satisfies the bounds.
double envelope_violation(const ForwardProfile& fp);

}  // namespace selfsim
