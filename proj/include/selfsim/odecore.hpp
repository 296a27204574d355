#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "selfsim/dopri5.hpp"
#include "selfsim/params.hpp"

namespace selfsim {

/// Which profile equation the forcing g(u) belongs to.
enum class Forcing {
  BackwardSlow,    // chi|u|^{q-1}u - 1/m
  BackwardFast,    // -chi|u|^{q-1}u + 1/m
  BackwardLinear,  // chi e^{mu} - 1/m
  ForwardSlow,     // chi|u|^{q-1}u + 1/m
  ForwardFast,     // -chi|u|^{q-1}u - 1/m
  ForwardLinear,   // chi e^{mu} + 1/m
  Limit,           // chi|u|^{q-1}u - epsilon
};

std::string_view to_string(Forcing forcing);

/// Radial profile equation (B|u'|^{p-2}u')' + (N-1)/r B|u'|^{p-2}u' + g(u) = 0
/// written as a first-order system in (u, w) with w = B|u'|^{p-2}u'.
class RadialODE {
 public:
  RadialODE(const ModelParams& params, Forcing forcing, double epsilon = 0.0);

  const ModelParams& params() const noexcept { return params_; }
  Forcing forcing() const noexcept { return forcing_; }
  double B_eff() const noexcept { return b_eff_; }
  double p_eff() const noexcept { return p_eff_; }
  /// Constant term removed from the limit forcing (0 for the pure limit).
  double epsilon() const noexcept { return epsilon_; }
  bool exponential() const noexcept { return exponential_; }
  /// True when g is singular at u = 0 (q < 0).
  bool singular_at_zero() const noexcept;

  double g(double u) const;
  /// Antiderivative of g, normalized so that the power/exponential part has
  /// no additive constant.
  double G(double u) const;
  /// u' recovered from the flux.
  double uprime(double w) const;
  /// |u'|^p expressed through w.
  double kinetic_power(double w) const;

  std::array<double, 2> rhs(double r, const std::array<double, 2>& y) const;

 private:
  ModelParams params_;
  Forcing forcing_;
  double epsilon_;
  double b_eff_;
  double p_eff_;
  double inv_pm1_;
  bool exponential_;
  double power_sign_;  // sign in front of chi|u|^{q-1}u or chi e^{mu}
  double constant_;    // constant term of g
  double q_ = 0.0;
};

enum class EventKind { UZero, UPrimeZero, EquilibriumHit, AmplitudeSample, Bound };

std::string_view to_string(EventKind kind);

struct Event {
  EventKind kind = EventKind::UZero;
  double r = 0.0;
  double u = 0.0;
  double w = 0.0;
  /// +1 for a rising crossing of the event function, -1 for a falling one.
  int direction = 0;
  /// |u - u_eq| for AmplitudeSample events.
  double amplitude = 0.0;
};

enum class Termination {
  ReachedRmax,
  UCrossedZero,
  UPrimeVanished,
  StepUnderflow,
  Diverged,
  ReachedBound,
  Monitor,
};

std::string_view to_string(Termination t);

struct IntegratorOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-10;
  double event_tol = 1e-12;
  double r0 = 1e-6;
  double r_max = 1e3;
  double u_ceiling = 1e12;
  double max_step = std::numeric_limits<double>::infinity();
  /// Cap h <= max_step_relative * r; gives log-uniform grids for power laws.
  double max_step_relative = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 20'000'000;

  bool terminate_on_u_zero = false;
  bool terminate_on_uprime_zero = false;
  /// Reference level for EquilibriumHit and AmplitudeSample events.
  std::optional<double> equilibrium;
  /// Stop with ReachedBound when u falls to this value.
  std::optional<double> u_floor;
  /// Stop with ReachedBound when u rises to this value.
  std::optional<double> u_stop_above;
  /// Stop with StepUnderflow when u drops below this (singular forcings).
  std::optional<double> positivity_floor;
};

/// Adaptive trajectory of (u, w) with dense output.
struct ProfileSolution {
  std::vector<double> r;
  std::vector<double> u;
  std::vector<double> w;
  std::vector<double> energy;
  std::vector<Event> events;
  Termination termination = Termination::ReachedRmax;
  double u0 = 0.0;
  IntegratorOptions options;
  std::vector<dopri::DenseSegment<2>> dense;

  std::size_t size() const noexcept { return r.size(); }
  /// Dense-output state at r in [r.front(), r.back()].
  std::array<double, 2> state_at(double rr) const;

  std::vector<Event> events_of(EventKind kind) const;
};

/// Two-term startup series at r0.
std::pair<double, double> startup_state(const RadialODE& ode, double u0, double r0);

/// Startup radius actually used: opts.r0, shrunk if the series moves u by
/// more than 1e-6 max(1, |u0|).
double effective_startup_radius(const RadialODE& ode, double u0, double r0);

using StepMonitor = std::function<bool(double r, double u, double w)>;

ProfileSolution integrate(const RadialODE& ode, double u0,
                          const IntegratorOptions& opts,
                          const StepMonitor& monitor = {});

double energy(const RadialODE& ode, double u, double w);

struct EnergyCheck {
  /// max over grid intervals of |dE - predicted integral of dE/dr|.
  double max_violation = 0.0;
  /// Largest rise of E above its running minimum.
  double max_increase = 0.0;
  /// max |E(r) - E(r0)|.
  double max_abs_drift = 0.0;
  double E0 = 0.0;
};

EnergyCheck energy_derivative_check(const RadialODE& ode,
                                    const ProfileSolution& sol);

/// Largest weighted discrepancy between each accepted step and the same
/// interval covered by two half steps, in units of the error tolerance.
double midpoint_residual(const RadialODE& ode, const ProfileSolution& sol);

}  // namespace selfsim
