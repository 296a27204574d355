#include "selfsim/odecore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "selfsim/error.hpp"

namespace selfsim {

namespace {

double signed_pow(double u, double q) {
  double a = std::pow(std::abs(u), q);
  return u < 0.0 ? -a : a;
}

enum EventId {
  kUZero = 0,
  kUPrimeZero,
  kEquilibrium,
  kCeiling,
  kFloor,
  kAbove,
  kPositivity,
};

// 5-point Gauss-Legendre nodes and weights on [-1, 1].
constexpr std::array<double, 5> kGaussX = {
    -0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
    0.9061798459386640};
constexpr std::array<double, 5> kGaussW = {
    0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
    0.4786286704993665, 0.2369268850561891};

}  // namespace

std::string_view to_string(Forcing forcing) {
  switch (forcing) {
    case Forcing::BackwardSlow: return "backward-slow";
    case Forcing::BackwardFast: return "backward-fast";
    case Forcing::BackwardLinear: return "backward-linear";
    case Forcing::ForwardSlow: return "forward-slow";
    case Forcing::ForwardFast: return "forward-fast";
    case Forcing::ForwardLinear: return "forward-linear";
    case Forcing::Limit: return "limit";
  }
  return "unknown";
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::UZero: return "UZero";
    case EventKind::UPrimeZero: return "UPrimeZero";
    case EventKind::EquilibriumHit: return "EquilibriumHit";
    case EventKind::AmplitudeSample: return "AmplitudeSample";
    case EventKind::Bound: return "Bound";
  }
  return "Unknown";
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::ReachedRmax: return "ReachedRmax";
    case Termination::UCrossedZero: return "UCrossedZero";
    case Termination::UPrimeVanished: return "UPrimeVanished";
    case Termination::StepUnderflow: return "StepUnderflow";
    case Termination::Diverged: return "Diverged";
    case Termination::ReachedBound: return "ReachedBound";
    case Termination::Monitor: return "Monitor";
  }
  return "Unknown";
}

RadialODE::RadialODE(const ModelParams& params, Forcing forcing, double epsilon)
    : params_(params), forcing_(forcing), epsilon_(epsilon) {
  double m = params.m();
  exponential_ = forcing == Forcing::BackwardLinear ||
                 forcing == Forcing::ForwardLinear;
  bool linear = params.regime() == Regime::LinearDiffusion;
  if (exponential_ != linear) {
    fail(ErrorKind::Domain, std::string("forcing ") +
                                std::string(to_string(forcing)) +
                                " does not match regime " +
                                std::string(to_string(params.regime())));
  }
  if (!exponential_) q_ = params.q();
  b_eff_ = params.flux_coefficient();
  p_eff_ = linear ? 2.0 : params.p();
  inv_pm1_ = 1.0 / (p_eff_ - 1.0);
  switch (forcing) {
    case Forcing::BackwardSlow: power_sign_ = 1.0; constant_ = -1.0 / m; break;
    case Forcing::BackwardFast: power_sign_ = -1.0; constant_ = 1.0 / m; break;
    case Forcing::BackwardLinear: power_sign_ = 1.0; constant_ = -1.0 / m; break;
    case Forcing::ForwardSlow: power_sign_ = 1.0; constant_ = 1.0 / m; break;
    case Forcing::ForwardFast: power_sign_ = -1.0; constant_ = -1.0 / m; break;
    case Forcing::ForwardLinear: power_sign_ = 1.0; constant_ = 1.0 / m; break;
    case Forcing::Limit: power_sign_ = 1.0; constant_ = -epsilon; break;
  }
}

bool RadialODE::singular_at_zero() const noexcept {
  return !exponential_ && q_ < 0.0;
}

double RadialODE::g(double u) const {
  double chi = params_.chi();
  if (exponential_) return power_sign_ * chi * std::exp(params_.m() * u) + constant_;
  return power_sign_ * chi * signed_pow(u, q_) + constant_;
}

double RadialODE::G(double u) const {
  double chi = params_.chi();
  double m = params_.m();
  if (exponential_) return power_sign_ * chi / m * std::exp(m * u) + constant_ * u;
  if (std::abs(q_ + 1.0) < 1e-12) {
    if (u <= 0.0) fail(ErrorKind::Domain, "logarithmic energy needs u > 0");
    return power_sign_ * chi * std::log(u) + constant_ * u;
  }
  return power_sign_ * chi * std::pow(std::abs(u), q_ + 1.0) / (q_ + 1.0) +
         constant_ * u;
}

double RadialODE::uprime(double w) const {
  if (p_eff_ == 2.0) return w / b_eff_;
  double a = std::pow(std::abs(w) / b_eff_, inv_pm1_);
  return w < 0.0 ? -a : a;
}

double RadialODE::kinetic_power(double w) const {
  return std::pow(std::abs(w) / b_eff_, p_eff_ * inv_pm1_);
}

std::array<double, 2> RadialODE::rhs(double r, const std::array<double, 2>& y) const {
  double n1 = params_.N() - 1;
  return {uprime(y[1]), -n1 / r * y[1] - g(y[0])};
}

std::array<double, 2> ProfileSolution::state_at(double rr) const {
  if (dense.empty()) return {u.front(), w.front()};
  rr = std::clamp(rr, r.front(), r.back());
  auto it = std::upper_bound(
      dense.begin(), dense.end(), rr,
      [](double v, const dopri::DenseSegment<2>& s) { return v < s.r0; });
  std::size_t i = it == dense.begin() ? 0 : static_cast<std::size_t>(it - dense.begin()) - 1;
  return dense[i].eval(rr);
}

std::vector<Event> ProfileSolution::events_of(EventKind kind) const {
  std::vector<Event> out;
  for (const Event& e : events) {
    if (e.kind == kind) out.push_back(e);
  }
  return out;
}

std::pair<double, double> startup_state(const RadialODE& ode, double u0, double r0) {
  if (!(r0 > 0.0)) fail(ErrorKind::Domain, "startup radius must be positive");
  if (!std::isfinite(u0)) fail(ErrorKind::Domain, "initial height must be finite");
  if (ode.singular_at_zero() && u0 <= 0.0) {
    fail(ErrorKind::Domain, "forcing is singular at u <= 0 (q < 0); need u0 > 0");
  }
  double g0 = ode.g(u0);
  if (g0 == 0.0) return {u0, 0.0};
  int N = ode.params().N();
  double p = ode.p_eff();
  double w = -g0 * r0 / N;
  double coef = (p - 1.0) / p *
                std::pow(std::abs(g0) / (ode.B_eff() * N), 1.0 / (p - 1.0));
  double du = coef * std::pow(r0, p / (p - 1.0));
  double u = g0 > 0.0 ? u0 - du : u0 + du;
  return {u, w};
}

double effective_startup_radius(const RadialODE& ode, double u0, double r0) {
  if (ode.singular_at_zero() && u0 <= 0.0) return r0;
  double g0 = ode.g(u0);
  if (g0 == 0.0 || !std::isfinite(g0)) return r0;
  int N = ode.params().N();
  double p = ode.p_eff();
  double coef = (p - 1.0) / p *
                std::pow(std::abs(g0) / (ode.B_eff() * N), 1.0 / (p - 1.0));
  double budget = 1e-6 * std::max(1.0, std::abs(u0));
  double r_lim = std::pow(budget / coef, (p - 1.0) / p);
  return std::min(r0, r_lim);
}

double energy(const RadialODE& ode, double u, double w) {
  double p = ode.p_eff();
  return (p - 1.0) / p * std::abs(w) * std::abs(ode.uprime(w)) + ode.G(u);
}

ProfileSolution integrate(const RadialODE& ode, double u0,
                          const IntegratorOptions& opts,
                          const StepMonitor& monitor) {
  if (!(opts.r_max > 0.0)) fail(ErrorKind::Domain, "r_max must be positive");
  if (!(opts.rel_tol > 0.0) || !(opts.abs_tol > 0.0)) {
    fail(ErrorKind::Domain, "tolerances must be positive");
  }
  double r0 = effective_startup_radius(ode, u0, opts.r0);
  auto [us, ws] = startup_state(ode, u0, r0);

  using Spec = dopri::EventSpec<2>;
  using S = dopri::State<2>;
  std::vector<Spec> specs;
  specs.push_back({[](double, const S& y) { return y[0]; }, kUZero,
                   opts.terminate_on_u_zero, 0, opts.event_tol});
  specs.push_back({[](double, const S& y) { return y[1]; }, kUPrimeZero,
                   opts.terminate_on_uprime_zero, 0, opts.event_tol});
  if (opts.equilibrium) {
    double ue = *opts.equilibrium;
    specs.push_back({[ue](double, const S& y) { return y[0] - ue; },
                     kEquilibrium, false, 0, opts.event_tol});
  }
  {
    double c = opts.u_ceiling;
    specs.push_back({[c](double, const S& y) { return std::abs(y[0]) - c; },
                     kCeiling, true, 1, opts.event_tol * std::max(1.0, c)});
  }
  if (opts.u_floor) {
    double f = *opts.u_floor;
    specs.push_back({[f](double, const S& y) { return y[0] - f; }, kFloor,
                     true, -1, opts.event_tol * std::max(1.0, std::abs(f))});
  }
  if (opts.u_stop_above) {
    double a = *opts.u_stop_above;
    specs.push_back({[a](double, const S& y) { return y[0] - a; }, kAbove, true,
                     1, opts.event_tol * std::max(1.0, std::abs(a))});
  }
  if (opts.positivity_floor) {
    double f = *opts.positivity_floor;
    specs.push_back({[f](double, const S& y) { return y[0] - f; }, kPositivity,
                     true, -1, opts.event_tol});
  }

  dopri::Options<2> dopts;
  dopts.rtol = opts.rel_tol;
  dopts.atol = {opts.abs_tol, opts.abs_tol};
  dopts.r_end = opts.r_max;
  dopts.h0 = 0.1 * r0;
  dopts.max_step = opts.max_step;
  dopts.max_step_relative = opts.max_step_relative;
  dopts.max_steps = opts.max_steps;
  if (ode.p_eff() > 2.0) dopts.kink_component = 1;

  auto f = [&ode](double r, const S& y) { return ode.rhs(r, y); };
  std::function<bool(double, const S&)> mon;
  if (monitor) {
    mon = [&monitor](double r, const S& y) { return monitor(r, y[0], y[1]); };
  }
  dopri::Trajectory<2> tr = dopri::integrate<2>(f, r0, S{us, ws}, dopts, specs, mon);

  ProfileSolution sol;
  sol.u0 = u0;
  sol.options = opts;
  sol.options.r0 = r0;
  sol.r = std::move(tr.r);
  sol.u.reserve(tr.y.size());
  sol.w.reserve(tr.y.size());
  for (const S& y : tr.y) {
    sol.u.push_back(y[0]);
    sol.w.push_back(y[1]);
  }
  sol.dense = std::move(tr.dense);
  for (const auto& hit : tr.events) {
    Event e;
    e.r = hit.r;
    e.u = hit.y[0];
    e.w = hit.y[1];
    e.direction = hit.direction;
    switch (hit.id) {
      case kUZero: e.kind = EventKind::UZero; break;
      case kUPrimeZero: e.kind = EventKind::UPrimeZero; break;
      case kEquilibrium: e.kind = EventKind::EquilibriumHit; break;
      default: e.kind = EventKind::Bound; break;
    }
    sol.events.push_back(e);
    if (hit.id == kUPrimeZero && opts.equilibrium) {
      Event a = e;
      a.kind = EventKind::AmplitudeSample;
      a.amplitude = std::abs(e.u - *opts.equilibrium);
      sol.events.push_back(a);
    }
  }
  switch (tr.stop) {
    case dopri::Stop::ReachedEnd: sol.termination = Termination::ReachedRmax; break;
    case dopri::Stop::StepUnderflow: sol.termination = Termination::StepUnderflow; break;
    case dopri::Stop::NonFinite: sol.termination = Termination::Diverged; break;
    case dopri::Stop::MaxSteps: sol.termination = Termination::StepUnderflow; break;
    case dopri::Stop::Monitor: sol.termination = Termination::Monitor; break;
    case dopri::Stop::Event:
      switch (tr.terminal_event) {
        case kUZero: sol.termination = Termination::UCrossedZero; break;
        case kUPrimeZero: sol.termination = Termination::UPrimeVanished; break;
        case kCeiling: sol.termination = Termination::Diverged; break;
        case kPositivity: sol.termination = Termination::StepUnderflow; break;
        default: sol.termination = Termination::ReachedBound; break;
      }
      break;
  }
  sol.energy.reserve(sol.r.size());
  bool energy_ok = !(ode.singular_at_zero() && std::abs(ode.params().q() + 1.0) < 1e-12);
  for (std::size_t i = 0; i < sol.r.size(); ++i) {
    if (energy_ok || sol.u[i] > 0.0) {
      sol.energy.push_back(energy(ode, sol.u[i], sol.w[i]));
    } else {
      sol.energy.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return sol;
}

EnergyCheck energy_derivative_check(const RadialODE& ode, const ProfileSolution& sol) {
  EnergyCheck out;
  if (sol.r.empty()) return out;
  out.E0 = sol.energy.front();
  double n1 = ode.params().N() - 1;
  double running_min = sol.energy.front();
  for (std::size_t i = 0; i + 1 < sol.r.size(); ++i) {
    double dE = sol.energy[i + 1] - sol.energy[i];
    double predicted = 0.0;
    if (n1 > 0.0 && i < sol.dense.size()) {
      double a = sol.r[i], b = sol.r[i + 1];
      double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      for (std::size_t k = 0; k < kGaussX.size(); ++k) {
        double rr = mid + half * kGaussX[k];
        auto y = sol.dense[i].eval(rr);
        predicted -= kGaussW[k] * half * n1 / rr * std::abs(y[1]) *
                     std::abs(ode.uprime(y[1]));
      }
    }
    out.max_violation = std::max(out.max_violation, std::abs(dE - predicted));
    running_min = std::min(running_min, sol.energy[i + 1]);
    out.max_increase = std::max(out.max_increase, sol.energy[i + 1] - running_min);
    out.max_abs_drift =
        std::max(out.max_abs_drift, std::abs(sol.energy[i + 1] - out.E0));
  }
  return out;
}

double midpoint_residual(const RadialODE& ode, const ProfileSolution& sol) {
  using S = dopri::State<2>;
  auto f = [&ode](double r, const S& y) { return ode.rhs(r, y); };
  double worst = 0.0;
  double rtol = sol.options.rel_tol;
  double atol = sol.options.abs_tol;
  for (std::size_t i = 0; i + 1 < sol.r.size(); ++i) {
    double h = sol.r[i + 1] - sol.r[i];
    S y0{sol.u[i], sol.w[i]};
    auto s1 = dopri::step<2>(f, sol.r[i], y0, f(sol.r[i], y0), 0.5 * h);
    auto s2 = dopri::step<2>(f, sol.r[i] + 0.5 * h, s1.y1, s1.k7, 0.5 * h);
    S y1{sol.u[i + 1], sol.w[i + 1]};
    for (std::size_t k = 0; k < 2; ++k) {
      double sc = atol + rtol * std::max(std::abs(y0[k]), std::abs(y1[k]));
      worst = std::max(worst, std::abs(s2.y1[k] - y1[k]) / sc);
    }
  }
  return worst;
}

}  // namespace selfsim
