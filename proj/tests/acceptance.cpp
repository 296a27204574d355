// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "selfsim/backward.hpp"
#include "selfsim/error.hpp"
#include "selfsim/forward.hpp"
#include "selfsim/odecore.hpp"
#include "selfsim/params.hpp"
#include "selfsim/reconstruct.hpp"

using namespace selfsim;

namespace {

int failures = 0;

void report(int id, const char* title, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %2d  %-34s %s\n", ok ? "PASS" : "FAIL", id, title,
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Runs a criterion body; a thrown error counts as a failure with its message.
void criterion(int id, const char* title, const std::function<std::pair<bool, std::string>()>& body) {
  try {
    auto [ok, detail] = body();
    report(id, title, ok, detail);
  } catch (const std::exception& e) {
    report(id, title, false, std::string("threw: ") + e.what());
  }
}

std::pair<bool, std::string> closed_form_critical() {
  const std::pair<double, double> cases[] = {{2.5, 1.0}, {3.0, 1.0}, {4.0, 1.0}, {3.0, 2.0}};
  double worst = 0.0;
  std::string detail;
  for (auto [p, chi] : cases) {
    ModelParams P = derive_params(1, p, chi);
    CriticalResult cr = find_critical_a(P, default_bracket(P));
    double exact = std::pow((P.q() + 1.0) / (P.m() * chi), 1.0 / P.q());
    double err = std::abs(cr.a_c / exact - 1.0);
    worst = std::max(worst, err);
    detail += fmt("p=%g chi=%g err=%.1e; ", p, chi, err);
  }
  return {worst < 1e-6, detail};
}

std::pair<bool, std::string> energy_laws() {
  std::mt19937_64 rng(20240607);
  std::uniform_int_distribution<int> dimension(1, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int checked = 0, bad = 0;
  double worst1 = 0.0, worst2 = 0.0;
  while (checked < 60) {
    int N = dimension(rng);
    double lo = std::max(p_lower_bound(N) + 0.1, 1.3);
    double p = unit(rng) < 0.1 ? 2.0 : lo + (4.0 - lo) * unit(rng);
    ModelParams P = derive_params(N, p, 0.5 + 1.5 * unit(rng));
    double eq = P.regime() == Regime::LinearDiffusion ? P.u_star_log() : P.u_star();
    double a = P.regime() == Regime::LinearDiffusion ? eq + (unit(rng) - 0.5) * 2.0
                                                     : eq * (0.2 + 2.8 * unit(rng));
    IntegratorOptions o = backward_integrator_defaults(P);
    o.r_max = 20.0;
    ProfileSolution s = solve_backward(P, a, o);
    EnergyCheck ec = energy_derivative_check(backward_ode(P), s);
    double scale = std::abs(ec.E0);
    if (N == 1) {
      double rel = ec.max_abs_drift / scale;
      worst1 = std::max(worst1, rel);
      if (!(rel < 1e-6)) ++bad;
    } else {
      double rel = ec.max_increase / scale;
      worst2 = std::max(worst2, rel);
      if (!(rel < 1e-8)) ++bad;
    }
    ++checked;
  }
  return {bad == 0, fmt("%d points, %d violations; N=1 max drift %.1e, N>=2 max rise %.1e",
                        checked, bad, worst1, worst2)};
}

std::pair<bool, std::string> linear_convergence() {
  ModelParams P = derive_params(4, 2.0, 1.0);
  IntegratorOptions o = backward_integrator_defaults(P);
  o.r_max = 250.0;
  o.equilibrium = P.u_star_log();
  ProfileSolution s = solve_backward(P, 0.0, o);
  auto amps = s.events_of(EventKind::AmplitudeSample);
  bool decreasing = amps.size() >= 3;
  for (std::size_t i = 1; i < amps.size(); ++i) {
    if (!(amps[i].amplitude < amps[i - 1].amplitude)) decreasing = false;
  }
  double dev = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.r[i] >= 200.0) dev = std::max(dev, std::abs(s.u[i] - P.u_star_log()));
  }
  bool near = dev < 1e-3;
  return {decreasing && near && std::abs(P.u_star_log() - 2 * std::log(2.0)) < 1e-15,
          fmt("%zu extrema, envelope strictly decreasing=%d, max|u-u*| on r>=200: %.2e",
              amps.size(), decreasing, dev)};
}

std::pair<bool, std::string> forward_decay() {
  bool ok = true;
  std::string detail;
  ModelParams L = derive_params(2, 2.0, 1.0);
  DecayFit f = fit_decay_rate(solve_forward(L, 0.0), 30.0);
  double raw = std::abs(f.estimate / f.target - 1), ext = std::abs(f.extrapolated / f.target - 1);
  ok = ok && raw < 0.02 && ext < 0.005;
  detail += fmt("p=2 N=2 raw %.2f%% extrap %.1e%%; ", 100 * raw, 100 * ext);
  ModelParams F = derive_params(3, 1.8, 1.0);
  DecayFit g = fit_decay_rate(solve_forward(F, 1.0));
  double err = std::abs(g.estimate / g.target - 1);
  ok = ok && err < 0.02;
  detail += fmt("p=1.8 N=3 rel err %.1e at r=%.0f", err, g.r_eval);
  return {ok, detail};
}

std::pair<bool, std::string> compact_support() {
  const std::pair<int, double> cases[] = {{1, 3.0}, {2, 3.0}, {3, 2.5}};
  bool ok = true;
  std::string detail;
  for (auto [N, p] : cases) {
    ForwardProfile fp = solve_forward(derive_params(N, p, 1.0), 1.0);
    bool has_zero = !fp.sol.events_of(EventKind::UZero).empty();
    SupportRadius s = support_radius(fp);
    bool good = has_zero && s.terminal_u_slope < 0.0 &&
                std::abs(s.terminal_phi_slope) < 1e-5 && s.R0 <= s.upper_bound;
    ok = ok && good;
    detail += fmt("N=%d p=%g R0=%.6f<=%.4f phi'=%.0e; ", N, p, s.R0, s.upper_bound,
                  s.terminal_phi_slope);
  }
  return {ok, detail};
}

// Gaussian deviation over 7 times approaching the singular time by factors of 4,
// starting where theta(t) R = s0 for the given start scale.
std::pair<bool, std::string> concentration_case(const char* label,
                                                const SelfSimilarSolution& ss,
                                                double start_scale) {
  double R = effective_radius(ss.phi);
  double mN = ss.params.m() * ss.params.N();
  double s0 = std::pow(start_scale / R, mN);
  std::vector<double> times;
  for (int j = 0; j <= 6; ++j) {
    double s = s0 * std::pow(0.25, j);
    times.push_back(ss.direction == Direction::Backward ? ss.T - s : s);
  }
  auto gauss = TestFunction::of_radius([](double r) { return std::exp(-r * r); });
  auto dev = delta_test(ss, gauss, times);
  bool monotone = true;
  for (std::size_t i = 1; i < dev.size(); ++i) {
    if (!(dev[i].deviation < dev[i - 1].deviation)) monotone = false;
  }
  double factor = dev.front().deviation / dev.back().deviation;
  double spread = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    spread = std::max(spread, std::abs(mass_at_time(ss, times[i]) / ss.mass - 1.0));
  }
  bool ok = std::isfinite(ss.mass) && spread < 1e-8 && monotone && factor >= 1e3;
  return {ok, fmt("%s M=%.4g spread %.0e x%.0f; ", label, ss.mass, spread, factor)};
}

std::pair<bool, std::string> mass_and_concentration() {
  bool ok = true;
  std::string detail;
  ModelParams B = derive_params(1, 2.1, 1.0);
  CriticalResult cr = find_critical_a(B, default_bracket(B));
  auto add = [&](std::pair<bool, std::string> r) {
    ok = ok && r.first;
    detail += r.second;
  };
  add(concentration_case("bwd N1 p2.1", backward_critical_solution(B, cr, 1.0), 0.05));
  add(concentration_case("fwd N1 p2.1", forward_solution(derive_params(1, 2.1, 1.0), 1.0), 0.05));
  add(concentration_case("fwd N2 p2", forward_solution(derive_params(2, 2.0, 1.0), 0.0), 0.05));
  add(concentration_case("fwd N3 p1.8", forward_solution(derive_params(3, 1.8, 1.0), 1.0), 0.05));
  return {ok, detail};
}

std::pair<bool, std::string> system_residuals() {
  std::vector<std::pair<std::string, SelfSimilarSolution>> cases;
  for (auto [N, p] : {std::pair{1, 3.0}, {2, 3.0}, {3, 2.5}}) {
    ModelParams P = derive_params(N, p, 1.0);
    CriticalResult cr = find_critical_a(P, default_bracket(P));
    cases.emplace_back(fmt("bwd N%d p%g", N, p), backward_critical_solution(P, cr));
  }
  cases.emplace_back("fwd N1 p3", forward_solution(derive_params(1, 3.0, 1.0), 1.0));
  cases.emplace_back("fwd N2 p2", forward_solution(derive_params(2, 2.0, 1.0), 0.0));
  cases.emplace_back("fwd N3 p1.8", forward_solution(derive_params(3, 1.8, 1.0), 1.0));
  bool ok = true;
  double worst = 0.0;
  for (auto& [label, ss] : cases) {
    SystemResidual r = system_residual(ss.phi, ss.psi, ss.params, ss.direction);
    double m = std::max({r.res1, r.res2, r.identity});
    worst = std::max(worst, m);
    ok = ok && m < 1e-6;
  }
  return {ok, fmt("%zu profiles, worst of res1/res2/identity %.1e", cases.size(), worst)};
}

std::pair<bool, std::string> rescaling_limit() {
  ModelParams P = derive_params(2, 3.0, 1.0);
  RescaledLimitResult lo = rescaled_limit_check(P, 1e3);
  RescaledLimitResult hi = rescaled_limit_check(P, 1e4);
  return {hi.sup_deviation < lo.sup_deviation,
          fmt("sup dev a=1e3: %.2e, a=1e4: %.2e (direct floor %.1e, %.1e)", lo.sup_deviation,
              hi.sup_deviation, lo.direct_deviation, hi.direct_deviation)};
}

// Independent fixed-step RK4 with its own forcing and startup.
struct Oracle {
  int N;
  double p, chi, m, q, B, sign, constant;
  bool exponential;

  double g(double u) const {
    double power = exponential ? chi * std::exp(m * u) : chi * std::pow(std::abs(u), q - 1) * u;
    return sign * power + constant;
  }
  double uprime(double w) const {
    return std::copysign(std::pow(std::abs(w) / B, 1.0 / (p - 1)), w);
  }
  double u_at_one(double a, double h) const {
    double r = 1e-6;
    double w = -g(a) * r / N;
    double u = a + uprime(w) * r * (p - 1) / p;
    auto f = [&](double rr, double uu, double ww, double& du, double& dw) {
      du = uprime(ww);
      dw = -(N - 1) / rr * ww - g(uu);
    };
    while (r < 1.0 - 1e-14) {
      double s = std::min(h, 1.0 - r);
      double k1u, k1w, k2u, k2w, k3u, k3w, k4u, k4w;
      f(r, u, w, k1u, k1w);
      f(r + s / 2, u + s / 2 * k1u, w + s / 2 * k1w, k2u, k2w);
      f(r + s / 2, u + s / 2 * k2u, w + s / 2 * k2w, k3u, k3w);
      f(r + s, u + s * k3u, w + s * k3w, k4u, k4w);
      u += s / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
      w += s / 6 * (k1w + 2 * k2w + 2 * k3w + k4w);
      r += s;
    }
    return u;
  }
};

std::pair<bool, std::string> oracle_equivalence() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  int cases = 0;
  while (cases < 20) {
    int N = 1 + static_cast<int>(4 * unit(rng));
    double lo = std::max(p_lower_bound(N) + 0.15, 1.3);
    double p = cases % 5 == 4 ? 2.0 : lo + (3.5 - lo) * unit(rng);
    bool backward = unit(rng) < 0.5;
    ModelParams P = derive_params(N, p, 1.0);
    Oracle o{N, p, 1.0, P.m(), 0.0, P.flux_coefficient(), 1.0, 0.0, false};
    Forcing forcing;
    double a;
    switch (P.regime()) {
      case Regime::SlowDiffusion:
        o.q = P.q();
        o.constant = backward ? -1 / P.m() : 1 / P.m();
        forcing = backward ? Forcing::BackwardSlow : Forcing::ForwardSlow;
        a = P.u_star() * (0.3 + 1.2 * unit(rng));
        break;
      case Regime::FastDiffusion:
        o.q = P.q();
        o.sign = -1.0;
        o.constant = backward ? 1 / P.m() : -1 / P.m();
        forcing = backward ? Forcing::BackwardFast : Forcing::ForwardFast;
        a = P.u_star() * (1.0 + 1.5 * unit(rng));
        break;
      default:
        o.exponential = true;
        o.constant = backward ? -1 / P.m() : 1 / P.m();
        forcing = backward ? Forcing::BackwardLinear : Forcing::ForwardLinear;
        a = unit(rng) - 0.5;
        break;
    }
    RadialODE ode(P, forcing);
    IntegratorOptions io;
    io.r_max = 1.0;
    ProfileSolution s = integrate(ode, a, io);
    if (s.termination != Termination::ReachedRmax) continue;
    double exact = o.u_at_one(a, 1e-5);
    double err = std::abs(s.u.back() - exact) / std::max(std::abs(exact), std::abs(a));
    worst = std::max(worst, err);
    ++cases;
  }
  return {worst < 1e-6, fmt("%d cases, worst relative difference in u(1) %.1e", cases, worst)};
}

std::pair<bool, std::string> sweep_structure() {
  std::vector<double> grid;
  for (int i = 0; i < 60; ++i) grid.push_back(0.01 * std::pow(1e4, i / 59.0));
  ModelParams A = derive_params(3, 2.5, 1.0);
  SweepResult sa = sweep_a(A, grid);
  bool prefix = true;
  for (const Classification& c : sa.items) {
    if (c.a <= A.u_star() && c.set != SetLabel::P) prefix = false;
  }
  bool tail = sa.a1 && sa.a2 && *sa.a1 >= A.u_star() * (1 - 1e-12) &&
              sa.items.back().set != SetLabel::P;
  ModelParams G = derive_params(3, 2.1, 1.0);
  bool regime = no_ground_state_regime(3, 2.1) && G.q() >= 3 * 2.1 / (3 - 2.1) - 1;
  SweepResult sg = sweep_a(G, grid);
  int positive = 0;
  for (const Classification& c : sg.items) positive += c.set == SetLabel::P;
  bool all_p = positive == static_cast<int>(grid.size());
  return {prefix && tail && regime && all_p,
          fmt("N=3 p=2.5: a1=%.4g a2=%.4g u*=%.4g; N=3 p=2.1: %d/%zu P", sa.a1.value_or(NAN),
              sa.a2.value_or(NAN), A.u_star(), positive, grid.size())};
}

}  // namespace

int main() {
  criterion(1, "critical height closed form", closed_form_critical);
  criterion(2, "energy laws", energy_laws);
  criterion(3, "backward linear convergence", linear_convergence);
  criterion(4, "forward decay rates", forward_decay);
  criterion(5, "compact support (slow forward)", compact_support);
  criterion(6, "mass and delta concentration", mass_and_concentration);
  criterion(7, "system residual", system_residuals);
  criterion(8, "rescaling limit", rescaling_limit);
  criterion(9, "oracle equivalence (RK4)", oracle_equivalence);
  criterion(10, "sweep structure", sweep_structure);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
