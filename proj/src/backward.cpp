#include "selfsim/backward.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "selfsim/error.hpp"

namespace selfsim {

namespace {

void require_slow(const ModelParams& params, const char* what) {
  if (params.regime() != Regime::SlowDiffusion) {
    fail(ErrorKind::Domain, std::string(what) + " needs the slow regime p > 2");
  }
}

double signed_pow(double u, double q) {
  double a = std::pow(std::abs(u), q);
  return u < 0.0 ? -a : a;
}

}  // namespace

std::string_view to_string(SetLabel label) {
  switch (label) {
    case SetLabel::P: return "P";
    case SetLabel::N: return "N";
    case SetLabel::N0: return "N0";
    case SetLabel::Inconclusive: return "Inconclusive";
  }
  return "Unknown";
}

RadialODE backward_ode(const ModelParams& params) {
  switch (params.regime()) {
    case Regime::SlowDiffusion: return RadialODE(params, Forcing::BackwardSlow);
    case Regime::FastDiffusion: return RadialODE(params, Forcing::BackwardFast);
    case Regime::LinearDiffusion: return RadialODE(params, Forcing::BackwardLinear);
  }
  fail(ErrorKind::Domain, "unknown regime");
}

IntegratorOptions backward_integrator_defaults(const ModelParams& params) {
  IntegratorOptions o;
  if (params.regime() == Regime::LinearDiffusion) {
    o.equilibrium = params.u_star_log();
  } else {
    o.equilibrium = params.u_star();
  }
  if (params.regime() == Regime::FastDiffusion) o.positivity_floor = 1e-8;
  return o;
}

ProfileSolution solve_backward(const ModelParams& params, double a) {
  return solve_backward(params, a, backward_integrator_defaults(params));
}

ProfileSolution solve_backward(const ModelParams& params, double a,
                               const IntegratorOptions& opts) {
  if (params.regime() != Regime::LinearDiffusion && !(a > 0.0)) {
    fail(ErrorKind::Domain, "initial height a must be positive for p != 2");
  }
  if (!std::isfinite(a)) fail(ErrorKind::Domain, "initial height must be finite");
  return integrate(backward_ode(params), a, opts);
}

Classification classify(const ModelParams& params, double a,
                        const BackwardOptions& opts) {
  require_slow(params, "classify");
  if (!(a > 0.0) || !std::isfinite(a)) {
    fail(ErrorKind::Domain, "initial height a must be positive");
  }
  RadialODE ode = backward_ode(params);
  double us = params.u_star();
  double energy_floor = -1e-3 * std::abs(ode.G(us));

  IntegratorOptions io = opts.integrator;
  io.terminate_on_u_zero = true;
  io.equilibrium = us;

  std::string cert;
  double prev_w = 0.0;
  bool first = true;
  StepMonitor monitor = [&](double, double u, double w) {
    if (!first && prev_w < 0.0 && w >= 0.0 && u > 0.0) {
      cert = "interior-minimum";
      return true;
    }
    first = false;
    prev_w = w;
    if (u > 0.0 && energy(ode, u, w) < energy_floor) {
      cert = "negative-energy";
      return true;
    }
    if (std::abs(u - us) < opts.near_tol && std::abs(w) < opts.near_tol) {
      cert = "near-equilibrium";
      return true;
    }
    return false;
  };
  ProfileSolution sol = integrate(ode, a, io, monitor);

  Classification c;
  c.a = a;
  c.termination = sol.termination;
  switch (sol.termination) {
    case Termination::Monitor:
      c.set = SetLabel::P;
      c.certificate = cert;
      if (cert == "interior-minimum") {
        for (auto it = sol.events.rbegin(); it != sol.events.rend(); ++it) {
          if (it->kind == EventKind::UPrimeZero && it->direction > 0) {
            c.first_min_u = it->u;
            break;
          }
        }
        if (!c.first_min_u) c.first_min_u = sol.u.back();
      }
      break;
    case Termination::ReachedRmax:
      c.set = SetLabel::P;
      c.certificate = "scan-radius";
      break;
    case Termination::UCrossedZero: {
      double slope = ode.uprime(sol.w.back());
      c.R_of_a = sol.r.back();
      c.terminal_slope = slope;
      c.set = slope < -opts.slope_tol ? SetLabel::N : SetLabel::N0;
      c.certificate = "vanishing";
      break;
    }
    default:
      c.set = SetLabel::Inconclusive;
      c.certificate = std::string(to_string(sol.termination));
      break;
  }
  return c;
}

std::pair<double, double> default_bracket(const ModelParams& params,
                                          const BackwardOptions& opts) {
  require_slow(params, "default_bracket");
  double lo = params.u_star();
  double hi = 2.0 * lo;
  for (int i = 0; i < 60; ++i) {
    Classification c = classify(params, hi, opts);
    if (c.set == SetLabel::N) return {lo, hi};
    if (c.set == SetLabel::P) lo = hi;
    hi *= 2.0;
  }
  fail(ErrorKind::BadBracket,
       "no vanishing height found up to " + std::to_string(hi) +
           "; the parameters may admit no ground state");
}

CriticalResult find_critical_a(const ModelParams& params,
                               std::pair<double, double> bracket,
                               const BackwardOptions& opts) {
  require_slow(params, "find_critical_a");
  if (!compact_support_admissible(params.N(), params.p())) {
    fail(ErrorKind::Domain,
         "(N, p) is outside the compact-support admissibility range; p must "
         "exceed " + std::to_string(compact_support_threshold(params.N())));
  }
  auto [lo, hi] = bracket;
  if (!(lo > 0.0) || !(hi > lo)) {
    fail(ErrorKind::BadBracket, "bracket must satisfy 0 < a_lo < a_hi");
  }
  Classification clo = classify(params, lo, opts);
  Classification chi = classify(params, hi, opts);
  if (clo.set == SetLabel::N0 && chi.set == SetLabel::N0) {
    fail(ErrorKind::Ambiguous, "both bracket endpoints classify as N0");
  }
  bool hi_vanishes = chi.set == SetLabel::N || chi.set == SetLabel::N0;
  if (clo.set != SetLabel::P || !hi_vanishes) {
    fail(ErrorKind::BadBracket,
         "bracket endpoints classify as " + std::string(to_string(clo.set)) +
             " and " + std::string(to_string(chi.set)) + "; need P and N");
  }

  CriticalResult res;
  int it = 0;
  while (hi - lo > opts.a_tol * hi && it < opts.max_bisections) {
    double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    Classification c = classify(params, mid, opts);
    if (c.set == SetLabel::Inconclusive) {
      fail(ErrorKind::Inconclusive,
           "classification inconclusive at a = " + std::to_string(mid) + " (" +
               c.certificate + ")");
    }
    if (c.set == SetLabel::P) {
      lo = mid;
      clo = c;
    } else {
      hi = mid;
      chi = c;
    }
    ++it;
  }
  res.a_lo = lo;
  res.a_hi = hi;
  res.a_c = 0.5 * (lo + hi);
  res.bracket_width = hi - lo;
  res.iterations = it;
  res.lo_class = clo;
  res.hi_class = chi;
  res.R_hi = chi.R_of_a.value_or(0.0);
  res.slope_hi = chi.terminal_slope.value_or(0.0);

  // The P-side endpoint dips to a tiny positive minimum; stopping there gives
  // the tangential-contact profile. Two passes: locate, then refine the grid.
  RadialODE ode = backward_ode(params);
  IntegratorOptions io = opts.integrator;
  io.equilibrium = params.u_star();
  io.terminate_on_u_zero = true;
  double prev_w = 0.0;
  bool started = false;
  auto stop_at_min = [&](double, double, double w) {
    bool hit = started && prev_w < 0.0 && w >= 0.0;
    started = true;
    prev_w = w;
    return hit;
  };
  ProfileSolution probe = integrate(ode, lo, io, stop_at_min);
  double r_min = probe.r.back();
  for (auto itv = probe.events.rbegin(); itv != probe.events.rend(); ++itv) {
    if (itv->kind == EventKind::UPrimeZero && itv->direction > 0) {
      r_min = itv->r;
      break;
    }
  }
  io.max_step = r_min / 4000.0;
  io.r_max = r_min;
  ProfileSolution prof = integrate(ode, lo, io);
  res.profile = std::move(prof);
  res.R_c = res.profile.r.back();
  res.u_at_R_c = res.profile.u.back();
  res.terminal_slope = ode.uprime(res.profile.w.back());
  return res;
}

SweepResult sweep_a(const ModelParams& params, const std::vector<double>& grid,
                    const BackwardOptions& opts) {
  require_slow(params, "sweep_a");
  SweepResult out;
  out.items.resize(grid.size());
  unsigned nthreads = opts.threads ? opts.threads : std::thread::hardware_concurrency();
  nthreads = std::max(1u, std::min<unsigned>(nthreads, static_cast<unsigned>(grid.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        out.items[i] = classify(params, grid[i], opts);
      } catch (const Error& e) {
        Classification c;
        c.a = grid[i];
        c.set = SetLabel::Inconclusive;
        c.certificate = e.what();
        out.items[i] = c;
      }
    }
  };
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& c : out.items) {
    if (c.set != SetLabel::P) break;
    out.a1 = c.a;
  }
  for (auto it = out.items.rbegin(); it != out.items.rend(); ++it) {
    if (it->set != SetLabel::N && it->set != SetLabel::N0) break;
    out.a2 = it->a;
  }
  return out;
}

RescaledLimitResult rescaled_limit_check(const ModelParams& params, double a,
                                         const BackwardOptions& opts) {
  require_slow(params, "rescaled_limit_check");
  if (!(a > 0.0)) fail(ErrorKind::Domain, "a must be positive");
  RescaledLimitResult res;
  double q = params.q();
  double m = params.m();
  double chi = params.chi();
  int N = params.N();
  double p = params.p();
  double B = params.B();
  double s = 1.0 / (p - 1.0);
  res.lambda = params.lambda();
  res.epsilon = std::pow(a, -q) / m;
  double eps = res.epsilon;

  RadialODE limit(params, Forcing::Limit, 0.0);
  IntegratorOptions lo = opts.integrator;
  lo.terminate_on_u_zero = true;
  lo.equilibrium.reset();
  ProfileSolution base = integrate(limit, 1.0, lo);
  if (base.termination != Termination::UCrossedZero) {
    fail(ErrorKind::Solver, "limit profile has no zero within r_max");
  }
  res.z1 = base.r.back();

  IntegratorOptions bo = opts.integrator;
  bo.terminate_on_u_zero = true;
  bo.equilibrium = params.u_star();
  ProfileSolution full = solve_backward(params, a, bo);
  double scale = std::pow(a, res.lambda);
  res.r_end = 0.9 * res.z1;
  if (full.termination == Termination::UCrossedZero) {
    res.R_of_a = full.r.back();
    res.r_end = std::min(res.r_end, scale * full.r.back());
  }

  // Coupled system: (W, V) the limit profile, (d, D) = (u~ - W, flux gap).
  using S = dopri::State<4>;
  auto up = [B, s](double w) {
    double v = std::pow(std::abs(w) / B, s);
    return w < 0.0 ? -v : v;
  };
  auto rhs = [&](double r, const S& y) {
    double W = y[0], V = y[1], d = y[2], Dv = y[3];
    double dup;
    if (V != 0.0 && Dv / V > -1.0) {
      dup = up(V) * std::expm1(s * std::log1p(Dv / V));
    } else {
      dup = up(V + Dv) - up(V);
    }
    double dg;
    if (W > 0.0 && d / W > -1.0) {
      dg = std::pow(W, q) * std::expm1(q * std::log1p(d / W));
    } else {
      dg = signed_pow(W + d, q) - signed_pow(W, q);
    }
    double n1 = N - 1;
    return S{up(V), -n1 / r * V - chi * signed_pow(W, q), dup,
             -n1 / r * Dv - chi * dg + eps};
  };
  double r0 = opts.integrator.r0;
  auto [W0, V0] = startup_state(limit, 1.0, r0);
  double kp = p / (p - 1.0);
  double d0 = -(p - 1.0) / p * std::pow(chi / (B * N), s) *
              std::expm1(s * std::log1p(-eps / chi)) * std::pow(r0, kp);
  S y0{W0, V0, d0, eps * r0 / N};
  dopri::Options<4> dopt;
  dopt.rtol = opts.integrator.rel_tol;
  double at = opts.integrator.abs_tol;
  double ad = at * std::max(eps, 1e-300);
  dopt.atol = {at, at, ad, ad};
  dopt.r_end = res.r_end;
  dopt.h0 = 0.1 * r0;
  auto tr = dopri::integrate<4>(rhs, r0, y0, dopt, {});
  if (tr.stop != dopri::Stop::ReachedEnd) {
    fail(ErrorKind::Solver, "coupled limit integration failed");
  }
  double sup = 0.0;
  for (const S& y : tr.y) sup = std::max(sup, std::abs(y[2]));
  for (const auto& seg : tr.dense) {
    S y = seg.eval(seg.r0 + 0.5 * seg.h);
    sup = std::max(sup, std::abs(y[2]));
  }
  res.sup_deviation = sup;

  double direct = 0.0;
  const int samples = 2000;
  double r_start = std::max(base.r.front(), scale * full.r.front());
  for (int i = 0; i <= samples; ++i) {
    double rr = r_start + (res.r_end - r_start) * i / samples;
    double ut = full.state_at(rr / scale)[0] / a;
    double wl = base.state_at(rr)[0];
    direct = std::max(direct, std::abs(ut - wl));
  }
  res.direct_deviation = direct;
  return res;
}

MultiBubbleProfile build_multi_bubble(const ProfileSolution& profile,
                                      const std::vector<int>& kept,
                                      const ModelParams& params) {
  require_slow(params, "build_multi_bubble");
  MultiBubbleProfile mb;
  for (const Event& e : profile.events) {
    if (e.kind == EventKind::UZero) mb.zeros.push_back(e.r);
  }
  if (kept.empty()) fail(ErrorKind::Domain, "no intervals requested");
  int max_index = *std::max_element(kept.begin(), kept.end());
  if (*std::min_element(kept.begin(), kept.end()) < 0) {
    fail(ErrorKind::Domain, "interval indices must be non-negative");
  }
  std::size_t needed = 2 * static_cast<std::size_t>(max_index) + 1;
  if (mb.zeros.size() < needed) {
    fail(ErrorKind::NotEnoughZeros,
         "profile has " + std::to_string(mb.zeros.size()) + " zeros; interval " +
             std::to_string(max_index) + " needs " + std::to_string(needed));
  }
  std::vector<int> sorted = kept;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (int i : sorted) {
    double lo = i == 0 ? 0.0 : mb.zeros[2 * i - 1];
    double hi = mb.zeros[2 * i];
    mb.kept_intervals.emplace_back(lo, hi);
  }
  double k = params.phi_exponent();
  double r_last = mb.kept_intervals.back().second;
  mb.r.push_back(0.0);
  mb.phi.push_back(std::pow(std::max(profile.u0, 0.0), k));
  for (std::size_t j = 0; j < profile.r.size() && profile.r[j] <= r_last; ++j) {
    double rr = profile.r[j];
    double val = 0.0;
    for (const auto& [lo, hi] : mb.kept_intervals) {
      if (rr > lo && rr < hi && profile.u[j] > 0.0) {
        val = std::pow(profile.u[j], k);
      }
    }
    if (rr > mb.r.back()) {
      mb.r.push_back(rr);
      mb.phi.push_back(val);
    }
  }
  // Zeros land on grid points as event states; pin them to exactly 0.
  for (double z : mb.zeros) {
    if (z > r_last) break;
    auto it = std::lower_bound(mb.r.begin(), mb.r.end(), z);
    if (it != mb.r.end() && *it == z) {
      mb.phi[static_cast<std::size_t>(it - mb.r.begin())] = 0.0;
    } else {
      std::size_t pos = static_cast<std::size_t>(it - mb.r.begin());
      mb.r.insert(it, z);
      mb.phi.insert(mb.phi.begin() + static_cast<std::ptrdiff_t>(pos), 0.0);
    }
  }
  return mb;
}

}  // namespace selfsim
