#include "selfsim/forward.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "selfsim/error.hpp"

namespace selfsim {

std::string_view to_string(TailKind kind) {
  switch (kind) {
    case TailKind::Compact: return "compact";
    case TailKind::Power: return "power";
    case TailKind::LogQuadratic: return "log-quadratic";
  }
  return "unknown";
}

RadialODE forward_ode(const ModelParams& params) {
  switch (params.regime()) {
    case Regime::SlowDiffusion: return RadialODE(params, Forcing::ForwardSlow);
    case Regime::FastDiffusion: return RadialODE(params, Forcing::ForwardFast);
    case Regime::LinearDiffusion: return RadialODE(params, Forcing::ForwardLinear);
  }
  fail(ErrorKind::Domain, "unknown regime");
}

ForwardOptions forward_defaults(const ModelParams& params) {
  ForwardOptions o;
  if (params.regime() == Regime::FastDiffusion) o.integrator.r_max = 1e6;
  return o;
}

double forward_K(const ModelParams& params) {
  double p = params.p();
  return std::pow(1.0 / (params.B() * params.N() * params.m()), 1.0 / (p - 1.0)) *
         (p - 1.0) / p;
}

ForwardProfile solve_forward(const ModelParams& params, double a_or_b) {
  return solve_forward(params, a_or_b, forward_defaults(params));
}

ForwardProfile solve_forward(const ModelParams& params, double a_or_b,
                             const ForwardOptions& opts) {
  Regime reg = params.regime();
  if (reg != Regime::LinearDiffusion && !(a_or_b > 0.0)) {
    fail(ErrorKind::Domain, "initial height a must be positive for p != 2");
  }
  if (!std::isfinite(a_or_b)) fail(ErrorKind::Domain, "initial height must be finite");
  RadialODE ode = forward_ode(params);
  IntegratorOptions io = opts.integrator;
  io.equilibrium.reset();
  TailModel tail;
  switch (reg) {
    case Regime::LinearDiffusion:
      io.u_floor = opts.u_floor;
      tail.kind = TailKind::LogQuadratic;
      tail.exponent = 2.0;
      tail.coefficient = -0.25;
      break;
    case Regime::FastDiffusion: {
      io.u_stop_above = opts.u_stop_above;
      double p = params.p();
      tail.kind = TailKind::Power;
      tail.exponent = p / (p - 2.0);
      tail.coefficient = std::pow(forward_K(params), (p - 1.0) / (p - 2.0));
      break;
    }
    case Regime::SlowDiffusion:
      io.terminate_on_u_zero = true;
      tail.kind = TailKind::Compact;
      break;
  }
  ProfileSolution sol = integrate(ode, a_or_b, io);

  ForwardProfile fp{params, a_or_b, std::move(sol), std::nullopt, tail, 0.0};
  const auto& u = fp.sol.u;
  double dir = reg == Regime::FastDiffusion ? 1.0 : -1.0;
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    worst = std::max(worst, -dir * (u[i + 1] - u[i]));
  }
  fp.monotonicity_violation = worst;
  if (reg == Regime::SlowDiffusion && fp.sol.termination == Termination::UCrossedZero) {
    fp.support_radius = fp.sol.r.back();
  }
  return fp;
}

SupportRadius support_radius(const ForwardProfile& fp, double eps) {
  const ModelParams& P = fp.params;
  if (P.regime() != Regime::SlowDiffusion) {
    fail(ErrorKind::Domain, "support radius exists only for p > 2");
  }
  if (!fp.support_radius) {
    fail(ErrorKind::NoSupportRadius,
         "trajectory ended without reaching u = 0 (" +
             std::string(to_string(fp.sol.termination)) + ")");
  }
  RadialODE ode = forward_ode(P);
  SupportRadius out;
  out.R0 = *fp.support_radius;
  out.terminal_u_slope = ode.uprime(fp.sol.w.back());
  auto y = fp.sol.state_at(out.R0 - eps);
  double p = P.p();
  double base = std::max(y[0], 0.0);
  out.terminal_phi_slope =
      (p - 1.0) / (p - 2.0) * std::pow(base, 1.0 / (p - 2.0)) * ode.uprime(y[1]);
  double a = fp.a_or_b;
  double B = P.B(), m = P.m(), N = P.N();
  double lead = std::pow(a * p / (p - 1.0), (p - 1.0) / p);
  out.upper_bound = lead * std::pow(B * m * N, 1.0 / p);
  out.lower_bound =
      lead * std::pow(B * N / (1.0 / m + P.chi() * std::pow(a, P.q())), 1.0 / p);
  return out;
}

double decay_fit_min_radius(const ModelParams& params) {
  return params.regime() == Regime::LinearDiffusion ? 20.0 : 100.0;
}

namespace {

// Value of the tail quantity whose limit is targeted.
double tail_quantity(const ForwardProfile& fp, double r) {
  const ModelParams& P = fp.params;
  double u = fp.sol.state_at(r)[0];
  if (P.regime() == Regime::LinearDiffusion) return u / (r * r);
  double p = P.p();
  double lg = (p - 1.0) / (p - 2.0) * std::log(u) + p / (2.0 - p) * std::log(r);
  return std::exp(lg);
}

// Neville extrapolation of values f(h_j) to h = 0.
double extrapolate_to_zero(const std::array<double, 4>& h, std::array<double, 4> f) {
  for (std::size_t k = 1; k < f.size(); ++k) {
    for (std::size_t j = f.size() - 1; j >= k; --j) {
      f[j] = (h[j] * f[j - 1] - h[j - k] * f[j]) / (h[j] - h[j - k]);
      if (j == k) break;
    }
  }
  return f.back();
}

// At p = 2 the tail is u = -r^2/(2mN) + D + C r^{2-N} (C ln r when N = 2) up
// to exponentially small terms, so u/r^2 is exact in the basis
// {1, h^2, h^N} (or {1, h^2, h^2 ln h}) with h = 1/r.
double extrapolate_linear_tail(int N, const std::array<double, 3>& h,
                               const std::array<double, 3>& f) {
  double A[3][4];
  for (std::size_t i = 0; i < 3; ++i) {
    A[i][0] = 1.0;
    A[i][1] = h[i] * h[i];
    A[i][2] = N == 2 ? h[i] * h[i] * std::log(h[i]) : std::pow(h[i], N);
    A[i][3] = f[i];
  }
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int rr = c + 1; rr < 3; ++rr) {
      if (std::abs(A[rr][c]) > std::abs(A[piv][c])) piv = rr;
    }
    for (int k = 0; k < 4; ++k) std::swap(A[c][k], A[piv][k]);
    for (int rr = 0; rr < 3; ++rr) {
      if (rr == c) continue;
      double fct = A[rr][c] / A[c][c];
      for (int k = 0; k < 4; ++k) A[rr][k] -= fct * A[c][k];
    }
  }
  return A[0][3] / A[0][0];
}

}  // namespace

DecayFit fit_decay_rate(const ForwardProfile& fp, std::optional<double> r_eval) {
  const ModelParams& P = fp.params;
  if (P.regime() == Regime::SlowDiffusion) {
    fail(ErrorKind::Domain, "decay fit applies to p <= 2; p > 2 has compact support");
  }
  double r_last = fp.sol.r.back();
  double r = r_eval.value_or(r_last);
  double need = decay_fit_min_radius(P);
  if (r < need || r > r_last) {
    fail(ErrorKind::InsufficientRange,
         "decay fit needs " + std::to_string(need) + " <= r <= " +
             std::to_string(r_last) + "; got r = " + std::to_string(r));
  }
  DecayFit out;
  out.r_eval = r;
  out.estimate = tail_quantity(fp, r);
  std::array<double, 4> hs, fs;
  for (std::size_t j = 0; j < 4; ++j) {
    double rj = r / std::pow(2.0, static_cast<double>(j));
    hs[j] = 1.0 / rj;
    fs[j] = tail_quantity(fp, rj);
  }
  if (P.regime() == Regime::LinearDiffusion) {
    out.extrapolated = extrapolate_linear_tail(P.N(), {hs[0], hs[1], hs[2]},
                                               {fs[0], fs[1], fs[2]});
  } else {
    out.extrapolated = extrapolate_to_zero(hs, fs);
  }
  if (P.regime() == Regime::LinearDiffusion) {
    out.target = -0.25;
  } else {
    double p = P.p();
    double K = forward_K(P);
    out.target = std::pow(K, (p - 1.0) / (p - 2.0));
    out.u_ratio = fp.sol.state_at(r)[0] / std::pow(r, p / (p - 1.0));
    out.u_ratio_target = K;
  }
  return out;
}

double envelope_violation(const ForwardProfile& fp) {
  const ModelParams& P = fp.params;
  const auto& r = fp.sol.r;
  const auto& u = fp.sol.u;
  double worst = 0.0;
  double tol = 10.0 * fp.sol.options.rel_tol;
  if (P.regime() == Regime::FastDiffusion) {
    double p = P.p(), a = fp.a_or_b, B = P.B(), m = P.m(), N = P.N();
    double k = p / (p - 1.0);
    double lo_c = (p - 1.0) / p * std::pow(1.0 / (m * B * N), 1.0 / (p - 1.0));
    double hi_c = (p - 1.0) / p *
                  std::pow(1.0 / (m * B * N) + P.chi() * std::pow(a, P.q()) / (B * N),
                           1.0 / (p - 1.0));
    for (std::size_t i = 0; i < r.size(); ++i) {
      double rk = std::pow(r[i], k);
      double lo = a + lo_c * rk, hi = a + hi_c * rk;
      double sc = std::max(1.0, std::abs(u[i]));
      worst = std::max(worst, (lo - u[i]) / sc - tol);
      worst = std::max(worst, (u[i] - hi) / sc - tol);
    }
  } else if (P.regime() == Regime::LinearDiffusion) {
    double b = fp.a_or_b, m = P.m(), N = P.N();
    double c = (P.chi() * std::exp(b * m) + 1.0 / m) / (2.0 * N);
    for (std::size_t i = 0; i < r.size(); ++i) {
      double lo = b - c * r[i] * r[i];
      double sc = std::max(1.0, std::abs(u[i]));
      worst = std::max(worst, (lo - u[i]) / sc - tol);
      double slope_bound = -r[i] / (m * N);
      double sc2 = std::max(1.0, std::abs(slope_bound));
      worst = std::max(worst, (fp.sol.w[i] - slope_bound) / sc2 - tol);
    }
  } else {
    fail(ErrorKind::Domain, "no envelope check for p > 2");
  }
  return std::max(worst, 0.0);
}

}  // namespace selfsim
