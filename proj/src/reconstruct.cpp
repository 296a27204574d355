#include "selfsim/reconstruct.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "selfsim/error.hpp"
#include "selfsim/quadrature.hpp"

namespace selfsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Closed-form pieces of the tail phi_tail(s)^mp weighted by s^alpha (and
// optionally ln s), for s beyond the last node R.
struct TailIntegrals {
  TailModel tail;
  double R = 0.0;
  double phi_end = 0.0;
  double log_slope = 0.0;

  bool vanishing() const {
    return tail.kind == TailKind::Compact || phi_end == 0.0;
  }

  // Integral over [x, infinity), x >= R. Returns +inf when divergent.
  double from(double x, double alpha, double mp, bool with_log) const {
    if (vanishing()) return 0.0;
    double base = std::pow(phi_end, mp);
    if (tail.kind == TailKind::LogQuadratic) {
      double rate = mp * std::abs(log_slope);
      if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
      double v = base * std::exp(mp * log_slope * (x - R)) * std::pow(x, alpha) / rate;
      return with_log ? v * std::log(x) : v;
    }
    double beta = alpha + mp * tail.exponent;
    if (beta + 1.0 >= 0.0) return std::numeric_limits<double>::infinity();
    double scale = base * std::pow(R, -mp * tail.exponent);
    double b1 = beta + 1.0;
    double xb = std::pow(x, b1);
    if (!with_log) return scale * xb / -b1;
    return scale * xb * (-std::log(x) / b1 + 1.0 / (b1 * b1));
  }

  // Integral over [R, x] of s^alpha phi_tail^mp.
  double partial(double x, double alpha, double mp) const {
    if (vanishing() || x <= R) return 0.0;
    if (tail.kind == TailKind::LogQuadratic) {
      return from(R, alpha, mp, false) - from(x, alpha, mp, false);
    }
    double beta = alpha + mp * tail.exponent;
    double scale = std::pow(phi_end, mp) * std::pow(R, -mp * tail.exponent);
    if (std::abs(beta + 1.0) < 1e-14) return scale * std::log(x / R);
    return scale * (std::pow(x, beta + 1.0) - std::pow(R, beta + 1.0)) / (beta + 1.0);
  }

  double phi(double x) const {
    if (vanishing()) return 0.0;
    if (tail.kind == TailKind::LogQuadratic) {
      return phi_end * std::exp(log_slope * (x - R));
    }
    return phi_end * std::pow(x / R, tail.exponent);
  }
};

TailIntegrals tail_of(const PhiProfile& phi) {
  TailIntegrals t;
  t.tail = phi.tail;
  t.R = phi.r.back();
  t.phi_end = phi.phi.back();
  t.log_slope = phi.log_slope_end;
  return t;
}

TailIntegrals tail_of(const PsiProfile& psi) {
  TailIntegrals t;
  t.tail = psi.tail;
  t.R = psi.r.back();
  t.phi_end = psi.phi_end;
  t.log_slope = psi.log_slope_end;
  return t;
}

double interp_linear(const std::vector<double>& x, const std::vector<double>& y,
                     double v) {
  auto it = std::upper_bound(x.begin(), x.end(), v);
  if (it == x.begin()) return y.front();
  if (it == x.end()) return y.back();
  std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
  double t = (v - x[i]) / (x[i + 1] - x[i]);
  return y[i] + t * (y[i + 1] - y[i]);
}

std::size_t segment_index(const std::vector<double>& x, double v) {
  auto it = std::upper_bound(x.begin(), x.end(), v);
  if (it == x.begin()) return 0;
  std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
  return std::min(i, x.size() - 2);
}

}  // namespace

std::string_view to_string(Direction d) {
  return d == Direction::Backward ? "backward" : "forward";
}

double PhiProfile::at(double rr) const {
  if (rr < 0.0) rr = -rr;
  if (support_radius && rr >= *support_radius) return 0.0;
  if (rr <= r.back()) return interp_linear(r, phi, rr);
  return tail_of(*this).phi(rr);
}

PhiProfile phi_from_u(const ProfileSolution& sol, const ModelParams& params,
                      std::optional<double> support,
                      std::optional<TailModel> tail) {
  Regime reg = params.regime();
  RadialODE ode = reg == Regime::LinearDiffusion
                      ? RadialODE(params, Forcing::BackwardLinear)
                      : RadialODE(params, reg == Regime::SlowDiffusion
                                              ? Forcing::BackwardSlow
                                              : Forcing::BackwardFast);
  if (reg == Regime::SlowDiffusion && !support &&
      sol.termination == Termination::UCrossedZero) {
    support = sol.r.back();
  }
  double k = reg == Regime::LinearDiffusion ? 0.0 : params.phi_exponent();
  auto map = [&](double u) {
    if (reg == Regime::LinearDiffusion) return std::exp(u);
    if (u <= 0.0) {
      if (reg == Regime::FastDiffusion) {
        fail(ErrorKind::NegativeBase,
             "u <= 0 cannot be mapped to phi for p < 2 (u = " + std::to_string(u) + ")");
      }
      return 0.0;
    }
    return std::pow(u, k);
  };

  PhiProfile out;
  out.support_radius = support;
  out.r.push_back(0.0);
  out.phi.push_back(map(sol.u0));
  for (std::size_t i = 0; i < sol.r.size(); ++i) {
    if (support && sol.r[i] > *support) break;
    if (!(sol.r[i] > out.r.back())) continue;
    out.r.push_back(sol.r[i]);
    out.phi.push_back(map(sol.u[i]));
  }
  if (support) {
    if (out.r.back() < *support) {
      out.r.push_back(*support);
      out.phi.push_back(0.0);
    }
    out.phi.back() = 0.0;
    out.tail = TailModel{TailKind::Compact, 0.0, 0.0};
    return out;
  }

  double uend = sol.u.back();
  double wend = sol.w.back();
  out.log_slope_end = reg == Regime::LinearDiffusion
                          ? wend
                          : k * ode.uprime(wend) / uend;
  if (tail) {
    out.tail = *tail;
  } else if (reg == Regime::FastDiffusion) {
    double p = params.p();
    out.tail = TailModel{TailKind::Power, p / (p - 2.0), 0.0};
  } else {
    // Non-decaying profile: phi stays at its last value.
    out.tail = TailModel{TailKind::Power, 0.0, 0.0};
  }
  if (out.tail.kind == TailKind::Power) {
    out.tail.coefficient = out.phi.back() / std::pow(out.r.back(), out.tail.exponent);
  }
  return out;
}

PhiProfile phi_from_forward(const ForwardProfile& fp) {
  if (fp.regime() == Regime::SlowDiffusion) {
    return phi_from_u(fp.sol, fp.params, fp.support_radius);
  }
  return phi_from_u(fp.sol, fp.params, std::nullopt, fp.tail);
}

PhiProfile phi_from_critical(const CriticalResult& cr, const ModelParams& params) {
  return phi_from_u(cr.profile, params, cr.R_c);
}

PhiProfile phi_from_multi_bubble(const MultiBubbleProfile& mb) {
  PhiProfile out;
  out.r = mb.r;
  out.phi = mb.phi;
  out.support_radius = mb.kept_intervals.back().second;
  out.tail = TailModel{TailKind::Compact, 0.0, 0.0};
  return out;
}

double effective_radius(const PhiProfile& phi) {
  if (phi.support_radius) return *phi.support_radius;
  double level = 1e-6 * phi.phi.front();
  for (std::size_t i = 0; i < phi.r.size(); ++i) {
    if (phi.phi[i] < level) return phi.r[i];
  }
  return phi.r.back();
}

double potential_threshold(int N) {
  return 2.0 * std::sqrt(static_cast<double>(N) / (N + 1.0));
}

PsiProfile psi_from_phi(const PhiProfile& phi, const ModelParams& params,
                        bool allow_ill_posed) {
  int N = params.N();
  double m = params.m();
  PsiProfile out;
  out.r = phi.r;
  out.N = N;
  out.m = m;
  out.tail = phi.tail;
  out.phi_end = phi.phi.back();
  out.log_slope_end = phi.log_slope_end;
  TailIntegrals tail = tail_of(phi);

  bool compact = tail.vanishing();
  double tail_s = tail.from(tail.R, 1.0, m, false);
  double tail_sln = N == 2 ? tail.from(tail.R, 1.0, m, true) : 0.0;
  if (!compact) {
    bool below = params.p() <= 2.0 && params.p() <= potential_threshold(N);
    if (below || !std::isfinite(tail_s) || !std::isfinite(tail_sln)) {
      out.well_posed = false;
      out.detail = "tail integral of s phi^m diverges; potential needs p > " +
                   std::to_string(potential_threshold(N)) +
                   " for a non-compact profile";
      if (!allow_ill_posed) fail(ErrorKind::IllPosedPotential, out.detail);
    }
  }

  const auto& r = phi.r;
  std::size_t n = r.size();
  std::vector<double> fm(n), f_in(n), f_s(n), f_sln(n);
  for (std::size_t i = 0; i < n; ++i) {
    fm[i] = std::pow(phi.phi[i], m);
    f_in[i] = std::pow(r[i], N - 1) * fm[i];
    f_s[i] = r[i] * fm[i];
    f_sln[i] = r[i] > 0.0 ? r[i] * std::log(r[i]) * fm[i] : 0.0;
  }
  std::vector<double> I1 = quad::cumulative(r, f_in);
  out.interior_total = I1.back();
  out.dpsi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.dpsi[i] = r[i] > 0.0 ? -std::pow(r[i], 1 - N) * I1[i] : 0.0;
  }
  out.psi.assign(n, kNaN);
  if (!out.well_posed) return out;

  if (N == 2) {
    std::vector<double> J = quad::cumulative_from_right(r, f_sln);
    for (std::size_t i = 0; i < n; ++i) {
      double lead = r[i] > 0.0 ? -std::log(r[i]) * I1[i] : 0.0;
      out.psi[i] = lead - (J[i] + tail_sln);
    }
  } else {
    std::vector<double> J = quad::cumulative_from_right(r, f_s);
    for (std::size_t i = 0; i < n; ++i) {
      double Js = J[i] + tail_s;
      if (N == 1) {
        out.psi[i] = -r[i] * I1[i] - Js;
      } else {
        double lead = r[i] > 0.0 ? I1[i] / ((N - 2.0) * std::pow(r[i], N - 2)) : 0.0;
        out.psi[i] = lead + Js / (N - 2.0);
      }
    }
  }
  return out;
}

double PsiProfile::derivative_at(double rr) const {
  if (rr < 0.0) rr = -rr;
  if (rr <= r.back()) {
    if (rr == 0.0) return 0.0;
    // psi' = -r^{1-N} I1 with I1 interpolated in the smooth quantity -r^{N-1}psi'.
    std::vector<double> dummy;
    std::size_t i = segment_index(r, rr);
    double a = -std::pow(r[i], N - 1) * dpsi[i];
    double b = -std::pow(r[i + 1], N - 1) * dpsi[i + 1];
    double t = (rr - r[i]) / (r[i + 1] - r[i]);
    return -std::pow(rr, 1 - N) * (a + t * (b - a));
  }
  TailIntegrals tail = tail_of(*this);
  double I1 = interior_total + tail.partial(rr, N - 1.0, m);
  return -std::pow(rr, 1 - N) * I1;
}

double PsiProfile::at(double rr) const {
  if (rr < 0.0) rr = -rr;
  if (!well_posed) return kNaN;
  if (rr <= r.back()) {
    std::size_t i = segment_index(r, rr);
    double h = r[i + 1] - r[i];
    double t = (rr - r[i]) / h;
    double t2 = t * t, t3 = t2 * t;
    double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * psi[i] + h10 * h * dpsi[i] + h01 * psi[i + 1] + h11 * h * dpsi[i + 1];
  }
  TailIntegrals tail = tail_of(*this);
  double I1 = interior_total + tail.partial(rr, N - 1.0, m);
  if (N == 1) return -rr * I1 - tail.from(rr, 1.0, m, false);
  if (N == 2) return -std::log(rr) * I1 - tail.from(rr, 1.0, m, true);
  return I1 / ((N - 2.0) * std::pow(rr, N - 2)) + tail.from(rr, 1.0, m, false) / (N - 2.0);
}

double mass(const PhiProfile& phi, const ModelParams& params) {
  int N = params.N();
  std::vector<double> f(phi.r.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = phi.phi[i] * std::pow(phi.r[i], N - 1);
  TailIntegrals tail = tail_of(phi);
  double t = tail.from(tail.R, N - 1.0, 1.0, false);
  if (!std::isfinite(t)) {
    fail(ErrorKind::InfiniteMass,
         "tail phi ~ r^" + std::to_string(phi.tail.exponent) +
             " is not integrable against r^(N-1)");
  }
  return unit_sphere_area(N) * (quad::total(phi.r, f) + t);
}

SelfSimilarSolution make_solution(Direction direction, const ModelParams& params,
                                  const PhiProfile& phi, double T) {
  if (direction == Direction::Backward && !(T > 0.0)) {
    fail(ErrorKind::OutOfTimeDomain, "blow-up time T must be positive");
  }
  PsiProfile psi = psi_from_phi(phi, params);
  double M = mass(phi, params);
  return SelfSimilarSolution{direction, T, params, phi, std::move(psi), M};
}

SelfSimilarSolution forward_solution(const ModelParams& params, double a_or_b,
                                     int points) {
  ForwardOptions opts = forward_defaults(params);
  if (params.regime() == Regime::FastDiffusion) {
    opts.integrator.max_step_relative = 8.0 / points;
  } else {
    ForwardProfile coarse = solve_forward(params, a_or_b, opts);
    opts.integrator.max_step = coarse.sol.r.back() / points;
  }
  ForwardProfile fine = solve_forward(params, a_or_b, opts);
  return make_solution(Direction::Forward, params, phi_from_forward(fine));
}

SelfSimilarSolution backward_critical_solution(const ModelParams& params,
                                               const CriticalResult& cr, double T) {
  return make_solution(Direction::Backward, params, phi_from_critical(cr, params), T);
}

double length_scale(const SelfSimilarSolution& ss, double t) {
  double s = ss.direction == Direction::Backward ? ss.T - t : t;
  if (!(s > 0.0)) {
    fail(ErrorKind::OutOfTimeDomain,
         ss.direction == Direction::Backward
             ? "backward solutions need 0 < t < T"
             : "forward solutions need t > 0");
  }
  if (ss.direction == Direction::Backward && !(t > 0.0)) {
    fail(ErrorKind::OutOfTimeDomain, "backward solutions need 0 < t < T");
  }
  return std::pow(s, ss.params.beta());
}

Fields evaluate_radial(const SelfSimilarSolution& ss, double radius, double t) {
  double theta = length_scale(ss, t);
  double s = ss.direction == Direction::Backward ? ss.T - t : t;
  double xi = std::abs(radius) / theta;
  Fields out;
  out.rho = std::pow(s, -ss.params.alpha()) * ss.phi.at(xi);
  out.c = std::pow(s, ss.params.gamma()) * ss.psi.at(xi);
  return out;
}

Fields evaluate(const SelfSimilarSolution& ss, std::span<const double> x, double t) {
  double s2 = 0.0;
  for (double v : x) s2 += v * v;
  return evaluate_radial(ss, std::sqrt(s2), t);
}

double mass_at_time(const SelfSimilarSolution& ss, double t) {
  double theta = length_scale(ss, t);
  int N = ss.params.N();
  const auto& r = ss.phi.r;
  std::vector<double> x(r.size()), f(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    x[i] = theta * r[i];
    f[i] = evaluate_radial(ss, x[i], t).rho * std::pow(x[i], N - 1);
  }
  double s = ss.direction == Direction::Backward ? ss.T - t : t;
  TailIntegrals tail = tail_of(ss.phi);
  double tail_mass = std::pow(s, -ss.params.alpha()) * std::pow(theta, N) *
                     tail.from(tail.R, N - 1.0, 1.0, false);
  return unit_sphere_area(N) * (quad::total(x, f) + tail_mass);
}

TestFunction TestFunction::of_radius(std::function<double(double)> f) {
  TestFunction tf;
  tf.radial = std::move(f);
  return tf;
}

TestFunction TestFunction::of_point(std::function<double(std::span<const double>)> f) {
  TestFunction tf;
  tf.point = std::move(f);
  return tf;
}

double TestFunction::at_origin(int N) const {
  if (radial) return radial(0.0);
  std::vector<double> zero(static_cast<std::size_t>(N), 0.0);
  return point(zero);
}

namespace {

// Average of f over the sphere of radius rad in R^N (N <= 3).
double sphere_average(const TestFunction& f, int N, double rad) {
  if (f.radial) return f.radial(rad);
  if (N == 1) {
    std::array<double, 1> a{rad}, b{-rad};
    return 0.5 * (f.point(a) + f.point(b));
  }
  if (N == 2) {
    const int K = 64;
    double s = 0.0;
    for (int k = 0; k < K; ++k) {
      double th = 2.0 * std::numbers::pi * k / K;
      std::array<double, 2> x{rad * std::cos(th), rad * std::sin(th)};
      s += f.point(x);
    }
    return s / K;
  }
  // N == 3: Gauss-Legendre in cos(polar) times trapezoid in azimuth.
  static const std::array<double, 8> gx = {
      -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
      -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
      0.7966664774136267,  0.9602898564975363};
  static const std::array<double, 8> gw = {
      0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
      0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
      0.2223810344533745, 0.1012285362903763};
  const int K = 32;
  double s = 0.0;
  for (std::size_t j = 0; j < gx.size(); ++j) {
    double ct = gx[j], st = std::sqrt(1.0 - ct * ct);
    for (int k = 0; k < K; ++k) {
      double ph = 2.0 * std::numbers::pi * k / K;
      std::array<double, 3> x{rad * st * std::cos(ph), rad * st * std::sin(ph), rad * ct};
      s += gw[j] * f.point(x);
    }
  }
  return s / (2.0 * K);
}

}  // namespace

std::vector<DeltaSample> delta_test(const SelfSimilarSolution& ss,
                                    const TestFunction& f,
                                    const std::vector<double>& times) {
  int N = ss.params.N();
  if (!f.radial && !f.point) fail(ErrorKind::Domain, "empty test function");
  if (!f.radial && N > 3) {
    fail(ErrorKind::Domain, "point test functions are supported for N <= 3 only");
  }
  double f0 = f.at_origin(N);
  const auto& r = ss.phi.r;
  TailIntegrals tail = tail_of(ss.phi);
  std::vector<DeltaSample> out;
  for (double t : times) {
    double theta = length_scale(ss, t);
    std::vector<double> g(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      g[i] = ss.phi.phi[i] * std::pow(r[i], N - 1) *
             (sphere_average(f, N, theta * r[i]) - f0);
    }
    double integral = quad::total(r, g);
    if (!tail.vanishing()) {
      // Log-spaced quadrature of the analytic tail out to 10^6 R.
      const int K = 400;
      std::vector<double> x(K + 1), h(K + 1);
      for (int k = 0; k <= K; ++k) {
        x[k] = tail.R * std::pow(1e6, static_cast<double>(k) / K);
        h[k] = tail.phi(x[k]) * std::pow(x[k], N - 1) *
               (sphere_average(f, N, theta * x[k]) - f0);
      }
      integral += quad::total(x, h);
    }
    out.push_back({t, std::abs(unit_sphere_area(N) * integral)});
  }
  return out;
}

SystemResidual system_residual(const PhiProfile& phi, const PsiProfile& psi,
                               const ModelParams& params, Direction direction,
                               std::optional<std::pair<double, double>> window) {
  const auto& r = phi.r;
  double R = effective_radius(phi);
  auto [lo, hi] = window.value_or(std::make_pair(0.1 * R, 0.9 * R));
  SystemResidual out;
  out.r_lo = lo;
  out.r_hi = hi;
  double p = params.p();
  double m = params.m();
  double chi = params.chi();
  int N = params.N();
  double dir = direction == Direction::Backward ? 1.0 : -1.0;

  std::size_t n = r.size();
  std::size_t i0 = static_cast<std::size_t>(
      std::lower_bound(r.begin(), r.end(), lo) - r.begin());
  std::size_t i1 = static_cast<std::size_t>(
      std::upper_bound(r.begin(), r.end(), hi) - r.begin());
  if (i1 <= i0) return out;
  std::size_t a = i0 >= 4 ? i0 - 4 : 0;
  std::size_t b = std::min(n, i1 + 4);

  std::vector<double> rs(r.begin() + static_cast<std::ptrdiff_t>(a),
                         r.begin() + static_cast<std::ptrdiff_t>(b));
  std::vector<double> Q(rs.size());
  for (std::size_t j = 0; j < rs.size(); ++j) {
    double dphi = quad::derivative(r, phi.phi, a + j, 1);
    double ph = phi.phi[a + j];
    Q[j] = (p == 2.0 ? dphi : std::pow(std::abs(dphi), p - 2.0) * dphi) / ph;
  }
  for (std::size_t i = i0; i < i1; ++i) {
    if (!(phi.phi[i] > 0.0) || r[i] <= 0.0) continue;
    std::size_t j = i - a;
    double dQ = quad::derivative(rs, Q, j, 1);
    double fm = std::pow(phi.phi[i], m);
    double res1 = dQ + (N - 1.0) / r[i] * Q[j] + chi * fm - dir / m;
    double d1 = quad::derivative(r, psi.psi, i, 1);
    double d2 = quad::derivative(r, psi.psi, i, 2);
    double res2 = d2 + (N - 1.0) / r[i] * d1 + fm;
    double ident = dir * r[i] / (m * N) - Q[j] + chi * psi.dpsi[i];
    out.res1 = std::max(out.res1, std::abs(res1));
    out.res2 = std::max(out.res2, std::abs(res2));
    out.identity = std::max(out.identity, std::abs(ident));
  }
  return out;
}

}  // namespace selfsim
