#include "selfsim/params.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "selfsim/error.hpp"

namespace selfsim {

namespace {

double require(const std::optional<double>& v, const char* name,
               const ModelParams& params) {
  if (!v) {
    fail(ErrorKind::Domain, std::string(name) + " is undefined for p = " +
                                std::to_string(params.p()));
  }
  return *v;
}

}  // namespace

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::SlowDiffusion: return "slow";
    case Regime::LinearDiffusion: return "linear";
    case Regime::FastDiffusion: return "fast";
  }
  return "unknown";
}

double ModelParams::q() const { return require(q_, "q", *this); }
double ModelParams::B() const { return require(B_, "B", *this); }
double ModelParams::lambda() const { return require(lambda_, "lambda", *this); }
double ModelParams::u_star() const { return require(u_star_, "u_star", *this); }
double ModelParams::u_star_log() const {
  return require(u_star_log_, "u_star_log", *this);
}

double ModelParams::phi_exponent() const {
  if (regime_ == Regime::LinearDiffusion) {
    fail(ErrorKind::Domain, "phi = exp(u) at p = 2; no power map");
  }
  return (p_ - 1.0) / (p_ - 2.0);
}

double p_lower_bound(int N) { return 2.0 * N / (N + 1.0); }

ModelParams derive_params(int N, double p, double chi) {
  if (N < 1) fail(ErrorKind::Domain, "N must be >= 1");
  if (!std::isfinite(p)) fail(ErrorKind::Domain, "p must be finite");
  if (!(chi > 0.0) || !std::isfinite(chi)) {
    fail(ErrorKind::Domain, "chi must be positive");
  }
  double m = ((p - 2.0) * N + p) / N;
  if (!(p > p_lower_bound(N)) || !(m > 0.0)) {
    fail(ErrorKind::Domain, "p must exceed 2N/(N+1) = " +
                                std::to_string(p_lower_bound(N)) +
                                " so that m > 0");
  }

  ModelParams out;
  out.n_ = N;
  out.p_ = p;
  out.chi_ = chi;
  out.m_ = m;
  if (p == 2.0) {
    out.regime_ = Regime::LinearDiffusion;
    out.u_star_log_ = std::log(1.0 / (chi * m)) / m;
    return out;
  }
  out.regime_ = p > 2.0 ? Regime::SlowDiffusion : Regime::FastDiffusion;
  double q = m * (p - 1.0) / (p - 2.0);
  out.q_ = q;
  out.B_ = std::pow(std::abs((p - 1.0) / (p - 2.0)), p - 1.0);
  out.u_star_ = std::pow(1.0 / (chi * m), 1.0 / q);
  if (p > 2.0) {
    out.lambda_ = (p - 1.0) * (m + 2.0 - p) / (p * (p - 2.0));
  }
  return out;
}

Regime regime_of(const ModelParams& params) { return params.regime(); }

double compact_support_threshold(int N) {
  double n = N;
  return (std::sqrt(5.0 * n * n + 2.0 * n + 1.0) + 3.0 * n + 1.0) /
         (2.0 * (n + 1.0));
}

bool compact_support_admissible(int N, double p) {
  if (N < 1) return false;
  if (!(p > 2.0)) return false;
  if (N <= 2) return true;
  return p > compact_support_threshold(N);
}

bool no_ground_state_regime(int N, double p) {
  if (!(p > 2.0) || !(p < N)) return false;
  double m = ((p - 2.0) * N + p) / N;
  double q = m * (p - 1.0) / (p - 2.0);
  return q >= N * p / (N - p) - 1.0;
}

double unit_sphere_area(int N) {
  double n = N;
  return 2.0 * std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0);
}

}  // namespace selfsim
