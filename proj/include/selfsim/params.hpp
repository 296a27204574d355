#pragma once

#include <optional>
#include <string_view>

namespace selfsim {

enum class Regime { SlowDiffusion, LinearDiffusion, FastDiffusion };

std::string_view to_string(Regime regime);

/// Validated (N, p, chi) together with every constant derived from the
/// critical relation m = ((p-2)N + p)/N.
///
/// Constants that have no meaning in the current regime are stored as absent
/// and reading them throws a Domain error: q and B do not exist at p = 2,
/// the logarithmic equilibrium only exists at p = 2, and the blow-up
/// rescaling exponent lambda only in the slow regime.
class ModelParams {
 public:
  int N() const noexcept { return n_; }
  double p() const noexcept { return p_; }
  double chi() const noexcept { return chi_; }
  double m() const noexcept { return m_; }

  double alpha() const noexcept { return 1.0 / m_; }
  double beta() const noexcept { return 1.0 / (m_ * n_); }
  double gamma() const noexcept { return (2.0 - m_ * n_) / (m_ * n_); }

  Regime regime() const noexcept { return regime_; }

  bool has_q() const noexcept { return q_.has_value(); }
  bool has_lambda() const noexcept { return lambda_.has_value(); }
  bool has_u_star() const noexcept { return u_star_.has_value(); }
  bool has_u_star_log() const noexcept { return u_star_log_.has_value(); }

  double q() const;
  double B() const;
  double lambda() const;
  double u_star() const;
  double u_star_log() const;

  /// B for p != 2 and 1 at p = 2; the coefficient of the flux variable.
  double flux_coefficient() const noexcept { return B_.value_or(1.0); }

  /// Exponent mapping u back to phi: phi = u^{(p-1)/(p-2)} for p != 2.
  double phi_exponent() const;

  friend ModelParams derive_params(int N, double p, double chi);

 private:
  ModelParams() = default;

  int n_ = 1;
  double p_ = 0.0;
  double chi_ = 0.0;
  double m_ = 0.0;
  Regime regime_ = Regime::LinearDiffusion;
  std::optional<double> q_;
  std::optional<double> B_;
  std::optional<double> lambda_;
  std::optional<double> u_star_;
  std::optional<double> u_star_log_;
};

ModelParams derive_params(int N, double p, double chi);

Regime regime_of(const ModelParams& params);

/// Lower admissible bound for p: 2N/(N+1) (m > 0).
double p_lower_bound(int N);

/// p threshold above which the slow backward problem admits compactly
/// supported profiles for N >= 3.
double compact_support_threshold(int N);

bool compact_support_admissible(int N, double p);

/// True when the slow backward problem sits in the supercritical range
/// 2 < p < N, q >= Np/(N-p) - 1, where every initial height stays positive.
bool no_ground_state_regime(int N, double p);

/// Surface area of the unit sphere in R^N.
double unit_sphere_area(int N);

}  // namespace selfsim
