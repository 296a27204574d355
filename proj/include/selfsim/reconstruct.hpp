#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "selfsim/backward.hpp"
#include "selfsim/forward.hpp"
#include "selfsim/odecore.hpp"
#include "selfsim/params.hpp"

namespace selfsim {

enum class Direction { Backward, Forward };

std::string_view to_string(Direction d);

/// phi on a grid starting at r = 0, plus how it continues past the last node.
struct PhiProfile {
  std::vector<double> r;
  std::vector<double> phi;
  /// Tail with its coefficient matched to the last grid value.
  TailModel tail;
  std::optional<double> support_radius;
  /// d ln(phi)/dr at the last node (used by the log-quadratic tail).
  double log_slope_end = 0.0;

  double at(double rr) const;
};

struct PsiProfile {
  std::vector<double> r;
  std::vector<double> psi;
  std::vector<double> dpsi;
  int N = 1;
  double m = 1.0;
  bool well_posed = true;
  std::string detail;
  /// Integrals of s^{N-1} phi^m and of the kernel-weighted tail over the
  /// whole half line; needed to continue psi beyond the grid.
  double interior_total = 0.0;
  TailModel tail;
  double phi_end = 0.0;
  double log_slope_end = 0.0;

  /// Cubic Hermite on the grid using the exact psi', closed form outside.
  double at(double rr) const;
  double derivative_at(double rr) const;
};

struct SelfSimilarSolution {
  Direction direction = Direction::Backward;
  /// Blow-up time (backward only).
  double T = 1.0;
  ModelParams params;
  PhiProfile phi;
  PsiProfile psi;
  double mass = 0.0;
};

/// phi = u^{(p-1)/(p-2)} (0 where u <= 0 for p > 2) or e^u at p = 2.
/// A support radius truncates phi to zero beyond it; for p > 2 it defaults to
/// the vanishing radius when the trajectory ended at u = 0.
PhiProfile phi_from_u(const ProfileSolution& sol, const ModelParams& params,
                      std::optional<double> support = std::nullopt,
                      std::optional<TailModel> tail = std::nullopt);

PhiProfile phi_from_forward(const ForwardProfile& fp);
PhiProfile phi_from_critical(const CriticalResult& cr, const ModelParams& params);
PhiProfile phi_from_multi_bubble(const MultiBubbleProfile& mb);

/// Support radius, or for non-compact profiles the radius where phi first
/// drops below 1e-6 phi(0) (the grid end if it never does).
double effective_radius(const PhiProfile& phi);

/// Threshold of well-posedness for the potential of a non-compact profile:
/// 2 sqrt(N/(N+1)).
double potential_threshold(int N);

/// Potential by the radial kernel formula. Throws IllPosedPotential when the
/// tail integrals diverge unless allow_ill_posed, in which case psi is NaN,
/// psi' is still returned and well_posed is false.
PsiProfile psi_from_phi(const PhiProfile& phi, const ModelParams& params,
                        bool allow_ill_posed = false);

double mass(const PhiProfile& phi, const ModelParams& params);

SelfSimilarSolution make_solution(Direction direction, const ModelParams& params,
                                  const PhiProfile& phi, double T = 1.0);

/// Re-integrates with max_step = R/points so the grid is fine enough for
/// finite-difference residuals, then builds the space-time solution.
SelfSimilarSolution forward_solution(const ModelParams& params, double a_or_b,
                                     int points = 4000);
SelfSimilarSolution backward_critical_solution(const ModelParams& params,
                                               const CriticalResult& cr,
                                               double T = 1.0);

/// Similarity length scale theta(t): (T-t)^{1/(mN)} or t^{1/(mN)}.
double length_scale(const SelfSimilarSolution& ss, double t);

struct Fields {
  double rho = 0.0;
  double c = 0.0;
};

Fields evaluate(const SelfSimilarSolution& ss, std::span<const double> x, double t);
Fields evaluate_radial(const SelfSimilarSolution& ss, double radius, double t);

/// Mass of rho(., t) by quadrature of sampled rho values.
double mass_at_time(const SelfSimilarSolution& ss, double t);

/// Test function either radial (function of |x|) or point-callable.
struct TestFunction {
  std::function<double(double)> radial;
  std::function<double(std::span<const double>)> point;

  static TestFunction of_radius(std::function<double(double)> f);
  static TestFunction of_point(std::function<double(std::span<const double>)> f);
  double at_origin(int N) const;
};

struct DeltaSample {
  double t = 0.0;
  double deviation = 0.0;
};

/// |int rho(x,t) f(x) dx - M f(0)| at each time, computed in the similarity
/// variable. Point-callable test functions need N <= 3.
std::vector<DeltaSample> delta_test(const SelfSimilarSolution& ss,
                                    const TestFunction& f,
                                    const std::vector<double>& times);

struct SystemResidual {
  double res1 = 0.0;
  double res2 = 0.0;
  /// max |dir r/(mN) - |phi'|^{p-2}phi'/phi + chi psi'|.
  double identity = 0.0;
  double r_lo = 0.0;
  double r_hi = 0.0;
};

/// Residuals over [lo, hi] (default [0.1 R, 0.9 R] with R = effective_radius).
SystemResidual system_residual(const PhiProfile& phi, const PsiProfile& psi,
                               const ModelParams& params, Direction direction,
                               std::optional<std::pair<double, double>> window =
                                   std::nullopt);

}  // namespace selfsim
