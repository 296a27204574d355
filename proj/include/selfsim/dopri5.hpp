#pragma once

// Dormand-Prince 5(4) with Hairer's dense output and event location by
// re-stepping from the start of the accepted step.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace selfsim::dopri {

template <std::size_t D>
using State = std::array<double, D>;

template <std::size_t D>
struct DenseSegment {
  double r0 = 0.0;
  double h = 0.0;
  std::array<State<D>, 5> rc{};

  State<D> eval(double r) const {
    double th = (r - r0) / h;
    double th1 = 1.0 - th;
    State<D> y;
    for (std::size_t i = 0; i < D; ++i) {
      y[i] = rc[0][i] +
             th * (rc[1][i] + th1 * (rc[2][i] + th * (rc[3][i] + th1 * rc[4][i])));
    }
    return y;
  }
};

template <std::size_t D>
struct StepData {
  State<D> y1{};
  State<D> k7{};
  State<D> err{};
  DenseSegment<D> dense;
};

namespace tableau {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                        a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113,
                        a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                        a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                        e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432.0,
                        d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0,
                        d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0,
                        d7 = 69997945.0 / 29380423.0;
}  // namespace tableau

/// One Dormand-Prince step of size h from (r, y) with first stage k1 = f(r, y).
template <std::size_t D, class F>
StepData<D> step(const F& f, double r, const State<D>& y, const State<D>& k1,
                 double h) {
  using namespace tableau;
  State<D> k2, k3, k4, k5, k6, k7, t;
  for (std::size_t i = 0; i < D; ++i) t[i] = y[i] + h * a21 * k1[i];
  k2 = f(r + c2 * h, t);
  for (std::size_t i = 0; i < D; ++i) t[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
  k3 = f(r + c3 * h, t);
  for (std::size_t i = 0; i < D; ++i)
    t[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
  k4 = f(r + c4 * h, t);
  for (std::size_t i = 0; i < D; ++i)
    t[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
  k5 = f(r + c5 * h, t);
  for (std::size_t i = 0; i < D; ++i)
    t[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                       a65 * k5[i]);
  k6 = f(r + h, t);
  StepData<D> out;
  for (std::size_t i = 0; i < D; ++i)
    out.y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] +
                            a75 * k5[i] + a76 * k6[i]);
  k7 = f(r + h, out.y1);
  out.k7 = k7;
  for (std::size_t i = 0; i < D; ++i) {
    out.err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                      e6 * k6[i] + e7 * k7[i]);
  }
  DenseSegment<D>& ds = out.dense;
  ds.r0 = r;
  ds.h = h;
  for (std::size_t i = 0; i < D; ++i) {
    double dy = out.y1[i] - y[i];
    double bspl = h * k1[i] - dy;
    ds.rc[0][i] = y[i];
    ds.rc[1][i] = dy;
    ds.rc[2][i] = bspl;
    ds.rc[3][i] = dy - h * k7[i] - bspl;
    ds.rc[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                       d6 * k6[i] + d7 * k7[i]);
  }
  return out;
}

template <std::size_t D>
struct EventSpec {
  std::function<double(double, const State<D>&)> fn;
  int id = 0;
  bool terminal = false;
  /// +1 only rising crossings, -1 only falling, 0 both.
  int direction = 0;
  /// Root accepted once |fn| <= tol.
  double tol = 1e-12;
};

template <std::size_t D>
struct EventHit {
  int id = 0;
  int direction = 0;
  double r = 0.0;
  State<D> y{};
};

template <std::size_t D>
struct Options {
  double rtol = 1e-10;
  State<D> atol{};
  double r_end = 1e3;
  double h0 = 0.0;
  double max_step = std::numeric_limits<double>::infinity();
  /// Additional cap h <= max_step_relative * r.
  double max_step_relative = std::numeric_limits<double>::infinity();
  double min_step_factor = 1e-14;
  std::size_t max_steps = 20'000'000;
  /// Component whose sign change marks a non-smooth point of the right-hand
  /// side. Steps straddling it are also checked by step doubling, since the
  /// embedded estimate is unreliable across a Hoelder kink.
  int kink_component = -1;
};

enum class Stop { ReachedEnd, Event, StepUnderflow, NonFinite, MaxSteps, Monitor };

template <std::size_t D>
struct Trajectory {
  std::vector<double> r;
  std::vector<State<D>> y;
  std::vector<DenseSegment<D>> dense;
  std::vector<EventHit<D>> events;
  Stop stop = Stop::ReachedEnd;
  int terminal_event = -1;
};

template <std::size_t D>
double error_norm(const State<D>& err, const State<D>& y0, const State<D>& y1,
                  double rtol, const State<D>& atol) {
  double s = 0.0;
  for (std::size_t i = 0; i < D; ++i) {
    double sc = atol[i] + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    double e = err[i] / sc;
    s += e * e;
  }
  return std::sqrt(s / D);
}

template <std::size_t D>
bool finite(const State<D>& y) {
  for (double v : y) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace detail {

inline bool crosses(double f0, double f1, int direction) {
  if (!(f0 != 0.0)) return false;
  bool rising = f0 < 0.0 && f1 >= 0.0;
  bool falling = f0 > 0.0 && f1 <= 0.0;
  if (direction > 0) return rising;
  if (direction < 0) return falling;
  return rising || falling;
}

// Illinois regula falsi on theta in (0, 1]; each trial re-integrates a single
// step of size theta*h from the step start so the root is located on the
// 5th-order solution rather than the interpolant.
template <std::size_t D, class F>
StepData<D> locate(const F& f, const EventSpec<D>& ev, double r,
                   const State<D>& y, const State<D>& k1, double h, double f0,
                   double f1, double& theta_out) {
  double a = 0.0, b = 1.0, fa = f0, fb = f1;
  int side = 0;
  StepData<D> best;
  double best_theta = 1.0;
  double best_abs = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    double th = (a * fb - b * fa) / (fb - fa);
    if (!(th > a && th < b)) th = 0.5 * (a + b);
    StepData<D> trial = step<D>(f, r, y, k1, th * h);
    double ft = ev.fn(r + th * h, trial.y1);
    // Only points on the post-crossing side are kept, so the event state
    // always sits at or just beyond the sign change.
    if ((ft == 0.0 || (ft > 0.0) != (f0 > 0.0)) && std::abs(ft) <= best_abs) {
      best = trial;
      best_theta = th;
      best_abs = std::abs(ft);
    }
    if (std::abs(ft) <= ev.tol && (ft == 0.0 || (ft > 0.0) != (f0 > 0.0))) break;
    if ((ft > 0.0) == (fa > 0.0) && ft != 0.0) {
      a = th;
      fa = ft;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = th;
      fb = ft;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
    if ((b - a) * std::abs(h) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                      std::abs(r + b * h)) {
      if (best_abs == std::numeric_limits<double>::infinity()) {
        best = step<D>(f, r, y, k1, b * h);
        best_theta = b;
        best_abs = std::abs(fb);
      }
      break;
    }
  }
  if (best_abs == std::numeric_limits<double>::infinity()) {
    best = step<D>(f, r, y, k1, b * h);
    best_theta = b;
  }
  theta_out = best_theta;
  return best;
}

}  // namespace detail

/// Integrates y' = f(r, y) from (r0, y0) toward opts.r_end.
/// monitor(r, y) is invoked after every accepted step; returning true stops.
template <std::size_t D, class F>
Trajectory<D> integrate(
    const F& f, double r0, const State<D>& y0, const Options<D>& opts,
    const std::vector<EventSpec<D>>& events,
    const std::function<bool(double, const State<D>&)>& monitor = {}) {
  Trajectory<D> tr;
  tr.r.push_back(r0);
  tr.y.push_back(y0);
  double r = r0;
  State<D> y = y0;
  State<D> k1 = f(r, y);
  if (!finite(y) || !finite(k1)) {
    tr.stop = Stop::NonFinite;
    return tr;
  }
  double h = opts.h0 > 0.0 ? opts.h0 : 1e-3 * std::max(std::abs(r0), 1e-8);
  h = std::min({h, opts.max_step, opts.max_step_relative * std::abs(r),
                opts.r_end - r});
  std::vector<double> fprev(events.size());
  for (std::size_t e = 0; e < events.size(); ++e) fprev[e] = events[e].fn(r, y);

  std::size_t steps = 0;
  while (r < opts.r_end) {
    if (++steps > opts.max_steps) {
      tr.stop = Stop::MaxSteps;
      return tr;
    }
    bool last = false;
    if (r + h >= opts.r_end) {
      h = opts.r_end - r;
      last = true;
    }
    if (h < opts.min_step_factor * std::max(std::abs(r), 1e-300)) {
      tr.stop = Stop::StepUnderflow;
      return tr;
    }
    StepData<D> sd = step<D>(f, r, y, k1, h);
    double err = error_norm<D>(sd.err, y, sd.y1, opts.rtol, opts.atol);
    if (!std::isfinite(err) || !finite(sd.y1) || !finite(sd.k7)) {
      h *= 0.2;
      continue;
    }
    if (err > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      continue;
    }
    if (opts.kink_component >= 0) {
      std::size_t kc = static_cast<std::size_t>(opts.kink_component);
      if ((y[kc] > 0.0) != (sd.y1[kc] > 0.0)) {
        StepData<D> s1 = step<D>(f, r, y, k1, 0.5 * h);
        StepData<D> s2 = step<D>(f, r + 0.5 * h, s1.y1, s1.k7, 0.5 * h);
        State<D> diff;
        for (std::size_t i = 0; i < D; ++i) diff[i] = s2.y1[i] - sd.y1[i];
        double err2 = error_norm<D>(diff, y, sd.y1, opts.rtol, opts.atol);
        if (!(err2 <= 1.0)) {
          h *= 0.25;
          continue;
        }
        err = std::max(err, err2);
      }
    }

    // Events inside the accepted step, earliest first.
    struct Found {
      double theta;
      std::size_t idx;
      StepData<D> data;
    };
    std::vector<Found> found;
    for (std::size_t e = 0; e < events.size(); ++e) {
      double f1 = events[e].fn(r + h, sd.y1);
      if (detail::crosses(fprev[e], f1, events[e].direction)) {
        double th = 1.0;
        StepData<D> at = detail::locate<D>(f, events[e], r, y, k1, h,
                                           fprev[e], f1, th);
        found.push_back({th, e, at});
      }
    }
    std::sort(found.begin(), found.end(),
              [](const Found& x, const Found& z) { return x.theta < z.theta; });
    bool stop_here = false;
    for (const Found& fd : found) {
      const EventSpec<D>& ev = events[fd.idx];
      EventHit<D> hit;
      hit.id = ev.id;
      hit.direction = fprev[fd.idx] < 0.0 ? 1 : -1;
      hit.r = r + fd.theta * h;
      hit.y = fd.data.y1;
      tr.events.push_back(hit);
      if (ev.terminal) {
        tr.dense.push_back(fd.data.dense);
        tr.r.push_back(hit.r);
        tr.y.push_back(hit.y);
        tr.stop = Stop::Event;
        tr.terminal_event = ev.id;
        stop_here = true;
        break;
      }
    }
    if (stop_here) return tr;

    tr.dense.push_back(sd.dense);
    r = last ? opts.r_end : r + h;
    y = sd.y1;
    k1 = sd.k7;
    tr.r.push_back(r);
    tr.y.push_back(y);
    for (std::size_t e = 0; e < events.size(); ++e) fprev[e] = events[e].fn(r, y);

    if (monitor && monitor(r, y)) {
      tr.stop = Stop::Monitor;
      return tr;
    }
    double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    h *= std::clamp(fac, 0.2, 5.0);
    h = std::min({h, opts.max_step, opts.max_step_relative * std::abs(r)});
  }
  tr.stop = Stop::ReachedEnd;
  return tr;
}

/// Dense-output lookup over a trajectory's segments.
template <std::size_t D>
State<D> eval_dense(const Trajectory<D>& tr, double r) {
  const auto& segs = tr.dense;
  if (segs.empty()) return tr.y.front();
  auto it = std::upper_bound(
      segs.begin(), segs.end(), r,
      [](double v, const DenseSegment<D>& s) { return v < s.r0; });
  std::size_t i = it == segs.begin() ? 0 : static_cast<std::size_t>(it - segs.begin()) - 1;
  return segs[i].eval(r);
}

}  // namespace selfsim::dopri
