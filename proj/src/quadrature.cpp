#include "selfsim/quadrature.hpp"

#include <algorithm>

namespace selfsim::quad {

namespace {

// Integral over [lo, hi] of the quadratic interpolating (x_k, f_k), k = 0..2.
double quadratic_piece(const double* x, const double* f, double lo, double hi) {
  double d01 = (f[1] - f[0]) / (x[1] - x[0]);
  double d12 = (f[2] - f[1]) / (x[2] - x[1]);
  double d012 = (d12 - d01) / (x[2] - x[0]);
  // P(s) = f0 + d01 (s - x0) + d012 (s - x0)(s - x1), written around lo.
  double a = lo - x[0];
  double b = lo - x[1];
  double h = hi - lo;
  double c0 = f[0] + d01 * a + d012 * a * b;
  double c1 = d01 + d012 * (a + b);
  double c2 = d012;
  return h * (c0 + h * (c1 / 2.0 + h * c2 / 3.0));
}

std::vector<double> interval_integrals(const std::vector<double>& x,
                                       const std::vector<double>& f) {
  std::size_t n = x.size();
  std::vector<double> out(n > 0 ? n - 1 : 0, 0.0);
  if (n < 2) return out;
  if (n == 2) {
    out[0] = 0.5 * (x[1] - x[0]) * (f[0] + f[1]);
    return out;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double sum = 0.0;
    int cnt = 0;
    if (i >= 1) {
      sum += quadratic_piece(&x[i - 1], &f[i - 1], x[i], x[i + 1]);
      ++cnt;
    }
    if (i + 2 < n) {
      sum += quadratic_piece(&x[i], &f[i], x[i], x[i + 1]);
      ++cnt;
    }
    out[i] = sum / cnt;
  }
  return out;
}

}  // namespace

std::vector<double> cumulative(const std::vector<double>& x,
                               const std::vector<double>& f) {
  std::vector<double> piece = interval_integrals(x, f);
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = 0; i < piece.size(); ++i) out[i + 1] = out[i] + piece[i];
  return out;
}

std::vector<double> cumulative_from_right(const std::vector<double>& x,
                                          const std::vector<double>& f) {
  std::vector<double> piece = interval_integrals(x, f);
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = piece.size(); i-- > 0;) out[i] = out[i + 1] + piece[i];
  return out;
}

double total(const std::vector<double>& x, const std::vector<double>& f) {
  std::vector<double> piece = interval_integrals(x, f);
  double s = 0.0;
  for (double v : piece) s += v;
  return s;
}

std::vector<double> fd_weights(double x0, const double* xs, std::size_t n,
                               int order) {
  // Fornberg (1988), recursive generation of weights.
  std::size_t M = static_cast<std::size_t>(order);
  std::vector<std::vector<double>> c(n, std::vector<double>(M + 1, 0.0));
  double c1 = 1.0;
  double c4 = xs[0] - x0;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    std::size_t mn = std::min(i, M);
    double c2 = 1.0;
    double c5 = c4;
    c4 = xs[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k) {
          c[i][k] = c1 * (static_cast<double>(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        }
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k) {
        c[j][k] = (c4 * c[j][k] - static_cast<double>(k) * c[j][k - 1]) / c3;
      }
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = c[i][M];
  return w;
}

double derivative(const std::vector<double>& x, const std::vector<double>& f,
                  std::size_t i, int order, std::size_t half) {
  std::size_t n = x.size();
  std::size_t width = 2 * half + 1;
  if (n < width) width = n;
  std::size_t start = i >= half ? i - half : 0;
  if (start + width > n) start = n - width;
  std::vector<double> w = fd_weights(x[i], &x[start], width, order);
  double s = 0.0;
  for (std::size_t k = 0; k < width; ++k) s += w[k] * f[start + k];
  return s;
}

}  // namespace selfsim::quad
