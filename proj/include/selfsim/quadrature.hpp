#pragma once

#include <cstddef>
#include <vector>

namespace selfsim::quad {

/// Integral over [x.front(), x[i]] for every i, on a strictly increasing
/// non-uniform grid. Each interval integrates the quadratic through a
/// three-point stencil; interior intervals average the left and right
/// stencils.
std::vector<double> cumulative(const std::vector<double>& x,
                               const std::vector<double>& f);

/// Integral over [x[i], x.back()] for every i (accumulated from the right).
std::vector<double> cumulative_from_right(const std::vector<double>& x,
                                          const std::vector<double>& f);

double total(const std::vector<double>& x, const std::vector<double>& f);

/// Finite-difference weights (Fornberg) for the derivative of order `order`
/// at x0 from the nodes xs.
std::vector<double> fd_weights(double x0, const double* xs, std::size_t n,
                               int order);

/// Derivative of order 1 or 2 at grid index i from a centered stencil of
/// 2*half+1 points (shifted inward near the ends).
double derivative(const std::vector<double>& x, const std::vector<double>& f,
                  std::size_t i, int order, std::size_t half = 2);

}  // namespace selfsim::quad
