// Test-only oracles: closed forms, brute-force enumeration and generic
// numeric probes, independent of the library's solution paths.
#ifndef MIOCP_TESTS_ORACLES_HPP
#define MIOCP_TESTS_ORACLES_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "miocp/control_space.hpp"
#include "miocp/time_grid.hpp"

namespace oracles {

/// y(t) = y0 exp(a t) for the scalar problem y' = a y.
inline double scalar_exponential(double y0, double a, double t) {
  return y0 * std::exp(a * t);
}

/// Terminal value of the scalar bilinear system y' = v(t) y on a grid:
/// only the accumulated on-time of v matters.
inline double bilinear_terminal(double lambda, const miocp::IntegerControlPath& v) {
  double on_time = 0.0;
  for (int c = 0; c < v.grid.n_cells; ++c)
    if (v.at_cell(c) == 1) on_time += v.grid.dt();
  return lambda * std::exp(on_time);
}

/// Exhaustive minimum of the bilinear terminal value over every binary path
/// on the grid (2^n_cells candidates).
inline double bilinear_brute_force(double lambda, const miocp::TimeGrid& grid) {
  const int n = grid.n_cells;
  double best = std::numeric_limits<double>::infinity();
  for (long mask = 0; mask < (1L << n); ++mask) {
    std::vector<int> cells(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) cells[static_cast<std::size_t>(c)] = (mask >> c) & 1;
    best = std::min(best,
                    bilinear_terminal(lambda, miocp::IntegerControlPath(grid, cells, 2)));
  }
  return best;
}

/// Golden-section minimizer of a unimodal scalar function on [lo, hi].
inline double golden_section(const std::function<double(double)>& f, double lo, double hi,
                             int iterations = 200) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iterations; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Central finite-difference gradient of a scalar function of a vector.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd grad(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd hi = x, lo = x;
    hi(j) += h;
    lo(j) -= h;
    grad(j) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return grad;
}

}  // namespace oracles

#endif
