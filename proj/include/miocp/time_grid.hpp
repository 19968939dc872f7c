#ifndef MIOCP_TIME_GRID_HPP
#define MIOCP_TIME_GRID_HPP

#include <cmath>
#include <string>

#include "miocp/errors.hpp"

namespace miocp {

/// Uniform mesh t_i = t0 + i*dt on [t0, tf] with n_cells cells and
/// n_cells+1 nodes. Controls are piecewise constant per cell, states live
/// on nodes.
struct TimeGrid {
  double t0 = 0.0;
  double tf = 1.0;
  int n_cells = 1;

  TimeGrid() = default;
  TimeGrid(double t0_, double tf_, int n_cells_) : t0(t0_), tf(tf_), n_cells(n_cells_) {
    if (!(t0 < tf) || !std::isfinite(t0) || !std::isfinite(tf))
      throw ValidationError("TimeGrid: requires finite t0 < tf, got [" + std::to_string(t0) +
                            ", " + std::to_string(tf) + "]");
    if (n_cells < 1) throw ValidationError("TimeGrid: n_cells must be >= 1");
  }

  double dt() const { return (tf - t0) / n_cells; }
  int n_nodes() const { return n_cells + 1; }
  double node(int i) const { return t0 + i * dt(); }
  double horizon() const { return tf - t0; }

  /// Cell index whose value a piecewise-constant control takes at time t;
  /// right-continuous, node tf maps to the last cell.
  int cell_of(double t) const {
    const int c = static_cast<int>(std::floor((t - t0) / dt() + 1e-12));
    return std::min(std::max(c, 0), n_cells - 1);
  }

  bool operator==(const TimeGrid& o) const {
    return t0 == o.t0 && tf == o.tf && n_cells == o.n_cells;
  }

  /// Grid with the same horizon and cells halved in size.
  TimeGrid refined() const { return TimeGrid(t0, tf, 2 * n_cells); }
};

}  // namespace miocp

#endif
