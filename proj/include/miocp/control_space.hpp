#ifndef MIOCP_CONTROL_SPACE_HPP
#define MIOCP_CONTROL_SPACE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "miocp/parameter.hpp"
#include "miocp/time_grid.hpp"

namespace miocp {

/// Absolute feasibility tolerance for constraint values g <= 0.
inline constexpr double kFeasibilityTolerance = 1e-9;

/// Piecewise-constant integer control: one mode value in {0,...,n_modes-1}
/// per grid cell.
struct IntegerControlPath {
  TimeGrid grid;
  std::vector<int> values;  // one per cell
  int n_modes = 1;

  IntegerControlPath() = default;
  IntegerControlPath(TimeGrid g, std::vector<int> vals, int modes);

  static IntegerControlPath constant(const TimeGrid& g, int value, int modes);

  int at_cell(int c) const { return values[static_cast<std::size_t>(c)]; }
  int switch_count() const;
  /// Compact digit encoding, e.g. "0011".
  std::string encode() const;
};

/// Piecewise-constant ordinary control: one vector in R^m per grid cell.
/// m = 0 models problems without an ordinary control.
struct OrdinaryControlPath {
  TimeGrid grid;
  int dim = 0;
  std::vector<Eigen::VectorXd> values;  // one per cell, each of size dim

  OrdinaryControlPath() = default;
  OrdinaryControlPath(TimeGrid g, int m);  // zero-initialized
  OrdinaryControlPath(TimeGrid g, std::vector<Eigen::VectorXd> vals);

  static OrdinaryControlPath constant(const TimeGrid& g, const Eigen::VectorXd& value);

  const Eigen::VectorXd& at_cell(int c) const { return values[static_cast<std::size_t>(c)]; }
  double sup_norm() const;  // sup over cells of |u_c|_2
  Eigen::VectorXd stacked() const;
  static OrdinaryControlPath from_stacked(const TimeGrid& g, int m, const Eigen::VectorXd& x);
};

enum class ConstraintKind {
  PerCellBox,    // g(lambda, u, t) samples u on the cell containing t
  EssSupGlobal,  // g(lambda, u, t) is constant in t (an ess-sup over the horizon)
};

/// One scalar constraint g_k^v(lambda, u, t) <= 0 of the mixed form, built by
/// an instance's constraint factory for a specific integer path v.
struct MixedConstraint {
  /// max_c (sign * u_c + offsets_c); scalar-control structure consumed by the
  /// dual machinery's exact inner minimizer.
  struct CellwiseMaxAffine {
    double sign = 1.0;
    Eigen::VectorXd offsets;  // one per cell
  };

  int index = 0;
  ConstraintKind kind = ConstraintKind::EssSupGlobal;
  std::function<double(const Parameter&, const OrdinaryControlPath&, double t)> evaluator;
  std::function<double(double)> lipschitz_modulus_Lg;  // L_g(|u|)
  std::function<CellwiseMaxAffine(const Parameter&)> cellwise;  // may be empty
};

struct AdmissibilityReport {
  bool admissible = true;
  bool unconstrained = false;
  double max_violation = 0.0;  // reported as 0 when unconstrained
  double margin = 0.0;         // -max_k,t g; 0 when unconstrained
  int worst_constraint = -1;
  double worst_time = 0.0;
};

/// Evaluates every g_k at every grid node and reports the worst violation.
/// Admissible iff max violation <= kFeasibilityTolerance. Non-finite
/// evaluations raise NumericalError naming the (k, t) witness.
AdmissibilityReport check_admissible(const std::vector<MixedConstraint>& constraints,
                                     const Parameter& lambda, const OrdinaryControlPath& u,
                                     const TimeGrid& grid);

/// Dwell-time-coupled per-cell upper bound: 1 + eps on cells whose look-back
/// window [t - delta, t], truncated at t0, sees a constant v; eps otherwise.
/// delta must be grid-aligned (dt divides delta within 1e-12).
std::vector<double> dwell_bound(const IntegerControlPath& v, double delta, double eps);

struct EnumerationCaps {
  std::optional<int> max_switches;
  std::optional<int> min_dwell_cells;
  std::int64_t budget = std::int64_t{1} << 16;
};

/// Deterministic lexicographic enumeration of integer control paths.
/// Counts first and refuses (with the count) when the cap-respecting count
/// exceeds the budget.
class ModeEnumerator {
 public:
  ModeEnumerator(TimeGrid grid, int n_modes, EnumerationCaps caps = {});

  std::int64_t count() const { return count_; }
  const std::vector<IntegerControlPath>& paths() const { return paths_; }

  /// Cap-respecting path count without materializing anything.
  static std::int64_t count_paths(int n_cells, int n_modes, const EnumerationCaps& caps);

 private:
  std::int64_t count_ = 0;
  std::vector<IntegerControlPath> paths_;
};

}  // namespace miocp

#endif
