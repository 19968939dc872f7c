#include "miocp/control_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "miocp/errors.hpp"

namespace miocp {

IntegerControlPath::IntegerControlPath(TimeGrid g, std::vector<int> vals, int modes)
    : grid(g), values(std::move(vals)), n_modes(modes) {
  if (n_modes < 1) throw ValidationError("IntegerControlPath: n_modes must be >= 1");
  if (values.size() != static_cast<std::size_t>(grid.n_cells))
    throw ValidationError("IntegerControlPath: expected one value per cell");
  for (int x : values)
    if (x < 0 || x >= n_modes)
      throw ValidationError("IntegerControlPath: mode value " + std::to_string(x) +
                            " out of range [0, " + std::to_string(n_modes) + ")");
}

IntegerControlPath IntegerControlPath::constant(const TimeGrid& g, int value, int modes) {
  return IntegerControlPath(g, std::vector<int>(static_cast<std::size_t>(g.n_cells), value),
                            modes);
}

int IntegerControlPath::switch_count() const {
  int s = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] != values[i - 1]) ++s;
  return s;
}

std::string IntegerControlPath::encode() const {
  std::string out;
  out.reserve(values.size());
  for (int x : values) {
    if (n_modes <= 10) {
      out.push_back(static_cast<char>('0' + x));
    } else {
      if (!out.empty()) out.push_back('-');
      out += std::to_string(x);
    }
  }
  return out;
}

OrdinaryControlPath::OrdinaryControlPath(TimeGrid g, int m) : grid(g), dim(m) {
  if (m < 0) throw ValidationError("OrdinaryControlPath: control dimension must be >= 0");
  values.assign(static_cast<std::size_t>(grid.n_cells), Eigen::VectorXd::Zero(m));
}

OrdinaryControlPath::OrdinaryControlPath(TimeGrid g, std::vector<Eigen::VectorXd> vals)
    : grid(g), values(std::move(vals)) {
  if (values.size() != static_cast<std::size_t>(grid.n_cells))
    throw ValidationError("OrdinaryControlPath: expected one value per cell");
  dim = values.empty() ? 0 : static_cast<int>(values.front().size());
  for (const auto& x : values) {
    if (x.size() != dim)
      throw ValidationError("OrdinaryControlPath: inconsistent per-cell dimensions");
    if (!x.allFinite()) throw ValidationError("OrdinaryControlPath: non-finite entries");
  }
}

OrdinaryControlPath OrdinaryControlPath::constant(const TimeGrid& g,
                                                  const Eigen::VectorXd& value) {
  return OrdinaryControlPath(
      g, std::vector<Eigen::VectorXd>(static_cast<std::size_t>(g.n_cells), value));
}

double OrdinaryControlPath::sup_norm() const {
  double m = 0.0;
  for (const auto& x : values) m = std::max(m, x.norm());
  return m;
}

Eigen::VectorXd OrdinaryControlPath::stacked() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()) * dim);
  for (std::size_t c = 0; c < values.size(); ++c)
    out.segment(static_cast<Eigen::Index>(c) * dim, dim) = values[c];
  return out;
}

OrdinaryControlPath OrdinaryControlPath::from_stacked(const TimeGrid& g, int m,
                                                      const Eigen::VectorXd& x) {
  if (x.size() != static_cast<Eigen::Index>(g.n_cells) * m)
    throw ValidationError("OrdinaryControlPath: stacked vector has wrong size");
  std::vector<Eigen::VectorXd> vals(static_cast<std::size_t>(g.n_cells));
  for (int c = 0; c < g.n_cells; ++c) vals[static_cast<std::size_t>(c)] = x.segment(c * m, m);
  return OrdinaryControlPath(g, std::move(vals));
}

AdmissibilityReport check_admissible(const std::vector<MixedConstraint>& constraints,
                                     const Parameter& lambda, const OrdinaryControlPath& u,
                                     const TimeGrid& grid) {
  AdmissibilityReport report;
  if (constraints.empty()) {
    report.unconstrained = true;
    return report;
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& g : constraints) {
    for (int i = 0; i < grid.n_nodes(); ++i) {
      const double t = grid.node(i);
      const double value = g.evaluator(lambda, u, t);
      if (!std::isfinite(value))
        throw NumericalError("check_admissible: constraint " + std::to_string(g.index) +
                             " returned a non-finite value at t = " + std::to_string(t));
      if (value > worst) {
        worst = value;
        report.worst_constraint = g.index;
        report.worst_time = t;
      }
      // ess-sup constraints are constant in t; one node suffices but scanning
      // all nodes is harmless and keeps the loop uniform.
    }
  }
  report.max_violation = std::max(worst, 0.0);
  report.margin = -worst;
  report.admissible = worst <= kFeasibilityTolerance;
  return report;
}

std::vector<double> dwell_bound(const IntegerControlPath& v, double delta, double eps) {
  if (!(delta >= 0.0)) throw ValidationError("dwell_bound: delta must be nonnegative");
  if (!(eps > 0.0)) throw ValidationError("dwell_bound: eps must be positive");
  const double dt = v.grid.dt();
  const double cells_exact = delta / dt;
  const double rounded = std::round(cells_exact);
  if (std::abs(cells_exact - rounded) > 1e-12 * std::max(1.0, cells_exact))
    throw ValidationError("dwell_bound: delta = " + std::to_string(delta) +
                          " is not grid-aligned; the cell width is dt = " + std::to_string(dt));
  const int look_back = static_cast<int>(rounded);

  std::vector<double> bound(static_cast<std::size_t>(v.grid.n_cells));
  for (int c = 0; c < v.grid.n_cells; ++c) {
    // Window [t - delta, t] for a.e. t in cell c covers cells
    // max(0, c - look_back) .. c after truncation at t0.
    const int first = std::max(0, c - look_back);
    bool constant = true;
    for (int j = first + 1; j <= c && constant; ++j)
      constant = v.at_cell(j) == v.at_cell(first);
    bound[static_cast<std::size_t>(c)] = constant ? 1.0 + eps : eps;
  }
  return bound;
}

std::int64_t ModeEnumerator::count_paths(int n_cells, int n_modes, const EnumerationCaps& caps) {
  if (n_modes < 1) throw ValidationError("enumerate_modes: n_modes must be >= 1");
  const int max_switches = caps.max_switches.value_or(n_cells);
  const int min_dwell = std::max(1, caps.min_dwell_cells.value_or(1));
  // Paths with exactly s switches and every run >= min_dwell cells:
  // N (N-1)^s compositions of n_cells into s+1 runs, i.e. C(slots + s, s)
  // with slots = n_cells - (s+1) min_dwell.
  std::int64_t total = 0;
  for (int s = 0; s <= max_switches; ++s) {
    if (s == 0) {  // constant paths carry no dwell restriction
      total += n_modes;
      continue;
    }
    // s+1 runs, each >= min_dwell, summing to n_cells.
    const std::int64_t slots = n_cells - static_cast<std::int64_t>(s + 1) * min_dwell;
    if (slots < 0) continue;
    // compositions: C(slots + s, s)
    std::int64_t comb = 1;
    for (int j = 1; j <= s; ++j) {
      comb = comb * (slots + j) / j;
      if (comb > (std::int64_t{1} << 62) / n_modes) return std::numeric_limits<std::int64_t>::max();
    }
    std::int64_t modes_factor = n_modes;
    for (int j = 0; j < s; ++j) {
      modes_factor *= (n_modes - 1);
      if (modes_factor > (std::int64_t{1} << 62) / std::max<std::int64_t>(comb, 1))
        return std::numeric_limits<std::int64_t>::max();
    }
    total += comb * modes_factor;
  }
  return total;
}

namespace {

void enumerate_recursive(const TimeGrid& grid, int n_modes, int max_switches, int min_dwell,
                         std::vector<int>& prefix, int switches_used, int run_length,
                         std::vector<IntegerControlPath>& out) {
  const int n = grid.n_cells;
  if (static_cast<int>(prefix.size()) == n) {
    if (run_length >= min_dwell || switches_used == 0)
      out.emplace_back(grid, prefix, n_modes);
    return;
  }
  for (int m = 0; m < n_modes; ++m) {
    if (prefix.empty()) {
      prefix.push_back(m);
      enumerate_recursive(grid, n_modes, max_switches, min_dwell, prefix, 0, 1, out);
      prefix.pop_back();
      continue;
    }
    const int prev = prefix.back();
    if (m == prev) {
      prefix.push_back(m);
      enumerate_recursive(grid, n_modes, max_switches, min_dwell, prefix, switches_used,
                          run_length + 1, out);
      prefix.pop_back();
    } else {
      if (switches_used + 1 > max_switches) continue;
      if (run_length < min_dwell) continue;  // previous run too short to end
      prefix.push_back(m);
      enumerate_recursive(grid, n_modes, max_switches, min_dwell, prefix, switches_used + 1, 1,
                          out);
      prefix.pop_back();
    }
  }
}

}  // namespace

ModeEnumerator::ModeEnumerator(TimeGrid grid, int n_modes, EnumerationCaps caps) {
  count_ = count_paths(grid.n_cells, n_modes, caps);
  if (count_ > caps.budget)
    throw ValidationError(
        "enumerate_modes: " + std::to_string(count_) + " paths exceed the enumeration budget of " +
        std::to_string(caps.budget) + "; cap max_switches or min_dwell_cells to proceed");
  paths_.reserve(static_cast<std::size_t>(count_));
  std::vector<int> prefix;
  prefix.reserve(static_cast<std::size_t>(grid.n_cells));
  enumerate_recursive(grid, n_modes, caps.max_switches.value_or(grid.n_cells),
                      std::max(1, caps.min_dwell_cells.value_or(1)), prefix, 0, 0, paths_);
}

}  // namespace miocp
