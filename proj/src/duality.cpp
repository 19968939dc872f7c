#include "miocp/duality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "miocp/errors.hpp"

namespace miocp {

namespace {

/// Euclidean projection onto the scaled simplex {w >= 0, sum w = mass}.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& z, double mass) {
  const Eigen::Index n = z.size();
  if (mass <= 0.0) return Eigen::VectorXd::Zero(n);
  std::vector<double> sorted(z.data(), z.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumulative = 0.0, tau = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += sorted[static_cast<std::size_t>(j)];
    const double candidate = (cumulative - mass) / static_cast<double>(j + 1);
    if (j + 1 == n || sorted[static_cast<std::size_t>(j + 1)] <= candidate) {
      tau = candidate;
      break;
    }
  }
  return (z.array() - tau).max(0.0).matrix();
}

struct ConstraintStructure {
  std::vector<MixedConstraint> constraints;
  // Resolved cellwise forms at the current lambda, aligned with constraints.
  std::vector<MixedConstraint::CellwiseMaxAffine> cellwise;
  bool all_cellwise = true;
};

ConstraintStructure resolve_constraints(const ParametricInstance& inst, const Parameter& lambda,
                                        const IntegerControlPath& v) {
  ConstraintStructure cs;
  cs.constraints = inst.constraints_for(v);
  cs.cellwise.resize(cs.constraints.size());
  for (std::size_t k = 0; k < cs.constraints.size(); ++k) {
    if (cs.constraints[k].cellwise) {
      cs.cellwise[k] = cs.constraints[k].cellwise(lambda);
    } else {
      cs.all_cellwise = false;
    }
  }
  return cs;
}

/// Aggregates node weights of constraint k onto cells (nodes map to the cell
/// their time belongs to; tf maps to the last cell).
Eigen::VectorXd cell_aggregated_weights(const MultiplierMeasure& mu, int k,
                                        const TimeGrid& grid) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.n_cells);
  for (int i = 0; i < grid.n_nodes(); ++i)
    out(grid.cell_of(grid.node(i))) += mu.weights(k, i);
  return out;
}

/// Armijo descent fallback of the inner minimization for instances without a
/// quadratic model. Gradients by forward differences; divergence below the
/// floor marks the measure as outside F_v.
DualFunctionResult descent_dual_function(const ParametricInstance& inst, const Parameter& lambda,
                                         const IntegerControlPath& v,
                                         const MultiplierMeasure& mu,
                                         const DualFunctionSettings& settings) {
  DualFunctionResult result;
  const int n_u = inst.grid.n_cells * inst.control_dim;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n_u);
  auto objective = [&](const Eigen::VectorXd& x) {
    return lagrangian(inst, lambda,
                      OrdinaryControlPath::from_stacked(inst.grid, inst.control_dim, x), v, mu);
  };
  double value = objective(u);
  double alpha = 1.0;
  for (int iter = 0; iter < settings.max_iters; ++iter) {
    Eigen::VectorXd grad(n_u);
    const double h = 1e-7 * (1.0 + u.cwiseAbs().maxCoeff());
    for (int j = 0; j < n_u; ++j) {
      Eigen::VectorXd probe = u;
      probe(j) += h;
      grad(j) = (objective(probe) - value) / h;
    }
    if (grad.norm() <= 1e-10) break;
    alpha = std::min(alpha / 0.5, 1e12);
    bool accepted = false;
    while (alpha > 1e-16) {
      const Eigen::VectorXd trial = u - alpha * grad;
      const double trial_value = objective(trial);
      if (trial_value <= value - 1e-4 * alpha * grad.squaredNorm()) {
        u = trial;
        value = trial_value;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    if (value < kDualUnboundedFloor) {
      result.unbounded = true;
      return result;
    }
  }
  result.value = value;
  result.minimizer = OrdinaryControlPath::from_stacked(inst.grid, inst.control_dim, u);
  return result;
}

}  // namespace

MultiplierMeasure MultiplierMeasure::zero(const TimeGrid& grid, int n_constraints) {
  MultiplierMeasure mu;
  mu.grid = grid;
  mu.weights = Eigen::MatrixXd::Zero(n_constraints, grid.n_nodes());
  return mu;
}

double lagrangian(const ParametricInstance& inst, const Parameter& lambda,
                  const OrdinaryControlPath& u, const IntegerControlPath& v,
                  const MultiplierMeasure& mu) {
  const Trajectory traj = inst.solve_dynamics(lambda, u, v);
  double value = evaluate_cost(inst, lambda, traj, u, v);
  const auto constraints = inst.constraints_for(v);
  if (mu.weights.rows() != static_cast<Eigen::Index>(constraints.size()))
    throw ValidationError("lagrangian: measure row count does not match the constraint count");
  for (std::size_t k = 0; k < constraints.size(); ++k) {
    if (mu.weights.row(static_cast<Eigen::Index>(k)).sum() == 0.0) continue;
    for (int i = 0; i < inst.grid.n_nodes(); ++i) {
      const double w = mu.weights(static_cast<Eigen::Index>(k), i);
      if (w == 0.0) continue;
      value += w * constraints[k].evaluator(lambda, u, inst.grid.node(i));
    }
  }
  return value;
}

QuadraticCostModel build_quadratic_model(const ParametricInstance& inst, const Parameter& lambda,
                                         const IntegerControlPath& v) {
  if (!inst.tracking || !inst.f.linear_in_yu)
    throw ValidationError("build_quadratic_model: requires linear dynamics and a tracking cost");
  const auto& spec = *inst.tracking;
  const int n_u = inst.grid.n_cells * inst.control_dim;
  const int n_nodes = inst.grid.n_nodes();
  const Eigen::VectorXd y0 = inst.initial_state(lambda);

  const OrdinaryControlPath zero_u(inst.grid, inst.control_dim);
  const Trajectory base = inst.propagator->propagate(y0, zero_u, v);

  // Columns of the control-to-state map, each an impulse response through
  // the instance integrator (relative to the zero-control trajectory).
  const Eigen::VectorXd zero_state = Eigen::VectorXd::Zero(inst.gen.dim());
  const Trajectory drift =
      inst.propagator->propagate(zero_state, zero_u, v);  // drift response only
  std::vector<std::vector<Eigen::VectorXd>> columns(static_cast<std::size_t>(n_u));
  for (int j = 0; j < n_u; ++j) {
    Eigen::VectorXd impulse = Eigen::VectorXd::Zero(n_u);
    impulse(j) = 1.0;
    const Trajectory response = inst.propagator->propagate(
        zero_state, OrdinaryControlPath::from_stacked(inst.grid, inst.control_dim, impulse), v);
    auto& col = columns[static_cast<std::size_t>(j)];
    col.resize(static_cast<std::size_t>(n_nodes));
    for (int i = 0; i < n_nodes; ++i)
      col[static_cast<std::size_t>(i)] = response.states[static_cast<std::size_t>(i)] -
                                         drift.states[static_cast<std::size_t>(i)];
  }

  const auto targets = spec.target(lambda);
  QuadraticCostModel model;
  model.q0 = 0.0;
  model.c = Eigen::VectorXd::Zero(n_u);
  model.h = Eigen::MatrixXd::Zero(n_u, n_u);
  for (int i = 0; i < n_nodes; ++i) {
    const double ci = spec.time_weights(i) * spec.state_weight;
    const Eigen::VectorXd r = base.states[static_cast<std::size_t>(i)] -
                              targets[static_cast<std::size_t>(i)];
    model.q0 += ci * r.squaredNorm();
    for (int j = 0; j < n_u; ++j) {
      const Eigen::VectorXd& gj = columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
      model.c(j) += 2.0 * ci * gj.dot(r);
      for (int l = j; l < n_u; ++l)
        model.h(j, l) +=
            2.0 * ci * gj.dot(columns[static_cast<std::size_t>(l)][static_cast<std::size_t>(i)]);
    }
  }
  for (int c = 0; c < inst.grid.n_cells; ++c)
    for (int k = 0; k < inst.control_dim; ++k)
      model.h(c * inst.control_dim + k, c * inst.control_dim + k) +=
          2.0 * spec.energy_weights(c);
  model.h = model.h.selfadjointView<Eigen::Upper>();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigensolver(model.h);
  model.h_min_eig = eigensolver.eigenvalues().minCoeff();
  model.h_llt.compute(model.h);
  model.positive_definite =
      model.h_llt.info() == Eigen::Success && model.h_min_eig > 1e-14;
  return model;
}

DualFunctionResult dual_function(const ParametricInstance& inst, const Parameter& lambda,
                                 const IntegerControlPath& v, const MultiplierMeasure& mu,
                                 const DualFunctionSettings& settings,
                                 DualFunctionWorkspace* workspace) {
  DualFunctionResult result;
  if (mu.weights.size() > 0 && mu.weights.minCoeff() < 0.0)
    throw ValidationError("dual_function: multiplier weights must be nonnegative");

  if (inst.control_dim == 0) {
    // No ordinary control: the infimum is the Lagrangian itself.
    result.minimizer = OrdinaryControlPath(inst.grid, 0);
    result.value = lagrangian(inst, lambda, result.minimizer, v, mu);
    return result;
  }

  const ConstraintStructure cs = resolve_constraints(inst, lambda, v);
  const bool quadratic_route =
      inst.tracking && inst.f.linear_in_yu && inst.control_dim == 1 && cs.all_cellwise;
  if (!quadratic_route) return descent_dual_function(inst, lambda, v, mu, settings);

  std::shared_ptr<const QuadraticCostModel> model;
  if (workspace && workspace->model) {
    model = workspace->model;
  } else {
    auto built = std::make_shared<QuadraticCostModel>(build_quadratic_model(inst, lambda, v));
    if (workspace) workspace->model = built;
    model = built;
  }
  if (!model->positive_definite)
    return descent_dual_function(inst, lambda, v, mu, settings);

  const int n = inst.grid.n_cells;
  // Split the measure terms: per-cell-box rows contribute a fixed linear
  // term; ess-sup rows contribute mass_k * max_c(s_k u_c + beta_kc), handled
  // through its conjugate over the scaled simplex.
  Eigen::VectorXd c_fixed = model->c;
  double const_fixed = model->q0;
  std::vector<int> ess_rows;
  std::vector<double> ess_mass;
  for (std::size_t k = 0; k < cs.constraints.size(); ++k) {
    const auto& cw = cs.cellwise[k];
    if (cs.constraints[k].kind == ConstraintKind::PerCellBox) {
      const Eigen::VectorXd wk =
          cell_aggregated_weights(mu, static_cast<int>(k), inst.grid);
      c_fixed += cw.sign * wk;
      const_fixed += wk.dot(cw.offsets);
    } else {
      const double mass = mu.row_mass(static_cast<int>(k));
      ess_rows.push_back(static_cast<int>(k));
      ess_mass.push_back(mass);
    }
  }

  auto solve_u = [&](const std::vector<Eigen::VectorXd>& w_blocks) {
    Eigen::VectorXd chat = c_fixed;
    for (std::size_t b = 0; b < ess_rows.size(); ++b)
      chat += cs.cellwise[static_cast<std::size_t>(ess_rows[b])].sign * w_blocks[b];
    return (-model->h_llt.solve(chat)).eval();
  };
  auto dual_objective = [&](const std::vector<Eigen::VectorXd>& w_blocks,
                            const Eigen::VectorXd& u_star) {
    // F(w) = const + sum_b w_b' beta_b + min_u (c-hat' u + u' H u / 2); the
    // exact minimum is recovered from the evaluated point by subtracting the
    // quadratic residual correction, keeping the value a true lower bound
    // even when the solve is slightly inexact.
    double value = const_fixed;
    Eigen::VectorXd chat = c_fixed;
    for (std::size_t b = 0; b < ess_rows.size(); ++b) {
      value += w_blocks[b].dot(cs.cellwise[static_cast<std::size_t>(ess_rows[b])].offsets);
      chat += cs.cellwise[static_cast<std::size_t>(ess_rows[b])].sign * w_blocks[b];
    }
    value += chat.dot(u_star) + 0.5 * u_star.dot(model->h * u_star);
    const Eigen::VectorXd residual = model->h * u_star + chat;
    value -= 0.5 * std::abs(residual.dot(model->h_llt.solve(residual)));
    return value;
  };

  std::vector<Eigen::VectorXd> w(ess_rows.size());
  for (std::size_t b = 0; b < ess_rows.size(); ++b) {
    if (workspace && workspace->w_tilde.size() == ess_rows.size() &&
        workspace->w_tilde[b].size() == n) {
      // Rescale the warm start onto the current simplex.
      const double old_mass = workspace->w_tilde[b].sum();
      w[b] = old_mass > 0.0 && ess_mass[b] > 0.0
                 ? (workspace->w_tilde[b] * (ess_mass[b] / old_mass)).eval()
                 : project_simplex(Eigen::VectorXd::Constant(n, ess_mass[b] / n), ess_mass[b]);
    } else {
      w[b] = Eigen::VectorXd::Constant(n, ess_mass[b] / n);
    }
  }

  Eigen::VectorXd u_star = solve_u(w);
  double best_value = dual_objective(w, u_star);
  std::vector<Eigen::VectorXd> w_best = w;
  Eigen::VectorXd u_best = u_star;

  if (!ess_rows.empty()) {
    // Accelerated projected gradient ascent on the concave conjugate; every
    // iterate is feasible, so best_value is always a valid lower bound.
    const double lipschitz =
        std::max(1e-12, static_cast<double>(ess_rows.size()) / model->h_min_eig);
    const double step = 1.0 / lipschitz;
    std::vector<Eigen::VectorXd> w_prev = w;
    double t_momentum = 1.0;
    for (int iter = 0; iter < settings.max_iters; ++iter) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
      const double beta = (t_momentum - 1.0) / t_next;
      std::vector<Eigen::VectorXd> z(w.size());
      for (std::size_t b = 0; b < w.size(); ++b) z[b] = w[b] + beta * (w[b] - w_prev[b]);
      const Eigen::VectorXd u_z = solve_u(z);
      w_prev = w;
      for (std::size_t b = 0; b < w.size(); ++b) {
        const auto& cw = cs.cellwise[static_cast<std::size_t>(ess_rows[b])];
        const Eigen::VectorXd grad = cw.offsets + cw.sign * u_z;
        w[b] = project_simplex(z[b] + step * grad, ess_mass[b]);
      }
      t_momentum = t_next;
      u_star = solve_u(w);
      const double value = dual_objective(w, u_star);
      if (value > best_value) {
        const double improvement = value - best_value;
        best_value = value;
        w_best = w;
        u_best = u_star;
        if (improvement <= settings.tol * (1.0 + std::abs(best_value)) && iter > 4) break;
      }
    }
  }

  if (workspace) workspace->w_tilde = w_best;
  result.value = best_value;
  result.minimizer = OrdinaryControlPath::from_stacked(inst.grid, 1, u_best);
  return result;
}

DualAscentResult dual_ascent(const ParametricInstance& inst, const Parameter& lambda,
                             const IntegerControlPath& v, const DualAscentSettings& settings,
                             const MultiplierMeasure* warm_start) {
  const auto constraints = inst.constraints_for(v);
  const int n_constraints = static_cast<int>(constraints.size());
  if (warm_start && (warm_start->weights.rows() != n_constraints ||
                     !(warm_start->grid == inst.grid)))
    throw ValidationError("dual_ascent: warm-start measure does not match the instance");

  MultiplierMeasure mu = warm_start ? *warm_start
                                    : MultiplierMeasure::zero(inst.grid, n_constraints);
  DualFunctionWorkspace workspace;
  DualAscentResult result;

  DualFunctionResult h = dual_function(inst, lambda, v, mu, settings.inner, &workspace);
  int retries = 0;
  while (h.unbounded && retries < settings.max_retries) {
    mu.weights *= 0.5;
    h = dual_function(inst, lambda, v, mu, settings.inner, &workspace);
    ++retries;
  }
  if (h.unbounded)
    throw NumericalError("dual_ascent: inner problem unbounded below even after weight "
                         "shrinking; the mode is outside F_v");
  result.best_mu = mu;
  result.best_value = h.value;

  if (n_constraints == 0) {
    result.best_so_far.push_back(h.value);
    result.best_mass_trace.push_back(0.0);
    return result;
  }

  double step_scale = settings.step_scale;
  if (step_scale <= 0.0 && inst.cq) step_scale = std::max(inst.cq->omega_declared, 1e-6);
  if (step_scale <= 0.0) step_scale = 1.0;

  for (int iter = 1; iter <= settings.iterations; ++iter) {
    // Subgradient of h at mu: constraint values at the inner minimizer.
    Eigen::MatrixXd subgradient(n_constraints, inst.grid.n_nodes());
    for (int k = 0; k < n_constraints; ++k)
      for (int i = 0; i < inst.grid.n_nodes(); ++i)
        subgradient(k, i) = constraints[static_cast<std::size_t>(k)].evaluator(
            lambda, h.minimizer, inst.grid.node(i));

    const double step = step_scale / std::sqrt(static_cast<double>(iter));
    mu.weights = (mu.weights + step * subgradient).cwiseMax(0.0);

    h = dual_function(inst, lambda, v, mu, settings.inner, &workspace);
    retries = 0;
    while (h.unbounded && retries < settings.max_retries) {
      mu.weights *= 0.5;
      h = dual_function(inst, lambda, v, mu, settings.inner, &workspace);
      ++retries;
    }
    if (h.unbounded) break;  // keep the best accepted state

    if (h.value > result.best_value) {
      result.best_value = h.value;
      result.best_mu = mu;
    }
    result.best_so_far.push_back(result.best_value);
    result.best_mass_trace.push_back(result.best_mu.total_mass());
    ++result.iterations;
  }
  return result;
}

DualValueResult dual_value(const std::vector<double>& per_mode_values,
                           const std::vector<bool>& per_mode_unbounded) {
  if (per_mode_values.empty())
    throw ValidationError("dual_value: no per-mode results supplied");
  if (per_mode_values.size() != per_mode_unbounded.size())
    throw ValidationError("dual_value: inconsistent per-mode inputs");
  DualValueResult result;
  for (std::size_t i = 0; i < per_mode_values.size(); ++i) {
    if (per_mode_unbounded[i]) {
      result.unbounded = true;
      result.offending_mode = static_cast<int>(i);
      result.value = -std::numeric_limits<double>::infinity();
      return result;
    }
    if (result.argmin_mode < 0 || per_mode_values[i] < result.value) {
      result.value = per_mode_values[i];
      result.argmin_mode = static_cast<int>(i);
    }
  }
  return result;
}

double multiplier_mass_bound(const ParametricInstance& inst,
                             const std::vector<Parameter>& lambda_samples,
                             const std::vector<IntegerControlPath>& paths, double omega,
                             double alpha_lower) {
  if (!(omega > 0.0))
    throw ValidationError("multiplier_mass_bound: omega must be positive (no Slater margin)");
  if (!inst.cq)
    throw ValidationError("multiplier_mass_bound: instance carries no Slater data");
  double sup_phi = -std::numeric_limits<double>::infinity();
  for (const auto& v : paths) {
    const OrdinaryControlPath slater = inst.cq->slater_point(v);
    for (const auto& lambda : lambda_samples) {
      const Trajectory traj = inst.solve_dynamics(lambda, slater, v);
      sup_phi = std::max(sup_phi, evaluate_cost(inst, lambda, traj, slater, v));
    }
  }
  const double diam = inst.space->diameter();
  return (diam * diam + sup_phi - alpha_lower) / omega;
}

}  // namespace miocp
