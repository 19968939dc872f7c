#include "miocp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "miocp/errors.hpp"
#include "miocp/parallel.hpp"

namespace miocp {

namespace {

/// Per-(lambda) adjoint data: resolved cost targets and, per mode, the
/// control-to-state step Jacobian Gamma_v = Phi_v D_v of the affine scheme.
struct AdjointContext {
  std::vector<Eigen::VectorXd> targets;
  std::vector<Eigen::MatrixXd> gamma;  // d x m per mode
};

AdjointContext build_adjoint_context(const ParametricInstance& inst, const Parameter& lambda) {
  if (!inst.tracking || !inst.f.linear_in_yu)
    throw ValidationError("reduced_gradient: requires linear dynamics and a tracking-form cost "
                          "(instance '" + inst.kind + "' does not provide them)");
  AdjointContext ctx;
  ctx.targets = inst.tracking->target(lambda);
  const int d = inst.gen.dim();
  const int m = inst.control_dim;
  ctx.gamma.resize(static_cast<std::size_t>(inst.n_modes));
  const Eigen::VectorXd zero_y = Eigen::VectorXd::Zero(d);
  const Eigen::VectorXd zero_u = Eigen::VectorXd::Zero(m);
  for (int v = 0; v < inst.n_modes; ++v) {
    Eigen::MatrixXd dmat(d, m);
    const Eigen::VectorXd base = inst.f.evaluator(inst.grid.t0, zero_y, zero_u, v);
    for (int k = 0; k < m; ++k)
      dmat.col(k) =
          inst.f.evaluator(inst.grid.t0, zero_y, Eigen::VectorXd::Unit(m, k), v) - base;
    ctx.gamma[static_cast<std::size_t>(v)] = inst.propagator->phi_matrix(v) * dmat;
  }
  return ctx;
}

/// Backward sweep of the discrete adjoint, consistent with the affine
/// exponential step. Returns the stacked gradient of the reduced cost.
Eigen::VectorXd adjoint_gradient(const ParametricInstance& inst, const AdjointContext& ctx,
                                 const IntegerControlPath& v, const OrdinaryControlPath& u,
                                 const Trajectory& traj) {
  const auto& spec = *inst.tracking;
  const int n = inst.grid.n_cells;
  const int m = inst.control_dim;
  Eigen::VectorXd grad(static_cast<Eigen::Index>(n) * m);

  Eigen::VectorXd p = 2.0 * spec.time_weights(n) * spec.state_weight *
                      (traj.states[static_cast<std::size_t>(n)] -
                       ctx.targets[static_cast<std::size_t>(n)]);
  for (int c = n - 1; c >= 0; --c) {
    const int vc = v.at_cell(c);
    grad.segment(static_cast<Eigen::Index>(c) * m, m) =
        2.0 * spec.energy_weights(c) * u.at_cell(c) +
        ctx.gamma[static_cast<std::size_t>(vc)].transpose() * p;
    if (c > 0) {
      p = inst.propagator->step_matrix(vc).transpose() * p +
          2.0 * spec.time_weights(c) * spec.state_weight *
              (traj.states[static_cast<std::size_t>(c)] -
               ctx.targets[static_cast<std::size_t>(c)]);
    }
  }
  return grad;
}

double reduced_cost(const ParametricInstance& inst, const Parameter& lambda,
                    const IntegerControlPath& v, const OrdinaryControlPath& u,
                    const Eigen::VectorXd& y0) {
  const Trajectory traj = inst.propagator->propagate(y0, u, v);
  return evaluate_cost(inst, lambda, traj, u, v);
}

}  // namespace

void InnerSolveSettings::validate() const {
  if (!(grad_tol > 0.0) || !(feas_tol > 0.0))
    throw ValidationError("InnerSolveSettings: tolerances must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0))
    throw ValidationError("InnerSolveSettings: backtrack factor must lie in (0, 1)");
  if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0))
    throw ValidationError("InnerSolveSettings: armijo_c1 must lie in (0, 1)");
  if (max_iters < 1) throw ValidationError("InnerSolveSettings: max_iters must be >= 1");
}

Eigen::VectorXd reduced_gradient(const ParametricInstance& inst, const Parameter& lambda,
                                 const IntegerControlPath& v, const OrdinaryControlPath& u) {
  const AdjointContext ctx = build_adjoint_context(inst, lambda);
  const Trajectory traj = inst.solve_dynamics(lambda, u, v);
  return adjoint_gradient(inst, ctx, v, u, traj);
}

InnerSolveResult inner_solve(const ParametricInstance& inst, const Parameter& lambda,
                             const IntegerControlPath& v, const InnerSolveSettings& settings) {
  settings.validate();
  if (!inst.convex && !inst.lambda_independent_constraints)
    throw ValidationError("inner_solve: nonconvex instance with lambda-dependent constraints "
                          "is out of scope");

  InnerSolveResult result;
  const Eigen::VectorXd y0 = inst.initial_state(lambda);

  if (inst.control_dim == 0) {
    result.u = OrdinaryControlPath(inst.grid, 0);
    result.value = reduced_cost(inst, lambda, v, result.u, y0);
    result.status = InnerStatus::Converged;
    return result;
  }

  const std::optional<CellBoxes> box = inst.box_for(lambda, v);
  if (box && !box->feasible()) {
    result.status = InnerStatus::Infeasible;
    result.value = std::numeric_limits<double>::infinity();
    return result;
  }
  const auto project = [&box](const Eigen::VectorXd& x) {
    return box ? box->project(x) : x;
  };

  const int n_u = inst.grid.n_cells * inst.control_dim;
  Eigen::VectorXd u;
  if (inst.cq) {
    u = project(inst.cq->slater_point(v).stacked());
  } else if (box) {
    u = box->midpoint();
  } else {
    u = Eigen::VectorXd::Zero(n_u);
  }

  const AdjointContext ctx = build_adjoint_context(inst, lambda);
  auto path_of = [&](const Eigen::VectorXd& x) {
    return OrdinaryControlPath::from_stacked(inst.grid, inst.control_dim, x);
  };

  OrdinaryControlPath u_path = path_of(u);
  Trajectory traj = inst.propagator->propagate(y0, u_path, v);
  double value = evaluate_cost(inst, lambda, traj, u_path, v);
  double alpha = 1.0;

  int iter = 0;
  for (; iter < settings.max_iters; ++iter) {
    const Eigen::VectorXd grad = adjoint_gradient(inst, ctx, v, u_path, traj);
    const Eigen::VectorXd pg = u - project(u - grad);
    result.projected_gradient_norm = pg.norm();
    if (result.projected_gradient_norm <= settings.grad_tol) {
      result.status = InnerStatus::Converged;
      break;
    }

    // Armijo backtracking on the projected step.
    alpha = std::min(alpha / settings.backtrack, 1e8);
    bool accepted = false;
    while (alpha > 1e-18) {
      const Eigen::VectorXd u_trial = project(u - alpha * grad);
      const Eigen::VectorXd step = u - u_trial;
      if (step.norm() == 0.0) break;  // stuck against the box
      const OrdinaryControlPath trial_path = path_of(u_trial);
      const Trajectory trial_traj = inst.propagator->propagate(y0, trial_path, v);
      const double trial_value = evaluate_cost(inst, lambda, trial_traj, trial_path, v);
      if (trial_value <= value - settings.armijo_c1 / alpha * step.squaredNorm()) {
        u = u_trial;
        u_path = trial_path;
        traj = trial_traj;
        value = trial_value;
        accepted = true;
        break;
      }
      alpha *= settings.backtrack;
    }
    if (!accepted) {
      // No descent step exists at floating-point resolution.
      result.status = result.projected_gradient_norm <= 1e3 * settings.grad_tol
                          ? InnerStatus::Converged
                          : InnerStatus::IterCap;
      break;
    }
  }
  if (iter == settings.max_iters) result.status = InnerStatus::IterCap;

  result.u = u_path;
  result.value = value;
  result.iterations = iter;
  return result;
}

ValueSample solve_value(const ParametricInstance& inst, const Parameter& lambda,
                        const SolveValueSettings& settings) {
  const ModeEnumerator enumerator(inst.grid, inst.n_modes, settings.caps);
  const auto& paths = enumerator.paths();
  std::vector<InnerSolveResult> results(paths.size());
  parallel_for(paths.size(), settings.jobs, [&](std::size_t i) {
    results[i] = inner_solve(inst, lambda, paths[i], settings.inner);
  });

  std::size_t best = paths.size();
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (results[i].status == InnerStatus::Infeasible) continue;
    if (best == paths.size() || results[i].value < results[best].value) best = i;
  }
  if (best == paths.size())
    throw NumericalError("solve_value: the admissible set is empty at lambda = " +
                         lambda.brief() + " (every enumerated path is infeasible); the "
                         "nonempty-admissible-set assumption is violated");

  ValueSample sample;
  sample.lambda = lambda;
  sample.value = results[best].value;
  sample.best_v = paths[best];
  sample.best_u = results[best].u;
  sample.status = results[best].status == InnerStatus::Converged ? "converged" : "iter-cap";
  sample.inner_iterations = results[best].iterations;
  return sample;
}

}  // namespace miocp
