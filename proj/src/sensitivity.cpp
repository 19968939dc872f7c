#include "miocp/sensitivity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "miocp/errors.hpp"
#include "miocp/parallel.hpp"

namespace miocp {

SweepResult sweep(const ParametricInstance& inst, const std::vector<Parameter>& lambdas,
                  const SweepSettings& settings) {
  for (const auto& lambda : lambdas)
    if (!inst.space->contains(lambda.stacked, 1e-9))
      throw ValidationError("sweep: lambda " + lambda.brief() +
                            " lies outside the declared parameter ball");
  SweepResult result;
  result.grid = inst.grid;
  result.samples.resize(lambdas.size());
  result.wall_seconds.resize(lambdas.size());
  parallel_for(lambdas.size(), settings.jobs, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    SolveValueSettings solve_settings = settings.solve;
    if (settings.jobs > 1) solve_settings.jobs = 1;  // avoid nested pools
    result.samples[i] = solve_value(inst, lambdas[i], solve_settings);
    result.wall_seconds[i] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  return result;
}

EmpiricalLipschitz empirical_lipschitz(const SweepResult& sweep_result) {
  const auto& samples = sweep_result.samples;
  if (samples.size() < 2)
    throw ValidationError("empirical_lipschitz: needs at least two samples");
  const ParameterSpace& space = *samples.front().lambda.space;
  EmpiricalLipschitz out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const double dist = space.distance(samples[i].lambda.stacked, samples[j].lambda.stacked);
      const double gap = std::abs(samples[i].value - samples[j].value);
      if (dist <= 1e-14) {
        if (gap > 1e-9 * (1.0 + std::abs(samples[i].value)))
          throw NumericalError("empirical_lipschitz: duplicate lambda with distinct values "
                               "(internal inconsistency)");
        continue;
      }
      const double quotient = gap / dist;
      if (quotient > out.constant) {
        out.constant = quotient;
        out.witness_i = static_cast<int>(i);
        out.witness_j = static_cast<int>(j);
      }
    }
  }
  return out;
}

HatLReport theoretical_hat_L(const ParametricInstance& inst, TheoremScope scope) {
  if (scope == TheoremScope::InitialData && !inst.lambda_independent_constraints)
    throw ValidationError("theoretical_hat_L: the initial-data result requires constraint "
                          "functions independent of lambda; this instance perturbs them");
  HatLReport report;
  const GronwallData semigroup = estimate_semigroup_bounds(inst.gen, inst.grid);
  report.gamma = semigroup.gamma;
  report.w0 = semigroup.w0;
  const GronwallData data =
      make_gronwall_data(semigroup.gamma, semigroup.w0, inst.f.lipschitz_modulus, inst.grid);
  report.c_tf = gronwall_envelope(data, inst.grid).back();

  // K = sup over the ball of |y0|, bounded through the declared moduli.
  double max_radius = 0.0;
  for (const auto& comp : inst.space->components()) max_radius = std::max(max_radius, comp.radius);
  const Eigen::VectorXd y0_center = inst.initial_state(inst.center());
  report.k_sup_y0 =
      std::sqrt(inst.state_norm_weight) * y0_center.norm() + inst.l0 * max_radius;
  report.apriori_radius = report.c_tf * (1.0 + report.k_sup_y0);

  report.lphi = inst.lphi_constant(report.apriori_radius);
  report.l0 = inst.l0;
  report.value = report.lphi * (report.c_tf * report.l0 + 1.0);
  return report;
}

TildeCReport theoretical_tilde_C(const ParametricInstance& inst, const SweepResult& sweep_result,
                                 double mass_bound,
                                 const std::vector<Parameter>& lambda_samples) {
  if (sweep_result.samples.empty())
    throw ValidationError("theoretical_tilde_C: the retained-iterate surrogate is empty; "
                          "run a sweep first");
  if (!inst.cq)
    throw ValidationError("theoretical_tilde_C: requires Slater data on the instance");

  TildeCReport report;
  report.mass_bound = mass_bound;
  report.diameter_term = 2.0 * inst.space->diameter();

  for (const auto& sample : sweep_result.samples) {
    // Membership recheck against the defining inequalities, with the
    // pair-sup taken over the supplied lambda samples.
    double pair_sup = 0.0;
    for (const auto& other : lambda_samples) {
      const double dist = inst.space->distance(sample.lambda.stacked, other.stacked);
      pair_sup = std::max(pair_sup, dist * dist);
    }
    const OrdinaryControlPath slater = inst.cq->slater_point(sample.best_v);
    const Trajectory slater_traj = inst.solve_dynamics(sample.lambda, slater, sample.best_v);
    const double slater_cost =
        evaluate_cost(inst, sample.lambda, slater_traj, slater, sample.best_v);
    if (sample.value > slater_cost + pair_sup + 1e-12) continue;
    const auto admissibility = check_admissible(inst.constraints_for(sample.best_v),
                                                sample.lambda, sample.best_u, inst.grid);
    if (!admissibility.admissible && !admissibility.unconstrained) continue;

    const Trajectory traj = inst.solve_dynamics(sample.lambda, sample.best_u, sample.best_v);
    const double y_norm = traj.max_norm(inst.state_norm_weight);
    const double u_norm = sample.best_u.sup_norm();
    report.lphi_sup = std::max(report.lphi_sup, inst.lphi_pair(y_norm, u_norm));
    report.lg_sup = std::max(report.lg_sup, inst.lg_sup(u_norm));
    ++report.surrogate_size;
  }
  if (report.surrogate_size == 0)
    throw NumericalError("theoretical_tilde_C: no sweep iterate passed the membership "
                         "recheck");

  report.constraint_term = inst.n_constraints * report.lg_sup * mass_bound;
  report.value = report.lphi_sup + report.constraint_term + report.diameter_term;
  return report;
}

double combined_L(const HatLReport& hat, const TildeCReport& tilde) {
  return hat.value + tilde.value;
}

CqReport cq_check(const ParametricInstance& inst, const std::vector<Parameter>& lambda_samples,
                  const EnumerationCaps& caps) {
  CqReport report;
  report.n_lambda_samples = static_cast<int>(lambda_samples.size());
  const ModeEnumerator enumerator(inst.grid, inst.n_modes, caps);
  report.n_modes_checked = static_cast<int>(enumerator.paths().size());

  if (inst.n_constraints == 0) {
    report.no_constraints = true;
    report.passed = true;
    report.alpha_confirmed = true;
    report.surrogate_bounded = true;
    report.alpha_lower = inst.cq ? inst.cq->alpha_lower : 0.0;
    return report;
  }
  if (!inst.cq)
    throw ValidationError("cq_check: constrained instance without Slater data");
  if (lambda_samples.empty()) throw ValidationError("cq_check: no lambda samples supplied");

  double min_margin = std::numeric_limits<double>::infinity();
  double sup_phi = -std::numeric_limits<double>::infinity();
  bool boxes_bounded = true;
  double min_slater_cost = std::numeric_limits<double>::infinity();

  for (std::size_t p = 0; p < enumerator.paths().size(); ++p) {
    const auto& v = enumerator.paths()[p];
    const OrdinaryControlPath slater = inst.cq->slater_point(v);
    const auto constraints = inst.constraints_for(v);
    for (const auto& lambda : lambda_samples) {
      for (const auto& g : constraints) {
        for (int i = 0; i < inst.grid.n_nodes(); ++i) {
          const double t = inst.grid.node(i);
          const double margin = -g.evaluator(lambda, slater, t);
          if (margin < min_margin) {
            min_margin = margin;
            report.worst = CqWitness{static_cast<int>(p), g.index, t, margin, lambda.brief()};
          }
        }
      }
      const Trajectory traj = inst.solve_dynamics(lambda, slater, v);
      const double cost = evaluate_cost(inst, lambda, traj, slater, v);
      sup_phi = std::max(sup_phi, cost);
      min_slater_cost = std::min(min_slater_cost, cost);
      const auto box = inst.box_for(lambda, v);
      if (!box || !box->lower.allFinite() || !box->upper.allFinite()) boxes_bounded = false;
    }
  }

  report.omega = min_margin;
  report.sup_phi_slater = sup_phi;
  report.alpha_lower = inst.cq->alpha_lower;
  report.alpha_confirmed = min_slater_cost >= inst.cq->alpha_lower - 1e-12;
  report.surrogate_bounded = boxes_bounded;
  report.passed = min_margin > 0.0 && report.alpha_confirmed && report.surrogate_bounded;
  return report;
}

KinkScan kink_scan(const ParametricInstance& inst, const Eigen::VectorXd& direction,
                   double s_min, double s_max, int n_points,
                   const SolveValueSettings& settings) {
  if (n_points < 3) throw ValidationError("kink_scan: needs at least three points");
  if (!(s_min < s_max)) throw ValidationError("kink_scan: empty segment");
  const double h = (s_max - s_min) / (n_points - 1);

  std::vector<Parameter> lambdas;
  lambdas.reserve(static_cast<std::size_t>(n_points));
  for (int j = 0; j < n_points; ++j) {
    const Eigen::VectorXd stacked = inst.space->center() + (s_min + j * h) * direction;
    if (!inst.space->contains(stacked, 1e-9))
      throw ValidationError("kink_scan: segment leaves the parameter ball at s = " +
                            std::to_string(s_min + j * h));
    lambdas.push_back(Parameter{inst.space, stacked});
  }

  std::vector<double> values(lambdas.size());
  parallel_for(lambdas.size(), settings.jobs, [&](std::size_t j) {
    SolveValueSettings local = settings;
    if (settings.jobs > 1) local.jobs = 1;
    values[j] = solve_value(inst, lambdas[j], local).value;
  });

  KinkScan scan;
  std::vector<double> jumps;
  for (int j = 1; j + 1 < n_points; ++j) {
    KinkPoint point;
    point.lambda = s_min + j * h;
    point.left_slope = (values[static_cast<std::size_t>(j)] -
                        values[static_cast<std::size_t>(j - 1)]) / h;
    point.right_slope = (values[static_cast<std::size_t>(j + 1)] -
                         values[static_cast<std::size_t>(j)]) / h;
    point.jump = std::abs(point.right_slope - point.left_slope);
    jumps.push_back(point.jump);
    scan.points.push_back(point);
  }

  // Local quotient noise: the median jump plus an absolute floor tied to the
  // slope scale; a genuine kink exceeds ten times that.
  std::vector<double> sorted = jumps;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  double slope_scale = 1.0;
  for (const auto& point : scan.points)
    slope_scale = std::max({slope_scale, std::abs(point.left_slope),
                            std::abs(point.right_slope)});
  scan.noise_floor = std::max(median, 1e-9 * slope_scale);
  for (auto& point : scan.points) point.flagged = point.jump > 10.0 * scan.noise_floor;
  return scan;
}

}  // namespace miocp
