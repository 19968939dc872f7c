#include "miocp/instances.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <utility>

#include "miocp/errors.hpp"

namespace miocp {

namespace {

Eigen::VectorXd trapezoid_weights(const TimeGrid& grid) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(grid.n_nodes(), grid.dt());
  w(0) *= 0.5;
  w(grid.n_nodes() - 1) *= 0.5;
  return w;
}

/// Quadratic tracking + energy cost shared by the heat and custom-linear
/// instances. Non-finite results name the offending term.
double tracking_energy_cost(const TrackingCostSpec& spec, const Parameter& lambda,
                            const Trajectory& traj, const OrdinaryControlPath& u,
                            const std::string& kind) {
  const auto targets = spec.target(lambda);
  double tracking = 0.0;
  for (int i = 0; i < traj.grid.n_nodes(); ++i) {
    const Eigen::VectorXd diff = traj.states[static_cast<std::size_t>(i)] -
                                 targets[static_cast<std::size_t>(i)];
    tracking += spec.time_weights(i) * spec.state_weight * diff.squaredNorm();
  }
  if (!std::isfinite(tracking))
    throw NumericalError("cost(" + kind + "): tracking term is non-finite");
  double energy = 0.0;
  for (int c = 0; c < u.grid.n_cells; ++c)
    energy += spec.energy_weights(c) * u.at_cell(c).squaredNorm();
  if (!std::isfinite(energy))
    throw NumericalError("cost(" + kind + "): energy term is non-finite");
  return tracking + energy;
}

}  // namespace

ParametricInstance make_example1(double tf, int n_cells, double ball_radius) {
  if (!(tf > 0.0)) throw ValidationError("make_example1: tf must be positive");
  ParametricInstance inst;
  inst.kind = "example1";
  inst.gen = GeneratorMatrix(Eigen::MatrixXd::Zero(1, 1));
  inst.grid = TimeGrid(0.0, tf, n_cells);
  inst.n_modes = 2;
  inst.control_dim = 0;
  inst.n_constraints = 0;

  inst.f.evaluator = [](double, const Eigen::VectorXd& y, const Eigen::VectorXd&, int v) {
    return (static_cast<double>(v) * y).eval();
  };
  inst.f.lipschitz_modulus = [](double) { return 1.0; };
  inst.f.linear_in_yu = true;

  inst.space = std::make_shared<ParameterSpace>(
      std::vector<ParameterSpace::Component>{
          {"lambda", 1, ComponentNorm::Abs, 1.0, ball_radius}},
      Eigen::VectorXd::Zero(1));
  inst.initial_state = [](const Parameter& lambda) {
    return Eigen::VectorXd::Constant(1, lambda.stacked(0)).eval();
  };
  inst.constraints_for = [](const IntegerControlPath&) { return std::vector<MixedConstraint>{}; };
  inst.box_for = [](const Parameter&, const IntegerControlPath&) {
    return std::optional<CellBoxes>{};
  };
  inst.cost = [](const Parameter&, const Trajectory& traj, const OrdinaryControlPath&,
                 const IntegerControlPath&) { return traj.terminal()(0); };

  inst.l0 = 1.0;
  inst.lphi_constant = [](double) { return 1.0; };
  inst.lphi_pair = [](double, double) { return 1.0; };
  inst.lg_sup = [](double) { return 0.0; };
  inst.convex = true;
  inst.lambda_independent_constraints = true;  // M = 0
  inst.lambda_independent_y0 = false;
  inst.state_norm_weight = 1.0;

  inst.propagator = std::make_shared<Propagator>(inst.gen, inst.f, inst.grid, inst.control_dim,
                                                 inst.n_modes,
                                                 IntegratorScheme::AffineExponential);
  return inst;
}

double example1_oracle(double lambda, double tf) {
  return lambda < 0.0 ? std::exp(tf) * lambda : lambda;
}

Eigen::VectorXd heat_profile(const std::string& preset, int n_interior, double amplitude) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_interior);
  const double dx = 1.0 / (n_interior + 1);
  if (preset == "zero") return out;
  if (preset == "gaussian-bump") {
    for (int j = 0; j < n_interior; ++j) {
      const double x = (j + 1) * dx;
      out(j) = amplitude * std::exp(-std::pow((x - 0.5) / 0.15, 2));
    }
    return out;
  }
  if (preset == "step") {
    for (int j = 0; j < n_interior; ++j) out(j) = (j + 1) * dx > 0.5 ? amplitude : 0.0;
    return out;
  }
  throw ValidationError("heat_profile: unknown preset '" + preset +
                        "' (expected zero, gaussian-bump or step)");
}

ParametricInstance make_heat_actuator(const HeatOptions& opts) {
  if (opts.nx < 3) throw ValidationError("make_heat_actuator: nx must be >= 3");
  if (!(opts.eps > 0.0)) throw ValidationError("make_heat_actuator: eps must be positive");
  if (!(opts.eps_radius >= 0.0) || opts.eps_radius >= opts.eps)
    throw ValidationError("make_heat_actuator: eps_radius must lie in [0, eps)");
  const int d = opts.nx - 1;
  const double dx = 1.0 / opts.nx;
  const TimeGrid grid = opts.grid;

  // Dirichlet Laplacian on the interior nodes.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    a(j, j) = -2.0 / (dx * dx);
    if (j > 0) a(j, j - 1) = 1.0 / (dx * dx);
    if (j + 1 < d) a(j, j + 1) = 1.0 / (dx * dx);
  }

  // Control windows: left and right third of (0,1), boundary nodes included.
  Eigen::VectorXd chi1 = Eigen::VectorXd::Zero(d), chi2 = Eigen::VectorXd::Zero(d);
  for (int j = 0; j < d; ++j) {
    const double x = (j + 1) * dx;
    if (x <= 1.0 / 3.0 + 1e-12) chi1(j) = 1.0;
    if (x >= 2.0 / 3.0 - 1e-12) chi2(j) = 1.0;
  }
  if (chi1.sum() == 0.0 || chi2.sum() == 0.0)
    throw ValidationError("make_heat_actuator: empty control window");
  if ((chi1.array() * chi2.array()).sum() != 0.0)
    throw ValidationError("make_heat_actuator: control windows overlap");

  ParametricInstance inst;
  inst.kind = "heat";
  inst.gen = GeneratorMatrix(a);
  inst.grid = grid;
  inst.n_modes = 2;
  inst.control_dim = 1;
  inst.n_constraints = 2;
  inst.state_norm_weight = dx;

  inst.f.evaluator = [chi1, chi2](double, const Eigen::VectorXd&, const Eigen::VectorXd& u,
                                  int v) {
    return (-u(0) * (v == 1 ? chi1 : chi2)).eval();
  };
  const double chi_norm = std::sqrt(dx) * std::sqrt(std::max(chi1.sum(), chi2.sum()));
  const double u_max = 1.0 + opts.eps + opts.eps_radius;
  inst.f.lipschitz_modulus = [chi_norm, u_max](double) { return u_max * chi_norm; };
  inst.f.linear_in_yu = true;

  Eigen::VectorXd ybar = opts.ybar.size() ? opts.ybar : Eigen::VectorXd::Zero(d);
  if (ybar.size() != d) throw ValidationError("make_heat_actuator: ybar must have nx-1 entries");
  std::vector<Eigen::VectorXd> yhat_base = opts.yhat_nodes;
  if (yhat_base.empty())
    yhat_base.assign(static_cast<std::size_t>(grid.n_nodes()), Eigen::VectorXd::Zero(d));
  if (yhat_base.size() != static_cast<std::size_t>(grid.n_nodes()))
    throw ValidationError("make_heat_actuator: yhat needs one profile per time node");
  for (const auto& y : yhat_base)
    if (y.size() != d)
      throw ValidationError("make_heat_actuator: yhat profiles must have nx-1 entries");

  // lambda = (ybar, eps, yhat-shift); the shift adds to the stored target
  // uniformly in time so the component norm is the plain discrete-L2 norm.
  Eigen::VectorXd center(2 * d + 1);
  center.segment(0, d) = ybar;
  center(d) = opts.eps;
  center.segment(d + 1, d) = Eigen::VectorXd::Zero(d);
  inst.space = std::make_shared<ParameterSpace>(
      std::vector<ParameterSpace::Component>{
          {"ybar", d, ComponentNorm::WeightedL2, dx, opts.ybar_radius},
          {"eps", 1, ComponentNorm::Abs, 1.0, opts.eps_radius},
          {"yhat", d, ComponentNorm::WeightedL2, dx, opts.yhat_radius}},
      center);

  inst.initial_state = [d](const Parameter& lambda) {
    return lambda.stacked.segment(0, d).eval();
  };

  const double delta = opts.delta;
  // Validate grid alignment once, with the center disturbance level.
  (void)dwell_bound(IntegerControlPath::constant(grid, 0, 2), delta, opts.eps);

  TrackingCostSpec tracking;
  tracking.time_weights = trapezoid_weights(grid);
  tracking.state_weight = dx;
  tracking.energy_weights = Eigen::VectorXd::Constant(grid.n_cells, grid.dt());
  auto base = std::make_shared<std::vector<Eigen::VectorXd>>(std::move(yhat_base));
  tracking.target = [base, d](const Parameter& lambda) {
    const Eigen::VectorXd shift = lambda.stacked.segment(d + 1, d);
    std::vector<Eigen::VectorXd> nodes(base->size());
    for (std::size_t i = 0; i < base->size(); ++i) nodes[i] = (*base)[i] + shift;
    return nodes;
  };
  inst.tracking = tracking;
  inst.cost = [tracking](const Parameter& lambda, const Trajectory& traj,
                         const OrdinaryControlPath& u, const IntegerControlPath&) {
    return tracking_energy_cost(tracking, lambda, traj, u, "heat");
  };

  inst.constraints_for = [delta, d](const IntegerControlPath& v) {
    std::vector<MixedConstraint> out(2);
    out[0].index = 1;
    out[0].kind = ConstraintKind::EssSupGlobal;
    out[0].evaluator = [delta, d, v](const Parameter& lambda, const OrdinaryControlPath& u,
                                     double) {
      const std::vector<double> bound = dwell_bound(v, delta, lambda.stacked(d));
      double worst = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < u.grid.n_cells; ++c)
        worst = std::max(worst, u.at_cell(c)(0) - bound[static_cast<std::size_t>(c)]);
      return worst;
    };
    out[0].lipschitz_modulus_Lg = [](double) { return 1.0; };
    out[0].cellwise = [delta, d, v](const Parameter& lambda) {
      const std::vector<double> bound = dwell_bound(v, delta, lambda.stacked(d));
      MixedConstraint::CellwiseMaxAffine cw;
      cw.sign = 1.0;
      cw.offsets = -Eigen::Map<const Eigen::VectorXd>(bound.data(),
                                                      static_cast<Eigen::Index>(bound.size()));
      return cw;
    };
    out[1].index = 2;
    out[1].kind = ConstraintKind::EssSupGlobal;
    out[1].evaluator = [](const Parameter&, const OrdinaryControlPath& u, double) {
      double worst = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < u.grid.n_cells; ++c) worst = std::max(worst, -u.at_cell(c)(0));
      return worst;
    };
    out[1].lipschitz_modulus_Lg = [](double) { return 0.0; };
    const int n = v.grid.n_cells;
    out[1].cellwise = [n](const Parameter&) {
      return MixedConstraint::CellwiseMaxAffine{-1.0, Eigen::VectorXd::Zero(n)};
    };
    return out;
  };

  inst.box_for = [delta, d](const Parameter& lambda,
                            const IntegerControlPath& v) -> std::optional<CellBoxes> {
    const std::vector<double> bound = dwell_bound(v, delta, lambda.stacked(d));
    CellBoxes box;
    box.lower = Eigen::VectorXd::Zero(v.grid.n_cells);
    box.upper = Eigen::Map<const Eigen::VectorXd>(bound.data(),
                                                  static_cast<Eigen::Index>(bound.size()));
    return box;
  };

  CqData cq;
  const double slater_value = opts.eps / 2.0;
  cq.slater_point = [slater_value](const IntegerControlPath& v) {
    return OrdinaryControlPath::constant(v.grid, Eigen::VectorXd::Constant(1, slater_value));
  };
  cq.omega_declared = opts.eps / 2.0 - opts.eps_radius;
  cq.alpha_lower = 0.0;
  inst.cq = cq;

  // sup over the ball and the horizon of the target norm, for the cost
  // modulus L_phi(|y|, |u|) = 2 T (|y| + sup|yhat|).
  double yhat_sup = 0.0;
  for (const auto& y : *base) yhat_sup = std::max(yhat_sup, std::sqrt(dx) * y.norm());
  yhat_sup += opts.yhat_radius;
  const double horizon = grid.horizon();
  inst.l0 = 1.0;
  inst.lphi_constant = [horizon, yhat_sup](double radius) {
    return 2.0 * horizon * (radius + yhat_sup);
  };
  inst.lphi_pair = [horizon, yhat_sup](double y_norm, double) {
    return 2.0 * horizon * (y_norm + yhat_sup);
  };
  inst.lg_sup = [](double) { return 1.0; };
  inst.convex = true;
  inst.lambda_independent_constraints = opts.eps_radius == 0.0;
  inst.lambda_independent_y0 = opts.ybar_radius == 0.0;

  inst.propagator = std::make_shared<Propagator>(inst.gen, inst.f, inst.grid, inst.control_dim,
                                                 inst.n_modes,
                                                 IntegratorScheme::AffineExponential);
  return inst;
}

ParametricInstance make_custom_linear(const CustomLinearOptions& opts) {
  const int d = static_cast<int>(opts.a_matrix.rows());
  const int m = opts.control_dim;
  if (opts.n_modes < 1) throw ValidationError("make_custom_linear: n_modes must be >= 1");
  if (static_cast<int>(opts.input.size()) != opts.n_modes && m > 0)
    throw ValidationError("make_custom_linear: one input matrix per mode required");
  if (opts.box_lower.has_value() != opts.box_upper.has_value())
    throw ValidationError("make_custom_linear: box bounds must be given together");
  if (m == 0 && opts.box_lower)
    throw ValidationError("make_custom_linear: box constraints need a control");

  ParametricInstance inst;
  inst.kind = "custom-linear";
  inst.gen = GeneratorMatrix(opts.a_matrix);
  inst.grid = opts.grid;
  inst.n_modes = opts.n_modes;
  inst.control_dim = m;
  inst.n_constraints = opts.box_lower ? 2 : 0;
  inst.state_norm_weight = opts.state_norm_weight;

  std::vector<Eigen::MatrixXd> input = opts.input;
  if (input.empty()) input.assign(static_cast<std::size_t>(opts.n_modes), Eigen::MatrixXd::Zero(d, std::max(m, 0)));
  std::vector<Eigen::VectorXd> drift = opts.drift;
  if (drift.empty()) drift.assign(static_cast<std::size_t>(opts.n_modes), Eigen::VectorXd::Zero(d));
  for (const auto& dm : input)
    if (dm.rows() != d || dm.cols() != m)
      throw ValidationError("make_custom_linear: input matrix has wrong shape");
  for (const auto& ev : drift)
    if (ev.size() != d) throw ValidationError("make_custom_linear: drift vector has wrong size");

  inst.f.evaluator = [input, drift, m](double, const Eigen::VectorXd&, const Eigen::VectorXd& u,
                                       int v) {
    const auto vi = static_cast<std::size_t>(v);
    if (m == 0) return drift[vi].eval();
    return (input[vi] * u + drift[vi]).eval();
  };
  double k_bound = 0.0;
  const double u_ref =
      opts.box_lower ? std::max(std::abs(*opts.box_lower), std::abs(*opts.box_upper)) : 1.0;
  for (int v = 0; v < opts.n_modes; ++v) {
    const auto vi = static_cast<std::size_t>(v);
    double norm_d = m > 0 ? input[vi].norm() : 0.0;
    k_bound = std::max(k_bound, drift[vi].norm() + norm_d * u_ref * std::sqrt(double(m)));
  }
  inst.f.lipschitz_modulus = [k_bound](double) { return k_bound; };
  inst.f.linear_in_yu = true;

  inst.space = std::make_shared<ParameterSpace>(
      std::vector<ParameterSpace::Component>{
          {"y0", d, ComponentNorm::WeightedL2, opts.state_norm_weight, opts.ball_radius}},
      Eigen::VectorXd::Zero(d));
  inst.initial_state = [](const Parameter& lambda) { return lambda.stacked.eval(); };

  std::vector<Eigen::VectorXd> targets = opts.target_nodes;
  if (targets.empty())
    targets.assign(static_cast<std::size_t>(opts.grid.n_nodes()), Eigen::VectorXd::Zero(d));
  if (targets.size() != static_cast<std::size_t>(opts.grid.n_nodes()))
    throw ValidationError("make_custom_linear: one target per time node required");

  TrackingCostSpec tracking;
  tracking.time_weights = trapezoid_weights(opts.grid);
  tracking.state_weight = opts.state_norm_weight;
  tracking.energy_weights = Eigen::VectorXd::Constant(opts.grid.n_cells, opts.grid.dt());
  tracking.target = [targets](const Parameter&) { return targets; };
  inst.tracking = tracking;
  inst.cost = [tracking](const Parameter& lambda, const Trajectory& traj,
                         const OrdinaryControlPath& u, const IntegerControlPath&) {
    return tracking_energy_cost(tracking, lambda, traj, u, "custom-linear");
  };

  if (opts.box_lower) {
    const double lo = *opts.box_lower, hi = *opts.box_upper;
    inst.constraints_for = [lo, hi](const IntegerControlPath& v) {
      std::vector<MixedConstraint> out(2);
      const int n = v.grid.n_cells;
      out[0].index = 1;
      out[0].kind = ConstraintKind::PerCellBox;
      out[0].evaluator = [hi](const Parameter&, const OrdinaryControlPath& u, double t) {
        return u.at_cell(u.grid.cell_of(t)).maxCoeff() - hi;
      };
      out[0].lipschitz_modulus_Lg = [](double) { return 0.0; };
      out[0].cellwise = [hi, n](const Parameter&) {
        return MixedConstraint::CellwiseMaxAffine{1.0, Eigen::VectorXd::Constant(n, -hi)};
      };
      out[1].index = 2;
      out[1].kind = ConstraintKind::PerCellBox;
      out[1].evaluator = [lo](const Parameter&, const OrdinaryControlPath& u, double t) {
        return lo - u.at_cell(u.grid.cell_of(t)).minCoeff();
      };
      out[1].lipschitz_modulus_Lg = [](double) { return 0.0; };
      out[1].cellwise = [lo, n](const Parameter&) {
        return MixedConstraint::CellwiseMaxAffine{-1.0, Eigen::VectorXd::Constant(n, lo)};
      };
      return out;
    };
    inst.box_for = [lo, hi, m](const Parameter&,
                               const IntegerControlPath& v) -> std::optional<CellBoxes> {
      CellBoxes box;
      box.lower = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(v.grid.n_cells) * m, lo);
      box.upper = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(v.grid.n_cells) * m, hi);
      return box;
    };
    if (lo < hi) {
      CqData cq;
      const Eigen::VectorXd mid = Eigen::VectorXd::Constant(m, 0.5 * (lo + hi));
      cq.slater_point = [mid](const IntegerControlPath& v) {
        return OrdinaryControlPath::constant(v.grid, mid);
      };
      cq.omega_declared = 0.5 * (hi - lo);
      cq.alpha_lower = 0.0;
      inst.cq = cq;
    }
  } else {
    inst.constraints_for = [](const IntegerControlPath&) {
      return std::vector<MixedConstraint>{};
    };
    inst.box_for = [](const Parameter&, const IntegerControlPath&) {
      return std::optional<CellBoxes>{};
    };
  }

  double yhat_sup = 0.0;
  for (const auto& y : targets)
    yhat_sup = std::max(yhat_sup, std::sqrt(opts.state_norm_weight) * y.norm());
  const double horizon = opts.grid.horizon();
  inst.l0 = 1.0;
  inst.lphi_constant = [horizon, yhat_sup](double radius) {
    return 2.0 * horizon * (radius + yhat_sup);
  };
  inst.lphi_pair = [](double, double) { return 0.0; };  // cost independent of lambda
  inst.lg_sup = [](double) { return 0.0; };
  inst.convex = true;
  inst.lambda_independent_constraints = true;
  inst.lambda_independent_y0 = false;

  inst.propagator = std::make_shared<Propagator>(inst.gen, inst.f, inst.grid, inst.control_dim,
                                                 inst.n_modes,
                                                 IntegratorScheme::AffineExponential);
  return inst;
}

}  // namespace miocp
