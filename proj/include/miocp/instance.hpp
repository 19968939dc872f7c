#ifndef MIOCP_INSTANCE_HPP
#define MIOCP_INSTANCE_HPP

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "miocp/control_space.hpp"
#include "miocp/dynamics.hpp"
#include "miocp/parameter.hpp"

namespace miocp {

/// Stacked per-cell bounds on the ordinary control, aligned with
/// OrdinaryControlPath::stacked(). All in-scope constraint systems reduce to
/// such boxes.
struct CellBoxes {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  bool feasible() const { return (upper - lower).minCoeff() >= 0.0; }
  Eigen::VectorXd project(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
  }
  Eigen::VectorXd midpoint() const { return 0.5 * (lower + upper); }
};

/// Structure of costs of the form
///   sum_i c_i * w * |y_i - target_i(lambda)|^2  +  sum_c e_c * |u_c|^2,
/// (time-trapezoid tracking plus control energy). Instances that expose it
/// enable the exact quadratic machinery of the dual module.
struct TrackingCostSpec {
  Eigen::VectorXd time_weights;  // c_i per node (trapezoid * dt)
  double state_weight = 1.0;     // w (discrete-L2 cell weight)
  Eigen::VectorXd energy_weights;  // e_c per cell (dt)
  // Node targets for a given parameter; size n_nodes, each of state dim.
  std::function<std::vector<Eigen::VectorXd>(const Parameter&)> target;
};

/// Slater data of the constraint qualification.
struct CqData {
  // Fixed Slater control for a given integer path (independent of lambda).
  std::function<OrdinaryControlPath(const IntegerControlPath&)> slater_point;
  double omega_declared = 0.0;  // claimed uniform margin on the ball
  double alpha_lower = 0.0;     // cost lower bound on the ball
};

/// Full problem data of one parametric mixed-integer optimal control
/// instance. Immutable after construction by one of the factories.
struct ParametricInstance {
  std::string kind;

  GeneratorMatrix gen;
  SemilinearTerm f;
  TimeGrid grid;
  int n_modes = 1;
  int control_dim = 0;  // m

  std::shared_ptr<const ParameterSpace> space;
  std::function<Eigen::VectorXd(const Parameter&)> initial_state;  // y0(lambda)
  std::function<std::vector<MixedConstraint>(const IntegerControlPath&)> constraints_for;
  // Box realization of the constraint system; empty when M = 0.
  std::function<std::optional<CellBoxes>(const Parameter&, const IntegerControlPath&)> box_for;
  std::function<double(const Parameter&, const Trajectory&, const OrdinaryControlPath&,
                       const IntegerControlPath&)> cost;
  std::optional<TrackingCostSpec> tracking;
  std::optional<CqData> cq;

  int n_constraints = 0;  // M
  double state_norm_weight = 1.0;

  // Declared Lipschitz moduli.
  double l0 = 0.0;  // |y0(l1) - y0(l2)| <= L0 |l1 - l2|
  // Constant-form modulus, valid on the a-priori state ball of given radius.
  std::function<double(double)> lphi_constant;
  // Pair-form modulus L_phi(|y|, |u|).
  std::function<double(double, double)> lphi_pair;
  // sup_k L_g(|u|) over constraints.
  std::function<double(double)> lg_sup;

  bool convex = false;
  bool lambda_independent_constraints = false;
  bool lambda_independent_y0 = false;

  std::shared_ptr<const Propagator> propagator;

  Parameter center() const { return Parameter{space, space->center()}; }
  Parameter make_parameter(const Eigen::VectorXd& stacked) const;
  Trajectory solve_dynamics(const Parameter& lambda, const OrdinaryControlPath& u,
                            const IntegerControlPath& v) const;
};

/// Result of one value-function evaluation nu(lambda).
struct ValueSample {
  Parameter lambda;
  double value = 0.0;
  IntegerControlPath best_v;
  OrdinaryControlPath best_u;
  std::string status;      // "converged" | "iter-cap"
  int inner_iterations = 0;
};

/// The instance's cost functional; rethrows non-finite results as
/// NumericalError with the instance's term diagnostics.
double evaluate_cost(const ParametricInstance& inst, const Parameter& lambda,
                     const Trajectory& traj, const OrdinaryControlPath& u,
                     const IntegerControlPath& v);

}  // namespace miocp

#endif
