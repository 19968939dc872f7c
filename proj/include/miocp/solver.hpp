#ifndef MIOCP_SOLVER_HPP
#define MIOCP_SOLVER_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "miocp/instance.hpp"

namespace miocp {

struct InnerSolveSettings {
  int max_iters = 2000;
  double grad_tol = 1e-9;      // projected-gradient norm
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;      // step shrink factor, in (0, 1)
  double feas_tol = kFeasibilityTolerance;

  void validate() const;
};

enum class InnerStatus { Converged, IterCap, Infeasible };

struct InnerSolveResult {
  OrdinaryControlPath u;
  double value = 0.0;          // nu^v(lambda)
  int iterations = 0;
  InnerStatus status = InnerStatus::Converged;
  double projected_gradient_norm = 0.0;
};

/// Minimizes u -> phi(lambda, y(u,v), u, v) over the box induced by the
/// constraints for this v, by projected gradient with Armijo backtracking.
/// m = 0 short-circuits to the bare trajectory cost.
InnerSolveResult inner_solve(const ParametricInstance& inst, const Parameter& lambda,
                             const IntegerControlPath& v, const InnerSolveSettings& settings);

/// Gradient of the reduced cost u -> phi(lambda, y(u,v), u, v), one entry per
/// cell and control component, computed by the adjoint of the discrete
/// (affine-exponential) dynamics. Requires linear_in_yu dynamics and a
/// tracking-form cost.
Eigen::VectorXd reduced_gradient(const ParametricInstance& inst, const Parameter& lambda,
                                 const IntegerControlPath& v, const OrdinaryControlPath& u);

struct SolveValueSettings {
  InnerSolveSettings inner;
  EnumerationCaps caps;
  unsigned jobs = 1;
};

/// nu(lambda): minimum of inner_solve over the enumerated integer paths.
/// Ties break to the lexicographically first path, independent of schedule.
/// Throws NumericalError when every path is infeasible.
ValueSample solve_value(const ParametricInstance& inst, const Parameter& lambda,
                        const SolveValueSettings& settings);

}  // namespace miocp

#endif
