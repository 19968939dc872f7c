#ifndef MIOCP_DUALITY_HPP
#define MIOCP_DUALITY_HPP

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <vector>

#include "miocp/instance.hpp"
#include "miocp/solver.hpp"

namespace miocp {

/// Objective floor below which the inner minimization is declared unbounded
/// (membership mu not in F_v).
inline constexpr double kDualUnboundedFloor = -1e12;

/// Discrete nonnegative multiplier measure: one row of node weights per
/// constraint; integrals against g become weighted node sums.
struct MultiplierMeasure {
  TimeGrid grid;
  Eigen::MatrixXd weights;  // M x (n_cells + 1), all >= 0

  static MultiplierMeasure zero(const TimeGrid& grid, int n_constraints);
  double total_mass() const { return weights.size() == 0 ? 0.0 : weights.sum(); }
  double row_mass(int k) const { return weights.row(k).sum(); }
};

/// phi(lambda, y(u,v), u, v) + sum_k sum_i g_k^v(lambda, u, t_i) * w_{k,i}.
double lagrangian(const ParametricInstance& inst, const Parameter& lambda,
                  const OrdinaryControlPath& u, const IntegerControlPath& v,
                  const MultiplierMeasure& mu);

/// Explicit quadratic model of the reduced cost for fixed (lambda, v):
/// phi(u) = q0 + c'u + u'Hu/2 on the stacked control vector. Exact for
/// linear_in_yu dynamics with tracking-form costs; assembled by propagating
/// unit control impulses through the instance's own integrator.
struct QuadraticCostModel {
  double q0 = 0.0;
  Eigen::VectorXd c;
  Eigen::MatrixXd h;
  Eigen::LLT<Eigen::MatrixXd> h_llt;
  double h_min_eig = 0.0;
  bool positive_definite = false;

  double eval(const Eigen::VectorXd& u) const {
    return q0 + c.dot(u) + 0.5 * u.dot(h * u);
  }
};

/// Builds the quadratic model; requires inst.tracking and linear_in_yu.
QuadraticCostModel build_quadratic_model(const ParametricInstance& inst,
                                         const Parameter& lambda, const IntegerControlPath& v);

struct DualFunctionSettings {
  int max_iters = 300;   // conjugate ascent / descent iterations
  double tol = 1e-13;    // relative improvement cutoff of the conjugate route
};

struct DualFunctionResult {
  double value = 0.0;             // certified lower bound on inf_u L_v(lambda, u, mu)
  bool unbounded = false;         // minus-infinity sentinel: mu not in F_v(lambda)
  OrdinaryControlPath minimizer;  // inner minimizer estimate u_mu
};

/// Reusable state across dual_function calls with the same (lambda, v):
/// the quadratic model and the warm-started conjugate weights.
struct DualFunctionWorkspace {
  std::shared_ptr<const QuadraticCostModel> model;
  std::vector<Eigen::VectorXd> w_tilde;  // one block per ess-sup constraint
};

/// h_v(lambda, mu) = inf over unconstrained u of the Lagrangian. Instances
/// with a quadratic model take a conjugate route whose every iterate yields a
/// certified lower bound (so weak duality holds at any accuracy); other
/// instances run Armijo descent with divergence detection.
DualFunctionResult dual_function(const ParametricInstance& inst, const Parameter& lambda,
                                 const IntegerControlPath& v, const MultiplierMeasure& mu,
                                 const DualFunctionSettings& settings = {},
                                 DualFunctionWorkspace* workspace = nullptr);

struct DualAscentSettings {
  int iterations = 400;
  double step_scale = 0.0;  // c in step c/sqrt(iter); 0 = use the Slater margin
  DualFunctionSettings inner;
  int max_retries = 20;     // weight shrinks on unbounded inner results
};

struct DualAscentResult {
  MultiplierMeasure best_mu;
  double best_value = 0.0;              // h_v at best_mu
  std::vector<double> best_so_far;      // per-iteration monotone trace
  std::vector<double> best_mass_trace;  // total mass of the accepted mu per iteration
  int iterations = 0;
};

/// Projected subgradient ascent on mu >= 0 of h_v; the subgradient entry at
/// (k, i) is g_k^v(lambda, u_mu, t_i) at the inner minimizer. An optional
/// initial measure warm-starts the ascent.
DualAscentResult dual_ascent(const ParametricInstance& inst, const Parameter& lambda,
                             const IntegerControlPath& v, const DualAscentSettings& settings,
                             const MultiplierMeasure* warm_start = nullptr);

/// Per-mode multipliers indexed like the enumerated path list.
struct DualPoint {
  std::vector<MultiplierMeasure> per_mode;
};

struct DualValueResult {
  double value = 0.0;  // Delta-hat(lambda)
  bool unbounded = false;
  int argmin_mode = -1;     // index into the enumerated path list
  int offending_mode = -1;  // set when unbounded
};

/// Delta-hat(lambda): the value of the separable dual point assembled from
/// the per-mode ascents, i.e. the minimum of the per-mode dual values.
DualValueResult dual_value(const std::vector<double>& per_mode_values,
                           const std::vector<bool>& per_mode_unbounded);

/// Explicit multiplier mass bound
///   (diam^2 + sup_{v,lambda} phi(lambda, y(slater_v,v), slater_v, v) - alpha_lower) / omega
/// with the sup estimated over the given lambda samples and enumerated paths.
double multiplier_mass_bound(const ParametricInstance& inst,
                             const std::vector<Parameter>& lambda_samples,
                             const std::vector<IntegerControlPath>& paths, double omega,
                             double alpha_lower);

}  // namespace miocp

#endif
