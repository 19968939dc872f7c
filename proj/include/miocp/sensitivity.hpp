#ifndef MIOCP_SENSITIVITY_HPP
#define MIOCP_SENSITIVITY_HPP

#include <optional>
#include <string>
#include <vector>

#include "miocp/duality.hpp"
#include "miocp/instance.hpp"
#include "miocp/solver.hpp"

namespace miocp {

struct SweepResult {
  std::vector<ValueSample> samples;
  TimeGrid grid;
  std::vector<double> wall_seconds;  // per sample
};

struct SweepSettings {
  SolveValueSettings solve;
  unsigned jobs = 1;  // across samples; inner solves run sequentially then
};

/// solve_value at each lambda; output order matches the input order.
/// Any failing sample aborts the sweep with its witness lambda.
SweepResult sweep(const ParametricInstance& inst, const std::vector<Parameter>& lambdas,
                  const SweepSettings& settings);

struct EmpiricalLipschitz {
  double constant = 0.0;
  int witness_i = -1;
  int witness_j = -1;
};

/// max over sample pairs of |nu_i - nu_j| / dist(lambda_i, lambda_j), with
/// the instance's product metric. Duplicate lambdas with distinct values
/// raise NumericalError.
EmpiricalLipschitz empirical_lipschitz(const SweepResult& sweep_result);

enum class TheoremScope {
  InitialData,  // constraints must be lambda-independent
  Joint,        // all three perturbation channels allowed
};

struct HatLReport {
  double value = 0.0;   // L-hat_nu = L_phi (C(tf) L0 + 1)
  double lphi = 0.0;
  double l0 = 0.0;
  double c_tf = 0.0;    // Gronwall envelope at tf
  double gamma = 0.0;
  double w0 = 0.0;
  double apriori_radius = 0.0;  // C(tf) (1 + K)
  double k_sup_y0 = 0.0;        // K = sup over ball of |y0(lambda)|
};

/// Initial-data Lipschitz constant with estimated semigroup bounds and the
/// instance's k. Scope InitialData rejects lambda-dependent constraints.
HatLReport theoretical_hat_L(const ParametricInstance& inst,
                             TheoremScope scope = TheoremScope::InitialData);

struct TildeCReport {
  double value = 0.0;
  double lphi_sup = 0.0;      // sup over surrogate members of L_phi(|y|, |u|)
  double constraint_term = 0.0;  // M * sup L_g(|u|) * mass bound
  double mass_bound = 0.0;
  double lg_sup = 0.0;
  double diameter_term = 0.0;  // 2 * diam B
  int surrogate_size = 0;      // members that passed the recheck
};

/// Constraint/cost perturbation constant assembled from the retained-iterate
/// surrogate of a prior sweep: members are the sweep's optimizing (u, v)
/// pairs, rechecked against the defining inequalities before use.
TildeCReport theoretical_tilde_C(const ParametricInstance& inst, const SweepResult& sweep_result,
                                 double mass_bound,
                                 const std::vector<Parameter>& lambda_samples);

/// L_nu = L-hat_nu + C-tilde.
double combined_L(const HatLReport& hat, const TildeCReport& tilde);

struct CqWitness {
  int mode_index = -1;
  int constraint = -1;
  double time = 0.0;
  double margin = 0.0;
  std::string lambda_brief;
};

struct CqReport {
  bool passed = false;
  bool no_constraints = false;  // vacuous Slater part
  double omega = 0.0;           // min margin found; > 0 when passed
  double sup_phi_slater = 0.0;  // sampled sup of the Slater-point costs
  double alpha_lower = 0.0;
  bool alpha_confirmed = false; // sampled costs never undercut alpha_lower
  bool surrogate_bounded = false;
  CqWitness worst;
  int n_lambda_samples = 0;
  int n_modes_checked = 0;
};

/// Verifies the Slater margin at every sampled lambda and enumerated path,
/// estimates the Slater cost sup, confirms the cost lower bound and the
/// boundedness of the constraint-induced boxes.
CqReport cq_check(const ParametricInstance& inst, const std::vector<Parameter>& lambda_samples,
                  const EnumerationCaps& caps);

struct LipschitzReport {
  EmpiricalLipschitz empirical;
  std::optional<HatLReport> hat;
  std::optional<TildeCReport> tilde;
  std::optional<double> combined;  // L_nu when both constants apply
  double slack = 0.0;
  bool pass = false;  // empirical <= applicable theoretical constant + slack
  std::string scope;  // "initial-data" | "constraints" | "joint"
};

struct KinkPoint {
  double lambda = 0.0;
  double left_slope = 0.0;
  double right_slope = 0.0;
  double jump = 0.0;
  bool flagged = false;
};

struct KinkScan {
  std::vector<KinkPoint> points;
  double noise_floor = 0.0;
};

/// One-sided difference quotients of nu along a 1D segment
/// lambda(s) = center + s * direction; flags points where the two sides
/// differ by more than 10x the local quotient noise.
KinkScan kink_scan(const ParametricInstance& inst, const Eigen::VectorXd& direction,
                   double s_min, double s_max, int n_points,
                   const SolveValueSettings& settings);

}  // namespace miocp

#endif
