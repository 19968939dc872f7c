#ifndef MIOCP_DYNAMICS_HPP
#define MIOCP_DYNAMICS_HPP

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "miocp/control_space.hpp"
#include "miocp/time_grid.hpp"

namespace miocp {

/// Max-node error target of the default integrator on calibration
/// instances; feasibility/deviation checks derive their slack from it.
inline constexpr double kIntegratorTolerance = 1e-6;

/// Dense realization of the generator A after spatial discretization.
/// The semigroup T(t) is the matrix exponential exp(A t).
struct GeneratorMatrix {
  Eigen::MatrixXd entries;

  GeneratorMatrix() = default;
  explicit GeneratorMatrix(Eigen::MatrixXd a);

  int dim() const { return static_cast<int>(entries.rows()); }
};

/// The semilinear right-hand side f(t, y, u, v) together with its declared
/// growth modulus k(t). `linear_in_yu` asserts f(t,y,u,v) = B_v y + D_v u + e_v
/// with coefficients independent of t; the propagator then advances each cell
/// with the exact affine step instead of freezing f.
struct SemilinearTerm {
  using Evaluator = std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& y,
                                                  const Eigen::VectorXd& u, int v)>;

  Evaluator evaluator;
  std::function<double(double)> lipschitz_modulus;  // k(t), nonnegative
  bool linear_in_yu = false;

  static SemilinearTerm zero(int dim);
};

/// State evolution on the nodes of a grid.
struct Trajectory {
  TimeGrid grid;
  std::vector<Eigen::VectorXd> states;  // n_cells + 1 entries

  const Eigen::VectorXd& initial() const { return states.front(); }
  const Eigen::VectorXd& terminal() const { return states.back(); }

  /// max over nodes of the weighted Euclidean norm sqrt(w)*|y_i|_2.
  double max_norm(double state_norm_weight = 1.0) const;
};

/// Data feeding the growth/deviation envelope
/// C(t) = gamma * exp(w0 (t - t0) + gamma * int_{t0}^t k).
struct GronwallData {
  double gamma = 1.0;
  double w0 = 0.0;
  std::vector<double> k_integral;  // cumulative trapezoid of k at each node; may be empty
};

/// Builds GronwallData with the cumulative integral of k filled in by the
/// trapezoid rule on the grid nodes.
GronwallData make_gronwall_data(double gamma, double w0, const std::function<double(double)>& k,
                                const TimeGrid& grid);

/// C(t_i) at every node. GronwallData without k_integral is treated as k = 0.
std::vector<double> gronwall_envelope(const GronwallData& data, const TimeGrid& grid);

/// Smallest lattice pair (gamma, w0) with ||exp(A (t_i - t0))||_2 <=
/// gamma * exp(w0 (t_i - t0)) at every node; "smallest" minimizes the
/// envelope value at tf (ties: smaller w0). Always a valid upper envelope
/// of the sampled norms. k_integral is left empty.
GronwallData estimate_semigroup_bounds(const GeneratorMatrix& gen, const TimeGrid& grid);

enum class IntegratorScheme {
  AffineExponential,  // exact per-cell affine step; requires linear_in_yu
  ExponentialEuler,   // exact exp(A dt), f frozen per cell + one corrector pass
  ImplicitEuler,      // first order; linear part implicit, f frozen at the left node
};

/// Precomputed per-grid stepping data. Immutable after construction and
/// safe to share across concurrently running propagations.
class Propagator {
 public:
  Propagator(GeneratorMatrix gen, SemilinearTerm f, TimeGrid grid, int control_dim,
             int n_modes, IntegratorScheme scheme);

  /// Convenience: AffineExponential when f.linear_in_yu, else ExponentialEuler.
  static IntegratorScheme default_scheme(const SemilinearTerm& f) {
    return f.linear_in_yu ? IntegratorScheme::AffineExponential
                          : IntegratorScheme::ExponentialEuler;
  }

  Trajectory propagate(const Eigen::VectorXd& y0, const OrdinaryControlPath& u,
                       const IntegerControlPath& v) const;

  const TimeGrid& grid() const { return grid_; }
  int dim() const { return gen_.dim(); }
  IntegratorScheme scheme() const { return scheme_; }

  /// Per-mode step matrices of the affine scheme: y_{i+1} = E_v y_i + Phi_v f(t_i, 0, u_i, v_i).
  const Eigen::MatrixXd& step_matrix(int v) const;
  const Eigen::MatrixXd& phi_matrix(int v) const;

 private:
  GeneratorMatrix gen_;
  SemilinearTerm f_;
  TimeGrid grid_;
  int control_dim_ = 0;
  int n_modes_ = 1;
  IntegratorScheme scheme_;
  // AffineExponential: per mode; ExponentialEuler: single entry (index 0).
  std::vector<Eigen::MatrixXd> exp_;   // E = exp(M dt)
  std::vector<Eigen::MatrixXd> phi_;   // Phi = dt * phi1(M dt) = M^{-1} (E - I) when invertible
  Eigen::PartialPivLU<Eigen::MatrixXd> implicit_lu_;  // LU of (I - dt A)
};

/// One-call form of Propagator::propagate with the scheme picked by
/// Propagator::default_scheme.
Trajectory propagate(const GeneratorMatrix& gen, const SemilinearTerm& f,
                     const Eigen::VectorXd& y0, const OrdinaryControlPath& u,
                     const IntegerControlPath& v, const TimeGrid& grid);

struct DeviationReport {
  double max_ratio = 0.0;
  int worst_node = 0;
  bool pass = true;
};

/// Checks |y1(t_i) - y2(t_i)| <= C(t_i) * y0_gap at every node, with C from
/// `data` and the supplied state-norm weight. Ratio must stay below
/// 1 + 10 * kIntegratorTolerance.
DeviationReport deviation_check(const Trajectory& traj1, const Trajectory& traj2,
                                const GronwallData& data, double y0_gap,
                                double state_norm_weight = 1.0);

}  // namespace miocp

#endif
