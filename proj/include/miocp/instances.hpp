#ifndef MIOCP_INSTANCES_HPP
#define MIOCP_INSTANCES_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "miocp/instance.hpp"

namespace miocp {

/// Scalar bilinear switching instance: minimize y(tf) subject to
/// y' = v y, y(0) = lambda, v in {0,1}. No ordinary control, no mixed
/// constraints; the value function is known in closed form.
ParametricInstance make_example1(double tf, int n_cells, double ball_radius = 2.0);

/// Closed-form value function of the scalar bilinear instance.
double example1_oracle(double lambda, double tf);

/// Spatial profiles for heat targets/initial states on the interior nodes of
/// (0, 1): "zero", "gaussian-bump", "step".
Eigen::VectorXd heat_profile(const std::string& preset, int n_interior, double amplitude = 1.0);

struct HeatOptions {
  int nx = 12;               // spatial cells on (0,1); state dim = nx - 1
  TimeGrid grid{0.0, 1.0, 16};
  double delta = 0.25;       // dwell-time window length
  double eps = 0.1;          // disturbance level (center value)
  Eigen::VectorXd ybar;      // initial profile (defaults to zero)
  // Target at each time node; defaults to zero held constant in time.
  std::vector<Eigen::VectorXd> yhat_nodes;
  // Parameter-ball radii of the three components (0 = not perturbed).
  double ybar_radius = 0.0;
  double eps_radius = 0.0;
  double yhat_radius = 0.0;
};

/// Heat actuator positioning: 1D Dirichlet heat equation with two disjoint
/// control windows, switched actuator, dwell-time-coupled control bounds and
/// quadratic tracking + energy cost. lambda = (ybar, eps, yhat).
ParametricInstance make_heat_actuator(const HeatOptions& opts);

struct CustomLinearOptions {
  Eigen::MatrixXd a_matrix;                 // generator
  TimeGrid grid{0.0, 1.0, 8};
  int n_modes = 1;
  int control_dim = 0;
  std::vector<Eigen::MatrixXd> input;       // D_v per mode (d x m)
  std::vector<Eigen::VectorXd> drift;       // e_v per mode (d)
  std::optional<double> box_lower;          // constant per-cell box, both empty => M = 0
  std::optional<double> box_upper;
  std::vector<Eigen::VectorXd> target_nodes;  // tracking target per node (defaults to 0)
  double ball_radius = 1.0;                 // lambda = y0, Euclidean norm
  double state_norm_weight = 1.0;
};

/// Linear test dynamics y' = A y + D_v u + e_v with tracking + energy cost,
/// y0(lambda) = lambda and optional constant box constraints on u.
ParametricInstance make_custom_linear(const CustomLinearOptions& opts);

}  // namespace miocp

#endif
