#include "miocp/dynamics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "miocp/errors.hpp"

namespace miocp {

namespace {

/// E = exp(M dt) and Phi = dt * phi1(M dt) via the augmented-block
/// exponential; valid for singular M.
void step_matrices(const Eigen::MatrixXd& m, double dt, Eigen::MatrixXd& e_out,
                   Eigen::MatrixXd& phi_out) {
  const int d = static_cast<int>(m.rows());
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  block.topLeftCorner(d, d) = m * dt;
  block.topRightCorner(d, d) = Eigen::MatrixXd::Identity(d, d) * dt;
  const Eigen::MatrixXd big = block.exp();
  if (!big.allFinite())
    throw NumericalError("step_matrices: matrix exponential overflow (unbounded growth)");
  e_out = big.topLeftCorner(d, d);
  phi_out = big.topRightCorner(d, d);
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

GeneratorMatrix::GeneratorMatrix(Eigen::MatrixXd a) : entries(std::move(a)) {
  if (entries.rows() != entries.cols())
    throw ValidationError("GeneratorMatrix: matrix must be square, got " +
                          std::to_string(entries.rows()) + "x" + std::to_string(entries.cols()));
  if (entries.rows() < 1) throw ValidationError("GeneratorMatrix: dimension must be positive");
  if (!entries.allFinite()) throw ValidationError("GeneratorMatrix: non-finite entries");
}

SemilinearTerm SemilinearTerm::zero(int dim) {
  SemilinearTerm f;
  f.evaluator = [dim](double, const Eigen::VectorXd&, const Eigen::VectorXd&, int) {
    return Eigen::VectorXd::Zero(dim).eval();
  };
  f.lipschitz_modulus = [](double) { return 0.0; };
  f.linear_in_yu = true;
  return f;
}

double Trajectory::max_norm(double state_norm_weight) const {
  double m = 0.0;
  for (const auto& y : states) m = std::max(m, y.norm());
  return std::sqrt(state_norm_weight) * m;
}

GronwallData make_gronwall_data(double gamma, double w0, const std::function<double(double)>& k,
                                const TimeGrid& grid) {
  if (!(gamma >= 0.0) || !(w0 >= 0.0) || !std::isfinite(gamma) || !std::isfinite(w0))
    throw ValidationError("make_gronwall_data: gamma and w0 must be finite and nonnegative");
  GronwallData data;
  data.gamma = gamma;
  data.w0 = w0;
  data.k_integral.resize(static_cast<std::size_t>(grid.n_nodes()));
  data.k_integral[0] = 0.0;
  const double dt = grid.dt();
  double prev = k(grid.node(0));
  for (int i = 0; i < grid.n_cells; ++i) {
    const double next = k(grid.node(i + 1));
    if (!(prev >= 0.0) || !(next >= 0.0))
      throw ValidationError("make_gronwall_data: k(t) must be nonnegative");
    data.k_integral[static_cast<std::size_t>(i + 1)] =
        data.k_integral[static_cast<std::size_t>(i)] + 0.5 * dt * (prev + next);
    prev = next;
  }
  return data;
}

std::vector<double> gronwall_envelope(const GronwallData& data, const TimeGrid& grid) {
  if (!std::isfinite(data.gamma) || !std::isfinite(data.w0))
    throw ValidationError("gronwall_envelope: non-finite gamma or w0");
  if (!data.k_integral.empty() &&
      data.k_integral.size() != static_cast<std::size_t>(grid.n_nodes()))
    throw ValidationError("gronwall_envelope: k_integral size does not match the grid");
  std::vector<double> c(static_cast<std::size_t>(grid.n_nodes()));
  for (int i = 0; i < grid.n_nodes(); ++i) {
    const double ik = data.k_integral.empty() ? 0.0 : data.k_integral[static_cast<std::size_t>(i)];
    c[static_cast<std::size_t>(i)] =
        data.gamma * std::exp(data.w0 * (grid.node(i) - grid.t0) + data.gamma * ik);
  }
  return c;
}

GronwallData estimate_semigroup_bounds(const GeneratorMatrix& gen, const TimeGrid& grid) {
  const int d = gen.dim();
  const double dt = grid.dt();
  Eigen::MatrixXd step = (gen.entries * dt).exp();
  if (!step.allFinite())
    throw NumericalError("estimate_semigroup_bounds: matrix exponential overflow "
                         "(unbounded growth over one cell)");

  std::vector<double> norms(static_cast<std::size_t>(grid.n_nodes()));
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(d, d);
  for (int i = 0; i < grid.n_nodes(); ++i) {
    if (!power.allFinite() || spectral_norm(power) > 1e150)
      throw NumericalError("estimate_semigroup_bounds: unbounded growth at node " +
                           std::to_string(i));
    norms[static_cast<std::size_t>(i)] = spectral_norm(power);
    if (i < grid.n_cells) power = step * power;
  }

  // Candidate decay rates: 0 plus a lattice up to the worst observed
  // per-node growth exponent.
  double w_max = 0.0;
  for (int i = 1; i < grid.n_nodes(); ++i) {
    const double s = norms[static_cast<std::size_t>(i)];
    if (s > 1.0) w_max = std::max(w_max, std::log(s) / (grid.node(i) - grid.t0));
  }
  constexpr int kLatticePoints = 64;
  double best_gamma = 0.0, best_w0 = 0.0;
  double best_envelope = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= kLatticePoints; ++j) {
    const double w0 = w_max * j / kLatticePoints;
    double gamma = 0.0;
    for (int i = 0; i < grid.n_nodes(); ++i)
      gamma = std::max(gamma,
                       norms[static_cast<std::size_t>(i)] * std::exp(-w0 * (grid.node(i) - grid.t0)));
    const double envelope = gamma * std::exp(w0 * grid.horizon());
    if (envelope < best_envelope * (1.0 - 1e-12)) {
      best_envelope = envelope;
      best_gamma = gamma;
      best_w0 = w0;
    }
    if (w_max == 0.0) break;
  }
  GronwallData data;
  data.gamma = best_gamma;
  data.w0 = best_w0;
  return data;
}

Propagator::Propagator(GeneratorMatrix gen, SemilinearTerm f, TimeGrid grid, int control_dim,
                       int n_modes, IntegratorScheme scheme)
    : gen_(std::move(gen)),
      f_(std::move(f)),
      grid_(grid),
      control_dim_(control_dim),
      n_modes_(n_modes),
      scheme_(scheme) {
  const int d = gen_.dim();
  const double dt = grid_.dt();
  if (scheme_ == IntegratorScheme::AffineExponential) {
    if (!f_.linear_in_yu)
      throw ValidationError("Propagator: affine scheme requires a linear_in_yu term");
    const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(control_dim_);
    exp_.resize(static_cast<std::size_t>(n_modes_));
    phi_.resize(static_cast<std::size_t>(n_modes_));
    const double t_probe = 0.5 * (grid_.t0 + grid_.tf);
    for (int v = 0; v < n_modes_; ++v) {
      const Eigen::VectorXd base = f_.evaluator(grid_.t0, Eigen::VectorXd::Zero(d), u0, v);
      Eigen::MatrixXd b(d, d);
      for (int j = 0; j < d; ++j) {
        b.col(j) = f_.evaluator(grid_.t0, Eigen::VectorXd::Unit(d, j), u0, v) - base;
        const Eigen::VectorXd probe =
            f_.evaluator(t_probe, Eigen::VectorXd::Unit(d, j), u0, v) -
            f_.evaluator(t_probe, Eigen::VectorXd::Zero(d), u0, v);
        if ((probe - b.col(j)).norm() > 1e-12 * (1.0 + b.col(j).norm()))
          throw ValidationError("Propagator: affine scheme requires a time-independent "
                                "y-coupling in f");
      }
      step_matrices(gen_.entries + b, dt, exp_[static_cast<std::size_t>(v)],
                    phi_[static_cast<std::size_t>(v)]);
    }
  } else {
    exp_.resize(1);
    phi_.resize(1);
    step_matrices(gen_.entries, dt, exp_[0], phi_[0]);
    if (scheme_ == IntegratorScheme::ImplicitEuler) {
      implicit_lu_.compute(Eigen::MatrixXd::Identity(d, d) - dt * gen_.entries);
    }
  }
}

const Eigen::MatrixXd& Propagator::step_matrix(int v) const {
  return exp_[static_cast<std::size_t>(
      scheme_ == IntegratorScheme::AffineExponential ? v : 0)];
}

const Eigen::MatrixXd& Propagator::phi_matrix(int v) const {
  return phi_[static_cast<std::size_t>(
      scheme_ == IntegratorScheme::AffineExponential ? v : 0)];
}

Trajectory Propagator::propagate(const Eigen::VectorXd& y0, const OrdinaryControlPath& u,
                                 const IntegerControlPath& v) const {
  const int d = gen_.dim();
  if (y0.size() != d)
    throw ValidationError("propagate: y0 has dimension " + std::to_string(y0.size()) +
                          ", expected " + std::to_string(d));
  if (!(u.grid == grid_) || !(v.grid == grid_))
    throw ValidationError("propagate: control paths must live on the propagator grid");
  if (u.dim != control_dim_)
    throw ValidationError("propagate: control dimension mismatch");
  if (v.n_modes > n_modes_)
    throw ValidationError("propagate: integer path uses more modes than the instance declares");

  const double dt = grid_.dt();
  Trajectory traj;
  traj.grid = grid_;
  traj.states.resize(static_cast<std::size_t>(grid_.n_nodes()));
  traj.states[0] = y0;
  const Eigen::VectorXd zero_state = Eigen::VectorXd::Zero(d);

  for (int i = 0; i < grid_.n_cells; ++i) {
    const Eigen::VectorXd& yi = traj.states[static_cast<std::size_t>(i)];
    const double ti = grid_.node(i);
    const int vi = v.at_cell(i);
    const Eigen::VectorXd& ui = u.at_cell(i);
    Eigen::VectorXd next;
    switch (scheme_) {
      case IntegratorScheme::AffineExponential: {
        const Eigen::VectorXd f0 = f_.evaluator(ti, zero_state, ui, vi);
        next = exp_[static_cast<std::size_t>(vi)] * yi + phi_[static_cast<std::size_t>(vi)] * f0;
        break;
      }
      case IntegratorScheme::ExponentialEuler: {
        const Eigen::VectorXd f_left = f_.evaluator(ti, yi, ui, vi);
        const Eigen::VectorXd predictor = exp_[0] * yi + phi_[0] * f_left;
        const Eigen::VectorXd f_right = f_.evaluator(grid_.node(i + 1), predictor, ui, vi);
        next = exp_[0] * yi + phi_[0] * (0.5 * (f_left + f_right));
        break;
      }
      case IntegratorScheme::ImplicitEuler: {
        const Eigen::VectorXd f_left = f_.evaluator(ti, yi, ui, vi);
        next = implicit_lu_.solve(yi + dt * f_left);
        break;
      }
    }
    if (!next.allFinite())
      throw NumericalError("propagate: non-finite state at cell " + std::to_string(i) +
                           " (t = " + std::to_string(grid_.node(i + 1)) + ")");
    traj.states[static_cast<std::size_t>(i + 1)] = std::move(next);
  }
  return traj;
}

Trajectory propagate(const GeneratorMatrix& gen, const SemilinearTerm& f,
                     const Eigen::VectorXd& y0, const OrdinaryControlPath& u,
                     const IntegerControlPath& v, const TimeGrid& grid) {
  Propagator prop(gen, f, grid, u.dim, v.n_modes, Propagator::default_scheme(f));
  return prop.propagate(y0, u, v);
}

DeviationReport deviation_check(const Trajectory& traj1, const Trajectory& traj2,
                                const GronwallData& data, double y0_gap,
                                double state_norm_weight) {
  if (!(traj1.grid == traj2.grid))
    throw ValidationError("deviation_check: trajectories live on different grids");
  if (!(y0_gap >= 0.0)) throw ValidationError("deviation_check: y0_gap must be nonnegative");
  const TimeGrid& grid = traj1.grid;
  const double w = std::sqrt(state_norm_weight);

  if (y0_gap == 0.0) {
    double max_diff = 0.0, scale = 1.0;
    for (int i = 0; i < grid.n_nodes(); ++i) {
      const auto& a = traj1.states[static_cast<std::size_t>(i)];
      const auto& b = traj2.states[static_cast<std::size_t>(i)];
      max_diff = std::max(max_diff, w * (a - b).norm());
      scale = std::max({scale, w * a.norm(), w * b.norm()});
    }
    if (max_diff > 1e-12 * scale)
      throw NumericalError("deviation_check: inconsistent input, distinct trajectories "
                           "with zero initial gap (max deviation " + std::to_string(max_diff) +
                           ")");
    return DeviationReport{0.0, 0, true};
  }

  const std::vector<double> envelope = gronwall_envelope(data, grid);
  DeviationReport report;
  for (int i = 0; i < grid.n_nodes(); ++i) {
    const double diff = w * (traj1.states[static_cast<std::size_t>(i)] -
                             traj2.states[static_cast<std::size_t>(i)]).norm();
    const double ratio = diff / (envelope[static_cast<std::size_t>(i)] * y0_gap);
    if (ratio > report.max_ratio) {
      report.max_ratio = ratio;
      report.worst_node = i;
    }
  }
  report.pass = report.max_ratio <= 1.0 + 10.0 * kIntegratorTolerance;
  return report;
}

}  // namespace miocp
