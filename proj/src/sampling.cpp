#include "miocp/sampling.hpp"

#include <cmath>

namespace miocp {

namespace {

/// Per-coordinate half width that keeps axis-aligned offsets inside the
/// component ball of the given radius.
double coordinate_half_width(const ParameterSpace::Component& comp) {
  switch (comp.norm) {
    case ComponentNorm::Abs:
      return comp.radius;
    case ComponentNorm::WeightedL2:
      return comp.radius / (std::sqrt(comp.weight) * std::sqrt(static_cast<double>(comp.dim)));
  }
  return 0.0;
}

/// Root of x^(s+1) = x + 1; drives the Kronecker low-discrepancy sequence.
double plastic_root(int s) {
  double x = 2.0;
  for (int i = 0; i < 64; ++i) x = std::pow(1.0 + x, 1.0 / (s + 1));
  return x;
}

Eigen::VectorXd kronecker_offset(const std::shared_ptr<const ParameterSpace>& space,
                                 int point_index) {
  const int dim = space->total_dim();
  const double root = plastic_root(dim);
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(dim);
  double alpha = 1.0;
  int j = 0;
  for (std::size_t c = 0; c < space->components().size(); ++c) {
    const auto& comp = space->components()[c];
    const double half = coordinate_half_width(comp);
    for (int k = 0; k < comp.dim; ++k, ++j) {
      alpha /= root;
      double frac = std::fmod((point_index + 1) * alpha, 1.0);
      if (frac < 0) frac += 1.0;
      offset(j) = (2.0 * frac - 1.0) * half;
    }
  }
  return offset;
}

}  // namespace

std::vector<Parameter> sample_ball_deterministic(
    const std::shared_ptr<const ParameterSpace>& space, int low_discrepancy_count) {
  std::vector<Parameter> out;
  out.push_back(Parameter{space, space->center()});
  // Boundary axis points, one pair per scalar coordinate of each perturbed
  // component.
  for (std::size_t c = 0; c < space->components().size(); ++c) {
    const auto& comp = space->components()[c];
    if (comp.radius == 0.0) continue;
    const double unit_norm = comp.norm == ComponentNorm::Abs ? 1.0 : std::sqrt(comp.weight);
    for (int k = 0; k < comp.dim; ++k) {
      for (double sign : {1.0, -1.0}) {
        Eigen::VectorXd stacked = space->center();
        stacked(space->component_offset(static_cast<int>(c)) + k) +=
            sign * comp.radius / unit_norm;
        out.push_back(Parameter{space, std::move(stacked)});
      }
    }
  }
  for (int n = 0; n < low_discrepancy_count; ++n)
    out.push_back(Parameter{space, space->center() + kronecker_offset(space, n)});
  return out;
}

std::vector<Parameter> sample_ball_fixed_count(
    const std::shared_ptr<const ParameterSpace>& space, int count) {
  std::vector<Parameter> out;
  if (count <= 0) return out;
  out.push_back(Parameter{space, space->center()});
  for (int n = 0; static_cast<int>(out.size()) < count; ++n)
    out.push_back(Parameter{space, space->center() + kronecker_offset(space, n)});
  return out;
}

Parameter sample_ball_random(const std::shared_ptr<const ParameterSpace>& space,
                             std::mt19937_64& rng) {
  Eigen::VectorXd stacked = space->center();
  int j = 0;
  for (const auto& comp : space->components()) {
    const double half = coordinate_half_width(comp);
    for (int k = 0; k < comp.dim; ++k, ++j)
      stacked(j) += (2.0 * uniform01(rng) - 1.0) * half;
  }
  return Parameter{space, std::move(stacked)};
}

}  // namespace miocp
