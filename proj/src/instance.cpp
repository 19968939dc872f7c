#include "miocp/instance.hpp"

#include <cmath>
#include <sstream>

#include "miocp/errors.hpp"

namespace miocp {

ParameterSpace::ParameterSpace(std::vector<Component> components, Eigen::VectorXd center)
    : components_(std::move(components)), center_(std::move(center)) {
  int offset = 0;
  offsets_.reserve(components_.size());
  for (const auto& c : components_) {
    if (c.dim < 1) throw ValidationError("ParameterSpace: component dimension must be >= 1");
    if (!(c.radius >= 0.0)) throw ValidationError("ParameterSpace: radius must be >= 0");
    offsets_.push_back(offset);
    offset += c.dim;
  }
  if (offset != center_.size())
    throw ValidationError("ParameterSpace: center size does not match the component layout");
}

int ParameterSpace::find(const std::string& name) const {
  for (std::size_t i = 0; i < components_.size(); ++i)
    if (components_[i].name == name) return static_cast<int>(i);
  return -1;
}

double ParameterSpace::component_norm(int c, const Eigen::VectorXd& stacked_diff) const {
  const auto& comp = components_[static_cast<std::size_t>(c)];
  const auto seg = stacked_diff.segment(offsets_[static_cast<std::size_t>(c)], comp.dim);
  switch (comp.norm) {
    case ComponentNorm::Abs:
      return seg.cwiseAbs().maxCoeff();
    case ComponentNorm::WeightedL2:
      return std::sqrt(comp.weight) * seg.norm();
  }
  return 0.0;
}

double ParameterSpace::distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  if (a.size() != total_dim() || b.size() != total_dim())
    throw ValidationError("ParameterSpace: parameter size mismatch");
  const Eigen::VectorXd diff = a - b;
  double d = 0.0;
  for (std::size_t c = 0; c < components_.size(); ++c)
    d = std::max(d, component_norm(static_cast<int>(c), diff));
  return d;
}

bool ParameterSpace::contains(const Eigen::VectorXd& lambda, double slack) const {
  const Eigen::VectorXd diff = lambda - center_;
  for (std::size_t c = 0; c < components_.size(); ++c)
    if (component_norm(static_cast<int>(c), diff) > components_[c].radius + slack) return false;
  return true;
}

double ParameterSpace::diameter() const {
  double r = 0.0;
  for (const auto& c : components_) r = std::max(r, c.radius);
  return 2.0 * r;
}

Eigen::VectorXd Parameter::component(const std::string& name) const {
  const int c = space->find(name);
  if (c < 0) throw ValidationError("Parameter: unknown component '" + name + "'");
  const auto& comp = space->components()[static_cast<std::size_t>(c)];
  return stacked.segment(space->component_offset(c), comp.dim);
}

double Parameter::scalar(const std::string& name) const {
  const Eigen::VectorXd v = component(name);
  if (v.size() != 1)
    throw ValidationError("Parameter: component '" + name + "' is not scalar");
  return v(0);
}

std::string Parameter::brief() const {
  std::ostringstream out;
  out << "(";
  for (std::size_t c = 0; c < space->components().size(); ++c) {
    const auto& comp = space->components()[c];
    if (c) out << ", ";
    out << comp.name << "=";
    const auto seg = stacked.segment(space->component_offset(static_cast<int>(c)), comp.dim);
    if (comp.dim == 1) {
      out << seg(0);
    } else {
      out << "[" << seg(0) << ",...;n=" << comp.dim << "]";
    }
  }
  out << ")";
  return out.str();
}

Parameter ParametricInstance::make_parameter(const Eigen::VectorXd& stacked) const {
  if (stacked.size() != space->total_dim())
    throw ValidationError("make_parameter: expected " + std::to_string(space->total_dim()) +
                          " entries, got " + std::to_string(stacked.size()));
  return Parameter{space, stacked};
}

Trajectory ParametricInstance::solve_dynamics(const Parameter& lambda,
                                              const OrdinaryControlPath& u,
                                              const IntegerControlPath& v) const {
  return propagator->propagate(initial_state(lambda), u, v);
}

double evaluate_cost(const ParametricInstance& inst, const Parameter& lambda,
                     const Trajectory& traj, const OrdinaryControlPath& u,
                     const IntegerControlPath& v) {
  const double value = inst.cost(lambda, traj, u, v);
  if (!std::isfinite(value))
    throw NumericalError("evaluate_cost: non-finite cost on instance '" + inst.kind + "'");
  return value;
}

}  // namespace miocp
