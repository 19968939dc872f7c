#ifndef MIOCP_PARAMETER_HPP
#define MIOCP_PARAMETER_HPP

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "miocp/errors.hpp"

namespace miocp {

/// Norm used for one parameter component.
enum class ComponentNorm {
  Abs,        // |x| (scalar components)
  WeightedL2, // sqrt(weight) * |x|_2 (discrete-L2 vectors)
};

/// Structured parameter space: a product of named components with per
/// component norms and ball radii around a center. The distance between two
/// parameters is the max of the component norms of the differences; the ball
/// B = { lambda : norm_c(lambda_c - center_c) <= radius_c for all c }.
class ParameterSpace {
 public:
  struct Component {
    std::string name;
    int dim = 1;
    ComponentNorm norm = ComponentNorm::Abs;
    double weight = 1.0;  // WeightedL2 only
    double radius = 0.0;
  };

  ParameterSpace(std::vector<Component> components, Eigen::VectorXd center);

  int total_dim() const { return static_cast<int>(center_.size()); }
  const std::vector<Component>& components() const { return components_; }
  const Eigen::VectorXd& center() const { return center_; }
  int component_offset(int c) const { return offsets_[static_cast<std::size_t>(c)]; }
  int find(const std::string& name) const;  // -1 when absent

  double component_norm(int c, const Eigen::VectorXd& stacked_diff) const;
  double distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
  bool contains(const Eigen::VectorXd& lambda, double slack = 1e-12) const;
  /// sup over pairs in the ball of the distance: 2 * max component radius.
  double diameter() const;

 private:
  std::vector<Component> components_;
  std::vector<int> offsets_;
  Eigen::VectorXd center_;
};

/// A point of a ParameterSpace, stored stacked. Parameters are cheap value
/// objects; the space they belong to is shared.
struct Parameter {
  std::shared_ptr<const ParameterSpace> space;
  Eigen::VectorXd stacked;

  Eigen::VectorXd component(const std::string& name) const;
  double scalar(const std::string& name) const;
  std::string brief() const;  // short textual form for messages/summaries
};

}  // namespace miocp

#endif
