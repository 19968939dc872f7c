#ifndef MIOCP_SAMPLING_HPP
#define MIOCP_SAMPLING_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "miocp/parameter.hpp"

namespace miocp {

/// Uniform double in [0, 1) drawn portably from the engine's raw bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Deterministic point set on the parameter ball: center, +-radius axis
/// points per component, then a Kronecker low-discrepancy batch. Independent
/// of any seed; identical across runs.
std::vector<Parameter> sample_ball_deterministic(
    const std::shared_ptr<const ParameterSpace>& space, int low_discrepancy_count = 64);

/// First `count` entries of the deterministic ball set (center first);
/// used for sweep perturbation specs like {"count": 8}.
std::vector<Parameter> sample_ball_fixed_count(
    const std::shared_ptr<const ParameterSpace>& space, int count);

/// Seeded uniform sample inside the ball (per-component uniform offsets).
Parameter sample_ball_random(const std::shared_ptr<const ParameterSpace>& space,
                             std::mt19937_64& rng);

}  // namespace miocp

#endif
