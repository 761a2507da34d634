#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "teleop/contact.hpp"

namespace teleop {

struct QualityConfig {
    double friction = 0.5;
    int directions = 2048;
    int cone_edges = 8;
    std::uint64_t direction_seed = 0x5eed'0f'd1'2ec7ULL;
};

using Wrench = Eigen::Matrix<double, 6, 1>;

/// Unit-force wrenches along the discretized friction cone edges of every contact. Torques are
/// divided by `torque_scale` (m) so force and torque share units.
std::vector<Wrench> contact_wrenches(const std::vector<Contact>& contacts, const Eigen::Vector3d& object_center,
                                     double torque_scale, double friction, int cone_edges);

/// The signed coordinate axes followed by fixed pseudo-random unit directions, identical on every call.
const std::vector<Wrench>& wrench_directions(int count, std::uint64_t seed);

/// min over sampled directions u of max_i w_i . u, floored at zero. Zero without contacts or
/// when some direction has no supporting wrench.
double wrench_space_quality(const std::vector<Wrench>& wrenches, const QualityConfig& cfg);

/// Quality of the contacts between `model` at `q` and `object`.
double grasp_quality(const HandModel& model, const JointPose& q, const PlacedObject& object,
                     const QualityConfig& cfg = {});

double grasp_quality(const std::vector<Contact>& contacts, const PlacedObject& object, const QualityConfig& cfg = {});

} // namespace teleop
