#pragma once

#include <array>
#include <string>
#include <vector>

#include "teleop/hand_model.hpp"
#include "teleop/subspace.hpp"

namespace teleop {

struct SignedJoint {
    int joint = 0;
    int sign = 1; // +1: joint increases with the motion, -1: it decreases
};

/// Winner-take-all assignment of joints to the spread, open (size) and curl motions.
struct MotionAssignment {
    std::string hand_id;
    std::vector<SignedJoint> spread;
    std::vector<SignedJoint> open;
    std::vector<SignedJoint> curl;

    const std::vector<SignedJoint>& joints_for(Axis a) const;
};

/// Poses demonstrating each axis's kinematic extremes, plus the origin they were recorded with.
struct ExtremaPoses {
    JointPose origin; // may be empty if supplied separately
    std::array<std::vector<JointPose>, 3> per_axis;

    std::vector<JointPose> pooled() const;
};

ProjectionMatrix build_projection_matrix(int dof, const MotionAssignment& assign);

TeleopMapping build_empirical_mapping(const HandModel& model, const JointPose& origin,
                                      const MotionAssignment& assign, const ExtremaPoses& extrema);

} // namespace teleop
