#pragma once

#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "teleop/common.hpp"

namespace teleop {

struct JointSpec {
    std::string name;
    double min = 0.0; // rad
    double max = 0.0; // rad
};

/// One rigid link: rotate about `axis` by q[joint_index], then extend `length` along local +x.
struct LinkSpec {
    double length = 0.0; // m
    int joint_index = 0;
    Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
};

struct FingerChain {
    std::string name;
    Eigen::Vector3d base_position = Eigen::Vector3d::Zero();
    Eigen::Quaterniond base_orientation = Eigen::Quaterniond::Identity();
    std::vector<LinkSpec> links;

    Eigen::Isometry3d base_pose() const;
};

/// Rigid palm plus serial revolute fingers. Links that share a joint_index are coupled.
/// The palm approach direction is +z.
struct HandModel {
    std::string hand_id;
    int dof = 0;
    double scale = 1.0; // size relative to the reference human hand
    std::vector<JointSpec> joints;
    std::vector<FingerChain> fingers;

    Eigen::VectorXd lower_limits() const;
    Eigen::VectorXd upper_limits() const;
    int finger_index(std::string_view name) const; // -1 if absent
};

struct Violation {
    std::string field;
    std::string rule;
};

/// Empty iff every structural invariant of the model holds.
std::vector<Violation> validate_model(const HandModel& model);

/// Throws ValidationError listing every violation.
void require_valid(const HandModel& model);

struct FingerKinematics {
    std::vector<Eigen::Isometry3d> link_frames; // frame at the end of each link, palm coordinates
    Eigen::Vector3d fingertip = Eigen::Vector3d::Zero();

    /// Start point of link i (finger base for i == 0).
    Eigen::Vector3d link_start(std::size_t i, const Eigen::Isometry3d& base) const;
};

struct HandKinematics {
    std::vector<FingerKinematics> fingers;
};

HandKinematics forward_kinematics(const HandModel& model, const JointPose& q);

/// Kinematics of a single finger; faster when only one chain is needed.
FingerKinematics finger_kinematics(const FingerChain& finger, const JointPose& q);

struct ClampResult {
    JointPose q;
    std::vector<bool> clamped;

    std::size_t count() const;
};

/// Throws ValidationError on NaN components.
ClampResult clamp_to_limits(const HandModel& model, const JointPose& q);

/// Midpoint of each joint's range.
JointPose mid_pose(const HandModel& model);

bool within_limits(const HandModel& model, const JointPose& q, double tol = 1e-12);

} // namespace teleop
