#pragma once

#include <string>
#include <utility>
#include <vector>

#include "teleop/hand_model.hpp"

namespace teleop {

/// Master joint i drives slave joint j for each pair; other slave joints stay at the origin.
struct JointCorrespondence {
    std::string master_hand;
    std::string slave_hand;
    std::vector<std::pair<int, int>> pairs;
};

/// Throws ValidationError for out-of-range or repeated slave indices.
void check_correspondence(const JointCorrespondence& corr, int master_dof, int slave_dof);

ClampResult joint_map(const JointCorrespondence& corr, const JointPose& q_master, const HandModel& slave,
                      const JointPose& slave_origin);

struct IkConfig {
    int max_iters = 200;
    double damping = 0.05;
    double tolerance = 1e-4; // m
};

struct FingertipConfig {
    std::string master_hand;
    std::string slave_hand;
    std::vector<std::pair<std::string, std::string>> finger_pairs; // (master finger, slave finger)
    double scale = 1.5;
    IkConfig ik;
};

void check_fingertip_config(const FingertipConfig& cfg, const HandModel& master, const HandModel& slave);

struct IkResult {
    JointPose q;
    double residual = 0.0;        // m
    std::vector<double> history;  // residual before the first step and after each accepted step
    int iterations = 0;
};

/// Damped least squares on the joints of one finger, projected onto the joint limits after every
/// step. Steps that would increase the residual are halved until they do not. Joints flagged in
/// `frozen` keep their value from `q0`.
IkResult solve_finger_ik(const HandModel& model, int finger, const Eigen::Vector3d& target, const JointPose& q0,
                         const IkConfig& cfg, const std::vector<bool>& frozen = {});

struct FingertipResult {
    ClampResult joints;
    std::vector<double> residuals; // m, one per finger pair
    std::vector<IkResult> solves;
};

/// Master fingertips by FK, scaled in the palm frame, re-expressed in the matching slave
/// finger's base frame and reached by IK. Slave joints not on a paired finger stay at `seed`.
FingertipResult fingertip_map(const FingertipConfig& cfg, const HandModel& master, const JointPose& q_master,
                              const HandModel& slave, const JointPose& seed);

} // namespace teleop
