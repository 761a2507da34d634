#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "teleop/hand_model.hpp"
#include "teleop/objects.hpp"
#include "teleop/quality.hpp"

namespace teleop {

/// One stable joint-space grasp of one object of the canonical set.
struct Grasp {
    int object_id = 0;
    JointPose q;
    double quality = 0.0;
    GraspType grasp_type = GraspType::precision;
    Eigen::Vector3d object_pose = Eigen::Vector3d::Zero(); // object center, palm frame
};

struct SampleConfig {
    std::size_t budget = 200'000;   // candidate iterations
    std::uint64_t seed = 0;
    std::size_t max_valid = 1000;   // stop once this many grasps are accepted
    double position_perturbation = 0.005; // m, per object axis
    double joint_perturbation = 0.05;     // rad, per joint
    double close_step = 0.02;             // rad
    QualityConfig quality;
    unsigned workers = 1;
};

struct SampleDiagnostics {
    std::size_t iterations = 0;
    std::size_t accepted = 0;
    std::size_t perturbation_evaluations = 0;
    std::size_t evaluations_per_candidate = 0; // 3 (3 + N)
    std::map<std::string, std::size_t> failures;

    std::string dominant_failure() const;
};

struct SampleResult {
    std::vector<Grasp> grasps;
    SampleDiagnostics diagnostics;
};

/// Largest distance between points of two different fingers over the joint-limit corners.
double max_aperture(const HandModel& model);

/// Axis-aligned region reachable by finger links, palm frame.
struct Workspace {
    Eigen::Vector3d lo;
    Eigen::Vector3d hi;
};
Workspace hand_workspace(const HandModel& model);

/// Random-search grasp synthesis. Each candidate samples an object position and a pre-grasp
/// pose, closes the hand, and if it yields a valid grasp of the object's type, re-evaluates it
/// under +/-/zero disturbance along every search axis; the stored quality is the minimum.
/// Results do not depend on cfg.workers.
SampleResult sample_grasps(const HandModel& model, const ObjectSpec& object, const SampleConfig& cfg);

/// Grasp-type contact pattern check: precision touches only with distal links, power needs at
/// least one proximal link; both need two contacts with opposing normals.
bool contact_pattern_ok(const std::vector<Contact>& contacts, GraspType type, std::string* reason = nullptr);

} // namespace teleop
