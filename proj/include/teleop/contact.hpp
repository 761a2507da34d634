#pragma once

#include <vector>

#include "teleop/hand_model.hpp"
#include "teleop/objects.hpp"

namespace teleop {

inline constexpr double kContactTolerance = 1e-3; // m

struct Contact {
    int finger = 0;
    int link = 0;
    bool distal = false;    // last link of its finger
    Eigen::Vector3d point;  // on the object surface, palm frame
    Eigen::Vector3d normal; // outward surface normal
    double distance = 0.0;  // link-to-surface signed distance
};

/// Links within kContactTolerance of the surface, from FK at q.
std::vector<Contact> find_contacts(const HandModel& model, const JointPose& q, const PlacedObject& object,
                                   double tolerance = kContactTolerance);

/// Smallest signed distance between any link and the object.
double min_link_distance(const HandModel& model, const JointPose& q, const PlacedObject& object);

/// Joints whose axes are transverse to the approach axis at the zero pose; these are the ones
/// driven when a grasp closes.
std::vector<bool> flexion_joints(const HandModel& model);

/// Per joint: +1 or -1, the direction that moves the fingertips toward the centre of the palm;
/// 0 for joints that are not flexion joints.
std::vector<int> closing_directions(const HandModel& model);

struct ClosingResult {
    JointPose q;
    std::vector<Contact> contacts;
    bool initial_collision = false;
};

/// Drives each joint with a nonzero entry in `closing` in that direction, `step` rad at a time.
/// A joint stops at its limit or when a link at or distal to it touches the object; a step that
/// would penetrate is shortened by bisection.
ClosingResult close_hand(const HandModel& model, const std::vector<int>& closing, const JointPose& pregrasp,
                         const PlacedObject& object, double step = 0.02);

} // namespace teleop
