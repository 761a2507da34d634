#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "teleop/subspace.hpp"

namespace teleop {

enum class Primitive { disk, box };
enum class GraspType { power, precision };

std::string_view grasp_type_name(GraspType t);
GraspType parse_grasp_type(std::string_view s);

inline constexpr int kObjectCount = 8;

/// One object of the canonical set. Dimensions in millimetres; z is the thickness along the
/// palm approach axis, y the long axis of boxes.
struct ObjectSpec {
    int id = 0;
    Primitive primitive = Primitive::box;
    Eigen::Vector3d dims_mm = Eigen::Vector3d::Zero();
    GraspType grasp_type = GraspType::precision;
    TeleopPoint predicted_psi;

    /// Width the hand must span when closing across palm x.
    double grasp_width_m() const;
    Eigen::Vector3d half_extents_m() const;
};

/// The eight objects with dimensions multiplied by `hand_scale`.
std::vector<ObjectSpec> canonical_object_set(double hand_scale);

struct SurfacePoint {
    Eigen::Vector3d point;  // closest point on the surface
    Eigen::Vector3d normal; // outward unit normal
};

/// Solid placed at `center` in the palm frame, axis-aligned with the palm.
class PlacedObject {
public:
    PlacedObject(const ObjectSpec& spec, const Eigen::Vector3d& center);

    const Eigen::Vector3d& center() const { return center_; }
    const ObjectSpec& spec() const { return spec_; }
    double bounding_radius() const { return bounding_radius_; }

    /// Negative inside, positive outside.
    double signed_distance(const Eigen::Vector3d& p) const;
    SurfacePoint closest_surface_point(const Eigen::Vector3d& p) const;

    struct SegmentQuery {
        double distance; // minimum signed distance along the segment
        double t;        // segment parameter of that minimum, in [0, 1]
    };
    /// Minimum signed distance over segment a-b (signed distance is convex, so a 1-D search suffices).
    SegmentQuery segment_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) const;

private:
    ObjectSpec spec_;
    Eigen::Vector3d center_;
    Eigen::Vector3d half_;
    double bounding_radius_;
};

} // namespace teleop
