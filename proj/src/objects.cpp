#include "teleop/objects.hpp"

#include <algorithm>
#include <cmath>

namespace teleop {

std::string_view grasp_type_name(GraspType t)
{
    return t == GraspType::power ? "power" : "precision";
}

GraspType parse_grasp_type(std::string_view s)
{
    if (s == "power")
        return GraspType::power;
    if (s == "precision")
        return GraspType::precision;
    throw FormatError("unknown grasp type '" + std::string(s) + "'");
}

double ObjectSpec::grasp_width_m() const
{
    return 1e-3 * dims_mm.x();
}

Eigen::Vector3d ObjectSpec::half_extents_m() const
{
    return 0.5e-3 * dims_mm;
}

std::vector<ObjectSpec> canonical_object_set(double hand_scale)
{
    if (!(hand_scale > 0.0) || !std::isfinite(hand_scale))
        throw ValidationError("canonical_object_set: hand scale must be positive");

    struct Row {
        Primitive primitive;
        double x, y, z;
        GraspType type;
        double alpha, sigma, epsilon;
    };
    static constexpr Row rows[kObjectCount] = {
        {Primitive::disk, 70, 70, 10, GraspType::precision, 1, 0.5, 0},
        {Primitive::disk, 110, 110, 10, GraspType::precision, 1, 1, 0},
        {Primitive::box, 45, 300, 10, GraspType::precision, 0, 0, 0},
        {Primitive::box, 70, 300, 10, GraspType::precision, 0, 0.5, 0},
        {Primitive::box, 100, 300, 10, GraspType::precision, 0, 1, 0},
        {Primitive::disk, 70, 70, 10, GraspType::power, 1, 0.5, 1},
        {Primitive::box, 45, 300, 10, GraspType::power, 0, 0, 1},
        {Primitive::box, 70, 300, 10, GraspType::power, 0, 0.5, 1},
    };

    std::vector<ObjectSpec> out;
    out.reserve(kObjectCount);
    for (int i = 0; i < kObjectCount; ++i) {
        const Row& r = rows[i];
        ObjectSpec o;
        o.id = i + 1;
        o.primitive = r.primitive;
        o.dims_mm = Eigen::Vector3d(r.x, r.y, r.z) * hand_scale;
        o.grasp_type = r.type;
        o.predicted_psi.psi = Eigen::Vector3d(r.alpha, r.sigma, r.epsilon);
        out.push_back(o);
    }
    return out;
}

PlacedObject::PlacedObject(const ObjectSpec& spec, const Eigen::Vector3d& center)
    : spec_(spec), center_(center), half_(spec.half_extents_m())
{
    if (spec.primitive == Primitive::disk)
        bounding_radius_ = std::hypot(half_.x(), half_.z());
    else
        bounding_radius_ = half_.norm();
}

double PlacedObject::signed_distance(const Eigen::Vector3d& p) const
{
    const Eigen::Vector3d local = p - center_;
    if (spec_.primitive == Primitive::disk) {
        const double radial = std::hypot(local.x(), local.y()) - half_.x();
        const double axial = std::abs(local.z()) - half_.z();
        const double inside = std::min(std::max(radial, axial), 0.0);
        const double outside = std::hypot(std::max(radial, 0.0), std::max(axial, 0.0));
        return inside + outside;
    }
    const Eigen::Vector3d d = local.cwiseAbs() - half_;
    const double inside = std::min(d.maxCoeff(), 0.0);
    const double outside = d.cwiseMax(0.0).norm();
    return inside + outside;
}

SurfacePoint PlacedObject::closest_surface_point(const Eigen::Vector3d& p) const
{
    const Eigen::Vector3d local = p - center_;
    SurfacePoint out;
    if (spec_.primitive == Primitive::disk) {
        const double r = half_.x();
        const double h = half_.z();
        const double rho = std::hypot(local.x(), local.y());
        const Eigen::Vector2d radial_dir =
            rho > 1e-12 ? Eigen::Vector2d(local.x() / rho, local.y() / rho) : Eigen::Vector2d(1.0, 0.0);
        const double zsign = local.z() >= 0.0 ? 1.0 : -1.0;
        const double dr = rho - r;
        const double dz = std::abs(local.z()) - h;
        Eigen::Vector3d q;
        if (dr <= 0.0 && dz <= 0.0) {
            // Inside: project to the nearer of rim and cap.
            if (dr > dz) {
                q = Eigen::Vector3d(radial_dir.x() * r, radial_dir.y() * r, local.z());
                out.normal = Eigen::Vector3d(radial_dir.x(), radial_dir.y(), 0.0);
            } else {
                q = Eigen::Vector3d(local.x(), local.y(), zsign * h);
                out.normal = Eigen::Vector3d(0.0, 0.0, zsign);
            }
        } else {
            const double cr = std::min(rho, r);
            q = Eigen::Vector3d(radial_dir.x() * cr, radial_dir.y() * cr, std::clamp(local.z(), -h, h));
            const Eigen::Vector3d diff = local - q;
            out.normal = diff.norm() > 1e-12 ? Eigen::Vector3d(diff.normalized())
                                             : (dr > dz ? Eigen::Vector3d(radial_dir.x(), radial_dir.y(), 0.0)
                                                        : Eigen::Vector3d(0.0, 0.0, zsign));
        }
        out.point = q + center_;
        return out;
    }

    const Eigen::Vector3d d = local.cwiseAbs() - half_;
    Eigen::Vector3d q;
    if ((d.array() <= 0.0).all()) {
        Eigen::Index axis = 0;
        d.maxCoeff(&axis);
        q = local;
        const double s = local[axis] >= 0.0 ? 1.0 : -1.0;
        q[axis] = s * half_[axis];
        out.normal = Eigen::Vector3d::Zero();
        out.normal[axis] = s;
    } else {
        q = local.cwiseMax(-half_).cwiseMin(half_);
        out.normal = (local - q).normalized();
    }
    out.point = q + center_;
    return out;
}

PlacedObject::SegmentQuery PlacedObject::segment_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) const
{
    // Golden-section search on a convex function of t.
    constexpr double inv_phi = 0.6180339887498949;
    double lo = 0.0;
    double hi = 1.0;
    const Eigen::Vector3d ab = b - a;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = signed_distance(a + x1 * ab);
    double f2 = signed_distance(a + x2 * ab);
    for (int it = 0; it < 48; ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = signed_distance(a + x1 * ab);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = signed_distance(a + x2 * ab);
        }
    }
    SegmentQuery best{f1 <= f2 ? f1 : f2, f1 <= f2 ? x1 : x2};
    const double fa = signed_distance(a);
    const double fb = signed_distance(b);
    if (fa < best.distance)
        best = {fa, 0.0};
    if (fb < best.distance)
        best = {fb, 1.0};
    return best;
}

} // namespace teleop
