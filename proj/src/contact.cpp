#include "teleop/contact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace teleop {

namespace {

double point_segment_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& a, const Eigen::Vector3d& b)
{
    const Eigen::Vector3d ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (a + t * ab - p).norm();
}

// Per-link signed distances. Links far outside the bounding sphere get a lower bound instead
// of the exact value; the bound is still above any contact tolerance.
struct LinkDistances {
    std::vector<std::vector<double>> d;
    double min = std::numeric_limits<double>::infinity();
};

LinkDistances link_distances(const HandModel& model, const JointPose& q, const PlacedObject& object)
{
    LinkDistances out;
    out.d.resize(model.fingers.size());
    for (std::size_t f = 0; f < model.fingers.size(); ++f) {
        const auto& finger = model.fingers[f];
        const auto kin = finger_kinematics(finger, q);
        const Eigen::Isometry3d base = finger.base_pose();
        out.d[f].resize(finger.links.size());
        for (std::size_t l = 0; l < finger.links.size(); ++l) {
            const Eigen::Vector3d a = kin.link_start(l, base);
            const Eigen::Vector3d b = kin.link_frames[l].translation();
            const double bound = point_segment_distance(object.center(), a, b) - object.bounding_radius();
            if (bound > 2.0 * kContactTolerance) {
                out.d[f][l] = bound;
            } else {
                out.d[f][l] = object.segment_distance(a, b).distance;
            }
            out.min = std::min(out.min, out.d[f][l]);
        }
    }
    return out;
}

} // namespace

std::vector<Contact> find_contacts(const HandModel& model, const JointPose& q, const PlacedObject& object,
                                   double tolerance)
{
    require_dof(q, model.dof, "find_contacts");
    std::vector<Contact> out;
    for (std::size_t f = 0; f < model.fingers.size(); ++f) {
        const auto& finger = model.fingers[f];
        const auto kin = finger_kinematics(finger, q);
        for (std::size_t l = 0; l < finger.links.size(); ++l) {
            const Eigen::Vector3d a = kin.link_start(l, finger.base_pose());
            const Eigen::Vector3d b = kin.link_frames[l].translation();
            if (point_segment_distance(object.center(), a, b) - object.bounding_radius() > tolerance)
                continue;
            const auto sq = object.segment_distance(a, b);
            if (sq.distance > tolerance)
                continue;
            const auto sp = object.closest_surface_point(a + sq.t * (b - a));
            Contact c;
            c.finger = static_cast<int>(f);
            c.link = static_cast<int>(l);
            c.distal = l + 1 == finger.links.size();
            c.point = sp.point;
            c.normal = sp.normal;
            c.distance = sq.distance;
            out.push_back(c);
        }
    }
    return out;
}

double min_link_distance(const HandModel& model, const JointPose& q, const PlacedObject& object)
{
    require_dof(q, model.dof, "min_link_distance");
    return link_distances(model, q, object).min;
}

std::vector<bool> flexion_joints(const HandModel& model)
{
    std::vector<bool> transverse(static_cast<std::size_t>(model.dof), true);
    std::vector<bool> used(static_cast<std::size_t>(model.dof), false);
    for (const auto& finger : model.fingers)
        for (const auto& link : finger.links) {
            const Eigen::Vector3d palm_axis = finger.base_orientation * link.axis;
            auto j = static_cast<std::size_t>(link.joint_index);
            used[j] = true;
            if (std::abs(palm_axis.z()) >= 0.5)
                transverse[j] = false;
        }
    for (std::size_t j = 0; j < used.size(); ++j)
        transverse[j] = transverse[j] && used[j];
    return transverse;
}

std::vector<int> closing_directions(const HandModel& model)
{
    const auto flexion = flexion_joints(model);
    Eigen::Vector2d centre = Eigen::Vector2d::Zero();
    for (const auto& finger : model.fingers)
        centre += finger.base_position.head<2>();
    if (!model.fingers.empty())
        centre /= static_cast<double>(model.fingers.size());

    const JointPose q0 = clamp_to_limits(model, JointPose::Zero(model.dof)).q;
    auto spread_of = [&](const JointPose& q) {
        double s = 0.0;
        for (const auto& finger : model.fingers)
            s += (finger_kinematics(finger, q).fingertip.head<2>() - centre).norm();
        return s;
    };
    std::vector<int> out(static_cast<std::size_t>(model.dof), 0);
    constexpr double h = 1e-4;
    for (int j = 0; j < model.dof; ++j) {
        if (!flexion[static_cast<std::size_t>(j)])
            continue;
        JointPose plus = q0;
        JointPose minus = q0;
        plus[j] += h;
        minus[j] -= h;
        out[static_cast<std::size_t>(j)] = spread_of(plus) - spread_of(minus) > 1e-12 ? -1 : 1;
    }
    return out;
}

ClosingResult close_hand(const HandModel& model, const std::vector<int>& closing, const JointPose& pregrasp,
                         const PlacedObject& object, double step)
{
    require_dof(pregrasp, model.dof, "close_hand");
    if (closing.size() != static_cast<std::size_t>(model.dof))
        throw DimensionError("close_hand: one closing direction per joint expected");
    ClosingResult out;
    out.q = clamp_to_limits(model, pregrasp).q;

    auto dist = link_distances(model, out.q, object);
    if (dist.min < 0.0) {
        out.initial_collision = true;
        return out;
    }

    const Eigen::VectorXd lower = model.lower_limits();
    const Eigen::VectorXd upper = model.upper_limits();
    auto at_limit = [&](int j, double v) {
        const int dir = closing[static_cast<std::size_t>(j)];
        return dir > 0 ? v >= upper[j] : v <= lower[j];
    };
    std::vector<bool> moving(static_cast<std::size_t>(model.dof));
    for (int j = 0; j < model.dof; ++j)
        moving[static_cast<std::size_t>(j)] = closing[static_cast<std::size_t>(j)] != 0 && !at_limit(j, out.q[j]);

    auto stop_touching = [&](const LinkDistances& ld) {
        for (std::size_t f = 0; f < model.fingers.size(); ++f) {
            const auto& links = model.fingers[f].links;
            for (std::size_t l = 0; l < links.size(); ++l) {
                if (ld.d[f][l] > kContactTolerance)
                    continue;
                for (std::size_t k = 0; k <= l; ++k)
                    moving[static_cast<std::size_t>(links[k].joint_index)] = false;
            }
        }
    };
    stop_touching(dist);

    const int max_iters = 4096;
    for (int it = 0; it < max_iters; ++it) {
        if (std::none_of(moving.begin(), moving.end(), [](bool b) { return b; }))
            break;
        JointPose next = out.q;
        for (int j = 0; j < model.dof; ++j)
            if (moving[static_cast<std::size_t>(j)])
                next[j] = std::clamp(out.q[j] + closing[static_cast<std::size_t>(j)] * step, lower[j], upper[j]);

        auto next_dist = link_distances(model, next, object);
        if (next_dist.min < 0.0) {
            // Largest collision-free fraction of the step.
            double lo = 0.0;
            double hi = 1.0;
            for (int b = 0; b < 32; ++b) {
                const double mid = 0.5 * (lo + hi);
                const JointPose trial = out.q + mid * (next - out.q);
                if (link_distances(model, trial, object).min < 0.0)
                    hi = mid;
                else
                    lo = mid;
            }
            next = out.q + lo * (next - out.q);
            next_dist = link_distances(model, next, object);
        }
        out.q = next;
        stop_touching(next_dist);
        for (int j = 0; j < model.dof; ++j)
            if (moving[static_cast<std::size_t>(j)] && at_limit(j, out.q[j]))
                moving[static_cast<std::size_t>(j)] = false;
    }

    out.contacts = find_contacts(model, out.q, object);
    return out;
}

} // namespace teleop
