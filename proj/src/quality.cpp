#include "teleop/quality.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>

namespace teleop {

std::vector<Wrench> contact_wrenches(const std::vector<Contact>& contacts, const Eigen::Vector3d& object_center,
                                     double torque_scale, double friction, int cone_edges)
{
    std::vector<Wrench> out;
    out.reserve(contacts.size() * static_cast<std::size_t>(cone_edges));
    for (const auto& c : contacts) {
        const Eigen::Vector3d inward = -c.normal.normalized();
        Eigen::Index smallest = 0;
        inward.cwiseAbs().minCoeff(&smallest);
        const Eigen::Vector3d t1 = inward.cross(Eigen::Vector3d::Unit(smallest)).normalized();
        const Eigen::Vector3d t2 = inward.cross(t1);
        const Eigen::Vector3d lever = c.point - object_center;
        for (int k = 0; k < cone_edges; ++k) {
            const double theta = 2.0 * std::numbers::pi * k / cone_edges;
            const Eigen::Vector3d f =
                (inward + friction * (std::cos(theta) * t1 + std::sin(theta) * t2)).normalized();
            Wrench w;
            w.head<3>() = f;
            w.tail<3>() = lever.cross(f) / torque_scale;
            out.push_back(w);
        }
    }
    return out;
}

const std::vector<Wrench>& wrench_directions(int count, std::uint64_t seed)
{
    static std::mutex mutex;
    static std::map<std::pair<int, std::uint64_t>, std::unique_ptr<std::vector<Wrench>>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{count, seed}];
    if (!slot) {
        slot = std::make_unique<std::vector<Wrench>>();
        slot->reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < 12 && i < count; ++i)
            slot->push_back((i % 2 ? -1.0 : 1.0) * Wrench::Unit(i / 2));
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        while (static_cast<int>(slot->size()) < count) {
            Wrench u;
            for (int i = 0; i < 6; ++i)
                u[i] = normal(rng);
            const double n = u.norm();
            if (n > 1e-9)
                slot->push_back(u / n);
        }
    }
    return *slot;
}

double wrench_space_quality(const std::vector<Wrench>& wrenches, const QualityConfig& cfg)
{
    if (wrenches.empty())
        return 0.0;
    const auto& dirs = wrench_directions(cfg.directions, cfg.direction_seed);
    Eigen::Matrix<double, Eigen::Dynamic, 6> W(static_cast<Eigen::Index>(wrenches.size()), 6);
    for (std::size_t i = 0; i < wrenches.size(); ++i)
        W.row(static_cast<Eigen::Index>(i)) = wrenches[i].transpose();
    Eigen::Matrix<double, 6, Eigen::Dynamic> U(6, static_cast<Eigen::Index>(dirs.size()));
    for (std::size_t k = 0; k < dirs.size(); ++k)
        U.col(static_cast<Eigen::Index>(k)) = dirs[k];
    const Eigen::MatrixXd support = W * U;
    const double q = support.colwise().maxCoeff().minCoeff();
    return q > 0.0 ? q : 0.0;
}

double grasp_quality(const std::vector<Contact>& contacts, const PlacedObject& object, const QualityConfig& cfg)
{
    if (contacts.empty())
        return 0.0;
    const double torque_scale = object.spec().half_extents_m().maxCoeff();
    return wrench_space_quality(
        contact_wrenches(contacts, object.center(), torque_scale, cfg.friction, cfg.cone_edges), cfg);
}

double grasp_quality(const HandModel& model, const JointPose& q, const PlacedObject& object, const QualityConfig& cfg)
{
    return grasp_quality(find_contacts(model, q, object), object, cfg);
}

} // namespace teleop
