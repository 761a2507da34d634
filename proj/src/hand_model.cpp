#include "teleop/hand_model.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace teleop {

void require_dof(const JointPose& q, int dof, std::string_view what)
{
    if (q.size() != dof) {
        std::ostringstream msg;
        msg << what << ": expected " << dof << " joint values, got " << q.size();
        throw DimensionError(msg.str());
    }
}

void require_finite(const Eigen::Ref<const Eigen::VectorXd>& v, std::string_view what)
{
    if (!v.allFinite())
        throw ValidationError(std::string(what) + ": non-finite value");
}

Eigen::Isometry3d FingerChain::base_pose() const
{
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.linear() = base_orientation.toRotationMatrix();
    t.translation() = base_position;
    return t;
}

Eigen::VectorXd HandModel::lower_limits() const
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(joints.size()));
    for (std::size_t i = 0; i < joints.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = joints[i].min;
    return v;
}

Eigen::VectorXd HandModel::upper_limits() const
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(joints.size()));
    for (std::size_t i = 0; i < joints.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = joints[i].max;
    return v;
}

int HandModel::finger_index(std::string_view name) const
{
    for (std::size_t i = 0; i < fingers.size(); ++i)
        if (fingers[i].name == name)
            return static_cast<int>(i);
    return -1;
}

std::vector<Violation> validate_model(const HandModel& model)
{
    std::vector<Violation> out;
    auto add = [&out](std::string field, std::string rule) {
        out.push_back({std::move(field), std::move(rule)});
    };

    if (model.hand_id.empty())
        add("hand_id", "must be nonempty");
    if (model.dof <= 0)
        add("dof", "must be positive");
    if (model.dof != static_cast<int>(model.joints.size()))
        add("dof", "must equal the number of joints");
    if (!(model.scale > 0.0) || !std::isfinite(model.scale))
        add("scale", "must be positive");

    std::set<std::string> names;
    for (std::size_t j = 0; j < model.joints.size(); ++j) {
        const auto& js = model.joints[j];
        const std::string field = "joints[" + std::to_string(j) + "]";
        if (js.name.empty())
            add(field + ".name", "must be nonempty");
        else if (!names.insert(js.name).second)
            add(field + ".name", "duplicate joint name '" + js.name + "'");
        if (!std::isfinite(js.min) || !std::isfinite(js.max))
            add(field, "limits must be finite");
        else if (js.min > js.max)
            add(field, "min > max for joint '" + js.name + "'");
    }

    std::vector<bool> referenced(model.joints.size(), false);
    for (std::size_t f = 0; f < model.fingers.size(); ++f) {
        const auto& finger = model.fingers[f];
        const std::string field = "fingers[" + std::to_string(f) + "]";
        if (finger.links.empty())
            add(field + ".links", "must be nonempty");
        if (std::abs(finger.base_orientation.coeffs().norm() - 1.0) > 1e-9)
            add(field + ".base_pose.quat", "must have unit norm");
        if (!finger.base_position.allFinite())
            add(field + ".base_pose.pos", "must be finite");
        for (std::size_t l = 0; l < finger.links.size(); ++l) {
            const auto& link = finger.links[l];
            const std::string lf = field + ".links[" + std::to_string(l) + "]";
            if (!(link.length > 0.0) || !std::isfinite(link.length))
                add(lf + ".length", "must be positive");
            if (link.joint_index < 0 || link.joint_index >= static_cast<int>(model.joints.size()))
                add(lf + ".joint_index", "out of range");
            else
                referenced[static_cast<std::size_t>(link.joint_index)] = true;
            if (std::abs(link.axis.norm() - 1.0) > 1e-9)
                add(lf + ".axis", "must have unit norm");
        }
    }
    for (std::size_t j = 0; j < referenced.size(); ++j)
        if (!referenced[j])
            add("joints[" + std::to_string(j) + "]", "not referenced by any link");
    return out;
}

void require_valid(const HandModel& model)
{
    const auto violations = validate_model(model);
    if (violations.empty())
        return;
    std::ostringstream msg;
    msg << "invalid hand model '" << model.hand_id << "':";
    for (const auto& v : violations)
        msg << "\n  " << v.field << ": " << v.rule;
    throw ValidationError(msg.str());
}

Eigen::Vector3d FingerKinematics::link_start(std::size_t i, const Eigen::Isometry3d& base) const
{
    return i == 0 ? base.translation() : link_frames[i - 1].translation();
}

FingerKinematics finger_kinematics(const FingerChain& finger, const JointPose& q)
{
    FingerKinematics out;
    out.link_frames.reserve(finger.links.size());
    Eigen::Isometry3d frame = finger.base_pose();
    for (const auto& link : finger.links) {
        frame.rotate(Eigen::AngleAxisd(q[link.joint_index], link.axis));
        frame.translate(Eigen::Vector3d(link.length, 0.0, 0.0));
        out.link_frames.push_back(frame);
    }
    out.fingertip = frame.translation();
    return out;
}

HandKinematics forward_kinematics(const HandModel& model, const JointPose& q)
{
    require_dof(q, model.dof, "forward_kinematics");
    HandKinematics out;
    out.fingers.reserve(model.fingers.size());
    for (const auto& finger : model.fingers)
        out.fingers.push_back(finger_kinematics(finger, q));
    return out;
}

std::size_t ClampResult::count() const
{
    std::size_t n = 0;
    for (bool b : clamped)
        n += b ? 1 : 0;
    return n;
}

ClampResult clamp_to_limits(const HandModel& model, const JointPose& q)
{
    require_dof(q, model.dof, "clamp_to_limits");
    ClampResult out{q, std::vector<bool>(static_cast<std::size_t>(model.dof), false)};
    for (int j = 0; j < model.dof; ++j) {
        const double v = q[j];
        if (std::isnan(v))
            throw ValidationError("clamp_to_limits: NaN at joint " + std::to_string(j));
        const auto& js = model.joints[static_cast<std::size_t>(j)];
        if (v < js.min) {
            out.q[j] = js.min;
            out.clamped[static_cast<std::size_t>(j)] = true;
        } else if (v > js.max) {
            out.q[j] = js.max;
            out.clamped[static_cast<std::size_t>(j)] = true;
        }
    }
    return out;
}

JointPose mid_pose(const HandModel& model)
{
    return 0.5 * (model.lower_limits() + model.upper_limits());
}

bool within_limits(const HandModel& model, const JointPose& q, double tol)
{
    if (q.size() != model.dof)
        return false;
    for (int j = 0; j < model.dof; ++j) {
        const auto& js = model.joints[static_cast<std::size_t>(j)];
        if (!(q[j] >= js.min - tol && q[j] <= js.max + tol))
            return false;
    }
    return true;
}

} // namespace teleop
