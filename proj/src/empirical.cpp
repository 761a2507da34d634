#include "teleop/empirical.hpp"

#include <cmath>
#include <set>

namespace teleop {

const std::vector<SignedJoint>& MotionAssignment::joints_for(Axis a) const
{
    switch (a) {
    case Axis::alpha: return spread;
    case Axis::sigma: return open;
    case Axis::epsilon: return curl;
    }
    return spread;
}

std::vector<JointPose> ExtremaPoses::pooled() const
{
    std::vector<JointPose> out;
    for (const auto& set : per_axis)
        out.insert(out.end(), set.begin(), set.end());
    return out;
}

ProjectionMatrix build_projection_matrix(int dof, const MotionAssignment& assign)
{
    if (dof <= 0)
        throw ValidationError("build_projection_matrix: dof must be positive");
    Eigen::MatrixX3d cols = Eigen::MatrixX3d::Zero(dof, 3);
    std::set<int> seen;
    for (Axis a : kAxes) {
        for (const auto& sj : assign.joints_for(a)) {
            if (sj.joint < 0 || sj.joint >= dof)
                throw ValidationError("motion assignment: joint index " + std::to_string(sj.joint) +
                                      " out of range for dof " + std::to_string(dof));
            if (sj.sign != 1 && sj.sign != -1)
                throw ValidationError("motion assignment: sign must be +1 or -1");
            if (!seen.insert(sj.joint).second)
                throw ValidationError("motion assignment: joint " + std::to_string(sj.joint) +
                                      " assigned to more than one motion (or listed twice)");
            cols(sj.joint, index(a)) = sj.sign;
        }
        const double n = cols.col(index(a)).norm();
        if (n > 0.0)
            cols.col(index(a)) /= n;
    }
    return ProjectionMatrix(std::move(cols));
}

TeleopMapping build_empirical_mapping(const HandModel& model, const JointPose& origin,
                                      const MotionAssignment& assign, const ExtremaPoses& extrema)
{
    require_dof(origin, model.dof, "empirical origin");
    if (!within_limits(model, origin))
        throw ValidationError("empirical origin lies outside the joint limits of '" + model.hand_id + "'");

    TeleopMapping m;
    m.hand_id = model.hand_id;
    m.origin = origin;
    m.A = build_projection_matrix(model.dof, assign);
    m.provenance.method = MappingMethod::empirical;

    for (Axis a : kAxes) {
        const auto& poses = extrema.per_axis[static_cast<std::size_t>(index(a))];
        if (!m.A.is_zero(a) && poses.empty())
            throw ValidationError("no extrema poses supplied for nonzero axis " + std::string(axis_name(a)));
        for (const auto& p : poses) {
            require_dof(p, model.dof, "extrema pose");
            if (!within_limits(model, p))
                throw ValidationError("extrema pose for " + std::string(axis_name(a)) + " violates joint limits");
        }
    }

    const auto pooled = extrema.pooled();
    if (pooled.empty()) {
        // Every column is zero; nothing to scale.
        m.scaling = ScalingFactors{};
    } else {
        m.scaling = compute_scaling(origin, m.A, pooled);
    }

    for (Axis a : kAxes) {
        if (m.A.is_zero(a)) {
            m.provenance.notes.push_back(std::string(axis_name(a)) + ": zero column, delta = 0");
            continue;
        }
        const auto& poses = extrema.per_axis[static_cast<std::size_t>(index(a))];
        const Eigen::MatrixX3d own = raw_projections(origin, m.A, poses);
        const auto col = own.col(index(a));
        if (col.maxCoeff() == col.minCoeff())
            m.provenance.notes.push_back("warning: " + std::string(axis_name(a)) +
                                         " extrema poses do not move along their axis");
        if (m.scaling.delta[index(a)] == 0.0)
            m.provenance.notes.push_back("warning: " + std::string(axis_name(a)) + " has zero range, delta = 0");
    }
    return m;
}

} // namespace teleop
