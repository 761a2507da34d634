#include "teleop/subspace.hpp"

#include <cmath>
#include <sstream>

namespace teleop {

ProjectionMatrix::ProjectionMatrix(Eigen::MatrixX3d columns) : columns_(std::move(columns)) {}

bool ProjectionMatrix::is_zero(Axis a) const
{
    return columns_.col(index(a)).isZero(0.0);
}

std::vector<std::string> ProjectionMatrix::check(double tol) const
{
    std::vector<std::string> out;
    if (!columns_.allFinite())
        out.emplace_back("non-finite entries");
    for (Axis a : kAxes) {
        if (is_zero(a))
            continue;
        const double n = columns_.col(index(a)).norm();
        if (std::abs(n - 1.0) > tol)
            out.push_back(std::string(axis_name(a)) + " column norm " + std::to_string(n) + " is not 1");
    }
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            const double d = columns_.col(i).dot(columns_.col(j));
            if (std::abs(d) > tol)
                out.push_back(std::string(axis_name(kAxes[i])) + "/" + std::string(axis_name(kAxes[j])) +
                              " columns not orthogonal");
        }
    return out;
}

ScalingFactors ScalingFactors::from_delta(const Eigen::Vector3d& delta)
{
    ScalingFactors s;
    s.delta = delta;
    for (int k = 0; k < 3; ++k)
        s.delta_star[k] = delta[k] == 0.0 ? 0.0 : 1.0 / delta[k];
    return s;
}

std::string_view method_name(MappingMethod m)
{
    return m == MappingMethod::empirical ? "empirical" : "ransac";
}

MappingMethod parse_method(std::string_view s)
{
    if (s == "empirical")
        return MappingMethod::empirical;
    if (s == "ransac")
        return MappingMethod::ransac;
    throw FormatError("unknown mapping method '" + std::string(s) + "'");
}

void TeleopMapping::check_consistent() const
{
    if (origin.size() == 0)
        throw ValidationError("mapping '" + hand_id + "': empty origin");
    if (A.dof() != origin.size())
        throw DimensionError("mapping '" + hand_id + "': projection matrix has " + std::to_string(A.dof()) +
                             " rows but origin has " + std::to_string(origin.size()));
    require_finite(origin, "mapping origin");
    const auto issues = A.check();
    if (!issues.empty())
        throw ValidationError("mapping '" + hand_id + "': " + issues.front());
    for (int k = 0; k < 3; ++k) {
        const double d = scaling.delta[k];
        const double ds = scaling.delta_star[k];
        if (!(d >= 0.0) || !(ds >= 0.0) || !std::isfinite(d) || !std::isfinite(ds))
            throw ValidationError("mapping '" + hand_id + "': scaling factors must be finite and >= 0");
        if ((d == 0.0) != (ds == 0.0))
            throw ValidationError("mapping '" + hand_id + "': delta and delta_star disagree on a zero axis");
        if (d > 0.0 && std::abs(d * ds - 1.0) > 1e-12)
            throw ValidationError("mapping '" + hand_id + "': delta * delta_star != 1");
    }
}

TeleopPoint project_to_subspace(const TeleopMapping& m, const JointPose& q)
{
    require_dof(q, m.dof(), "project_to_subspace");
    require_finite(q, "project_to_subspace");
    const Eigen::Vector3d raw = m.A.matrix().transpose() * (q - m.origin);
    return TeleopPoint{raw.cwiseProduct(m.scaling.delta)};
}

JointPose project_from_subspace(const TeleopMapping& m, const TeleopPoint& psi)
{
    require_finite(psi.psi, "project_from_subspace");
    return m.A.matrix() * psi.psi.cwiseProduct(m.scaling.delta_star) + m.origin;
}

TeleopResult teleop_map(const TeleopMapping& master, const TeleopMapping& slave, const JointPose& q_master)
{
    require_dof(q_master, master.dof(), "teleop_map");
    require_finite(q_master, "teleop_map");
    const Eigen::Vector3d psi = (master.A.matrix().transpose() * (q_master - master.origin))
                                    .cwiseProduct(master.scaling.delta);
    JointPose q_slave = slave.A.matrix() * psi.cwiseProduct(slave.scaling.delta_star) + slave.origin;
    return {std::move(q_slave), TeleopPoint{psi}};
}

Eigen::MatrixX3d raw_projections(const JointPose& origin, const ProjectionMatrix& A,
                                 const std::vector<JointPose>& poses)
{
    Eigen::MatrixX3d out(static_cast<Eigen::Index>(poses.size()), 3);
    for (std::size_t i = 0; i < poses.size(); ++i) {
        require_dof(poses[i], A.dof(), "extrema pose");
        out.row(static_cast<Eigen::Index>(i)) = (A.matrix().transpose() * (poses[i] - origin)).transpose();
    }
    return out;
}

ScalingFactors compute_scaling(const JointPose& origin, const ProjectionMatrix& A,
                               const std::vector<JointPose>& extrema_poses)
{
    if (extrema_poses.empty())
        throw ValidationError("compute_scaling: no extrema poses");
    require_dof(origin, A.dof(), "compute_scaling origin");
    const Eigen::MatrixX3d proj = raw_projections(origin, A, extrema_poses);
    Eigen::Vector3d delta = Eigen::Vector3d::Zero();
    for (Axis a : kAxes) {
        const int k = index(a);
        if (A.is_zero(a))
            continue;
        // Literal |max| + |min|; equals max - min only when the extrema straddle the origin.
        const double range = std::abs(proj.col(k).maxCoeff()) + std::abs(proj.col(k).minCoeff());
        delta[k] = range == 0.0 ? 0.0 : 1.0 / range;
    }
    return ScalingFactors::from_delta(delta);
}

} // namespace teleop
