#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "teleop/common.hpp"

namespace teleop {

/// A point of the shared teleoperation subspace, ordered (spread, size, curl).
struct TeleopPoint {
    Eigen::Vector3d psi = Eigen::Vector3d::Zero();

    double alpha() const { return psi[0]; }
    double sigma() const { return psi[1]; }
    double epsilon() const { return psi[2]; }
    double operator[](Axis a) const { return psi[index(a)]; }
};

/// N x 3 matrix whose columns are the hand's spread, size and curl directions.
/// Columns are unit length or all-zero and mutually orthogonal.
class ProjectionMatrix {
public:
    ProjectionMatrix() = default;
    explicit ProjectionMatrix(Eigen::MatrixX3d columns);

    int dof() const { return static_cast<int>(columns_.rows()); }
    const Eigen::MatrixX3d& matrix() const { return columns_; }
    Eigen::VectorXd column(Axis a) const { return columns_.col(index(a)); }
    bool is_zero(Axis a) const;

    /// Empty iff the orthonormality invariants hold within `tol`.
    std::vector<std::string> check(double tol = 1e-9) const;

private:
    Eigen::MatrixX3d columns_;
};

struct ScalingFactors {
    Eigen::Vector3d delta = Eigen::Vector3d::Zero();
    Eigen::Vector3d delta_star = Eigen::Vector3d::Zero();

    /// Inverse scale per axis, zero where delta is zero.
    static ScalingFactors from_delta(const Eigen::Vector3d& delta);
};

enum class MappingMethod { empirical, ransac };

std::string_view method_name(MappingMethod m);
MappingMethod parse_method(std::string_view s);

struct Provenance {
    MappingMethod method = MappingMethod::empirical;
    std::uint64_t seed = 0;
    std::string dataset_digest;
    std::vector<std::string> notes;
};

/// Everything needed to move one hand's poses in and out of the subspace.
struct TeleopMapping {
    std::string hand_id;
    JointPose origin;
    ProjectionMatrix A;
    ScalingFactors scaling;
    Provenance provenance;

    int dof() const { return static_cast<int>(origin.size()); }

    /// Throws ValidationError if dimensions or column invariants disagree.
    void check_consistent() const;
};

/// psi = ((q - o) . A) (*) delta
TeleopPoint project_to_subspace(const TeleopMapping& m, const JointPose& q);

/// q = ((psi (*) delta*) . A^T) + o. Not clamped.
JointPose project_from_subspace(const TeleopMapping& m, const TeleopPoint& psi);

struct TeleopResult {
    JointPose q_slave;
    TeleopPoint psi;
};

/// Full master -> slave map, evaluated as one expression.
TeleopResult teleop_map(const TeleopMapping& master, const TeleopMapping& slave, const JointPose& q_master);

/// Unscaled projections (delta = 1) of `poses`, one row per pose.
Eigen::MatrixX3d raw_projections(const JointPose& origin, const ProjectionMatrix& A,
                                 const std::vector<JointPose>& poses);

/// Per-axis range is |max| + |min| of the unscaled projections; delta = 1/range, or 0 for a
/// zero range. Zero columns of A always get delta = 0.
ScalingFactors compute_scaling(const JointPose& origin, const ProjectionMatrix& A,
                               const std::vector<JointPose>& extrema_poses);

} // namespace teleop
