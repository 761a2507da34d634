#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "teleop/dataset.hpp"
#include "teleop/hand_model.hpp"
#include "teleop/seeding.hpp"
#include "teleop/subspace.hpp"

namespace teleop {

struct GraspRef {
    int object_id = 0;
    std::size_t index = 0;

    bool operator==(const GraspRef&) const = default;
};

/// Candidate subspace: an origin grasp and three orthonormal labeled directions.
struct SubspaceHypothesis {
    JointPose origin;
    GraspRef origin_ref;
    std::array<Eigen::VectorXd, 3> basis; // indexed by Axis
    std::array<GraspRef, 3> sources;      // grasp each direction was drawn toward, by Axis

    int dof() const { return static_cast<int>(origin.size()); }
    const Eigen::VectorXd& direction(Axis a) const { return basis[static_cast<std::size_t>(index(a))]; }
    Eigen::MatrixX3d matrix() const;
};

/// Four-level consensus score; see better().
struct TieredScore {
    int t1 = 0;      // fewest inliers of any object
    int t2 = 0;      // number of objects at that minimum
    int t3 = 0;      // total inliers
    double t4 = 0.0; // summed distance of every grasp to the subspace

    bool operator==(const TieredScore&) const = default;
};

/// True if `a` is strictly preferred: more inliers on the worst object, then fewer objects at
/// that minimum, then more inliers overall, then lower total distance.
bool better(const TieredScore& a, const TieredScore& b);

struct ScoreDetail {
    TieredScore score;
    std::array<int, kObjectCount> per_object_inliers{};
};

struct FitConfig {
    std::uint64_t M = 20'000;
    double xi = 0.1;
    std::uint64_t seed = 0;
    std::size_t delta_combo_cap = 4096;
    int origin_object = 8;
    std::array<int, 3> axis_objects{6, 7, 4}; // source object per Axis (alpha, sigma, epsilon)
    int relocation_object = 1;
    unsigned workers = 1;
    int max_resamples = 64;
};

inline constexpr double kHumanInlierThreshold = 0.1;

/// Modified Gram-Schmidt in input order. Empty if any residual norm falls below 1e-8.
std::optional<std::array<Eigen::VectorXd, 3>> gram_schmidt(const std::array<Eigen::VectorXd, 3>& vectors);

/// One draw: origin from the origin object, one grasp per axis-source object, directions
/// shuffled, orthonormalized, and oriented toward increasing predicted psi. Empty when the
/// draw is degenerate.
std::optional<SubspaceHypothesis> try_sample_hypothesis(const GraspDataset& dataset, Rng& rng, const FitConfig& cfg);

/// Redraws degenerate samples up to cfg.max_resamples times; throws if none succeeds.
SubspaceHypothesis sample_hypothesis(const GraspDataset& dataset, Rng& rng, const FitConfig& cfg = {});

/// Euclidean distance from g to the affine subspace origin + span(basis).
double point_to_subspace_distance(const SubspaceHypothesis& hyp, const JointPose& g);

ScoreDetail score_hypothesis(const SubspaceHypothesis& hyp, const GraspDataset& dataset, double xi);

struct FitResult {
    SubspaceHypothesis hypothesis;
    ScoreDetail detail;
    std::uint64_t best_index = 0;
    std::uint64_t evaluated = 0;
    std::uint64_t degenerate = 0;
};

/// RANSAC over cfg.M seeded hypotheses. Ties keep the lowest hypothesis index, so the result
/// is the same for any worker count.
FitResult fit_subspace(const GraspDataset& dataset, const FitConfig& cfg);

/// Moves the origin to the grasp of `object_id` nearest the subspace.
SubspaceHypothesis relocate_origin(const SubspaceHypothesis& hyp, const GraspDataset& dataset, int object_id = 1);

/// Uses a calibration pose (e.g. an operator holding object 1) as the new origin.
SubspaceHypothesis relocate_origin(const SubspaceHypothesis& hyp, const JointPose& calibration_pose);

/// Extrema poses for one axis: relevant joints (|A_jk| > 1e-6) at every min/max combination,
/// others at the origin. More than `cap` combinations are sampled uniformly.
struct ExtremaEnumeration {
    std::vector<JointPose> poses;
    std::size_t relevant_joints = 0;
    bool sampled = false;
};
ExtremaEnumeration enumerate_axis_extrema(const HandModel& model, const JointPose& origin, const Eigen::VectorXd& column,
                                          std::size_t cap, Rng& rng);

/// Mapping from a fitted (and usually relocated) hypothesis. Without calibration poses the
/// scaling comes from enumerated joint-limit combinations.
TeleopMapping build_algorithmic_mapping(const HandModel& model, const SubspaceHypothesis& fitted, const FitConfig& cfg,
                                        const std::optional<std::vector<JointPose>>& calibration_extrema = std::nullopt,
                                        const std::string& dataset_digest = {});

} // namespace teleop
