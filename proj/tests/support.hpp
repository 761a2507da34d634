#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "teleop/dataset.hpp"
#include "teleop/hand_model.hpp"
#include "teleop/objects.hpp"
#include "teleop/subspace.hpp"

namespace teleop::test {

inline std::filesystem::path data_path(const std::string& rel)
{
    return std::filesystem::path(TELEOP_DATA_DIR) / rel;
}

/// Random N x k matrix with orthonormal columns.
inline Eigen::MatrixXd random_orthonormal(int n, int k, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    Eigen::MatrixXd M(n, k);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j)
            M(i, j) = g(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
}

inline Eigen::VectorXd random_vector(int n, double lo, double hi, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i)
        v[i] = u(rng);
    return v;
}

/// Mapping with orthonormal columns (one may be zeroed) and positive scaling on nonzero axes.
inline TeleopMapping random_mapping(int n, std::mt19937_64& rng, bool allow_zero_column = true)
{
    TeleopMapping m;
    m.hand_id = "random";
    m.origin = random_vector(n, -1.0, 1.0, rng);
    Eigen::MatrixX3d A = random_orthonormal(n, 3, rng);
    std::uniform_int_distribution<int> pick(0, 5);
    const int zero = allow_zero_column ? pick(rng) : 3;
    if (zero < 3)
        A.col(zero).setZero();
    m.A = ProjectionMatrix(A);
    Eigen::Vector3d delta = random_vector(3, 0.2, 3.0, rng);
    if (zero < 3)
        delta[zero] = 0.0;
    m.scaling = ScalingFactors::from_delta(delta);
    return m;
}

/// Sines of the principal angles between the column spans of Q1 and Q2 (both orthonormal).
inline Eigen::VectorXd principal_angle_sines(const Eigen::MatrixXd& Q1, const Eigen::MatrixXd& Q2)
{
    const Eigen::MatrixXd R = Q2 - Q1 * (Q1.transpose() * Q2);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(R);
    return svd.singularValues();
}

/// Grasps placed at the predicted psi of each object through a known subspace, plus uniform
/// outliers. `inlier_of[object-1][i]` tells whether grasp i was planted.
struct PlantedDataset {
    GraspDataset dataset;
    Eigen::MatrixX3d A;
    Eigen::VectorXd origin;
    std::array<std::vector<bool>, kObjectCount> inlier_of;
};

inline PlantedDataset planted_dataset(int n, int per_object, double outlier_fraction, double in_plane_noise,
                                      std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    PlantedDataset p;
    p.A = random_orthonormal(n, 3, rng);
    p.origin = random_vector(n, -0.3, 0.3, rng);
    p.dataset.hand_id = "planted";
    p.dataset.dof = n;
    const auto objects = canonical_object_set(1.0);
    const int outliers = static_cast<int>(std::lround(outlier_fraction * per_object));
    std::normal_distribution<double> g;
    for (const auto& obj : objects) {
        for (int i = 0; i < per_object; ++i) {
            Grasp grasp;
            grasp.object_id = obj.id;
            grasp.grasp_type = obj.grasp_type;
            grasp.quality = 1.0;
            const bool inlier = i >= outliers;
            if (inlier) {
                Eigen::Vector3d noise = Eigen::Vector3d::Zero();
                if (in_plane_noise > 0.0) {
                    noise = Eigen::Vector3d(g(rng), g(rng), g(rng));
                    std::uniform_real_distribution<double> r(0.0, in_plane_noise);
                    noise *= r(rng) / noise.norm();
                }
                grasp.q = p.origin + p.A * (obj.predicted_psi.psi + noise);
            } else {
                grasp.q = random_vector(n, -1.5, 1.5, rng);
            }
            p.inlier_of[static_cast<std::size_t>(obj.id - 1)].push_back(inlier);
            p.dataset.add(std::move(grasp));
        }
    }
    return p;
}

/// A hand whose every length and base position is `s` times those of `model`.
inline HandModel scaled_replica(const HandModel& model, double s)
{
    HandModel out = model;
    out.hand_id = model.hand_id + "_x" + std::to_string(s);
    out.scale = model.scale * s;
    for (auto& f : out.fingers) {
        f.base_position *= s;
        for (auto& l : f.links)
            l.length *= s;
    }
    return out;
}

} // namespace teleop::test
