#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "teleop/io.hpp"
#include "teleop/subspace.hpp"

using namespace teleop;

namespace {

TeleopMapping identity3()
{
    TeleopMapping m;
    m.hand_id = "id3";
    m.origin = Eigen::Vector3d(0.1, 0.1, 0.1);
    m.A = ProjectionMatrix(Eigen::Matrix3d::Identity());
    m.scaling = ScalingFactors::from_delta({0.5, 1.0, 2.0});
    return m;
}

} // namespace

TEST_CASE("project_to_subspace examples")
{
    const auto m = identity3();
    CHECK(project_to_subspace(m, m.origin).psi.norm() == 0.0);

    const Eigen::Vector3d q(1.1, 0.6, 0.35);
    const auto psi = project_to_subspace(m, q).psi;
    for (int k = 0; k < 3; ++k) {
        double dot = 0.0;
        for (int j = 0; j < 3; ++j)
            dot += (q[j] - m.origin[j]) * m.A.matrix()(j, k);
        CHECK(std::abs(psi[k] - dot * m.scaling.delta[k]) < 1e-15);
        CHECK(std::abs(psi[k] - 0.5) < 1e-12);
    }

    auto schunk = io::load_mapping(test::data_path("mappings/schunk_sdh_empirical.json"));
    schunk.scaling = ScalingFactors::from_delta({1, 1, 1});
    JointPose qs = schunk.origin;
    qs += (Eigen::VectorXd(7) << 0, 1, 0, 1, 0, 1, 0).finished();
    const auto ps = project_to_subspace(schunk, qs).psi;
    CHECK(std::abs(ps[0]) < 1e-3);
    CHECK(std::abs(ps[1] - 1.732) < 1e-3);
    CHECK(std::abs(ps[2]) < 1e-3);

    CHECK_THROWS_AS(project_to_subspace(m, Eigen::VectorXd::Zero(4)), DimensionError);
}

TEST_CASE("project_from_subspace examples")
{
    const auto m = identity3();
    CHECK(project_from_subspace(m, TeleopPoint{}) == m.origin);
    CHECK(m.scaling.delta_star == Eigen::Vector3d(2.0, 1.0, 0.5));
    const auto q = project_from_subspace(m, TeleopPoint{Eigen::Vector3d(0.5, 0.5, 0.5)});
    CHECK((q - Eigen::Vector3d(1.1, 0.6, 0.35)).norm() < 1e-12);

    auto z = m;
    z.scaling = ScalingFactors::from_delta({0.0, 1.0, 2.0});
    CHECK(z.scaling.delta_star[0] == 0.0);
    CHECK(project_from_subspace(z, TeleopPoint{Eigen::Vector3d(1, 0, 0)}) == z.origin);
}

TEST_CASE("teleop_map examples")
{
    std::mt19937_64 rng(21);
    const auto m = test::random_mapping(7, rng, false);
    const Eigen::Vector3d v(0.3, -0.2, 0.7);
    const JointPose q = m.origin + m.A.matrix() * v;
    CHECK((teleop_map(m, m, q).q_slave - q).norm() < 1e-9);

    const JointPose arbitrary = test::random_vector(7, -1, 1, rng);
    const auto once = teleop_map(m, m, arbitrary).q_slave;
    const auto twice = teleop_map(m, m, once).q_slave;
    CHECK((once - twice).norm() < 1e-9);

    const auto human = io::load_mapping(test::data_path("mappings/human_empirical.json"));
    const auto schunk = io::load_mapping(test::data_path("mappings/schunk_sdh_empirical.json"));
    CHECK((teleop_map(human, schunk, human.origin).q_slave - schunk.origin).norm() < 1e-9);
}

TEST_CASE("projection identities on random mappings")
{
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> dof(3, 16);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = dof(rng);
        const auto master = test::random_mapping(n, rng);
        const auto slave = test::random_mapping(dof(rng), rng);
        const JointPose q = test::random_vector(n, -2, 2, rng);

        const auto composed = project_from_subspace(slave, project_to_subspace(master, q));
        const auto direct = teleop_map(master, slave, q);
        CHECK((direct.q_slave - composed).cwiseAbs().maxCoeff() < 1e-12);

        const auto psi = project_to_subspace(master, q);
        const auto again = project_to_subspace(master, project_from_subspace(master, psi));
        CHECK((again.psi - psi.psi).cwiseAbs().maxCoeff() < 1e-9);

        for (Axis a : kAxes) {
            if (!master.A.is_zero(a))
                CHECK(std::abs(master.scaling.delta[index(a)] * master.scaling.delta_star[index(a)] - 1.0) < 1e-12);
        }

        const JointPose q2 = test::random_vector(n, -2, 2, rng);
        const double lam = test::random_vector(1, 0, 1, rng)[0];
        const auto lhs = project_to_subspace(master, lam * q + (1 - lam) * q2).psi;
        const Eigen::Vector3d rhs = lam * psi.psi + (1 - lam) * project_to_subspace(master, q2).psi;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("compute_scaling examples")
{
    const JointPose o = Eigen::Vector3d::Zero();
    const ProjectionMatrix A(Eigen::Matrix3d::Identity());

    const std::vector<JointPose> extrema{Eigen::Vector3d(0, -0.3, -2), Eigen::Vector3d(0, 0.7, 2)};
    const auto s = compute_scaling(o, A, extrema);
    CHECK(s.delta[0] == 0.0);
    CHECK(s.delta_star[0] == 0.0);
    CHECK(std::abs(s.delta[1] - 1.0) < 1e-15);
    CHECK(std::abs(s.delta_star[1] - 1.0) < 1e-15);
    CHECK(s.delta[2] == 0.25);
    CHECK(s.delta_star[2] == 4.0);

    // Both extrema on the same side: the range is still |max| + |min|.
    const auto same = compute_scaling(o, A, {Eigen::Vector3d(0.5, 0, 0), Eigen::Vector3d(1.5, 0, 0)});
    CHECK(same.delta[0] == 0.5);

    Eigen::Matrix3d cols = Eigen::Matrix3d::Identity();
    cols.col(2).setZero();
    const auto zero_col = compute_scaling(o, ProjectionMatrix(cols), extrema);
    CHECK(zero_col.delta[2] == 0.0);
    CHECK(zero_col.delta_star[2] == 0.0);
}

TEST_CASE("scaled extrema have unit range")
{
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 10);
        auto m = test::random_mapping(n, rng);
        std::vector<JointPose> extrema{m.origin};
        for (int i = 0; i < 6; ++i)
            extrema.push_back(m.origin + test::random_vector(n, -1.5, 1.5, rng));
        m.scaling = compute_scaling(m.origin, m.A, extrema);
        for (Axis a : kAxes) {
            const int k = index(a);
            if (m.A.is_zero(a)) {
                CHECK(m.scaling.delta[k] == 0.0);
                continue;
            }
            double lo = 1e300, hi = -1e300;
            for (const auto& e : extrema) {
                const double v = project_to_subspace(m, e).psi[k];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            CHECK(std::abs(hi - lo - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("check_consistent")
{
    auto m = identity3();
    CHECK_NOTHROW(m.check_consistent());
    Eigen::Matrix3d skew = Eigen::Matrix3d::Identity();
    skew(0, 1) = 0.5;
    CHECK_FALSE(ProjectionMatrix(skew).check().empty());
    m.origin = Eigen::VectorXd::Zero(4);
    CHECK_THROWS_AS(m.check_consistent(), ValidationError);
}
