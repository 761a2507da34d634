#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"
#include "teleop/hand_model.hpp"
#include "teleop/io.hpp"

using namespace teleop;

namespace {

HandModel two_link_finger()
{
    HandModel m;
    m.hand_id = "two_link";
    m.dof = 2;
    m.joints = {{"j0", -1.0, 1.0}, {"j1", -1.0, 1.0}};
    FingerChain f;
    f.name = "f";
    f.base_position = {0.01, 0.02, 0.03};
    f.links = {{0.04, 0, Eigen::Vector3d::UnitZ()}, {0.03, 1, Eigen::Vector3d::UnitZ()}};
    m.fingers = {f};
    return m;
}

using Mat4 = std::array<std::array<double, 4>, 4>;

Mat4 mat_mul(const Mat4& a, const Mat4& b)
{
    Mat4 c{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k)
                c[i][j] += a[i][k] * b[k][j];
    return c;
}

Mat4 rodrigues(Eigen::Vector3d k, double th)
{
    k.normalize();
    const double c = std::cos(th), s = std::sin(th), v = 1.0 - c;
    Mat4 r{};
    r[0] = {c + k.x() * k.x() * v, k.x() * k.y() * v - k.z() * s, k.x() * k.z() * v + k.y() * s, 0};
    r[1] = {k.y() * k.x() * v + k.z() * s, c + k.y() * k.y() * v, k.y() * k.z() * v - k.x() * s, 0};
    r[2] = {k.z() * k.x() * v - k.y() * s, k.z() * k.y() * v + k.x() * s, c + k.z() * k.z() * v, 0};
    r[3] = {0, 0, 0, 1};
    return r;
}

Mat4 translation(double x, double y, double z)
{
    Mat4 t{};
    for (int i = 0; i < 4; ++i)
        t[i][i] = 1.0;
    t[0][3] = x;
    t[1][3] = y;
    t[2][3] = z;
    return t;
}

Mat4 quat_matrix(const Eigen::Quaterniond& q, const Eigen::Vector3d& p)
{
    const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
    Mat4 m{};
    m[0] = {1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w), p.x()};
    m[1] = {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w), p.y()};
    m[2] = {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y), p.z()};
    m[3] = {0, 0, 0, 1};
    return m;
}

} // namespace

TEST_CASE("validate_model")
{
    const auto good = io::load_hand_model(test::data_path("models/schunk_sdh.json"));
    CHECK(validate_model(good).empty());

    auto bad = good;
    bad.joints[2].min = 2.0;
    bad.joints[2].max = 1.0;
    const auto v = validate_model(bad);
    REQUIRE(v.size() == 1);
    CHECK(v[0].field == "joints[2]");
    CHECK(v[0].rule.find(bad.joints[2].name) != std::string::npos);

    auto bad_index = good;
    bad_index.fingers[0].links[0].joint_index = good.dof;
    const auto vi = validate_model(bad_index);
    REQUIRE(!vi.empty());
    CHECK(vi[0].field == "fingers[0].links[0].joint_index");
    CHECK_THROWS_AS(require_valid(bad_index), ValidationError);
}

TEST_CASE("forward kinematics examples")
{
    auto m = two_link_finger();
    const auto k = forward_kinematics(m, Eigen::Vector2d::Zero());
    const Eigen::Vector3d expected = m.fingers[0].base_pose() * Eigen::Vector3d(0.07, 0, 0);
    CHECK((k.fingers[0].fingertip - expected).norm() < 1e-15);

    HandModel one = m;
    one.dof = 1;
    one.joints.resize(1);
    one.fingers[0].links = {{0.05, 0, Eigen::Vector3d::UnitZ()}};
    const auto q = (Eigen::VectorXd(1) << std::numbers::pi / 2).finished();
    const auto k1 = forward_kinematics(one, q);
    const Eigen::Vector3d e1 = one.fingers[0].base_pose() * Eigen::Vector3d(0, 0.05, 0);
    CHECK((k1.fingers[0].fingertip - e1).norm() < 1e-15);

    CHECK_THROWS_AS(forward_kinematics(m, Eigen::VectorXd::Zero(3)), DimensionError);
}

TEST_CASE("forward kinematics matches an independent matrix product")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        HandModel m;
        m.hand_id = "random";
        m.dof = 3;
        for (int j = 0; j < 3; ++j)
            m.joints.push_back({"j" + std::to_string(j), -3.2, 3.2});
        FingerChain f;
        f.name = "f";
        f.base_position = {u(rng), u(rng), u(rng)};
        f.base_orientation = Eigen::Quaterniond(u(rng), u(rng), u(rng), u(rng)).normalized();
        for (int j = 0; j < 3; ++j)
            f.links.push_back({0.02 + 0.05 * std::abs(u(rng)), j, Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized()});
        m.fingers = {f};
        Eigen::VectorXd q(3);
        for (int j = 0; j < 3; ++j)
            q[j] = 3.0 * u(rng);

        Mat4 T = quat_matrix(f.base_orientation, f.base_position);
        for (const auto& l : f.links)
            T = mat_mul(mat_mul(T, rodrigues(l.axis, q[l.joint_index])), translation(l.length, 0, 0));

        const auto tip = forward_kinematics(m, q).fingers[0].fingertip;
        for (int i = 0; i < 3; ++i)
            CHECK(std::abs(tip[i] - T[static_cast<std::size_t>(i)][3]) < 1e-12);
    }
}

TEST_CASE("scaling every length scales fingertip offsets from the base")
{
    const auto m = io::load_hand_model(test::data_path("models/human.json"));
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const double s = test::random_vector(1, 0.3, 3.0, rng)[0];
        const auto big = test::scaled_replica(m, s);
        const JointPose q = test::random_vector(m.dof, -1.0, 1.0, rng);
        const auto a = forward_kinematics(m, q);
        const auto b = forward_kinematics(big, q);
        for (std::size_t f = 0; f < m.fingers.size(); ++f) {
            const Eigen::Vector3d da = a.fingers[f].fingertip - m.fingers[f].base_position;
            const Eigen::Vector3d db = b.fingers[f].fingertip - big.fingers[f].base_position;
            CHECK((db - s * da).norm() < 1e-12);
        }
    }
}

TEST_CASE("forward kinematics is deterministic")
{
    const auto m = io::load_hand_model(test::data_path("models/schunk_sdh.json"));
    const JointPose q = mid_pose(m);
    const auto a = forward_kinematics(m, q);
    const auto b = forward_kinematics(m, q);
    for (std::size_t f = 0; f < a.fingers.size(); ++f)
        CHECK(a.fingers[f].fingertip == b.fingers[f].fingertip);
}

TEST_CASE("clamp_to_limits")
{
    const auto m = two_link_finger();
    const Eigen::Vector2d inside(0.2, -0.3);
    const auto r = clamp_to_limits(m, inside);
    CHECK(r.q == inside);
    CHECK(r.count() == 0);

    const auto low = clamp_to_limits(m, Eigen::Vector2d(-5.0, 0.0));
    CHECK(low.q[0] == -1.0);
    CHECK(low.clamped[0]);
    CHECK_FALSE(low.clamped[1]);

    CHECK_THROWS_AS(clamp_to_limits(m, Eigen::Vector2d(std::nan(""), 0.0)), ValidationError);

    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        const JointPose q = test::random_vector(2, -3.0, 3.0, rng);
        const auto once = clamp_to_limits(m, q);
        const auto twice = clamp_to_limits(m, once.q);
        CHECK(twice.q == once.q);
        CHECK(twice.count() == 0);
        CHECK(within_limits(m, once.q));
    }
}
