#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "teleop/baselines.hpp"
#include "teleop/io.hpp"

using namespace teleop;

namespace {

HandModel load(const std::string& name)
{
    return io::load_hand_model(test::data_path("models/" + name + ".json"));
}

JointCorrespondence load_corr(const std::string& name)
{
    return io::correspondence_from_json(io::read_json_file(test::data_path("correspondences/" + name + ".json")));
}

FingertipConfig replica_config(const HandModel& m)
{
    FingertipConfig cfg;
    cfg.master_hand = m.hand_id;
    cfg.slave_hand = m.hand_id + "_big";
    for (const auto& f : m.fingers)
        cfg.finger_pairs.emplace_back(f.name, f.name);
    cfg.scale = 1.5;
    cfg.ik.tolerance = 1e-12;
    cfg.ik.max_iters = 500;
    cfg.ik.damping = 1e-3;
    return cfg;
}

// Planar two-link finger rotating about +z.
HandModel planar_finger()
{
    HandModel m;
    m.hand_id = "planar";
    m.dof = 2;
    m.joints = {{"j0", -1.0, 1.0}, {"j1", -1.5, 1.5}};
    FingerChain f;
    f.name = "f";
    f.links = {{0.06, 0, Eigen::Vector3d::UnitZ()}, {0.04, 1, Eigen::Vector3d::UnitZ()}};
    m.fingers = {f};
    return m;
}

} // namespace

TEST_CASE("joint map follows the Schunk table")
{
    const auto human = load("human");
    const auto schunk = load("schunk_sdh");
    const auto corr = load_corr("human_to_schunk");
    const JointPose origin = mid_pose(schunk);

    JointPose q = mid_pose(human);
    q[4] = 0.3; // index/middle adduction (e)
    const auto r = joint_map(corr, q, schunk, origin);
    CHECK(r.q[0] == 0.3);
    CHECK(r.q[1] == q[0]);
    CHECK(r.q[2] == q[1]);
    CHECK(r.q[3] == q[2]);
    CHECK(r.q[4] == q[3]);
    CHECK(r.q[5] == q[5]);
    CHECK(r.q[6] == q[6]);
    CHECK(r.count() == 0);
}

TEST_CASE("joint map follows the gripper table")
{
    const auto human = load("human");
    const auto gripper = load("gripper");
    const auto corr = load_corr("human_to_gripper");
    JointPose q = mid_pose(human);
    q[0] = 0.21;
    q[7] = 0.33;
    q[5] = -0.1;
    q[6] = 0.45;
    const auto r = joint_map(corr, q, gripper, mid_pose(gripper));
    CHECK(r.q[0] == 0.21);
    CHECK(r.q[1] == 0.33);
    CHECK(r.q[2] == -0.1);
    CHECK(r.q[3] == 0.45);
}

TEST_CASE("joint map clamps and pins unmapped joints")
{
    const auto schunk = load("schunk_sdh");
    JointCorrespondence corr{"m", "s", {{0, 2}}};
    JointPose origin = mid_pose(schunk);
    origin[5] = 0.123;
    const auto r = joint_map(corr, Eigen::Vector2d(10.0, 0.0), schunk, origin);
    CHECK(r.q[2] == schunk.joints[2].max);
    CHECK(r.clamped[2]);
    CHECK(r.q[5] == 0.123);

    JointCorrespondence id{"s", "s", {}};
    for (int j = 0; j < schunk.dof; ++j)
        id.pairs.emplace_back(j, j);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        const JointPose q = test::random_vector(7, -3, 3, rng);
        const auto once = joint_map(id, q, schunk, origin);
        CHECK(once.q == clamp_to_limits(schunk, q).q);
        CHECK(joint_map(id, once.q, schunk, origin).q == once.q);
    }

    CHECK_THROWS_AS(check_correspondence({"m", "s", {{0, 7}}}, 2, 7), ValidationError);
    CHECK_THROWS_AS(check_correspondence({"m", "s", {{2, 0}}}, 2, 7), ValidationError);
    CHECK_THROWS_AS(check_correspondence({"m", "s", {{0, 1}, {1, 1}}}, 2, 7), ValidationError);
}

TEST_CASE("fingertip map onto a scaled replica recovers the master pose")
{
    const auto master = load("schunk_sdh");
    const auto slave = test::scaled_replica(master, 1.5);
    const auto cfg = replica_config(master);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        JointPose q = mid_pose(master);
        q[0] = test::random_vector(1, 0.1, 1.4, rng)[0];
        for (int j : {1, 3, 5})
            q[j] = test::random_vector(1, -0.6, 0.6, rng)[0];
        for (int j : {2, 4, 6})
            q[j] = test::random_vector(1, 0.3, 1.3, rng)[0];
        JointPose seed = q;
        seed += test::random_vector(7, -0.15, 0.15, rng);
        const auto r = fingertip_map(cfg, master, q, slave, seed);
        CHECK((r.joints.q - q).cwiseAbs().maxCoeff() < 1e-6);
        for (double res : r.residuals)
            CHECK(res < 1e-9);
    }
}

TEST_CASE("unreachable targets stop at the workspace boundary")
{
    const auto m = planar_finger();
    IkConfig cfg;
    cfg.max_iters = 2000;
    // Outside the angular limit and beyond full reach.
    const Eigen::Vector3d target = 0.15 * Eigen::Vector3d(std::cos(1.8), std::sin(1.8), 0.0);
    double oracle = 1e300;
    for (int a = 0; a <= 400; ++a)
        for (int b = 0; b <= 600; ++b) {
            const JointPose q = Eigen::Vector2d(-1.0 + a * 0.005, -1.5 + b * 0.005);
            oracle = std::min(oracle, (forward_kinematics(m, q).fingers[0].fingertip - target).norm());
        }
    const auto r = solve_finger_ik(m, 0, target, Eigen::Vector2d(0.2, 0.3), cfg);
    CHECK(std::abs(r.residual - oracle) < 1e-4);
    CHECK(r.q[0] == m.joints[0].max);
}

TEST_CASE("ik residual never increases")
{
    const auto m = load("human");
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const int f = static_cast<int>(rng() % m.fingers.size());
        const Eigen::Vector3d target = test::random_vector(3, -0.12, 0.12, rng);
        const auto r = solve_finger_ik(m, f, target, mid_pose(m), IkConfig{});
        REQUIRE(!r.history.empty());
        for (std::size_t i = 1; i < r.history.size(); ++i)
            CHECK(r.history[i] <= r.history[i - 1]);
        CHECK(r.residual == r.history.back());
        CHECK(within_limits(m, r.q));
        CHECK(r.iterations <= 200);
    }
}

TEST_CASE("reachable targets are met within tolerance")
{
    const auto m = load("schunk_sdh");
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        JointPose goal = mid_pose(m);
        goal[3] = test::random_vector(1, -0.5, 0.5, rng)[0];
        goal[4] = test::random_vector(1, 0.3, 1.2, rng)[0];
        const Eigen::Vector3d target = forward_kinematics(m, goal).fingers[1].fingertip;
        JointPose seed = goal;
        seed[3] += 0.1;
        seed[4] -= 0.1;
        const auto r = solve_finger_ik(m, 1, target, seed, IkConfig{});
        const double err = (forward_kinematics(m, r.q).fingers[1].fingertip - target).norm();
        CHECK(err <= IkConfig{}.tolerance);
        CHECK(std::abs(err - r.residual) < 1e-15);
    }
}

TEST_CASE("frozen joints keep their value")
{
    const auto m = load("schunk_sdh");
    const JointPose q0 = mid_pose(m);
    std::vector<bool> frozen(7, false);
    frozen[0] = true;
    const auto r = solve_finger_ik(m, 1, Eigen::Vector3d(0.05, 0.05, 0.1), q0, IkConfig{}, frozen);
    CHECK(r.q[0] == q0[0]);
}

TEST_CASE("fingertip config validation")
{
    const auto human = load("human");
    const auto schunk = load("schunk_sdh");
    auto cfg = io::fingertip_config_from_json(io::read_json_file(test::data_path("fingertip/human_to_schunk.json")));
    CHECK_NOTHROW(check_fingertip_config(cfg, human, schunk));
    auto zero = cfg;
    zero.scale = 0.0;
    CHECK_THROWS_AS(check_fingertip_config(zero, human, schunk), ValidationError);
    CHECK_THROWS_AS(fingertip_map(zero, human, mid_pose(human), schunk, mid_pose(schunk)), ValidationError);
    auto missing = cfg;
    missing.finger_pairs.emplace_back("ring", "thumb");
    CHECK_THROWS_AS(check_fingertip_config(missing, human, schunk), ValidationError);

    const auto r = fingertip_map(cfg, human, mid_pose(human), schunk, mid_pose(schunk));
    CHECK(r.residuals.size() == 3);
    CHECK(within_limits(schunk, r.joints.q));
}
