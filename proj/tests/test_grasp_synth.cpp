#include <doctest.h>

#include <numbers>

#include "support.hpp"
#include "teleop/contact.hpp"
#include "teleop/grasp_synth.hpp"
#include "teleop/io.hpp"

using namespace teleop;

namespace {

HandModel schunk()
{
    return io::load_hand_model(test::data_path("models/schunk_sdh.json"));
}

// Two straight one-link jaws pointing along the approach axis, swinging in palm x.
HandModel parallel_jaw()
{
    HandModel m;
    m.hand_id = "parallel_jaw";
    m.dof = 2;
    m.joints = {{"left", -0.3, 0.3}, {"right", -0.3, 0.3}};
    const Eigen::Quaterniond down(Eigen::AngleAxisd(-std::numbers::pi / 2, Eigen::Vector3d::UnitY()));
    for (int i = 0; i < 2; ++i) {
        FingerChain f;
        f.name = i == 0 ? "left" : "right";
        f.base_position = {i == 0 ? -0.02 : 0.02, 0.0, 0.0};
        f.base_orientation = down;
        f.links = {{0.05, i, Eigen::Vector3d::UnitY()}};
        m.fingers.push_back(f);
    }
    return m;
}

Contact make_contact(bool distal, const Eigen::Vector3d& n)
{
    Contact c;
    c.distal = distal;
    c.normal = n;
    c.point = Eigen::Vector3d::Zero();
    return c;
}

} // namespace

TEST_CASE("closing directions on the shipped Schunk model")
{
    const auto m = schunk();
    const auto flex = flexion_joints(m);
    CHECK_FALSE(flex[0]);
    for (int j = 1; j < 7; ++j)
        CHECK(flex[static_cast<std::size_t>(j)]);
    CHECK(closing_directions(m) == std::vector<int>{0, -1, 1, -1, 1, -1, 1});
}

TEST_CASE("close_hand stops at contact")
{
    const auto m = schunk();
    const auto obj = canonical_object_set(1.5)[0];
    const PlacedObject placed(obj, {0.0, 0.0, 0.09});
    JointPose pre = mid_pose(m);
    pre[1] = pre[3] = pre[5] = 0.6;
    pre[2] = pre[4] = pre[6] = 0.0;
    const auto r = close_hand(m, closing_directions(m), pre, placed);
    CHECK_FALSE(r.initial_collision);
    CHECK(within_limits(m, r.q));
    CHECK(min_link_distance(m, r.q, placed) >= -1e-9);
    for (const auto& c : r.contacts)
        CHECK(c.distance <= kContactTolerance);

    CHECK_THROWS_AS(close_hand(m, std::vector<int>(3, 1), pre, placed), DimensionError);
}

TEST_CASE("contact pattern rules")
{
    const Eigen::Vector3d x = Eigen::Vector3d::UnitX();
    std::string why;
    CHECK_FALSE(contact_pattern_ok({make_contact(true, x)}, GraspType::precision, &why));
    CHECK(why == "insufficient_contacts");
    CHECK_FALSE(contact_pattern_ok({make_contact(true, x), make_contact(true, x)}, GraspType::precision, &why));
    CHECK(why == "no_opposing_contacts");
    CHECK(contact_pattern_ok({make_contact(true, x), make_contact(true, -x)}, GraspType::precision));
    CHECK_FALSE(contact_pattern_ok({make_contact(false, x), make_contact(true, -x)}, GraspType::precision, &why));
    CHECK(why == "proximal_contact_in_precision");
    CHECK_FALSE(contact_pattern_ok({make_contact(true, x), make_contact(true, -x)}, GraspType::power, &why));
    CHECK(why == "no_proximal_contact_in_power");
    CHECK(contact_pattern_ok({make_contact(false, x), make_contact(true, -x)}, GraspType::power));
}

TEST_CASE("object wider than the jaws exceeds the aperture")
{
    const auto jaw = parallel_jaw();
    const double aperture = max_aperture(jaw);
    // Farthest pair: one jaw base and the other jaw tip swung fully outward.
    const double widest = std::hypot(0.04 + 0.05 * std::sin(0.3), 0.05 * std::cos(0.3));
    CHECK(std::abs(aperture - widest) < 1e-9);
    const auto obj5 = canonical_object_set(1.0)[4];
    REQUIRE(obj5.grasp_width_m() > aperture);
    SampleConfig cfg;
    cfg.budget = 1000;
    const auto r = sample_grasps(jaw, obj5, cfg);
    CHECK(r.grasps.empty());
    CHECK(r.diagnostics.dominant_failure() == "aperture_exceeded");
}

TEST_CASE("sampled grasps are valid and reproducible")
{
    const auto m = schunk();
    const auto objects = canonical_object_set(m.scale);
    SampleConfig cfg;
    cfg.budget = 20000;
    cfg.max_valid = 3;
    cfg.seed = 5;
    for (int id : {7, 4}) {
        const auto& obj = objects[static_cast<std::size_t>(id - 1)];
        const auto a = sample_grasps(m, obj, cfg);
        REQUIRE(a.grasps.size() == 3);
        CHECK(a.diagnostics.evaluations_per_candidate == 30);
        CHECK(a.diagnostics.perturbation_evaluations == 30 * a.diagnostics.accepted);
        for (const auto& g : a.grasps) {
            CHECK(within_limits(m, g.q));
            const PlacedObject placed(obj, g.object_pose);
            const auto contacts = find_contacts(m, g.q, placed);
            CHECK(contact_pattern_ok(contacts, obj.grasp_type));
            const double unperturbed = grasp_quality(m, g.q, placed);
            CHECK(unperturbed > 0.0);
            CHECK(g.quality >= 0.0);
            CHECK(g.quality <= unperturbed + 1e-15);
        }

        const auto b = sample_grasps(m, obj, cfg);
        auto parallel = cfg;
        parallel.workers = 3;
        const auto c = sample_grasps(m, obj, parallel);
        REQUIRE(b.grasps.size() == a.grasps.size());
        REQUIRE(c.grasps.size() == a.grasps.size());
        for (std::size_t i = 0; i < a.grasps.size(); ++i) {
            CHECK(a.grasps[i].q == b.grasps[i].q);
            CHECK(a.grasps[i].q == c.grasps[i].q);
            CHECK(a.grasps[i].quality == c.grasps[i].quality);
        }
        CHECK(a.diagnostics.iterations == c.diagnostics.iterations);
        CHECK(a.diagnostics.failures == c.diagnostics.failures);
    }
}

TEST_CASE("sample_grasps rejects a zero budget")
{
    SampleConfig cfg;
    cfg.budget = 0;
    CHECK_THROWS_AS(sample_grasps(schunk(), canonical_object_set(1.5)[0], cfg), ValidationError);
}
