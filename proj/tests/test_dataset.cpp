#include <doctest.h>

#include <algorithm>
#include <random>

#include "support.hpp"
#include "teleop/dataset.hpp"
#include "teleop/io.hpp"

using namespace teleop;

namespace {

Grasp grasp(int object, const JointPose& q, double quality)
{
    Grasp g;
    g.object_id = object;
    g.q = q;
    g.quality = quality;
    return g;
}

GraspDataset small_everywhere(int dof, std::mt19937_64& rng, int per_object = 3)
{
    GraspDataset d;
    d.hand_id = "test";
    d.dof = dof;
    for (int o = 1; o <= kObjectCount; ++o)
        for (int i = 0; i < per_object; ++i)
            d.add(grasp(o, test::random_vector(dof, -1, 1, rng), 0.1 + 0.01 * i));
    return d;
}

bool contains(const std::vector<Grasp>& set, const Grasp& g)
{
    return std::any_of(set.begin(), set.end(), [&](const Grasp& s) { return s.q == g.q; });
}

} // namespace

TEST_CASE("datasets already below the target are left alone")
{
    std::mt19937_64 rng(1);
    const auto raw = small_everywhere(4, rng);
    const auto parsed = parse_dataset(raw);
    REQUIRE(parsed.xi_final.has_value());
    CHECK(*parsed.xi_final == 0.0);
    CHECK(parsed.total() == raw.total());
}

TEST_CASE("a jittered cluster collapses to one grasp")
{
    std::mt19937_64 rng(2);
    auto raw = small_everywhere(5, rng);
    const JointPose centre = test::random_vector(5, -0.5, 0.5, rng);
    std::normal_distribution<double> g;
    for (int i = 0; i < 50; ++i) {
        Eigen::VectorXd dir(5);
        for (int j = 0; j < 5; ++j)
            dir[j] = g(rng);
        const double r = test::random_vector(1, 0.0, 0.05, rng)[0];
        raw.add(grasp(3, centre + r * dir.normalized(), 0.5 + 0.001 * i));
    }
    REQUIRE(raw.of(3).size() == 53);
    const auto parsed = parse_dataset(raw);
    REQUIRE(parsed.xi_final.has_value());
    CHECK(std::abs(*parsed.xi_final - 0.1) < 1e-12);

    int from_cluster = 0;
    for (const auto& s : parsed.of(3))
        from_cluster += (s.q - centre).norm() <= 0.05 + 1e-12 ? 1 : 0;
    CHECK(from_cluster == 1);
    // The best-ranked cluster member survives.
    CHECK(parsed.of(3).front().quality == doctest::Approx(0.5 + 0.049));
    for (int o = 1; o <= kObjectCount; ++o)
        CHECK(parsed.of(o).size() < kParseTarget);
}

TEST_CASE("objects may end with different counts")
{
    std::mt19937_64 rng(3);
    GraspDataset raw;
    raw.hand_id = "test";
    raw.dof = 3;
    for (int o = 1; o <= kObjectCount; ++o) {
        const int n = o == 1 ? 19 : 3;
        for (int i = 0; i < n; ++i)
            raw.add(grasp(o, test::random_vector(3, -1, 1, rng), 1.0));
    }
    const auto parsed = parse_dataset(raw);
    CHECK(parsed.of(1).size() == 19);
    CHECK(parsed.of(2).size() == 3);
}

TEST_CASE("survivors are spaced, ranked and cover every dropped grasp")
{
    std::mt19937_64 rng(4);
    std::vector<Grasp> raw;
    for (int i = 0; i < 300; ++i)
        raw.push_back(grasp(1, test::random_vector(4, -0.6, 0.6, rng), test::random_vector(1, 0, 1, rng)[0]));
    CHECK(parse_object(raw, 0.0).size() == raw.size());
    for (int k = 1; k <= 12; ++k) {
        const double xi = 0.1 * k;
        const auto cur = parse_object(raw, xi);
        for (const auto& g : raw) {
            if (contains(cur, g))
                continue;
            bool covered = false;
            for (const auto& s : cur)
                covered = covered || ((s.q - g.q).norm() < xi && s.quality >= g.quality);
            CHECK(covered);
        }
        for (std::size_t i = 0; i < cur.size(); ++i)
            for (std::size_t j = i + 1; j < cur.size(); ++j)
                CHECK((cur[i].q - cur[j].q).norm() >= xi);
        for (std::size_t i = 1; i < cur.size(); ++i)
            CHECK(cur[i - 1].quality >= cur[i].quality);
    }
}

TEST_CASE("parsing is reproducible")
{
    std::mt19937_64 rng(5);
    auto raw = small_everywhere(6, rng, 40);
    const auto a = io::dataset_to_jsonl(parse_dataset(raw));
    const auto b = io::dataset_to_jsonl(parse_dataset(raw));
    CHECK(a == b);
}

TEST_CASE("dataset errors")
{
    GraspDataset d;
    d.dof = 3;
    CHECK_THROWS_AS(d.add(grasp(9, Eigen::Vector3d::Zero(), 1)), ValidationError);
    CHECK_THROWS_AS(d.add(grasp(1, Eigen::Vector2d::Zero(), 1)), DimensionError);
    d.add(grasp(1, Eigen::Vector3d::Zero(), 1));
    CHECK_THROWS_AS(parse_dataset(d), ValidationError);
}
