#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "support.hpp"
#include "teleop/empirical.hpp"
#include "teleop/io.hpp"

using namespace teleop;

namespace {

MotionAssignment schunk_assignment()
{
    MotionAssignment a;
    a.hand_id = "schunk_sdh";
    a.spread = {{0, 1}};
    a.open = {{1, 1}, {3, 1}, {5, 1}};
    a.curl = {{2, 1}, {4, 1}, {6, 1}};
    return a;
}

// Normalization oracle: each listed joint gets sign / sqrt(count).
Eigen::MatrixX3d oracle(int n, const MotionAssignment& a)
{
    Eigen::MatrixX3d A = Eigen::MatrixX3d::Zero(n, 3);
    for (Axis ax : kAxes) {
        const auto& js = a.joints_for(ax);
        for (const auto& sj : js)
            A(sj.joint, index(ax)) = sj.sign / std::sqrt(static_cast<double>(js.size()));
    }
    return A;
}

} // namespace

TEST_CASE("Schunk assignment reproduces the published matrix")
{
    const auto A = build_projection_matrix(7, schunk_assignment()).matrix();
    const double s = 0.577;
    const Eigen::Matrix<double, 7, 3> table = (Eigen::Matrix<double, 7, 3>() << 1, 0, 0, //
                                               0, s, 0, 0, 0, s, 0, s, 0, 0, 0, s, 0, s, 0, 0, 0, s)
                                                  .finished();
    CHECK((A - table).cwiseAbs().maxCoeff() < 1e-3);
    CHECK((A - oracle(7, schunk_assignment())).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(A.col(0).dot(A.col(1)) == 0.0);
    CHECK(A.col(1).dot(A.col(2)) == 0.0);
    CHECK(A.col(0).dot(A.col(2)) == 0.0);
}

TEST_CASE("singleton motions give signed unit columns")
{
    MotionAssignment a;
    a.spread = {{2, -1}};
    a.open = {{0, 1}};
    a.curl = {{1, 1}};
    const auto A = build_projection_matrix(3, a).matrix();
    CHECK(A.col(0) == Eigen::Vector3d(0, 0, -1));
    CHECK(A.col(1) == Eigen::Vector3d(1, 0, 0));
    CHECK(A.col(2) == Eigen::Vector3d(0, 1, 0));
}

TEST_CASE("gripper assignment")
{
    MotionAssignment a;
    a.open = {{0, 1}, {2, 1}};
    a.curl = {{1, 1}, {3, 1}};
    const auto P = build_projection_matrix(4, a);
    CHECK(P.is_zero(Axis::alpha));
    CHECK((P.matrix() - oracle(4, a)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(std::abs(P.matrix()(0, 1) - 0.707) < 1e-3);
    CHECK(std::abs(P.matrix()(3, 2) - 0.707) < 1e-3);

    const auto model = io::load_hand_model(test::data_path("models/gripper.json"));
    const auto extrema = io::extrema_from_json(io::read_json_file(test::data_path("extrema/gripper.json")));
    const auto m = build_empirical_mapping(model, extrema.origin, a, extrema);
    CHECK(m.scaling.delta[0] == 0.0);
    CHECK(m.scaling.delta_star[0] == 0.0);
}

TEST_CASE("invalid assignments")
{
    MotionAssignment overlap;
    overlap.open = {{0, 1}};
    overlap.curl = {{0, 1}};
    CHECK_THROWS_AS(build_projection_matrix(3, overlap), ValidationError);

    MotionAssignment range;
    range.open = {{3, 1}};
    CHECK_THROWS_AS(build_projection_matrix(3, range), ValidationError);

    MotionAssignment sign;
    sign.open = {{0, 2}};
    CHECK_THROWS_AS(build_projection_matrix(3, sign), ValidationError);
}

TEST_CASE("order inside a motion set does not matter")
{
    std::mt19937_64 rng(9);
    const auto model = io::load_hand_model(test::data_path("models/schunk_sdh.json"));
    const auto extrema = io::extrema_from_json(io::read_json_file(test::data_path("extrema/schunk_sdh.json")));
    const auto base = build_empirical_mapping(model, extrema.origin, schunk_assignment(), extrema);
    for (int i = 0; i < 20; ++i) {
        auto a = schunk_assignment();
        std::shuffle(a.open.begin(), a.open.end(), rng);
        std::shuffle(a.curl.begin(), a.curl.end(), rng);
        const auto m = build_empirical_mapping(model, extrema.origin, a, extrema);
        CHECK(m.A.matrix() == base.A.matrix());
        CHECK(m.scaling.delta == base.scaling.delta);
    }
}

TEST_CASE("shipped Schunk mapping")
{
    const auto model = io::load_hand_model(test::data_path("models/schunk_sdh.json"));
    const auto extrema = io::extrema_from_json(io::read_json_file(test::data_path("extrema/schunk_sdh.json")));
    const auto m = build_empirical_mapping(model, extrema.origin, schunk_assignment(), extrema);
    CHECK((m.A.matrix() - oracle(7, schunk_assignment())).cwiseAbs().maxCoeff() < 1e-15);
    for (Axis a : kAxes) {
        const auto P = raw_projections(m.origin, m.A, extrema.pooled());
        const auto col = P.col(index(a));
        CHECK(std::abs((col.maxCoeff() - col.minCoeff()) * m.scaling.delta[index(a)] - 1.0) < 1e-9);
    }

    const auto shipped = io::load_mapping(test::data_path("mappings/schunk_sdh_empirical.json"));
    CHECK(shipped.A.matrix() == m.A.matrix());
    CHECK(shipped.scaling.delta == m.scaling.delta);
}

TEST_CASE("identical sigma extrema give a zero scale and a warning")
{
    const auto model = io::load_hand_model(test::data_path("models/schunk_sdh.json"));
    auto extrema = io::extrema_from_json(io::read_json_file(test::data_path("extrema/schunk_sdh.json")));
    extrema.per_axis[1] = {extrema.origin, extrema.origin};
    const auto m = build_empirical_mapping(model, extrema.origin, schunk_assignment(), extrema);
    CHECK(m.scaling.delta[1] == 0.0);
    CHECK(m.scaling.delta_star[1] == 0.0);
    const bool warned = std::any_of(m.provenance.notes.begin(), m.provenance.notes.end(), [](const std::string& s) {
        return s.rfind("warning: sigma", 0) == 0;
    });
    CHECK(warned);
}

TEST_CASE("extrema outside the limits are rejected")
{
    const auto model = io::load_hand_model(test::data_path("models/schunk_sdh.json"));
    auto extrema = io::extrema_from_json(io::read_json_file(test::data_path("extrema/schunk_sdh.json")));
    extrema.per_axis[2][0][2] = 10.0;
    CHECK_THROWS_AS(build_empirical_mapping(model, extrema.origin, schunk_assignment(), extrema), ValidationError);
}
