#include "teleop/ransac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "teleop/objects.hpp"

namespace teleop {

namespace {

constexpr std::uint64_t kHypothesisStream = 0x72616e7361635f68ULL;
constexpr std::uint64_t kExtremaStream = 0x64656c74615f6578ULL;

struct FlatDataset {
    Eigen::MatrixXd X; // one grasp per column
    std::vector<int> object;
};

FlatDataset flatten(const GraspDataset& dataset)
{
    FlatDataset flat;
    flat.X.resize(dataset.dof, static_cast<Eigen::Index>(dataset.total()));
    Eigen::Index c = 0;
    for (int id = 1; id <= kObjectCount; ++id)
        for (const auto& g : dataset.of(id)) {
            flat.X.col(c++) = g.q;
            flat.object.push_back(id);
        }
    return flat;
}

ScoreDetail score_flat(const SubspaceHypothesis& hyp, const FlatDataset& flat, double xi)
{
    const Eigen::MatrixX3d B = hyp.matrix();
    const Eigen::MatrixXd D = flat.X.colwise() - hyp.origin;
    const Eigen::MatrixXd R = D - B * (B.transpose() * D);
    const Eigen::VectorXd d = R.colwise().norm();

    ScoreDetail out;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        out.score.t4 += d[i];
        if (d[i] < xi)
            ++out.per_object_inliers[static_cast<std::size_t>(flat.object[static_cast<std::size_t>(i)] - 1)];
    }
    out.score.t1 = *std::min_element(out.per_object_inliers.begin(), out.per_object_inliers.end());
    for (int n : out.per_object_inliers) {
        out.score.t3 += n;
        if (n == out.score.t1)
            ++out.score.t2;
    }
    return out;
}

// +1 or -1 so that the direction drawn from the origin object toward the source object points
// along increasing predicted psi.
double orientation(int origin_object, int source_object, Axis axis)
{
    static const auto objects = canonical_object_set(1.0);
    const double diff = objects[static_cast<std::size_t>(source_object - 1)].predicted_psi[axis] -
                        objects[static_cast<std::size_t>(origin_object - 1)].predicted_psi[axis];
    return diff < 0.0 ? -1.0 : 1.0;
}

} // namespace

Eigen::MatrixX3d SubspaceHypothesis::matrix() const
{
    Eigen::MatrixX3d B(origin.size(), 3);
    for (int k = 0; k < 3; ++k)
        B.col(k) = basis[static_cast<std::size_t>(k)];
    return B;
}

bool better(const TieredScore& a, const TieredScore& b)
{
    if (a.t1 != b.t1)
        return a.t1 > b.t1;
    if (a.t2 != b.t2)
        return a.t2 < b.t2;
    if (a.t3 != b.t3)
        return a.t3 > b.t3;
    return a.t4 < b.t4;
}

std::optional<std::array<Eigen::VectorXd, 3>> gram_schmidt(const std::array<Eigen::VectorXd, 3>& vectors)
{
    const auto n = vectors[0].size();
    if (n < 3 || vectors[1].size() != n || vectors[2].size() != n)
        throw DimensionError("gram_schmidt: need three vectors of equal length >= 3");
    std::array<Eigen::VectorXd, 3> out = vectors;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t k = 0; k < i; ++k)
            out[i] -= out[k].dot(out[i]) * out[k];
        const double norm = out[i].norm();
        if (!(norm >= 1e-8))
            return std::nullopt;
        out[i] /= norm;
    }
    return out;
}

std::optional<SubspaceHypothesis> try_sample_hypothesis(const GraspDataset& dataset, Rng& rng, const FitConfig& cfg)
{
    auto draw = [&](int object_id) {
        const auto& list = dataset.of(object_id);
        if (list.empty())
            throw ValidationError("hypothesis sampling: object " + std::to_string(object_id) + " has no grasps");
        return GraspRef{object_id, static_cast<std::size_t>(uniform_index(rng, list.size()))};
    };

    SubspaceHypothesis hyp;
    hyp.origin_ref = draw(cfg.origin_object);
    hyp.origin = dataset.of(cfg.origin_object)[hyp.origin_ref.index].q;
    // Draw order: size, curl, spread sources.
    for (Axis a : {Axis::sigma, Axis::epsilon, Axis::alpha})
        hyp.sources[static_cast<std::size_t>(index(a))] = draw(cfg.axis_objects[static_cast<std::size_t>(index(a))]);

    std::array<Eigen::VectorXd, 3> raw;
    for (Axis a : kAxes) {
        const auto& src = hyp.sources[static_cast<std::size_t>(index(a))];
        Eigen::VectorXd v = dataset.of(src.object_id)[src.index].q - hyp.origin;
        const double norm = v.norm();
        if (!(norm >= 1e-8))
            return std::nullopt;
        raw[static_cast<std::size_t>(index(a))] = orientation(cfg.origin_object, src.object_id, a) * v / norm;
    }

    // Shuffle so no axis always gets Gram-Schmidt's untouched first slot; labels travel along.
    std::array<int, 3> order{0, 1, 2};
    for (int i = 2; i > 0; --i)
        std::swap(order[static_cast<std::size_t>(i)],
                  order[static_cast<std::size_t>(uniform_index(rng, static_cast<std::uint64_t>(i + 1)))]);
    std::array<Eigen::VectorXd, 3> shuffled;
    for (std::size_t i = 0; i < 3; ++i)
        shuffled[i] = raw[static_cast<std::size_t>(order[i])];
    const auto ortho = gram_schmidt(shuffled);
    if (!ortho)
        return std::nullopt;
    for (std::size_t i = 0; i < 3; ++i)
        hyp.basis[static_cast<std::size_t>(order[i])] = (*ortho)[i];
    return hyp;
}

SubspaceHypothesis sample_hypothesis(const GraspDataset& dataset, Rng& rng, const FitConfig& cfg)
{
    for (int attempt = 0; attempt < std::max(1, cfg.max_resamples); ++attempt)
        if (auto hyp = try_sample_hypothesis(dataset, rng, cfg))
            return std::move(*hyp);
    throw Error("hypothesis sampling: every draw was degenerate");
}

double point_to_subspace_distance(const SubspaceHypothesis& hyp, const JointPose& g)
{
    require_dof(g, hyp.dof(), "point_to_subspace_distance");
    const Eigen::VectorXd x = g - hyp.origin;
    Eigen::VectorXd r = x;
    for (const auto& w : hyp.basis)
        r -= w.dot(x) * w;
    return r.norm();
}

ScoreDetail score_hypothesis(const SubspaceHypothesis& hyp, const GraspDataset& dataset, double xi)
{
    if (!(xi > 0.0))
        throw ValidationError("score_hypothesis: xi must be positive");
    return score_flat(hyp, flatten(dataset), xi);
}

FitResult fit_subspace(const GraspDataset& dataset, const FitConfig& cfg)
{
    if (cfg.M == 0)
        throw ValidationError("fit_subspace: M must be at least 1");
    if (!(cfg.xi > 0.0))
        throw ValidationError("fit_subspace: xi must be positive");
    for (int id : {cfg.origin_object, cfg.axis_objects[0], cfg.axis_objects[1], cfg.axis_objects[2]})
        if (dataset.of(id).empty())
            throw ValidationError("fit_subspace: object " + std::to_string(id) + " has no grasps");

    const FlatDataset flat = flatten(dataset);
    struct Local {
        std::optional<FitResult> best;
        std::uint64_t evaluated = 0;
        std::uint64_t degenerate = 0;
    };

    auto consider = [](Local& local, FitResult&& candidate) {
        if (!local.best || better(candidate.detail.score, local.best->detail.score) ||
            (!better(local.best->detail.score, candidate.detail.score) &&
             candidate.best_index < local.best->best_index))
            local.best = std::move(candidate);
    };

    const unsigned workers = std::max(1U, cfg.workers);
    std::vector<Local> locals(workers);
    auto run = [&](unsigned w) {
        Local& local = locals[w];
        for (std::uint64_t i = w; i < cfg.M; i += workers) {
            Rng rng(derive_seed(cfg.seed, kHypothesisStream, i));
            std::optional<SubspaceHypothesis> hyp;
            for (int attempt = 0; attempt < std::max(1, cfg.max_resamples) && !hyp; ++attempt)
                hyp = try_sample_hypothesis(dataset, rng, cfg);
            if (!hyp) {
                ++local.degenerate;
                continue;
            }
            ++local.evaluated;
            FitResult candidate;
            candidate.detail = score_flat(*hyp, flat, cfg.xi);
            candidate.hypothesis = std::move(*hyp);
            candidate.best_index = i;
            consider(local, std::move(candidate));
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(run, w);
    }

    Local merged;
    for (auto& local : locals) {
        merged.evaluated += local.evaluated;
        merged.degenerate += local.degenerate;
        if (local.best)
            consider(merged, std::move(*local.best));
    }
    if (!merged.best)
        throw Error("fit_subspace: all hypotheses were degenerate");
    FitResult out = std::move(*merged.best);
    out.evaluated = merged.evaluated;
    out.degenerate = merged.degenerate;
    return out;
}

SubspaceHypothesis relocate_origin(const SubspaceHypothesis& hyp, const GraspDataset& dataset, int object_id)
{
    const auto& list = dataset.of(object_id);
    if (list.empty())
        throw ValidationError("relocate_origin: object " + std::to_string(object_id) +
                              " has no grasps and no calibration pose was given");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < list.size(); ++i) {
        const double d = point_to_subspace_distance(hyp, list[i].q);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    SubspaceHypothesis out = hyp;
    out.origin = list[best].q;
    out.origin_ref = {object_id, best};
    return out;
}

SubspaceHypothesis relocate_origin(const SubspaceHypothesis& hyp, const JointPose& calibration_pose)
{
    require_dof(calibration_pose, hyp.dof(), "relocate_origin calibration pose");
    require_finite(calibration_pose, "relocate_origin calibration pose");
    SubspaceHypothesis out = hyp;
    out.origin = calibration_pose;
    out.origin_ref = {0, 0};
    return out;
}

ExtremaEnumeration enumerate_axis_extrema(const HandModel& model, const JointPose& origin, const Eigen::VectorXd& column,
                                          std::size_t cap, Rng& rng)
{
    require_dof(origin, model.dof, "enumerate_axis_extrema origin");
    std::vector<int> relevant;
    for (int j = 0; j < model.dof; ++j)
        if (std::abs(column[j]) > 1e-6)
            relevant.push_back(j);

    ExtremaEnumeration out;
    out.relevant_joints = relevant.size();
    if (relevant.empty())
        return out;

    const std::size_t k = relevant.size();
    auto pose_from_bits = [&](auto bit) {
        JointPose q = origin;
        for (std::size_t b = 0; b < k; ++b) {
            const auto& js = model.joints[static_cast<std::size_t>(relevant[b])];
            q[relevant[b]] = bit(b) ? js.max : js.min;
        }
        return q;
    };

    const bool enumerate = k < 63 && (std::uint64_t{1} << k) <= cap;
    if (enumerate) {
        const std::uint64_t combos = std::uint64_t{1} << k;
        out.poses.reserve(combos);
        for (std::uint64_t mask = 0; mask < combos; ++mask)
            out.poses.push_back(pose_from_bits([mask](std::size_t b) { return (mask >> b) & 1U; }));
    } else {
        out.sampled = true;
        out.poses.reserve(cap);
        std::vector<bool> bits(k);
        for (std::size_t s = 0; s < cap; ++s) {
            for (std::size_t b = 0; b < k; ++b)
                bits[b] = (rng() >> 63) != 0;
            out.poses.push_back(pose_from_bits([&bits](std::size_t b) { return bits[b]; }));
        }
    }
    return out;
}

TeleopMapping build_algorithmic_mapping(const HandModel& model, const SubspaceHypothesis& fitted, const FitConfig& cfg,
                                        const std::optional<std::vector<JointPose>>& calibration_extrema,
                                        const std::string& dataset_digest)
{
    require_dof(fitted.origin, model.dof, "fitted hypothesis");
    if (!within_limits(model, fitted.origin, 1e-9))
        throw ValidationError("fitted origin lies outside the joint limits of '" + model.hand_id + "'");

    TeleopMapping m;
    m.hand_id = model.hand_id;
    m.origin = fitted.origin;
    m.A = ProjectionMatrix(fitted.matrix());
    const auto issues = m.A.check(1e-9);
    if (!issues.empty())
        throw ValidationError("fitted basis: " + issues.front());
    m.provenance.method = MappingMethod::ransac;
    m.provenance.seed = cfg.seed;
    m.provenance.dataset_digest = dataset_digest;

    std::vector<JointPose> extrema;
    if (calibration_extrema) {
        extrema = *calibration_extrema;
        m.provenance.notes.push_back("scaling from " + std::to_string(extrema.size()) + " calibration poses");
    } else {
        for (Axis a : kAxes) {
            Rng rng(derive_seed(cfg.seed, kExtremaStream, static_cast<std::uint64_t>(index(a))));
            auto e = enumerate_axis_extrema(model, m.origin, m.A.column(a), cfg.delta_combo_cap, rng);
            std::string note = std::string(axis_name(a)) + ": " + std::to_string(e.relevant_joints) +
                               " relevant joints, " + std::to_string(e.poses.size()) + " extrema poses";
            if (e.sampled)
                note += " (sampled from 2^" + std::to_string(e.relevant_joints) + " combinations)";
            m.provenance.notes.push_back(std::move(note));
            extrema.insert(extrema.end(), std::make_move_iterator(e.poses.begin()),
                           std::make_move_iterator(e.poses.end()));
        }
    }
    if (extrema.empty())
        m.scaling = ScalingFactors{};
    else
        m.scaling = compute_scaling(m.origin, m.A, extrema);
    return m;
}

} // namespace teleop
