#include "teleop/grasp_synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "teleop/contact.hpp"
#include "teleop/seeding.hpp"

namespace teleop {

namespace {

constexpr std::uint64_t kSampleStream = 0x67726173705f7331ULL;
constexpr std::uint64_t kEnumerationSeed = 0xa11ce5eedULL;

// Calls fn on every joint-limit corner (or a fixed random subset for high DOF) followed by a
// fixed set of interior samples.
void for_each_probe_pose(const HandModel& model, const std::function<void(const JointPose&)>& fn)
{
    const Eigen::VectorXd lo = model.lower_limits();
    const Eigen::VectorXd hi = model.upper_limits();
    Rng rng(kEnumerationSeed);
    JointPose q(model.dof);
    if (model.dof <= 16) {
        const std::uint64_t corners = std::uint64_t{1} << model.dof;
        for (std::uint64_t mask = 0; mask < corners; ++mask) {
            for (int j = 0; j < model.dof; ++j)
                q[j] = (mask >> j) & 1U ? hi[j] : lo[j];
            fn(q);
        }
    } else {
        for (int s = 0; s < 65536; ++s) {
            for (int j = 0; j < model.dof; ++j)
                q[j] = rng() & 1U ? hi[j] : lo[j];
            fn(q);
        }
    }
    for (int s = 0; s < 4096; ++s) {
        for (int j = 0; j < model.dof; ++j)
            q[j] = uniform(rng, lo[j], hi[j]);
        fn(q);
    }
}

struct Outcome {
    bool valid = false;
    std::string failure;
    Grasp grasp;
    std::size_t evaluations = 0;
};

class CandidateEvaluator {
public:
    CandidateEvaluator(const HandModel& model, const ObjectSpec& object, const SampleConfig& cfg)
        : model_(model), object_(object), cfg_(cfg), closing_(closing_directions(model)), workspace_(hand_workspace(model))
    {
        // Object centres may lie up to half the object size outside the finger region laterally.
        const Eigen::Vector3d half = object.half_extents_m();
        for (int k = 0; k < 2; ++k) {
            workspace_.lo[k] -= 0.5 * half[k];
            workspace_.hi[k] += 0.5 * half[k];
        }
        workspace_.lo.z() = std::max(workspace_.lo.z(), half.z());
    }

    bool workspace_empty() const { return (workspace_.hi.array() <= workspace_.lo.array()).any(); }

    Outcome evaluate(std::uint64_t index) const
    {
        Outcome out;
        Rng rng(derive_seed(cfg_.seed, kSampleStream ^ static_cast<std::uint64_t>(object_.id), index));
        Eigen::Vector3d pos;
        for (int k = 0; k < 3; ++k)
            pos[k] = uniform(rng, workspace_.lo[k], workspace_.hi[k]);
        JointPose pre(model_.dof);
        for (int j = 0; j < model_.dof; ++j) {
            const auto& js = model_.joints[static_cast<std::size_t>(j)];
            pre[j] = uniform(rng, js.min, js.max);
        }

        const PlacedObject placed(object_, pos);
        const auto closing = close_hand(model_, closing_, pre, placed, cfg_.close_step);
        if (closing.initial_collision) {
            out.failure = "initial_collision";
            return out;
        }
        std::string reason;
        if (!contact_pattern_ok(closing.contacts, object_.grasp_type, &reason)) {
            out.failure = reason;
            return out;
        }
        const double base_quality = grasp_quality(closing.contacts, placed, cfg_.quality);
        if (base_quality <= 0.0) {
            out.failure = "zero_quality";
            return out;
        }

        // Disturb each search axis individually: negative, none, positive.
        double worst = std::numeric_limits<double>::infinity();
        const int dims = 3 + model_.dof;
        for (int d = 0; d < dims; ++d) {
            for (int s = -1; s <= 1; ++s) {
                Eigen::Vector3d p = pos;
                JointPose q = pre;
                if (d < 3)
                    p[d] += s * cfg_.position_perturbation;
                else
                    q[d - 3] += s * cfg_.joint_perturbation;
                const PlacedObject disturbed(object_, p);
                const auto c = close_hand(model_, closing_, q, disturbed, cfg_.close_step);
                const double quality = c.initial_collision ? 0.0 : grasp_quality(c.contacts, disturbed, cfg_.quality);
                worst = std::min(worst, quality);
                ++out.evaluations;
            }
        }

        out.valid = true;
        out.grasp.object_id = object_.id;
        out.grasp.q = closing.q;
        out.grasp.quality = worst;
        out.grasp.grasp_type = object_.grasp_type;
        out.grasp.object_pose = pos;
        return out;
    }

private:
    const HandModel& model_;
    const ObjectSpec& object_;
    const SampleConfig& cfg_;
    std::vector<int> closing_;
    Workspace workspace_;
};

} // namespace

std::string SampleDiagnostics::dominant_failure() const
{
    std::string best;
    std::size_t count = 0;
    for (const auto& [name, n] : failures)
        if (n > count) {
            best = name;
            count = n;
        }
    return best;
}

double max_aperture(const HandModel& model)
{
    if (model.fingers.size() < 2)
        return 0.0;
    double best = 0.0;
    std::vector<std::vector<Eigen::Vector3d>> points(model.fingers.size());
    for_each_probe_pose(model, [&](const JointPose& q) {
        for (std::size_t f = 0; f < model.fingers.size(); ++f) {
            const auto kin = finger_kinematics(model.fingers[f], q);
            points[f].clear();
            points[f].push_back(model.fingers[f].base_position);
            for (const auto& frame : kin.link_frames)
                points[f].push_back(frame.translation());
        }
        for (std::size_t a = 0; a < points.size(); ++a)
            for (std::size_t b = a + 1; b < points.size(); ++b)
                for (const auto& pa : points[a])
                    for (const auto& pb : points[b])
                        best = std::max(best, (pa - pb).norm());
    });
    return best;
}

Workspace hand_workspace(const HandModel& model)
{
    Workspace ws{Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity()),
                 Eigen::Vector3d::Constant(-std::numeric_limits<double>::infinity())};
    for_each_probe_pose(model, [&](const JointPose& q) {
        for (const auto& finger : model.fingers) {
            const auto kin = finger_kinematics(finger, q);
            for (const auto& frame : kin.link_frames) {
                ws.lo = ws.lo.cwiseMin(frame.translation());
                ws.hi = ws.hi.cwiseMax(frame.translation());
            }
        }
    });
    return ws;
}

bool contact_pattern_ok(const std::vector<Contact>& contacts, GraspType type, std::string* reason)
{
    auto fail = [reason](const char* why) {
        if (reason)
            *reason = why;
        return false;
    };
    if (contacts.size() < 2)
        return fail("insufficient_contacts");
    bool opposing = false;
    for (std::size_t i = 0; i < contacts.size() && !opposing; ++i)
        for (std::size_t j = i + 1; j < contacts.size(); ++j)
            if (contacts[i].normal.dot(contacts[j].normal) < 0.0) {
                opposing = true;
                break;
            }
    if (!opposing)
        return fail("no_opposing_contacts");
    const bool any_proximal = std::any_of(contacts.begin(), contacts.end(), [](const Contact& c) { return !c.distal; });
    if (type == GraspType::precision && any_proximal)
        return fail("proximal_contact_in_precision");
    if (type == GraspType::power && !any_proximal)
        return fail("no_proximal_contact_in_power");
    return true;
}

SampleResult sample_grasps(const HandModel& model, const ObjectSpec& object, const SampleConfig& cfg)
{
    if (cfg.budget == 0)
        throw ValidationError("sample_grasps: budget must be positive");
    require_valid(model);

    SampleResult result;
    auto& diag = result.diagnostics;
    diag.evaluations_per_candidate = static_cast<std::size_t>(3 * (3 + model.dof));

    if (object.grasp_width_m() > max_aperture(model)) {
        // No candidate can enclose the object; reject the whole budget up front.
        diag.iterations = cfg.budget;
        diag.failures["aperture_exceeded"] = cfg.budget;
        return result;
    }

    const CandidateEvaluator evaluator(model, object, cfg);
    if (evaluator.workspace_empty()) {
        diag.iterations = cfg.budget;
        diag.failures["outside_workspace"] = cfg.budget;
        return result;
    }

    const unsigned workers = std::max(1U, cfg.workers);
    const std::size_t batch = workers == 1 ? 1 : 64 * static_cast<std::size_t>(workers);
    std::vector<Outcome> outcomes;
    std::size_t next = 0;
    bool done = false;
    while (!done && next < cfg.budget) {
        const std::size_t count = std::min(batch, cfg.budget - next);
        outcomes.assign(count, Outcome{});
        auto run = [&](unsigned w) {
            for (std::size_t i = w; i < count; i += workers)
                outcomes[i] = evaluator.evaluate(next + i);
        };
        if (workers == 1) {
            run(0);
        } else {
            std::vector<std::jthread> pool;
            pool.reserve(workers);
            for (unsigned w = 0; w < workers; ++w)
                pool.emplace_back(run, w);
        }
        // Merge in index order so the stopping point matches a sequential run.
        for (auto& o : outcomes) {
            ++diag.iterations;
            if (o.valid) {
                ++diag.accepted;
                diag.perturbation_evaluations += o.evaluations;
                result.grasps.push_back(std::move(o.grasp));
                if (result.grasps.size() >= cfg.max_valid) {
                    done = true;
                    break;
                }
            } else {
                ++diag.failures[o.failure];
            }
        }
        next += count;
    }
    return result;
}

} // namespace teleop
