#include "teleop/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>

namespace teleop {

namespace {

// 3 x dof positional Jacobian of a fingertip. Coupled links add into the same column.
Eigen::Matrix3Xd fingertip_jacobian(const HandModel& model, int finger, const FingerKinematics& kin)
{
    const auto& chain = model.fingers[static_cast<std::size_t>(finger)];
    const Eigen::Isometry3d base = chain.base_pose();
    Eigen::Matrix3Xd J = Eigen::Matrix3Xd::Zero(3, model.dof);
    for (std::size_t l = 0; l < chain.links.size(); ++l) {
        const auto& link = chain.links[l];
        const Eigen::Matrix3d R = l == 0 ? base.linear() : kin.link_frames[l - 1].linear();
        const Eigen::Vector3d axis = R * link.axis;
        J.col(link.joint_index) += axis.cross(kin.fingertip - kin.link_start(l, base));
    }
    return J;
}

} // namespace

void check_correspondence(const JointCorrespondence& corr, int master_dof, int slave_dof)
{
    std::set<int> seen;
    for (const auto& [i, j] : corr.pairs) {
        if (i < 0 || i >= master_dof)
            throw ValidationError("correspondence: master joint " + std::to_string(i) + " outside 0.." +
                                  std::to_string(master_dof - 1));
        if (j < 0 || j >= slave_dof)
            throw ValidationError("correspondence: slave joint " + std::to_string(j) + " outside 0.." +
                                  std::to_string(slave_dof - 1));
        if (!seen.insert(j).second)
            throw ValidationError("correspondence: slave joint " + std::to_string(j) + " mapped twice");
    }
}

ClampResult joint_map(const JointCorrespondence& corr, const JointPose& q_master, const HandModel& slave,
                      const JointPose& slave_origin)
{
    require_dof(slave_origin, slave.dof, "joint_map slave origin");
    check_correspondence(corr, static_cast<int>(q_master.size()), slave.dof);
    require_finite(q_master, "joint_map master pose");
    JointPose q = slave_origin;
    for (const auto& [i, j] : corr.pairs)
        q[j] = q_master[i];
    return clamp_to_limits(slave, q);
}

void check_fingertip_config(const FingertipConfig& cfg, const HandModel& master, const HandModel& slave)
{
    if (!(cfg.scale > 0.0))
        throw ValidationError("fingertip config: scale must be positive");
    if (!(cfg.ik.tolerance > 0.0))
        throw ValidationError("fingertip config: ik tolerance must be positive");
    if (!(cfg.ik.damping >= 0.0) || cfg.ik.max_iters < 0)
        throw ValidationError("fingertip config: ik damping and max_iters must be non-negative");
    for (const auto& [m, s] : cfg.finger_pairs) {
        if (master.finger_index(m) < 0)
            throw ValidationError("fingertip config: master hand '" + master.hand_id + "' has no finger '" + m + "'");
        if (slave.finger_index(s) < 0)
            throw ValidationError("fingertip config: slave hand '" + slave.hand_id + "' has no finger '" + s + "'");
    }
}

IkResult solve_finger_ik(const HandModel& model, int finger, const Eigen::Vector3d& target, const JointPose& q0,
                         const IkConfig& cfg, const std::vector<bool>& frozen)
{
    require_dof(q0, model.dof, "solve_finger_ik");
    const auto& chain = model.fingers.at(static_cast<std::size_t>(finger));
    const Eigen::Isometry3d to_base = chain.base_pose().inverse();
    const Eigen::Vector3d local_target = to_base * target;

    std::vector<int> active;
    for (const auto& link : chain.links) {
        const auto j = link.joint_index;
        const bool is_frozen = !frozen.empty() && frozen[static_cast<std::size_t>(j)];
        if (!is_frozen && std::find(active.begin(), active.end(), j) == active.end())
            active.push_back(j);
    }

    IkResult out;
    out.q = clamp_to_limits(model, q0).q;
    for (int j = 0; j < model.dof; ++j)
        if (!frozen.empty() && frozen[static_cast<std::size_t>(j)])
            out.q[j] = q0[j];

    auto error_at = [&](const JointPose& q, FingerKinematics* kin_out) {
        FingerKinematics kin = finger_kinematics(chain, q);
        const Eigen::Vector3d e = local_target - to_base * kin.fingertip;
        if (kin_out)
            *kin_out = std::move(kin);
        return e;
    };

    FingerKinematics kin;
    Eigen::Vector3d e = error_at(out.q, &kin);
    out.residual = e.norm();
    out.history.push_back(out.residual);
    const Eigen::Index n = static_cast<Eigen::Index>(active.size());
    if (n == 0)
        return out;

    const double lambda2 = cfg.damping * cfg.damping;
    for (int it = 0; it < cfg.max_iters && out.residual > cfg.tolerance; ++it) {
        const Eigen::Matrix3Xd full = to_base.linear() * fingertip_jacobian(model, finger, kin);
        // Joints resting on a limit and pushed further out are left out of the step.
        std::vector<bool> blocked(static_cast<std::size_t>(n), false);
        Eigen::VectorXd dq = Eigen::VectorXd::Zero(n);
        for (Eigen::Index pass = 0; pass <= n; ++pass) {
            Eigen::Matrix3Xd J = Eigen::Matrix3Xd::Zero(3, n);
            for (Eigen::Index c = 0; c < n; ++c)
                if (!blocked[static_cast<std::size_t>(c)])
                    J.col(c) = full.col(active[static_cast<std::size_t>(c)]);
            const Eigen::Matrix3d JJt = J * J.transpose() + lambda2 * Eigen::Matrix3d::Identity();
            dq = J.transpose() * JJt.ldlt().solve(e);
            bool changed = false;
            for (Eigen::Index c = 0; c < n; ++c) {
                const int j = active[static_cast<std::size_t>(c)];
                const auto& js = model.joints[static_cast<std::size_t>(j)];
                const bool out_low = out.q[j] <= js.min && dq[c] < 0.0;
                const bool out_high = out.q[j] >= js.max && dq[c] > 0.0;
                if (!blocked[static_cast<std::size_t>(c)] && (out_low || out_high)) {
                    blocked[static_cast<std::size_t>(c)] = true;
                    changed = true;
                }
            }
            if (!changed)
                break;
        }

        bool accepted = false;
        for (double step = 1.0; step > 1e-6; step *= 0.5) {
            JointPose trial = out.q;
            for (Eigen::Index c = 0; c < n; ++c) {
                const int j = active[static_cast<std::size_t>(c)];
                const auto& js = model.joints[static_cast<std::size_t>(j)];
                trial[j] = std::clamp(trial[j] + step * dq[c], js.min, js.max);
            }
            FingerKinematics trial_kin;
            const Eigen::Vector3d trial_e = error_at(trial, &trial_kin);
            if (trial_e.norm() < out.residual) {
                out.q = std::move(trial);
                kin = std::move(trial_kin);
                e = trial_e;
                out.residual = e.norm();
                out.history.push_back(out.residual);
                accepted = true;
                break;
            }
        }
        ++out.iterations;
        if (!accepted)
            break;
    }
    return out;
}

FingertipResult fingertip_map(const FingertipConfig& cfg, const HandModel& master, const JointPose& q_master,
                              const HandModel& slave, const JointPose& seed)
{
    check_fingertip_config(cfg, master, slave);
    require_dof(q_master, master.dof, "fingertip_map master pose");
    require_finite(q_master, "fingertip_map master pose");
    require_dof(seed, slave.dof, "fingertip_map seed");

    FingertipResult out;
    JointPose q = clamp_to_limits(slave, seed).q;
    std::vector<bool> frozen(static_cast<std::size_t>(slave.dof), false);
    for (const auto& [m, s] : cfg.finger_pairs) {
        const int mf = master.finger_index(m);
        const int sf = slave.finger_index(s);
        const Eigen::Vector3d tip = finger_kinematics(master.fingers[static_cast<std::size_t>(mf)], q_master).fingertip;
        auto solve = solve_finger_ik(slave, sf, cfg.scale * tip, q, cfg.ik, frozen);
        q = solve.q;
        // A joint shared with a later finger keeps the value found here.
        for (const auto& link : slave.fingers[static_cast<std::size_t>(sf)].links)
            frozen[static_cast<std::size_t>(link.joint_index)] = true;
        out.residuals.push_back(solve.residual);
        out.solves.push_back(std::move(solve));
    }
    out.joints = clamp_to_limits(slave, q);
    return out;
}

} // namespace teleop
