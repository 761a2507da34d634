#include "teleop/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace teleop {

namespace {

std::size_t slot(int object_id)
{
    if (object_id < 1 || object_id > kObjectCount)
        throw ValidationError("object id " + std::to_string(object_id) + " outside 1..8");
    return static_cast<std::size_t>(object_id - 1);
}

} // namespace

const std::vector<Grasp>& GraspDataset::of(int object_id) const
{
    return objects[slot(object_id)];
}

std::vector<Grasp>& GraspDataset::of(int object_id)
{
    return objects[slot(object_id)];
}

std::size_t GraspDataset::total() const
{
    std::size_t n = 0;
    for (const auto& g : objects)
        n += g.size();
    return n;
}

void GraspDataset::add(Grasp g)
{
    require_dof(g.q, dof, "grasp");
    of(g.object_id).push_back(std::move(g));
}

std::vector<Grasp> parse_object(const std::vector<Grasp>& raw, double xi)
{
    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&raw](std::size_t a, std::size_t b) { return raw[a].quality > raw[b].quality; });

    std::vector<Grasp> kept;
    for (std::size_t i : order) {
        const auto& g = raw[i];
        const bool close = std::any_of(kept.begin(), kept.end(),
                                       [&](const Grasp& k) { return (g.q - k.q).norm() < xi; });
        if (!close)
            kept.push_back(g);
    }
    return kept;
}

GraspDataset parse_dataset(const GraspDataset& raw)
{
    for (int id = 1; id <= kObjectCount; ++id)
        if (raw.of(id).empty())
            throw ValidationError("parse_dataset: object " + std::to_string(id) + " has no grasps");

    GraspDataset out;
    out.hand_id = raw.hand_id;
    out.dof = raw.dof;
    out.provenance = raw.provenance;
    for (int step = 0;; ++step) {
        const double xi = step / std::round(1.0 / kParseStep);
        bool all_small = true;
        for (int id = 1; id <= kObjectCount; ++id) {
            out.of(id) = parse_object(raw.of(id), xi);
            all_small = all_small && out.of(id).size() < kParseTarget;
        }
        if (all_small) {
            out.xi_final = xi;
            return out;
        }
    }
}

} // namespace teleop
