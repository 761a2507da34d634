#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "teleop/grasp_synth.hpp"

namespace teleop {

/// Grasps of one hand for each object of the canonical set (index = object id - 1).
struct GraspDataset {
    std::string hand_id;
    int dof = 0;
    std::array<std::vector<Grasp>, kObjectCount> objects;
    std::optional<double> xi_final; // set once the dataset has been parsed
    nlohmann::ordered_json provenance = nlohmann::ordered_json::object();

    const std::vector<Grasp>& of(int object_id) const;
    std::vector<Grasp>& of(int object_id);
    std::size_t total() const;

    /// Adds a grasp to the list of its object; checks id and dimension.
    void add(Grasp g);
};

inline constexpr double kParseStep = 0.1;
inline constexpr std::size_t kParseTarget = 20; // every object must end with fewer grasps than this

/// Grasps of one object that survive threshold `xi`: ranked by quality (descending, stable),
/// each grasp is dropped if it lies closer than `xi` to a kept higher-ranked one.
std::vector<Grasp> parse_object(const std::vector<Grasp>& raw, double xi);

/// Escalates xi = 0, 0.1, 0.2, ... re-parsing from `raw` until every object has fewer than 20
/// grasps. Throws ValidationError if an object has no grasps.
GraspDataset parse_dataset(const GraspDataset& raw);

} // namespace teleop
