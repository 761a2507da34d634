#pragma once

#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "teleop/baselines.hpp"
#include "teleop/dataset.hpp"
#include "teleop/empirical.hpp"
#include "teleop/hand_model.hpp"
#include "teleop/ransac.hpp"
#include "teleop/subspace.hpp"

namespace teleop::io {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr std::string_view kHandModelSchema = "hand-model/1";
inline constexpr std::string_view kMappingSchema = "teleop-mapping/1";
inline constexpr std::string_view kAssignmentSchema = "motion-assignment/1";
inline constexpr std::string_view kExtremaSchema = "extrema-poses/1";
inline constexpr std::string_view kDatasetSchema = "grasp-dataset/1";
inline constexpr std::string_view kCorrespondenceSchema = "joint-correspondence/1";
inline constexpr std::string_view kFingertipSchema = "fingertip-config/1";
inline constexpr std::string_view kRansacReportSchema = "ransac-report/1";
inline constexpr std::string_view kReplayReportSchema = "replay-report/1";

/// Serializes with every double printed to 17 significant digits, so that
/// save -> load -> save reproduces the same bytes. `indent` < 0 gives a single line.
std::string dump(const Json& j, int indent = 2);

/// Parses JSON text; errors become FormatError mentioning `what`.
Json parse(std::string_view text, std::string_view what);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view content);
Json read_json_file(const fs::path& path);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

// Field access with schema errors. Each throws FormatError naming `what` and the key.
void expect_keys(const Json& j, std::string_view what, std::initializer_list<std::string_view> required,
                 std::initializer_list<std::string_view> optional = {});
void expect_schema(const Json& j, std::string_view schema);
double get_double(const Json& j, std::string_view key, std::string_view what);
std::int64_t get_int(const Json& j, std::string_view key, std::string_view what);
std::uint64_t get_u64(const Json& j, std::string_view key, std::string_view what);
std::string get_string(const Json& j, std::string_view key, std::string_view what);
Eigen::VectorXd to_vector(const Json& j, std::string_view what, Eigen::Index expected = -1);
Json from_vector(const Eigen::Ref<const Eigen::VectorXd>& v);

// hand-model/1
Json to_json(const HandModel& model);
HandModel hand_model_from_json(const Json& j);
HandModel load_hand_model(const fs::path& path);

// teleop-mapping/1
Json to_json(const TeleopMapping& m);
TeleopMapping mapping_from_json(const Json& j);
TeleopMapping load_mapping(const fs::path& path);

// motion-assignment/1
Json to_json(const MotionAssignment& a);
MotionAssignment assignment_from_json(const Json& j);

// extrema-poses/1
Json to_json(const ExtremaPoses& e, const std::string& hand_id = {});
ExtremaPoses extrema_from_json(const Json& j);

// joint-correspondence/1
Json to_json(const JointCorrespondence& c);
JointCorrespondence correspondence_from_json(const Json& j);

// fingertip-config/1
Json to_json(const FingertipConfig& c);
FingertipConfig fingertip_config_from_json(const Json& j);

// grasp-dataset/1 (JSON Lines: header, then one grasp per line in object order)
std::string dataset_to_jsonl(const GraspDataset& d);
GraspDataset dataset_from_jsonl(std::string_view text);
GraspDataset load_dataset(const fs::path& path);

/// Digest of the canonical serialization, used to tie mappings to their source dataset.
std::string dataset_digest(const GraspDataset& d);

// ransac-report/1
struct RansacReport {
    FitConfig cfg;
    FitResult fit;
    std::string dataset_digest;
    std::optional<double> runtime_seconds;
};
Json to_json(const RansacReport& r);
RansacReport ransac_report_from_json(const Json& j);

// Trajectory: JSON Lines of {t, q}
struct TrajectoryPoint {
    double t = 0.0;
    JointPose q;
};
std::string trajectory_to_jsonl(const std::vector<TrajectoryPoint>& points);
std::vector<TrajectoryPoint> trajectory_from_jsonl(std::string_view text);

/// Splits on '\n', dropping a trailing '\r' and blank lines; line numbers are 1-based.
std::vector<std::pair<std::size_t, std::string>> split_lines(std::string_view text);

/// Reads any supported file, checks it against its schema, and returns the schema id.
std::string validate_file(const fs::path& path);

} // namespace teleop::io
