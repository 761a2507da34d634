#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "teleop/baselines.hpp"
#include "teleop/hand_model.hpp"
#include "teleop/io.hpp"
#include "teleop/subspace.hpp"

namespace teleop {

enum class MappingKind { subspace, joint, fingertip };

std::string_view kind_name(MappingKind k);
MappingKind parse_kind(std::string_view s);

struct MappedPose {
    JointPose q;
    std::optional<TeleopPoint> psi;  // subspace mappings only
    std::vector<bool> clamped;       // joints that were outside the slave limits
    std::vector<double> residuals;   // fingertip mappings only, m
};

/// One master -> slave mapping ready for streaming. Immutable after construction.
class MappingEngine {
public:
    static MappingEngine subspace(std::string name, TeleopMapping master, TeleopMapping slave,
                                  std::optional<HandModel> slave_model, bool clamp = true);
    static MappingEngine joint(std::string name, JointCorrespondence corr, int master_dof, HandModel slave_model,
                               JointPose slave_origin);
    static MappingEngine fingertip(std::string name, FingertipConfig cfg, HandModel master_model,
                                   HandModel slave_model, JointPose slave_seed);

    const std::string& name() const { return name_; }
    MappingKind kind() const { return kind_; }
    int master_dof() const { return master_dof_; }
    int slave_dof() const { return slave_dof_; }
    bool clamps() const { return clamp_; }
    const std::optional<HandModel>& slave_model() const { return slave_model_; }
    const std::optional<HandModel>& master_model() const { return master_model_; }
    /// Slave pose shown before any master pose arrives: the slave origin or IK seed.
    const JointPose& slave_rest() const { return slave_origin_; }

    /// Throws DimensionError for a q of the wrong length, ValidationError for non-finite values.
    MappedPose map(const JointPose& q_master) const;

private:
    MappingEngine() = default;

    std::string name_;
    MappingKind kind_ = MappingKind::subspace;
    int master_dof_ = 0;
    int slave_dof_ = 0;
    bool clamp_ = true;
    std::optional<HandModel> master_model_;
    std::optional<HandModel> slave_model_;
    std::optional<TeleopMapping> master_map_;
    std::optional<TeleopMapping> slave_map_;
    std::optional<JointCorrespondence> corr_;
    std::optional<FingertipConfig> fingertip_;
    JointPose slave_origin_;
};

/// Named mappings a session may switch between; the first one is active at session start.
class MappingRegistry {
public:
    void add(MappingEngine engine);
    const MappingEngine* find(std::string_view name) const;
    const MappingEngine& first() const;
    std::vector<std::string> names() const;
    bool empty() const { return engines_.empty(); }

    /// Master model for fk replies when no engine carries one.
    std::optional<HandModel> master_model;

private:
    std::vector<MappingEngine> engines_;
};

/// Stream protocol: one JSON object per line.
///   in:  {"type":"master_pose","t":..,"q":[..]}
///        {"type":"set_mapping","t":..,"mapping_ref":"name"}
///        {"type":"info","t":..,"info":"fk"}            (optional "q": master pose to use)
///   out: {"type":"slave_pose","t":..,"mapping_ref":..,"q":[..],"psi":[..],"clamped":[..]}
///        {"type":"info","t":..,"info":"mapping"|"fk",..}
///        {"type":"error","t":..,"message":".."}
/// Every non-blank input line produces exactly one output line.
class Session {
public:
    explicit Session(std::shared_ptr<const MappingRegistry> registry);

    std::string handle_line(std::string_view line);
    const MappingEngine& active() const { return *active_; }

private:
    io::Json handle(const io::Json& msg);
    io::Json mapping_info(const io::Json& t) const;
    io::Json fk_info(const io::Json& t, const std::optional<JointPose>& q) const;

    std::shared_ptr<const MappingRegistry> registry_;
    const MappingEngine* active_;
    std::optional<JointPose> last_master_;
    std::optional<JointPose> last_slave_;
};

/// `t` is the sender's timestamp, echoed unchanged (null when absent).
io::Json slave_pose_message(const io::Json& t, const MappingEngine& engine, const MappedPose& out);
io::Json error_message(const io::Json& t, std::string_view text);

/// Per-finger point lists (base, then each link end) in the palm frame.
io::Json fk_geometry(const HandModel& model, const JointPose& q);

/// Reads lines from `in` until EOF and writes one reply line each to `out`.
std::size_t serve_stream(std::istream& in, std::ostream& out, std::shared_ptr<const MappingRegistry> registry);

/// Newline-delimited JSON over TCP, one session per connection.
class TcpServer {
public:
    explicit TcpServer(std::shared_ptr<const MappingRegistry> registry);
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    /// Binds and starts accepting in the background. Port 0 picks a free port; returns the bound port.
    int start(const std::string& host, int port);
    void stop();

private:
    void accept_loop();

    std::shared_ptr<const MappingRegistry> registry_;
    int listen_fd_ = -1;
    std::atomic<bool> running_{false};
    std::jthread acceptor_;
    std::mutex mutex_;
    std::vector<std::jthread> connections_;
    std::vector<int> client_fds_;
};

/// Browser-facing bridge: POST /stream with an NDJSON body returns the NDJSON replies of one
/// session; GET /mappings lists the registry. CORS is open so a local page can connect.
class HttpBridge {
public:
    explicit HttpBridge(std::shared_ptr<const MappingRegistry> registry);
    ~HttpBridge();
    HttpBridge(const HttpBridge&) = delete;
    HttpBridge& operator=(const HttpBridge&) = delete;

    int start(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct LatencySummary {
    double p50 = 0.0;
    double p90 = 0.0;
    double p99 = 0.0;
    double max = 0.0;
};

/// Nearest-rank percentiles of `samples` (microseconds).
LatencySummary summarize_latency(std::vector<double> samples);

struct ReplayReport {
    std::string mapping_ref;
    MappingKind kind = MappingKind::subspace;
    std::size_t steps = 0;
    std::vector<double> t;
    std::vector<Eigen::Vector3d> psi_path;
    std::vector<JointPose> slave_path;
    std::size_t clamp_count = 0; // clamped joint values over the whole run
    std::vector<std::size_t> clamp_per_joint;
    double max_joint_step = 0.0; // largest |q_k+1 - q_k| over joints and steps, rad
    bool all_finite = true;
    LatencySummary latency_us;
};

ReplayReport replay_eval(const std::vector<io::TrajectoryPoint>& trajectory, const MappingEngine& engine);

/// "replay-report/1". Latency is left out when `timing` is false so reports compare bytewise.
io::Json to_json(const ReplayReport& r, bool timing = true);

} // namespace teleop
