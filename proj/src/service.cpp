#include "teleop/service.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace teleop {

using io::Json;

std::string_view kind_name(MappingKind k)
{
    switch (k) {
    case MappingKind::subspace: return "subspace";
    case MappingKind::joint: return "joint";
    case MappingKind::fingertip: return "fingertip";
    }
    return "?";
}

MappingKind parse_kind(std::string_view s)
{
    if (s == "subspace")
        return MappingKind::subspace;
    if (s == "joint")
        return MappingKind::joint;
    if (s == "fingertip")
        return MappingKind::fingertip;
    throw ValidationError("unknown mapping kind '" + std::string(s) + "' (subspace, joint, fingertip)");
}

// MappingEngine

MappingEngine MappingEngine::subspace(std::string name, TeleopMapping master, TeleopMapping slave,
                                      std::optional<HandModel> slave_model, bool clamp)
{
    master.check_consistent();
    slave.check_consistent();
    if (slave_model) {
        require_valid(*slave_model);
        if (slave_model->dof != slave.dof())
            throw DimensionError("slave model '" + slave_model->hand_id + "' has " + std::to_string(slave_model->dof) +
                                 " joints but the slave mapping has " + std::to_string(slave.dof()));
    }
    MappingEngine e;
    e.name_ = std::move(name);
    e.kind_ = MappingKind::subspace;
    e.master_dof_ = master.dof();
    e.slave_dof_ = slave.dof();
    e.clamp_ = clamp && slave_model.has_value();
    e.slave_origin_ = slave.origin;
    e.slave_model_ = std::move(slave_model);
    e.master_map_ = std::move(master);
    e.slave_map_ = std::move(slave);
    return e;
}

MappingEngine MappingEngine::joint(std::string name, JointCorrespondence corr, int master_dof, HandModel slave_model,
                                   JointPose slave_origin)
{
    require_valid(slave_model);
    check_correspondence(corr, master_dof, slave_model.dof);
    require_dof(slave_origin, slave_model.dof, "joint mapping slave origin");
    MappingEngine e;
    e.name_ = std::move(name);
    e.kind_ = MappingKind::joint;
    e.master_dof_ = master_dof;
    e.slave_dof_ = slave_model.dof;
    e.slave_origin_ = std::move(slave_origin);
    e.slave_model_ = std::move(slave_model);
    e.corr_ = std::move(corr);
    return e;
}

MappingEngine MappingEngine::fingertip(std::string name, FingertipConfig cfg, HandModel master_model,
                                       HandModel slave_model, JointPose slave_seed)
{
    require_valid(master_model);
    require_valid(slave_model);
    check_fingertip_config(cfg, master_model, slave_model);
    require_dof(slave_seed, slave_model.dof, "fingertip mapping seed");
    MappingEngine e;
    e.name_ = std::move(name);
    e.kind_ = MappingKind::fingertip;
    e.master_dof_ = master_model.dof;
    e.slave_dof_ = slave_model.dof;
    e.slave_origin_ = std::move(slave_seed);
    e.master_model_ = std::move(master_model);
    e.slave_model_ = std::move(slave_model);
    e.fingertip_ = std::move(cfg);
    return e;
}

MappedPose MappingEngine::map(const JointPose& q_master) const
{
    require_dof(q_master, master_dof_, "master_pose");
    require_finite(q_master, "master_pose");
    MappedPose out;
    switch (kind_) {
    case MappingKind::subspace: {
        auto r = teleop_map(*master_map_, *slave_map_, q_master);
        out.psi = r.psi;
        if (slave_model_) {
            auto c = clamp_to_limits(*slave_model_, r.q_slave);
            out.clamped = std::move(c.clamped);
            out.q = clamp_ ? std::move(c.q) : std::move(r.q_slave);
        } else {
            out.q = std::move(r.q_slave);
            out.clamped.assign(static_cast<std::size_t>(slave_dof_), false);
        }
        break;
    }
    case MappingKind::joint: {
        // Flags report master values that fell outside the slave limits.
        auto c = joint_map(*corr_, q_master, *slave_model_, slave_origin_);
        out.q = std::move(c.q);
        out.clamped = std::move(c.clamped);
        break;
    }
    case MappingKind::fingertip: {
        auto r = fingertip_map(*fingertip_, *master_model_, q_master, *slave_model_, slave_origin_);
        out.q = std::move(r.joints.q);
        out.clamped = std::move(r.joints.clamped);
        out.residuals = std::move(r.residuals);
        break;
    }
    }
    return out;
}

// MappingRegistry

void MappingRegistry::add(MappingEngine engine)
{
    if (find(engine.name()))
        throw ValidationError("mapping '" + engine.name() + "' registered twice");
    if (!engines_.empty() && engine.master_dof() != engines_.front().master_dof())
        throw DimensionError("mapping '" + engine.name() + "' expects " + std::to_string(engine.master_dof()) +
                             " master joints, others expect " + std::to_string(engines_.front().master_dof()));
    engines_.push_back(std::move(engine));
}

const MappingEngine* MappingRegistry::find(std::string_view name) const
{
    for (const auto& e : engines_)
        if (e.name() == name)
            return &e;
    return nullptr;
}

const MappingEngine& MappingRegistry::first() const
{
    if (engines_.empty())
        throw ValidationError("no mapping configured");
    return engines_.front();
}

std::vector<std::string> MappingRegistry::names() const
{
    std::vector<std::string> out;
    for (const auto& e : engines_)
        out.push_back(e.name());
    return out;
}

// Messages

namespace {

Json bool_array(const std::vector<bool>& flags)
{
    Json arr = Json::array();
    for (bool b : flags)
        arr.push_back(b);
    return arr;
}

Json joint_table(const HandModel& model)
{
    Json joints = Json::array();
    for (const auto& js : model.joints)
        joints.push_back(Json{{"name", js.name}, {"min", js.min}, {"max", js.max}});
    return Json{{"hand_id", model.hand_id}, {"dof", model.dof}, {"joints", joints}};
}

} // namespace

Json slave_pose_message(const Json& t, const MappingEngine& engine, const MappedPose& out)
{
    Json msg{{"type", "slave_pose"}, {"t", t}, {"mapping_ref", engine.name()}, {"q", io::from_vector(out.q)}};
    if (out.psi)
        msg["psi"] = io::from_vector(out.psi->psi);
    msg["clamped"] = bool_array(out.clamped);
    if (!out.residuals.empty()) {
        Json res = Json::array();
        for (double r : out.residuals)
            res.push_back(r);
        msg["residuals"] = res;
    }
    return msg;
}

Json error_message(const Json& t, std::string_view text)
{
    return Json{{"type", "error"}, {"t", t}, {"message", text}};
}

Json fk_geometry(const HandModel& model, const JointPose& q)
{
    const auto kin = forward_kinematics(model, q);
    Json fingers = Json::array();
    for (std::size_t f = 0; f < model.fingers.size(); ++f) {
        Json points = Json::array();
        points.push_back(io::from_vector(model.fingers[f].base_position));
        for (const auto& frame : kin.fingers[f].link_frames)
            points.push_back(io::from_vector(frame.translation()));
        fingers.push_back(Json{{"name", model.fingers[f].name}, {"points", points}});
    }
    return Json{{"hand_id", model.hand_id}, {"q", io::from_vector(q)}, {"fingers", fingers}};
}

// Session

Session::Session(std::shared_ptr<const MappingRegistry> registry)
    : registry_(std::move(registry)), active_(&registry_->first())
{
}

std::string Session::handle_line(std::string_view line)
{
    Json reply;
    Json msg;
    try {
        msg = Json::parse(line.begin(), line.end());
    } catch (const Json::parse_error& e) {
        return io::dump(error_message(nullptr, std::string("unparseable line: ") + e.what()), -1);
    }
    try {
        reply = handle(msg);
    } catch (const std::exception& e) {
        const Json t = msg.is_object() && msg.contains("t") && msg["t"].is_number() ? msg["t"] : Json(nullptr);
        reply = error_message(t, e.what());
    }
    return io::dump(reply, -1);
}

Json Session::handle(const Json& msg)
{
    if (!msg.is_object())
        throw FormatError("message: expected a JSON object");
    const std::string type = io::get_string(msg, "type", "message");
    const Json t = msg.contains("t") ? msg["t"] : Json(nullptr);
    if (!t.is_null())
        io::get_double(msg, "t", "message");

    if (type == "master_pose") {
        io::expect_keys(msg, "master_pose", {"type", "q"}, {"t", "mapping_ref"});
        if (msg.contains("mapping_ref") && io::get_string(msg, "mapping_ref", "master_pose") != active_->name())
            throw ValidationError("master_pose: mapping_ref '" + msg["mapping_ref"].get<std::string>() +
                                  "' is not the active mapping '" + active_->name() + "'");
        JointPose q = io::to_vector(msg["q"], "master_pose.q", active_->master_dof());
        auto out = active_->map(q);
        Json reply = slave_pose_message(t, *active_, out);
        last_master_ = std::move(q);
        last_slave_ = std::move(out.q);
        return reply;
    }
    if (type == "set_mapping") {
        io::expect_keys(msg, "set_mapping", {"type", "mapping_ref"}, {"t"});
        const auto ref = io::get_string(msg, "mapping_ref", "set_mapping");
        const MappingEngine* engine = registry_->find(ref);
        if (!engine)
            throw ValidationError("set_mapping: unknown mapping_ref '" + ref + "'");
        active_ = engine;
        last_slave_.reset();
        return mapping_info(t);
    }
    if (type == "info") {
        io::expect_keys(msg, "info", {"type", "info"}, {"t", "q"});
        const auto what = io::get_string(msg, "info", "info");
        if (what == "mapping")
            return mapping_info(t);
        if (what == "fk") {
            std::optional<JointPose> q;
            if (msg.contains("q"))
                q = io::to_vector(msg["q"], "info.q", active_->master_dof());
            return fk_info(t, q);
        }
        throw ValidationError("info: unknown request '" + what + "' (mapping, fk)");
    }
    throw ValidationError("message: unknown type '" + type + "'");
}

Json Session::mapping_info(const Json& t) const
{
    Json available = Json::array();
    for (const auto& n : registry_->names())
        available.push_back(n);
    Json info{{"type", "info"},
              {"t", t},
              {"info", "mapping"},
              {"mapping_ref", active_->name()},
              {"kind", kind_name(active_->kind())},
              {"clamp", active_->clamps()},
              {"master_dof", active_->master_dof()},
              {"slave_dof", active_->slave_dof()},
              {"available", available}};
    const auto& master = active_->master_model() ? active_->master_model() : registry_->master_model;
    info["master"] = master ? joint_table(*master) : Json(nullptr);
    info["slave"] = active_->slave_model() ? joint_table(*active_->slave_model()) : Json(nullptr);
    return info;
}

Json Session::fk_info(const Json& t, const std::optional<JointPose>& q) const
{
    Json info{{"type", "info"}, {"t", t}, {"info", "fk"}, {"mapping_ref", active_->name()}};
    const auto& master = active_->master_model() ? active_->master_model() : registry_->master_model;
    const std::optional<JointPose> qm = q ? q : last_master_;
    info["master"] = master && qm ? fk_geometry(*master, *qm) : Json(nullptr);

    std::optional<JointPose> qs = last_slave_;
    if (q)
        qs = active_->map(*q).q;
    info["slave"] = active_->slave_model() ? fk_geometry(*active_->slave_model(), qs ? *qs : active_->slave_rest())
                                           : Json(nullptr);
    return info;
}

std::size_t serve_stream(std::istream& in, std::ostream& out, std::shared_ptr<const MappingRegistry> registry)
{
    Session session(std::move(registry));
    std::size_t handled = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos)
            continue;
        out << session.handle_line(line) << '\n';
        out.flush();
        ++handled;
    }
    return handled;
}

// TcpServer

namespace {

bool send_all(int fd, std::string_view data)
{
    while (!data.empty()) {
        const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
        if (n <= 0)
            return false;
        data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

void serve_connection(int fd, std::shared_ptr<const MappingRegistry> registry)
{
    Session session(std::move(registry));
    std::string buffer;
    char chunk[4096];
    auto flush_line = [&](std::string_view line) {
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos)
            return true;
        return send_all(fd, session.handle_line(line) + "\n");
    };
    for (;;) {
        const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n <= 0)
            break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t start = 0;
        for (std::size_t pos; (pos = buffer.find('\n', start)) != std::string::npos; start = pos + 1)
            if (!flush_line(std::string_view(buffer).substr(start, pos - start)))
                return;
        buffer.erase(0, start);
    }
    if (!buffer.empty())
        flush_line(buffer);
}

} // namespace

TcpServer::TcpServer(std::shared_ptr<const MappingRegistry> registry) : registry_(std::move(registry))
{
    registry_->first();
}

TcpServer::~TcpServer()
{
    stop();
}

int TcpServer::start(const std::string& host, int port)
{
    if (running_)
        throw Error("tcp server already running");
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res) != 0 || !res)
        throw ValidationError("cannot resolve host '" + host + "'");
    const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0) {
        ::freeaddrinfo(res);
        throw Error("socket() failed");
    }
    const int yes = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    const bool bound = ::bind(fd, res->ai_addr, res->ai_addrlen) == 0 && ::listen(fd, 16) == 0;
    ::freeaddrinfo(res);
    if (!bound) {
        ::close(fd);
        throw Error("cannot listen on " + host + ":" + service);
    }
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    listen_fd_ = fd;
    running_ = true;
    acceptor_ = std::jthread([this] { accept_loop(); });
    return ntohs(addr.sin_port);
}

void TcpServer::accept_loop()
{
    while (running_) {
        const int client = ::accept(listen_fd_, nullptr, nullptr);
        if (client < 0) {
            if (!running_)
                break;
            continue;
        }
        std::lock_guard lock(mutex_);
        if (!running_) {
            ::close(client);
            break;
        }
        client_fds_.push_back(client);
        connections_.emplace_back([this, client] {
            spdlog::debug("tcp session opened (fd {})", client);
            serve_connection(client, registry_);
            std::lock_guard inner(mutex_);
            std::erase(client_fds_, client);
            ::close(client);
            spdlog::debug("tcp session closed (fd {})", client);
        });
    }
}

void TcpServer::stop()
{
    if (!running_.exchange(false))
        return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
    if (acceptor_.joinable())
        acceptor_.join();
    std::vector<std::jthread> threads;
    {
        std::lock_guard lock(mutex_);
        for (int fd : client_fds_)
            ::shutdown(fd, SHUT_RDWR);
        threads = std::move(connections_);
    }
    threads.clear();
}

// HttpBridge

struct HttpBridge::Impl {
    std::shared_ptr<const MappingRegistry> registry;
    httplib::Server server;
    std::thread thread;
};

HttpBridge::HttpBridge(std::shared_ptr<const MappingRegistry> registry) : impl_(std::make_unique<Impl>())
{
    registry->first();
    impl_->registry = std::move(registry);
    auto& svr = impl_->server;
    svr.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                             {"Access-Control-Allow-Headers", "Content-Type"}});
    svr.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    svr.Get("/mappings", [this](const httplib::Request&, httplib::Response& res) {
        Json names = Json::array();
        for (const auto& n : impl_->registry->names())
            names.push_back(n);
        res.set_content(io::dump(Json{{"mappings", names}}, -1), "application/json");
    });
    svr.Post("/stream", [this](const httplib::Request& req, httplib::Response& res) {
        Session session(impl_->registry);
        std::string out;
        for (const auto& [n, line] : io::split_lines(req.body)) {
            out += session.handle_line(line);
            out += '\n';
        }
        res.set_content(out, "application/x-ndjson");
    });
}

HttpBridge::~HttpBridge()
{
    stop();
}

int HttpBridge::start(const std::string& host, int port)
{
    auto& svr = impl_->server;
    int bound = port;
    if (port == 0)
        bound = svr.bind_to_any_port(host);
    else if (!svr.bind_to_port(host, port))
        bound = -1;
    if (bound < 0)
        throw Error("cannot listen on " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([&svr] { svr.listen_after_bind(); });
    svr.wait_until_ready();
    return bound;
}

void HttpBridge::stop()
{
    if (!impl_)
        return;
    impl_->server.stop();
    if (impl_->thread.joinable())
        impl_->thread.join();
}

// Replay

LatencySummary summarize_latency(std::vector<double> samples)
{
    LatencySummary s;
    if (samples.empty())
        return s;
    std::sort(samples.begin(), samples.end());
    auto rank = [&](double p) {
        const auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(samples.size())));
        return samples[std::clamp<std::size_t>(k, 1, samples.size()) - 1];
    };
    s.p50 = rank(0.50);
    s.p90 = rank(0.90);
    s.p99 = rank(0.99);
    s.max = samples.back();
    return s;
}

ReplayReport replay_eval(const std::vector<io::TrajectoryPoint>& trajectory, const MappingEngine& engine)
{
    ReplayReport r;
    r.mapping_ref = engine.name();
    r.kind = engine.kind();
    r.clamp_per_joint.assign(static_cast<std::size_t>(engine.slave_dof()), 0);
    std::vector<double> latency;
    latency.reserve(trajectory.size());
    for (const auto& p : trajectory) {
        const auto start = std::chrono::steady_clock::now();
        auto out = engine.map(p.q);
        const auto stop = std::chrono::steady_clock::now();
        latency.push_back(std::chrono::duration<double, std::micro>(stop - start).count());

        for (std::size_t j = 0; j < out.clamped.size(); ++j)
            if (out.clamped[j]) {
                ++r.clamp_per_joint[j];
                ++r.clamp_count;
            }
        r.all_finite = r.all_finite && out.q.allFinite();
        if (!r.slave_path.empty())
            r.max_joint_step = std::max(r.max_joint_step, (out.q - r.slave_path.back()).cwiseAbs().maxCoeff());
        r.t.push_back(p.t);
        if (out.psi)
            r.psi_path.push_back(out.psi->psi);
        r.slave_path.push_back(std::move(out.q));
    }
    r.steps = trajectory.size();
    r.latency_us = summarize_latency(std::move(latency));
    return r;
}

Json to_json(const ReplayReport& r, bool timing)
{
    Json per_joint = Json::array();
    for (auto n : r.clamp_per_joint)
        per_joint.push_back(n);
    Json t = Json::array();
    for (double v : r.t)
        t.push_back(v);
    Json psi = Json::array();
    for (const auto& p : r.psi_path)
        psi.push_back(io::from_vector(p));
    Json slave = Json::array();
    for (const auto& q : r.slave_path)
        slave.push_back(io::from_vector(q));
    Json j{{"schema", io::kReplayReportSchema},
           {"mapping_ref", r.mapping_ref},
           {"kind", kind_name(r.kind)},
           {"steps", r.steps},
           {"clamp_count", r.clamp_count},
           {"clamp_per_joint", per_joint},
           {"max_joint_step", r.max_joint_step},
           {"all_finite", r.all_finite}};
    if (timing)
        j["latency_us"] = Json{{"p50", r.latency_us.p50},
                               {"p90", r.latency_us.p90},
                               {"p99", r.latency_us.p99},
                               {"max", r.latency_us.max}};
    j["t"] = t;
    j["psi_path"] = psi;
    j["slave_path"] = slave;
    return j;
}

} // namespace teleop
