#include "teleop/cli.hpp"

#include <csignal>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "teleop/dataset.hpp"
#include "teleop/empirical.hpp"
#include "teleop/grasp_synth.hpp"
#include "teleop/io.hpp"
#include "teleop/ransac.hpp"
#include "teleop/service.hpp"

namespace teleop {

namespace {

using io::Json;

struct MappingFlags {
    std::string master;
    std::string slave;
    std::string slave_model;
    std::string master_model;
    std::string correspondence;
    std::string fingertip;
    std::vector<std::string> extra;
    std::string kind;
    bool no_clamp = false;
};

void add_mapping_flags(CLI::App* cmd, MappingFlags& f, bool allow_extra)
{
    cmd->add_option("--master", f.master, "master teleop-mapping file");
    cmd->add_option("--slave", f.slave, "slave teleop-mapping file");
    cmd->add_option("--slave-model", f.slave_model, "slave hand-model file (enables clamping)");
    cmd->add_option("--master-model", f.master_model, "master hand-model file (fingertip mapping, fk replies)");
    cmd->add_option("--correspondence", f.correspondence, "joint-correspondence file");
    cmd->add_option("--fingertip-config", f.fingertip, "fingertip-config file");
    cmd->add_option("--kind", f.kind, "mapping to use: subspace, joint, fingertip, or an extra mapping name");
    cmd->add_flag("--no-clamp", f.no_clamp, "do not clamp subspace output to the slave limits");
    if (allow_extra)
        cmd->add_option("--extra", f.extra, "additional subspace mapping NAME=MASTER,SLAVE (repeatable)");
}

std::shared_ptr<MappingRegistry> build_registry(const MappingFlags& f)
{
    auto reg = std::make_shared<MappingRegistry>();
    std::optional<HandModel> slave_model;
    std::optional<HandModel> master_model;
    if (!f.slave_model.empty())
        slave_model = io::load_hand_model(f.slave_model);
    if (!f.master_model.empty())
        master_model = io::load_hand_model(f.master_model);
    std::optional<TeleopMapping> slave_map;
    if (!f.slave.empty())
        slave_map = io::load_mapping(f.slave);

    if (slave_model && slave_map && !within_limits(*slave_model, slave_map->origin, 1e-9))
        throw ValidationError("slave mapping origin lies outside the limits of '" + slave_model->hand_id + "'");

    // Unmapped slave joints rest at the slave origin when one is known, else at the clamped zero pose.
    auto slave_rest = [&]() -> JointPose {
        if (slave_map)
            return slave_map->origin;
        return clamp_to_limits(*slave_model, JointPose::Zero(slave_model->dof)).q;
    };

    std::vector<MappingEngine> engines;
    if (!f.master.empty() || !f.slave.empty()) {
        if (f.master.empty() || f.slave.empty())
            throw ValidationError("--master and --slave must be given together");
        engines.push_back(MappingEngine::subspace("subspace", io::load_mapping(f.master), *slave_map, slave_model,
                                                  !f.no_clamp));
    }
    if (!f.correspondence.empty()) {
        if (!slave_model)
            throw ValidationError("--correspondence needs --slave-model");
        auto corr = io::correspondence_from_json(io::read_json_file(f.correspondence));
        int master_dof = 0;
        if (!engines.empty())
            master_dof = engines.front().master_dof();
        else if (master_model)
            master_dof = master_model->dof;
        else
            throw ValidationError("--correspondence needs --master or --master-model to know the master dof");
        engines.push_back(MappingEngine::joint("joint", std::move(corr), master_dof, *slave_model, slave_rest()));
    }
    if (!f.fingertip.empty()) {
        if (!slave_model || !master_model)
            throw ValidationError("--fingertip-config needs --master-model and --slave-model");
        auto cfg = io::fingertip_config_from_json(io::read_json_file(f.fingertip));
        engines.push_back(MappingEngine::fingertip("fingertip", std::move(cfg), *master_model, *slave_model, slave_rest()));
    }
    for (const auto& spec : f.extra) {
        const auto eq = spec.find('=');
        const auto comma = spec.find(',', eq == std::string::npos ? 0 : eq);
        if (eq == std::string::npos || comma == std::string::npos || eq == 0)
            throw ValidationError("--extra expects NAME=MASTER,SLAVE, got '" + spec + "'");
        auto master = io::load_mapping(spec.substr(eq + 1, comma - eq - 1));
        auto slave = io::load_mapping(spec.substr(comma + 1));
        engines.push_back(
            MappingEngine::subspace(spec.substr(0, eq), std::move(master), std::move(slave), slave_model, !f.no_clamp));
    }
    if (engines.empty())
        throw ValidationError("no mapping given (use --master/--slave, --correspondence or --fingertip-config)");

    if (!f.kind.empty()) {
        const auto it = std::find_if(engines.begin(), engines.end(), [&](const auto& e) { return e.name() == f.kind; });
        if (it == engines.end())
            throw ValidationError("--kind '" + f.kind + "' has no matching mapping inputs");
        std::rotate(engines.begin(), it, it + 1);
    }
    for (auto& e : engines)
        reg->add(std::move(e));
    reg->master_model = std::move(master_model);
    return reg;
}

void write_output(const std::string& path, const std::string& content, std::ostream& out)
{
    if (path.empty() || path == "-")
        out << content;
    else
        io::write_file(path, content);
}

Json diagnostics_json(int object_id, const SampleDiagnostics& d)
{
    Json failures = Json::object();
    for (const auto& [reason, n] : d.failures)
        failures[reason] = n;
    return Json{{"object_id", object_id},
                {"iterations", d.iterations},
                {"accepted", d.accepted},
                {"perturbation_evaluations", d.perturbation_evaluations},
                {"evaluations_per_candidate", d.evaluations_per_candidate},
                {"failures", failures}};
}

std::sig_atomic_t volatile g_stop = 0;

void wait_for_signal()
{
    g_stop = 0;
    auto on_signal = [](int) { g_stop = 1; };
    auto old_int = std::signal(SIGINT, on_signal);
    auto old_term = std::signal(SIGTERM, on_signal);
    while (!g_stop)
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    std::signal(SIGINT, old_int);
    std::signal(SIGTERM, old_term);
}

std::pair<std::string, int> split_endpoint(const std::string& endpoint)
{
    const auto colon = endpoint.rfind(':');
    if (colon == std::string::npos)
        throw ValidationError("endpoint must be HOST:PORT, got '" + endpoint + "'");
    try {
        return {endpoint.substr(0, colon), std::stoi(endpoint.substr(colon + 1))};
    } catch (const std::exception&) {
        throw ValidationError("bad port in endpoint '" + endpoint + "'");
    }
}

} // namespace

void configure_logging()
{
    static const bool once = [] {
        auto logger = spdlog::stderr_color_mt("teleop");
        spdlog::set_default_logger(logger);
        return true;
    }();
    (void)once;
    const char* env = std::getenv("TELEOP_LOG");
    spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err)
{
    configure_logging();
    CLI::App app{"Teleoperation subspace mapping tools", "teleopctl"};
    app.require_subcommand(1);

    // build-empirical
    std::string be_model, be_assign, be_extrema, be_out;
    auto* be = app.add_subcommand("build-empirical", "mapping from a motion assignment and extrema poses");
    be->add_option("--model", be_model, "hand-model file")->required();
    be->add_option("--assign", be_assign, "motion-assignment file")->required();
    be->add_option("--extrema", be_extrema, "extrema-poses file with an origin")->required();
    be->add_option("-o,--out", be_out, "output teleop-mapping file (default stdout)");

    // gen-grasps
    std::string gg_model, gg_out;
    std::vector<int> gg_objects;
    SampleConfig gg_cfg;
    double gg_scale = 0.0;
    auto* gg = app.add_subcommand("gen-grasps", "random-search grasp synthesis over the object set");
    gg->add_option("--model", gg_model, "hand-model file")->required();
    gg->add_option("--budget", gg_cfg.budget, "candidate iterations per object")->capture_default_str();
    gg->add_option("--seed", gg_cfg.seed, "random seed")->capture_default_str();
    gg->add_option("--max-valid", gg_cfg.max_valid, "stop an object after this many grasps")->capture_default_str();
    gg->add_option("--objects", gg_objects, "object ids (default all)")->check(CLI::Range(1, kObjectCount));
    gg->add_option("--scale", gg_scale, "object scale (default: the model's scale)");
    gg->add_option("--workers", gg_cfg.workers, "worker threads")->capture_default_str();
    gg->add_option("-o,--out", gg_out, "output grasp-dataset file (default stdout)");

    // parse-grasps
    std::string pg_in, pg_out;
    auto* pg = app.add_subcommand("parse-grasps", "threshold-escalation parsing of a raw dataset");
    pg->add_option("--dataset", pg_in, "raw grasp-dataset file")->required();
    pg->add_option("-o,--out", pg_out, "output grasp-dataset file (default stdout)");

    // fit-ransac
    std::string fr_in, fr_out;
    FitConfig fr_cfg;
    std::optional<double> fr_xi;
    bool fr_timing = false;
    auto* fr = app.add_subcommand("fit-ransac", "RANSAC subspace fit");
    fr->add_option("--dataset", fr_in, "grasp-dataset file")->required();
    fr->add_option("--M", fr_cfg.M, "hypothesis count")->capture_default_str();
    fr->add_option("--seed", fr_cfg.seed, "random seed")->capture_default_str();
    fr->add_option("--xi", fr_xi, "inlier threshold (default: the dataset's xi_final if positive, else 0.1)");
    fr->add_option("--workers", fr_cfg.workers, "worker threads")->capture_default_str();
    fr->add_flag("--timing", fr_timing, "record runtime_seconds in the report");
    fr->add_option("-o,--out", fr_out, "output ransac-report file (default stdout)");

    // build-mapping
    std::string bm_model, bm_report, bm_dataset, bm_calib, bm_out;
    std::size_t bm_cap = 4096;
    auto* bm = app.add_subcommand("build-mapping", "mapping from a RANSAC report");
    bm->add_option("--model", bm_model, "hand-model file")->required();
    bm->add_option("--report", bm_report, "ransac-report file")->required();
    bm->add_option("--dataset", bm_dataset, "grasp-dataset for origin relocation to the nearest object-1 grasp");
    bm->add_option("--calibration", bm_calib, "extrema-poses file: origin = calibration pose, poses drive scaling");
    bm->add_option("--combo-cap", bm_cap, "max extrema combinations per axis")->capture_default_str();
    bm->add_option("-o,--out", bm_out, "output teleop-mapping file (default stdout)");

    // map
    MappingFlags mp_flags;
    std::string mp_in, mp_out;
    auto* mp = app.add_subcommand("map", "map a trajectory file to slave_pose lines");
    add_mapping_flags(mp, mp_flags, false);
    mp->add_option("--in", mp_in, "trajectory file ({t, q} per line)")->required();
    mp->add_option("-o,--out", mp_out, "output file (default stdout)");

    // serve
    MappingFlags sv_flags;
    std::string sv_tcp, sv_http;
    bool sv_stdio = false;
    auto* sv = app.add_subcommand("serve", "stream master poses to slave poses");
    add_mapping_flags(sv, sv_flags, true);
    sv->add_option("--tcp", sv_tcp, "HOST:PORT for newline-delimited JSON over TCP");
    sv->add_option("--http", sv_http, "HOST:PORT for the browser bridge (POST /stream)");
    sv->add_flag("--stdio", sv_stdio, "read messages from stdin, write replies to stdout");

    // replay-eval
    MappingFlags re_flags;
    std::string re_traj, re_out;
    bool re_no_timing = false;
    auto* re = app.add_subcommand("replay-eval", "offline replay with smoothness, clamp and latency metrics");
    add_mapping_flags(re, re_flags, false);
    re->add_option("--trajectory", re_traj, "trajectory file")->required();
    re->add_flag("--no-timing", re_no_timing, "omit latency figures");
    re->add_option("-o,--out", re_out, "output replay-report file (default stdout)");

    // validate
    std::vector<std::string> va_files;
    std::string va_model;
    auto* va = app.add_subcommand("validate", "check files against their schemas");
    va->add_option("files", va_files, "files to check")->required();
    va->add_option("--model", va_model, "hand-model file; mapping origins must lie within its limits");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return 2;
    }

    try {
        if (*be) {
            const auto model = io::load_hand_model(be_model);
            const auto assign = io::assignment_from_json(io::read_json_file(be_assign));
            const auto extrema = io::extrema_from_json(io::read_json_file(be_extrema));
            if (!assign.hand_id.empty() && assign.hand_id != model.hand_id)
                throw ValidationError("assignment is for '" + assign.hand_id + "', model is '" + model.hand_id + "'");
            if (extrema.origin.size() == 0)
                throw ValidationError("extrema file has no origin pose");
            const auto mapping = build_empirical_mapping(model, extrema.origin, assign, extrema);
            for (const auto& note : mapping.provenance.notes)
                if (note.rfind("warning", 0) == 0)
                    spdlog::warn("{}", note);
            write_output(be_out, io::dump(io::to_json(mapping)), out);
            return 0;
        }
        if (*gg) {
            const auto model = io::load_hand_model(gg_model);
            const double scale = gg_scale > 0.0 ? gg_scale : model.scale;
            const auto objects = canonical_object_set(scale);
            if (gg_objects.empty())
                for (int id = 1; id <= kObjectCount; ++id)
                    gg_objects.push_back(id);
            GraspDataset d;
            d.hand_id = model.hand_id;
            d.dof = model.dof;
            Json per_object = Json::array();
            for (int id : gg_objects) {
                const auto& obj = objects[static_cast<std::size_t>(id - 1)];
                auto result = sample_grasps(model, obj, gg_cfg);
                spdlog::info("object {}: {} grasps from {} iterations", id, result.grasps.size(),
                             result.diagnostics.iterations);
                if (result.grasps.empty())
                    spdlog::warn("object {}: no valid grasp (dominant failure: {})", id,
                                 result.diagnostics.dominant_failure());
                per_object.push_back(diagnostics_json(id, result.diagnostics));
                for (auto& g : result.grasps)
                    d.add(std::move(g));
            }
            d.provenance = Json{{"generator", "random-search"},
                                {"seed", gg_cfg.seed},
                                {"budget", gg_cfg.budget},
                                {"max_valid", gg_cfg.max_valid},
                                {"object_scale", scale},
                                {"close_step_rad", gg_cfg.close_step},
                                {"position_perturbation_m", gg_cfg.position_perturbation},
                                {"joint_perturbation_rad", gg_cfg.joint_perturbation},
                                {"friction", gg_cfg.quality.friction},
                                {"cone_edges", gg_cfg.quality.cone_edges},
                                {"wrench_directions", gg_cfg.quality.directions},
                                {"objects", per_object}};
            write_output(gg_out, io::dataset_to_jsonl(d), out);
            return 0;
        }
        if (*pg) {
            const auto raw = io::load_dataset(pg_in);
            auto parsed = parse_dataset(raw);
            parsed.provenance["parsed_from"] = io::dataset_digest(raw);
            for (int id = 1; id <= kObjectCount; ++id)
                spdlog::info("object {}: {} -> {} grasps", id, raw.of(id).size(), parsed.of(id).size());
            write_output(pg_out, io::dataset_to_jsonl(parsed), out);
            return 0;
        }
        if (*fr) {
            const auto d = io::load_dataset(fr_in);
            if (fr_xi)
                fr_cfg.xi = *fr_xi;
            else
                fr_cfg.xi = d.xi_final && *d.xi_final > 0.0 ? *d.xi_final : kHumanInlierThreshold;
            const auto start = std::chrono::steady_clock::now();
            io::RansacReport report;
            report.cfg = fr_cfg;
            report.fit = fit_subspace(d, fr_cfg);
            report.dataset_digest = io::dataset_digest(d);
            if (fr_timing)
                report.runtime_seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            spdlog::info("best hypothesis {} of {}: t1={} t2={} t3={} t4={}", report.fit.best_index, fr_cfg.M,
                         report.fit.detail.score.t1, report.fit.detail.score.t2, report.fit.detail.score.t3,
                         report.fit.detail.score.t4);
            write_output(fr_out, io::dump(io::to_json(report)), out);
            return 0;
        }
        if (*bm) {
            const auto model = io::load_hand_model(bm_model);
            const auto report = io::ransac_report_from_json(io::read_json_file(bm_report));
            FitConfig cfg = report.cfg;
            cfg.delta_combo_cap = bm_cap;
            auto hyp = report.fit.hypothesis;
            require_dof(hyp.origin, model.dof, "report hypothesis");
            std::optional<std::vector<JointPose>> calibration;
            std::string digest = report.dataset_digest;
            if (!bm_calib.empty()) {
                const auto extrema = io::extrema_from_json(io::read_json_file(bm_calib));
                if (extrema.origin.size() == 0)
                    throw ValidationError("calibration file has no origin pose");
                hyp = relocate_origin(hyp, extrema.origin);
                auto pooled = extrema.pooled();
                if (!pooled.empty())
                    calibration = std::move(pooled);
            } else if (!bm_dataset.empty()) {
                const auto d = io::load_dataset(bm_dataset);
                if (io::dataset_digest(d) != report.dataset_digest)
                    spdlog::warn("dataset digest differs from the one recorded in the report");
                hyp = relocate_origin(hyp, d, cfg.relocation_object);
            } else {
                throw ValidationError("build-mapping needs --dataset or --calibration to relocate the origin");
            }
            auto mapping = build_algorithmic_mapping(model, hyp, cfg, calibration, digest);
            write_output(bm_out, io::dump(io::to_json(mapping)), out);
            return 0;
        }
        if (*mp) {
            const auto reg = build_registry(mp_flags);
            const auto& engine = reg->first();
            const auto trajectory = io::trajectory_from_jsonl(io::read_file(mp_in));
            std::string text;
            for (const auto& p : trajectory)
                text += io::dump(slave_pose_message(Json(p.t), engine, engine.map(p.q)), -1) + "\n";
            write_output(mp_out, text, out);
            return 0;
        }
        if (*sv) {
            const auto reg = build_registry(sv_flags);
            if (sv_stdio + !sv_tcp.empty() + !sv_http.empty() == 0)
                throw ValidationError("serve needs --stdio, --tcp or --http");
            if (sv_stdio) {
                serve_stream(in, out, reg);
                return 0;
            }
            std::unique_ptr<TcpServer> tcp;
            std::unique_ptr<HttpBridge> http;
            if (!sv_tcp.empty()) {
                const auto [host, port] = split_endpoint(sv_tcp);
                tcp = std::make_unique<TcpServer>(reg);
                const int bound = tcp->start(host, port);
                out << "tcp " << host << ":" << bound << std::endl;
            }
            if (!sv_http.empty()) {
                const auto [host, port] = split_endpoint(sv_http);
                http = std::make_unique<HttpBridge>(reg);
                const int bound = http->start(host, port);
                out << "http " << host << ":" << bound << std::endl;
            }
            wait_for_signal();
            return 0;
        }
        if (*re) {
            const auto reg = build_registry(re_flags);
            const auto trajectory = io::trajectory_from_jsonl(io::read_file(re_traj));
            const auto report = replay_eval(trajectory, reg->first());
            spdlog::info("{} steps, max joint step {:.4f} rad, {} clamped values", report.steps,
                         report.max_joint_step, report.clamp_count);
            write_output(re_out, io::dump(to_json(report, !re_no_timing)), out);
            return 0;
        }
        if (*va) {
            std::optional<HandModel> model;
            if (!va_model.empty())
                model = io::load_hand_model(va_model);
            int status = 0;
            for (const auto& file : va_files) {
                try {
                    const auto schema = io::validate_file(file);
                    if (model && schema == io::kMappingSchema) {
                        const auto m = io::load_mapping(file);
                        require_dof(m.origin, model->dof, "mapping origin");
                        if (!within_limits(*model, m.origin, 1e-9))
                            throw ValidationError("origin lies outside the limits of '" + model->hand_id + "'");
                    }
                    out << file << ": ok (" << schema << ")\n";
                } catch (const ValidationError& e) {
                    out << file << ": invalid: " << e.what() << "\n";
                    status = 2;
                }
            }
            return status;
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace teleop
