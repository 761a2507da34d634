#include "teleop/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

namespace teleop::io {

namespace {

void write_value(std::string& out, const Json& j, int indent, int depth);

bool is_scalar(const Json& j)
{
    return !j.is_object() && !j.is_array();
}

void newline(std::string& out, int indent, int depth)
{
    if (indent < 0)
        return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * depth), ' ');
}

void write_number(std::string& out, double v)
{
    if (!std::isfinite(v))
        throw FormatError("cannot serialize a non-finite number");
    if (v == 0.0)
        v = 0.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

void write_value(std::string& out, const Json& j, int indent, int depth)
{
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += '{';
        bool first = true;
        for (const auto& [key, value] : j.items()) {
            if (!first)
                out += ',';
            first = false;
            newline(out, indent, depth + 1);
            out += Json(key).dump();
            out += indent < 0 ? ":" : ": ";
            write_value(out, value, indent, depth + 1);
        }
        newline(out, indent, depth);
        out += '}';
        return;
    }
    case Json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        // Vectors of numbers stay on one line.
        const bool flat = indent < 0 || std::all_of(j.begin(), j.end(), is_scalar);
        out += '[';
        bool first = true;
        for (const auto& value : j) {
            if (!first)
                out += indent < 0 ? "," : (flat ? ", " : ",");
            first = false;
            if (!flat)
                newline(out, indent, depth + 1);
            write_value(out, value, indent, depth + 1);
        }
        if (!flat)
            newline(out, indent, depth);
        out += ']';
        return;
    }
    case Json::value_t::number_float:
        write_number(out, j.get<double>());
        return;
    default:
        out += j.dump();
    }
}

std::string where(std::string_view what, std::string_view key)
{
    return std::string(what) + "." + std::string(key);
}

const Json& field(const Json& j, std::string_view key, std::string_view what)
{
    if (!j.is_object())
        throw FormatError(std::string(what) + ": expected an object");
    const auto it = j.find(key);
    if (it == j.end())
        throw FormatError(where(what, key) + ": missing");
    return *it;
}

double as_double(const Json& v, std::string_view what)
{
    if (!v.is_number())
        throw FormatError(std::string(what) + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d))
        throw FormatError(std::string(what) + ": non-finite number");
    return d;
}

std::int64_t as_int(const Json& v, std::string_view what)
{
    if (!v.is_number_integer())
        throw FormatError(std::string(what) + ": expected an integer");
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
        throw FormatError(std::string(what) + ": integer out of range");
    return v.get<std::int64_t>();
}

int as_small_int(const Json& v, std::string_view what)
{
    const auto n = as_int(v, what);
    if (n < INT32_MIN || n > INT32_MAX)
        throw FormatError(std::string(what) + ": integer out of range");
    return static_cast<int>(n);
}

Json vector_list(const std::vector<JointPose>& poses)
{
    Json arr = Json::array();
    for (const auto& q : poses)
        arr.push_back(from_vector(q));
    return arr;
}

std::vector<JointPose> pose_list(const Json& j, std::string_view what, Eigen::Index dof)
{
    if (!j.is_array())
        throw FormatError(std::string(what) + ": expected an array of poses");
    std::vector<JointPose> out;
    std::size_t i = 0;
    for (const auto& q : j)
        out.push_back(to_vector(q, std::string(what) + "[" + std::to_string(i++) + "]", dof));
    return out;
}

Json signed_joints(const std::vector<SignedJoint>& joints)
{
    Json arr = Json::array();
    for (const auto& sj : joints)
        arr.push_back(Json{{"joint", sj.joint}, {"sign", sj.sign}});
    return arr;
}

std::vector<SignedJoint> signed_joints_from(const Json& j, std::string_view what)
{
    if (!j.is_array())
        throw FormatError(std::string(what) + ": expected an array");
    std::vector<SignedJoint> out;
    std::size_t i = 0;
    for (const auto& e : j) {
        const std::string w = std::string(what) + "[" + std::to_string(i++) + "]";
        expect_keys(e, w, {"joint", "sign"});
        SignedJoint sj{as_small_int(e.at("joint"), w + ".joint"), as_small_int(e.at("sign"), w + ".sign")};
        if (sj.sign != 1 && sj.sign != -1)
            throw FormatError(w + ".sign: must be +1 or -1");
        out.push_back(sj);
    }
    return out;
}

Json grasp_ref(const GraspRef& r)
{
    return Json{{"object_id", r.object_id}, {"index", r.index}};
}

GraspRef grasp_ref_from(const Json& j, std::string_view what)
{
    expect_keys(j, what, {"object_id", "index"});
    const auto index = as_int(j.at("index"), where(what, "index"));
    if (index < 0)
        throw FormatError(where(what, "index") + ": must be non-negative");
    return {as_small_int(j.at("object_id"), where(what, "object_id")), static_cast<std::size_t>(index)};
}

Json axis_object(const std::array<Json, 3>& values)
{
    Json j = Json::object();
    for (Axis a : kAxes)
        j[std::string(axis_name(a))] = values[static_cast<std::size_t>(index(a))];
    return j;
}

} // namespace

std::string dump(const Json& j, int indent)
{
    std::string out;
    write_value(out, j, indent, 0);
    if (indent >= 0)
        out += '\n';
    return out;
}

Json parse(std::string_view text, std::string_view what)
{
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        throw FormatError(std::string(what) + ": " + e.what());
    }
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
        throw Error("write failed for '" + path.string() + "'");
}

Json read_json_file(const fs::path& path)
{
    return parse(read_file(path), path.string());
}

std::string sha256_hex(std::string_view bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

void expect_keys(const Json& j, std::string_view what, std::initializer_list<std::string_view> required,
                 std::initializer_list<std::string_view> optional)
{
    if (!j.is_object())
        throw FormatError(std::string(what) + ": expected an object");
    for (auto key : required)
        if (!j.contains(key))
            throw FormatError(where(what, key) + ": missing");
    for (const auto& [key, value] : j.items()) {
        const bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                           std::find(optional.begin(), optional.end(), key) != optional.end();
        if (!known)
            throw FormatError(where(what, key) + ": unknown field");
    }
}

void expect_schema(const Json& j, std::string_view schema)
{
    const auto& s = field(j, "schema", "document");
    if (!s.is_string() || s.get<std::string>() != schema)
        throw FormatError("document: expected schema '" + std::string(schema) + "', got " + s.dump());
}

double get_double(const Json& j, std::string_view key, std::string_view what)
{
    return as_double(field(j, key, what), where(what, key));
}

std::int64_t get_int(const Json& j, std::string_view key, std::string_view what)
{
    return as_int(field(j, key, what), where(what, key));
}

std::uint64_t get_u64(const Json& j, std::string_view key, std::string_view what)
{
    const auto& v = field(j, key, what);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw FormatError(where(what, key) + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
}

std::string get_string(const Json& j, std::string_view key, std::string_view what)
{
    const auto& v = field(j, key, what);
    if (!v.is_string())
        throw FormatError(where(what, key) + ": expected a string");
    return v.get<std::string>();
}

Eigen::VectorXd to_vector(const Json& j, std::string_view what, Eigen::Index expected)
{
    if (!j.is_array())
        throw FormatError(std::string(what) + ": expected an array of numbers");
    if (expected >= 0 && static_cast<Eigen::Index>(j.size()) != expected)
        throw DimensionError(std::string(what) + ": expected " + std::to_string(expected) + " values, got " +
                             std::to_string(j.size()));
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = as_double(j[i], std::string(what) + "[" + std::to_string(i) + "]");
    return v;
}

Json from_vector(const Eigen::Ref<const Eigen::VectorXd>& v)
{
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        arr.push_back(v[i]);
    return arr;
}

// hand-model/1

Json to_json(const HandModel& model)
{
    Json joints = Json::array();
    for (const auto& js : model.joints)
        joints.push_back(Json{{"name", js.name}, {"min", js.min}, {"max", js.max}});
    Json fingers = Json::array();
    for (const auto& f : model.fingers) {
        Json links = Json::array();
        for (const auto& l : f.links)
            links.push_back(Json{{"length", l.length}, {"joint_index", l.joint_index}, {"axis", from_vector(l.axis)}});
        const auto& qt = f.base_orientation;
        fingers.push_back(Json{{"name", f.name},
                               {"base_pose", Json{{"pos", from_vector(f.base_position)},
                                                  {"quat", Json::array({qt.w(), qt.x(), qt.y(), qt.z()})}}},
                               {"links", links}});
    }
    return Json{{"schema", kHandModelSchema},
                {"hand_id", model.hand_id},
                {"dof", model.dof},
                {"scale", model.scale},
                {"joints", joints},
                {"fingers", fingers}};
}

HandModel hand_model_from_json(const Json& j)
{
    expect_keys(j, "hand-model", {"schema", "hand_id", "dof", "scale", "joints", "fingers"});
    expect_schema(j, kHandModelSchema);
    HandModel m;
    m.hand_id = get_string(j, "hand_id", "hand-model");
    m.dof = as_small_int(j.at("dof"), "hand-model.dof");
    m.scale = get_double(j, "scale", "hand-model");
    const auto& joints = j.at("joints");
    if (!joints.is_array())
        throw FormatError("hand-model.joints: expected an array");
    for (std::size_t i = 0; i < joints.size(); ++i) {
        const std::string w = "hand-model.joints[" + std::to_string(i) + "]";
        expect_keys(joints[i], w, {"name", "min", "max"});
        m.joints.push_back({get_string(joints[i], "name", w), get_double(joints[i], "min", w),
                            get_double(joints[i], "max", w)});
    }
    const auto& fingers = j.at("fingers");
    if (!fingers.is_array())
        throw FormatError("hand-model.fingers: expected an array");
    for (std::size_t i = 0; i < fingers.size(); ++i) {
        const std::string w = "hand-model.fingers[" + std::to_string(i) + "]";
        const auto& fj = fingers[i];
        expect_keys(fj, w, {"name", "base_pose", "links"});
        FingerChain f;
        f.name = get_string(fj, "name", w);
        const auto& bp = fj.at("base_pose");
        expect_keys(bp, w + ".base_pose", {"pos", "quat"});
        f.base_position = to_vector(bp.at("pos"), w + ".base_pose.pos", 3);
        const Eigen::VectorXd quat = to_vector(bp.at("quat"), w + ".base_pose.quat", 4);
        f.base_orientation = Eigen::Quaterniond(quat[0], quat[1], quat[2], quat[3]);
        const auto& links = fj.at("links");
        if (!links.is_array())
            throw FormatError(w + ".links: expected an array");
        for (std::size_t l = 0; l < links.size(); ++l) {
            const std::string lw = w + ".links[" + std::to_string(l) + "]";
            expect_keys(links[l], lw, {"length", "joint_index", "axis"});
            f.links.push_back({get_double(links[l], "length", lw), as_small_int(links[l].at("joint_index"), lw + ".joint_index"),
                               to_vector(links[l].at("axis"), lw + ".axis", 3)});
        }
        m.fingers.push_back(std::move(f));
    }
    return m;
}

HandModel load_hand_model(const fs::path& path)
{
    HandModel m = hand_model_from_json(read_json_file(path));
    require_valid(m);
    return m;
}

// teleop-mapping/1

Json to_json(const TeleopMapping& m)
{
    std::array<Json, 3> cols;
    for (Axis a : kAxes)
        cols[static_cast<std::size_t>(index(a))] = from_vector(m.A.column(a));
    Json notes = Json::array();
    for (const auto& n : m.provenance.notes)
        notes.push_back(n);
    return Json{{"schema", kMappingSchema},
                {"hand_id", m.hand_id},
                {"dof", m.dof()},
                {"origin", from_vector(m.origin)},
                {"A", axis_object(cols)},
                {"delta", from_vector(m.scaling.delta)},
                {"delta_star", from_vector(m.scaling.delta_star)},
                {"provenance", Json{{"method", method_name(m.provenance.method)},
                                    {"seed", m.provenance.seed},
                                    {"dataset_digest", m.provenance.dataset_digest},
                                    {"notes", notes}}}};
}

TeleopMapping mapping_from_json(const Json& j)
{
    constexpr std::string_view w = "teleop-mapping";
    expect_keys(j, w, {"schema", "hand_id", "dof", "origin", "A", "delta", "delta_star", "provenance"});
    expect_schema(j, kMappingSchema);
    TeleopMapping m;
    m.hand_id = get_string(j, "hand_id", w);
    const auto dof = as_small_int(j.at("dof"), "teleop-mapping.dof");
    if (dof <= 0)
        throw FormatError("teleop-mapping.dof: must be positive");
    m.origin = to_vector(j.at("origin"), "teleop-mapping.origin", dof);
    const auto& A = j.at("A");
    expect_keys(A, "teleop-mapping.A", {"alpha", "sigma", "epsilon"});
    Eigen::MatrixX3d cols(dof, 3);
    for (Axis a : kAxes) {
        const std::string name(axis_name(a));
        cols.col(index(a)) = to_vector(A.at(name), "teleop-mapping.A." + name, dof);
    }
    m.A = ProjectionMatrix(cols);
    m.scaling.delta = to_vector(j.at("delta"), "teleop-mapping.delta", 3);
    m.scaling.delta_star = to_vector(j.at("delta_star"), "teleop-mapping.delta_star", 3);
    const auto& p = j.at("provenance");
    expect_keys(p, "teleop-mapping.provenance", {"method", "seed", "dataset_digest"}, {"notes"});
    try {
        m.provenance.method = parse_method(get_string(p, "method", "teleop-mapping.provenance"));
    } catch (const ValidationError& e) {
        throw FormatError(std::string("teleop-mapping.provenance.method: ") + e.what());
    }
    m.provenance.seed = get_u64(p, "seed", "teleop-mapping.provenance");
    m.provenance.dataset_digest = get_string(p, "dataset_digest", "teleop-mapping.provenance");
    if (p.contains("notes")) {
        const auto& notes = p.at("notes");
        if (!notes.is_array())
            throw FormatError("teleop-mapping.provenance.notes: expected an array");
        for (const auto& n : notes) {
            if (!n.is_string())
                throw FormatError("teleop-mapping.provenance.notes: expected strings");
            m.provenance.notes.push_back(n.get<std::string>());
        }
    }
    m.check_consistent();
    return m;
}

TeleopMapping load_mapping(const fs::path& path)
{
    return mapping_from_json(read_json_file(path));
}

// motion-assignment/1

Json to_json(const MotionAssignment& a)
{
    return Json{{"schema", kAssignmentSchema},
                {"hand_id", a.hand_id},
                {"spread", signed_joints(a.spread)},
                {"open", signed_joints(a.open)},
                {"curl", signed_joints(a.curl)}};
}

MotionAssignment assignment_from_json(const Json& j)
{
    expect_keys(j, "motion-assignment", {"schema", "hand_id", "spread", "open", "curl"});
    expect_schema(j, kAssignmentSchema);
    MotionAssignment a;
    a.hand_id = get_string(j, "hand_id", "motion-assignment");
    a.spread = signed_joints_from(j.at("spread"), "motion-assignment.spread");
    a.open = signed_joints_from(j.at("open"), "motion-assignment.open");
    a.curl = signed_joints_from(j.at("curl"), "motion-assignment.curl");
    return a;
}

// extrema-poses/1

Json to_json(const ExtremaPoses& e, const std::string& hand_id)
{
    Json j{{"schema", kExtremaSchema}};
    if (!hand_id.empty())
        j["hand_id"] = hand_id;
    if (e.origin.size() > 0)
        j["origin"] = from_vector(e.origin);
    for (Axis a : kAxes)
        j[std::string(axis_name(a))] = vector_list(e.per_axis[static_cast<std::size_t>(index(a))]);
    return j;
}

ExtremaPoses extrema_from_json(const Json& j)
{
    expect_keys(j, "extrema-poses", {"schema", "alpha", "sigma", "epsilon"}, {"hand_id", "origin"});
    expect_schema(j, kExtremaSchema);
    ExtremaPoses e;
    Eigen::Index dof = -1;
    if (j.contains("origin")) {
        e.origin = to_vector(j.at("origin"), "extrema-poses.origin");
        dof = e.origin.size();
    }
    for (Axis a : kAxes) {
        const std::string name(axis_name(a));
        auto& poses = e.per_axis[static_cast<std::size_t>(index(a))];
        poses = pose_list(j.at(name), "extrema-poses." + name, dof);
        if (dof < 0 && !poses.empty())
            dof = poses.front().size();
        for (const auto& q : poses)
            if (q.size() != dof)
                throw DimensionError("extrema-poses." + name + ": poses of different lengths");
    }
    return e;
}

// joint-correspondence/1

Json to_json(const JointCorrespondence& c)
{
    Json pairs = Json::array();
    for (const auto& [i, k] : c.pairs)
        pairs.push_back(Json::array({i, k}));
    return Json{{"schema", kCorrespondenceSchema},
                {"master_hand", c.master_hand},
                {"slave_hand", c.slave_hand},
                {"pairs", pairs}};
}

JointCorrespondence correspondence_from_json(const Json& j)
{
    expect_keys(j, "joint-correspondence", {"schema", "master_hand", "slave_hand", "pairs"});
    expect_schema(j, kCorrespondenceSchema);
    JointCorrespondence c;
    c.master_hand = get_string(j, "master_hand", "joint-correspondence");
    c.slave_hand = get_string(j, "slave_hand", "joint-correspondence");
    const auto& pairs = j.at("pairs");
    if (!pairs.is_array())
        throw FormatError("joint-correspondence.pairs: expected an array");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const std::string w = "joint-correspondence.pairs[" + std::to_string(i) + "]";
        if (!pairs[i].is_array() || pairs[i].size() != 2)
            throw FormatError(w + ": expected [master_joint, slave_joint]");
        c.pairs.emplace_back(as_small_int(pairs[i][0], w), as_small_int(pairs[i][1], w));
    }
    return c;
}

// fingertip-config/1

Json to_json(const FingertipConfig& c)
{
    Json pairs = Json::array();
    for (const auto& [m, s] : c.finger_pairs)
        pairs.push_back(Json::array({m, s}));
    return Json{{"schema", kFingertipSchema},
                {"master_hand", c.master_hand},
                {"slave_hand", c.slave_hand},
                {"finger_pairs", pairs},
                {"scale", c.scale},
                {"ik", Json{{"max_iters", c.ik.max_iters}, {"damping", c.ik.damping}, {"tolerance", c.ik.tolerance}}}};
}

FingertipConfig fingertip_config_from_json(const Json& j)
{
    constexpr std::string_view w = "fingertip-config";
    expect_keys(j, w, {"schema", "master_hand", "slave_hand", "finger_pairs", "scale", "ik"});
    expect_schema(j, kFingertipSchema);
    FingertipConfig c;
    c.master_hand = get_string(j, "master_hand", w);
    c.slave_hand = get_string(j, "slave_hand", w);
    const auto& pairs = j.at("finger_pairs");
    if (!pairs.is_array())
        throw FormatError("fingertip-config.finger_pairs: expected an array");
    for (const auto& p : pairs) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string())
            throw FormatError("fingertip-config.finger_pairs: expected [master_finger, slave_finger]");
        c.finger_pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
    }
    c.scale = get_double(j, "scale", w);
    const auto& ik = j.at("ik");
    expect_keys(ik, "fingertip-config.ik", {"max_iters", "damping", "tolerance"});
    c.ik.max_iters = as_small_int(ik.at("max_iters"), "fingertip-config.ik.max_iters");
    c.ik.damping = get_double(ik, "damping", "fingertip-config.ik");
    c.ik.tolerance = get_double(ik, "tolerance", "fingertip-config.ik");
    if (!(c.scale > 0.0) || !(c.ik.tolerance > 0.0) || c.ik.damping < 0.0 || c.ik.max_iters < 0)
        throw FormatError("fingertip-config: scale and tolerance must be positive, damping and max_iters non-negative");
    return c;
}

// grasp-dataset/1

std::string dataset_to_jsonl(const GraspDataset& d)
{
    Json header{{"schema", kDatasetSchema}, {"hand_id", d.hand_id}, {"dof", d.dof}};
    header["xi_final"] = d.xi_final ? Json(*d.xi_final) : Json(nullptr);
    header["provenance"] = d.provenance;
    std::string out = dump(header, -1) + "\n";
    for (const auto& list : d.objects)
        for (const auto& g : list) {
            Json line{{"object_id", g.object_id},
                      {"q", from_vector(g.q)},
                      {"quality", g.quality},
                      {"grasp_type", grasp_type_name(g.grasp_type)},
                      {"object_pose", from_vector(g.object_pose)}};
            out += dump(line, -1);
            out += '\n';
        }
    return out;
}

GraspDataset dataset_from_jsonl(std::string_view text)
{
    const auto lines = split_lines(text);
    if (lines.empty())
        throw FormatError("grasp-dataset: missing header line");
    const Json header = parse(lines.front().second, "grasp-dataset header");
    expect_keys(header, "grasp-dataset header", {"schema", "hand_id", "dof", "xi_final", "provenance"});
    expect_schema(header, kDatasetSchema);
    GraspDataset d;
    d.hand_id = get_string(header, "hand_id", "grasp-dataset header");
    d.dof = as_small_int(header.at("dof"), "grasp-dataset header.dof");
    if (d.dof <= 0)
        throw FormatError("grasp-dataset header.dof: must be positive");
    if (!header.at("xi_final").is_null())
        d.xi_final = get_double(header, "xi_final", "grasp-dataset header");
    if (!header.at("provenance").is_object())
        throw FormatError("grasp-dataset header.provenance: expected an object");
    d.provenance = header.at("provenance");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string w = "grasp-dataset line " + std::to_string(lines[i].first);
        const Json line = parse(lines[i].second, w);
        expect_keys(line, w, {"object_id", "q", "quality", "grasp_type", "object_pose"});
        Grasp g;
        g.object_id = as_small_int(line.at("object_id"), w + ".object_id");
        g.q = to_vector(line.at("q"), w + ".q", d.dof);
        g.quality = get_double(line, "quality", w);
        if (g.quality < 0.0)
            throw FormatError(w + ".quality: must be >= 0");
        try {
            g.grasp_type = parse_grasp_type(get_string(line, "grasp_type", w));
        } catch (const ValidationError& e) {
            throw FormatError(w + ".grasp_type: " + e.what());
        }
        g.object_pose = to_vector(line.at("object_pose"), w + ".object_pose", 3);
        if (g.object_id < 1 || g.object_id > kObjectCount)
            throw FormatError(w + ".object_id: outside 1..8");
        d.add(std::move(g));
    }
    return d;
}

GraspDataset load_dataset(const fs::path& path)
{
    return dataset_from_jsonl(read_file(path));
}

std::string dataset_digest(const GraspDataset& d)
{
    return "sha256:" + sha256_hex(dataset_to_jsonl(d));
}

// ransac-report/1

Json to_json(const RansacReport& r)
{
    const auto& c = r.cfg;
    const auto& f = r.fit;
    const auto& h = f.hypothesis;
    Json per_object = Json::array();
    for (int n : f.detail.per_object_inliers)
        per_object.push_back(n);
    std::array<Json, 3> basis;
    std::array<Json, 3> sources;
    for (Axis a : kAxes) {
        basis[static_cast<std::size_t>(index(a))] = from_vector(h.direction(a));
        sources[static_cast<std::size_t>(index(a))] = grasp_ref(h.sources[static_cast<std::size_t>(index(a))]);
    }
    Json j{{"schema", kRansacReportSchema},
           {"cfg", Json{{"M", c.M},
                        {"xi", c.xi},
                        {"seed", c.seed},
                        {"delta_combo_cap", c.delta_combo_cap},
                        {"origin_object", c.origin_object},
                        {"axis_objects", axis_object({Json(c.axis_objects[0]), Json(c.axis_objects[1]),
                                                      Json(c.axis_objects[2])})},
                        {"relocation_object", c.relocation_object},
                        {"max_resamples", c.max_resamples}}},
           {"best_score", Json{{"t1", f.detail.score.t1},
                               {"t2", f.detail.score.t2},
                               {"t3", f.detail.score.t3},
                               {"t4", f.detail.score.t4}}},
           {"per_object_inliers", per_object},
           {"best_index", f.best_index},
           {"evaluated", f.evaluated},
           {"degenerate", f.degenerate},
           {"dataset_digest", r.dataset_digest},
           {"hypothesis", Json{{"origin", from_vector(h.origin)},
                               {"origin_ref", grasp_ref(h.origin_ref)},
                               {"basis", axis_object(basis)},
                               {"sources", axis_object(sources)}}}};
    if (r.runtime_seconds)
        j["runtime_seconds"] = *r.runtime_seconds;
    return j;
}

RansacReport ransac_report_from_json(const Json& j)
{
    constexpr std::string_view w = "ransac-report";
    expect_keys(j, w,
                {"schema", "cfg", "best_score", "per_object_inliers", "best_index", "evaluated", "degenerate",
                 "dataset_digest", "hypothesis"},
                {"runtime_seconds"});
    expect_schema(j, kRansacReportSchema);
    RansacReport r;
    const auto& c = j.at("cfg");
    expect_keys(c, "ransac-report.cfg",
                {"M", "xi", "seed", "delta_combo_cap", "origin_object", "axis_objects", "relocation_object",
                 "max_resamples"});
    r.cfg.M = get_u64(c, "M", "ransac-report.cfg");
    r.cfg.xi = get_double(c, "xi", "ransac-report.cfg");
    r.cfg.seed = get_u64(c, "seed", "ransac-report.cfg");
    r.cfg.delta_combo_cap = get_u64(c, "delta_combo_cap", "ransac-report.cfg");
    r.cfg.origin_object = as_small_int(c.at("origin_object"), "ransac-report.cfg.origin_object");
    const auto& ao = c.at("axis_objects");
    expect_keys(ao, "ransac-report.cfg.axis_objects", {"alpha", "sigma", "epsilon"});
    for (Axis a : kAxes)
        r.cfg.axis_objects[static_cast<std::size_t>(index(a))] =
            as_small_int(ao.at(std::string(axis_name(a))), "ransac-report.cfg.axis_objects");
    r.cfg.relocation_object = as_small_int(c.at("relocation_object"), "ransac-report.cfg.relocation_object");
    r.cfg.max_resamples = as_small_int(c.at("max_resamples"), "ransac-report.cfg.max_resamples");

    const auto& s = j.at("best_score");
    expect_keys(s, "ransac-report.best_score", {"t1", "t2", "t3", "t4"});
    auto& score = r.fit.detail.score;
    score.t1 = as_small_int(s.at("t1"), "ransac-report.best_score.t1");
    score.t2 = as_small_int(s.at("t2"), "ransac-report.best_score.t2");
    score.t3 = as_small_int(s.at("t3"), "ransac-report.best_score.t3");
    score.t4 = get_double(s, "t4", "ransac-report.best_score");
    const auto& per = j.at("per_object_inliers");
    if (!per.is_array() || per.size() != kObjectCount)
        throw FormatError("ransac-report.per_object_inliers: expected 8 integers");
    for (std::size_t i = 0; i < per.size(); ++i)
        r.fit.detail.per_object_inliers[i] = as_small_int(per[i], "ransac-report.per_object_inliers");
    r.fit.best_index = get_u64(j, "best_index", w);
    r.fit.evaluated = get_u64(j, "evaluated", w);
    r.fit.degenerate = get_u64(j, "degenerate", w);
    r.dataset_digest = get_string(j, "dataset_digest", w);

    const auto& h = j.at("hypothesis");
    expect_keys(h, "ransac-report.hypothesis", {"origin", "origin_ref", "basis", "sources"});
    auto& hyp = r.fit.hypothesis;
    hyp.origin = to_vector(h.at("origin"), "ransac-report.hypothesis.origin");
    hyp.origin_ref = grasp_ref_from(h.at("origin_ref"), "ransac-report.hypothesis.origin_ref");
    const auto& basis = h.at("basis");
    const auto& sources = h.at("sources");
    expect_keys(basis, "ransac-report.hypothesis.basis", {"alpha", "sigma", "epsilon"});
    expect_keys(sources, "ransac-report.hypothesis.sources", {"alpha", "sigma", "epsilon"});
    for (Axis a : kAxes) {
        const std::string name(axis_name(a));
        const auto k = static_cast<std::size_t>(index(a));
        hyp.basis[k] = to_vector(basis.at(name), "ransac-report.hypothesis.basis." + name, hyp.origin.size());
        hyp.sources[k] = grasp_ref_from(sources.at(name), "ransac-report.hypothesis.sources." + name);
    }
    if (j.contains("runtime_seconds"))
        r.runtime_seconds = get_double(j, "runtime_seconds", w);
    return r;
}

// trajectories

std::string trajectory_to_jsonl(const std::vector<TrajectoryPoint>& points)
{
    std::string out;
    for (const auto& p : points) {
        out += dump(Json{{"t", p.t}, {"q", from_vector(p.q)}}, -1);
        out += '\n';
    }
    return out;
}

std::vector<TrajectoryPoint> trajectory_from_jsonl(std::string_view text)
{
    std::vector<TrajectoryPoint> out;
    Eigen::Index dof = -1;
    for (const auto& [n, line] : split_lines(text)) {
        const std::string w = "trajectory line " + std::to_string(n);
        const Json j = parse(line, w);
        expect_keys(j, w, {"t", "q"});
        TrajectoryPoint p{get_double(j, "t", w), to_vector(j.at("q"), w + ".q", dof)};
        dof = p.q.size();
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<std::pair<std::size_t, std::string>> split_lines(std::string_view text)
{
    std::vector<std::pair<std::size_t, std::string>> out;
    std::size_t n = 0;
    while (!text.empty()) {
        const auto pos = text.find('\n');
        std::string_view line = text.substr(0, pos);
        text = pos == std::string_view::npos ? std::string_view{} : text.substr(pos + 1);
        ++n;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.find_first_not_of(" \t") != std::string_view::npos)
            out.emplace_back(n, line);
    }
    return out;
}

std::string validate_file(const fs::path& path)
{
    const std::string text = read_file(path);
    const auto lines = split_lines(text);
    if (lines.empty())
        throw FormatError(path.string() + ": empty file");
    // A JSON Lines file is recognised by its first line parsing on its own.
    Json first;
    bool single_line = false;
    try {
        first = Json::parse(lines.front().second);
        single_line = true;
    } catch (const Json::parse_error&) {
    }
    if (single_line && lines.size() > 1 && first.is_object()) {
        if (first.contains("schema") && first["schema"] == kDatasetSchema) {
            dataset_from_jsonl(text);
            return std::string(kDatasetSchema);
        }
        if (first.contains("t") && first.contains("q")) {
            trajectory_from_jsonl(text);
            return "trajectory";
        }
    }
    const Json j = parse(text, path.string());
    if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string()) {
        if (j.is_object() && j.contains("t") && j.contains("q")) {
            trajectory_from_jsonl(text);
            return "trajectory";
        }
        throw FormatError(path.string() + ": no schema field");
    }
    const auto schema = j["schema"].get<std::string>();
    if (schema == kHandModelSchema)
        require_valid(hand_model_from_json(j));
    else if (schema == kMappingSchema)
        mapping_from_json(j);
    else if (schema == kAssignmentSchema)
        assignment_from_json(j);
    else if (schema == kExtremaSchema)
        extrema_from_json(j);
    else if (schema == kCorrespondenceSchema)
        correspondence_from_json(j);
    else if (schema == kFingertipSchema)
        fingertip_config_from_json(j);
    else if (schema == kRansacReportSchema)
        ransac_report_from_json(j);
    else if (schema == kDatasetSchema)
        dataset_from_jsonl(text);
    else if (schema != kReplayReportSchema)
        throw FormatError(path.string() + ": unknown schema '" + schema + "'");
    return schema;
}

} // namespace teleop::io
