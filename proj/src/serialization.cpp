/* serialization.cpp */

#include "coalign/serialization.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace coalign {

namespace {

double number_at(const Json& j, const std::string& where)
{
    if (!j.is_number())
        throw SchemaError(where, "expected a number");
    return j.get<double>();
}

const Json& member(const Json& obj, const char* key, const std::string& where)
{
    if (!obj.is_object())
        throw SchemaError(where, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end())
        throw SchemaError(where, std::string("missing field '") + key + "'");
    return *it;
}

const Json& array_at(const Json& j, const std::string& where)
{
    if (!j.is_array())
        throw SchemaError(where, "expected an array");
    return j;
}

int int_at(const Json& j, const std::string& where)
{
    if (!j.is_number_integer())
        throw SchemaError(where, "expected an integer");
    return j.get<int>();
}

Json quantiles_json(const std::optional<Quantiles>& q)
{
    if (!q)
        return nullptr;
    return Json{{"p25", q->p25}, {"median", q->median}, {"p75", q->p75}};
}

Json optional_json(const std::optional<double>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

std::string threshold_key(double t)
{
    std::ostringstream os;
    os << t;
    return os.str();
}

} /* namespace */

Json pose_to_json(const Pose2& p)
{
    return Json::array({p.x(), p.y(), p.theta()});
}

Pose2 pose_from_json(const Json& j, const std::string& where)
{
    if (!j.is_array() || j.size() != 3)
        throw SchemaError(where, "expected a pose [x, y, theta]");
    try {
        return Pose2{number_at(j[0], where + "/0"), number_at(j[1], where + "/1"),
                     number_at(j[2], where + "/2")};
    } catch (const std::invalid_argument& e) {
        throw SchemaError(where, e.what());
    }
}

Json scene_to_json(const Scene& scene)
{
    Json agents = Json::array();
    for (const auto& a : scene.agents)
        agents.push_back({{"id", a.id}, {"pose", pose_to_json(a.true_pose)}});
    Json objects = Json::array();
    for (const auto& o : scene.objects)
        objects.push_back({{"id", o.id},
                           {"pose", pose_to_json(o.true_pose)},
                           {"length", o.length},
                           {"width", o.width},
                           {"height", o.height}});
    return Json{{"seed", scene.seed},
                {"extent", Json::array({scene.extent.half_x, scene.extent.half_y})},
                {"agents", agents},
                {"objects", objects}};
}

Scene scene_from_json(const Json& j)
{
    Scene scene;
    const Json& seed = member(j, "seed", "");
    if (!seed.is_number_unsigned() && !seed.is_number_integer())
        throw SchemaError("/seed", "expected a non-negative integer");
    scene.seed = seed.get<std::uint64_t>();

    const Json& extent = array_at(member(j, "extent", ""), "/extent");
    if (extent.size() != 2)
        throw SchemaError("/extent", "expected [half_x, half_y]");
    scene.extent = {number_at(extent[0], "/extent/0"), number_at(extent[1], "/extent/1")};

    const Json& agents = array_at(member(j, "agents", ""), "/agents");
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const std::string at = "/agents/" + std::to_string(i);
        scene.agents.push_back({int_at(member(agents[i], "id", at), at + "/id"),
                                pose_from_json(member(agents[i], "pose", at), at + "/pose")});
    }
    const Json& objects = array_at(member(j, "objects", ""), "/objects");
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const std::string at = "/objects/" + std::to_string(i);
        ObjectState o;
        o.id = int_at(member(objects[i], "id", at), at + "/id");
        o.true_pose = pose_from_json(member(objects[i], "pose", at), at + "/pose");
        o.length = number_at(member(objects[i], "length", at), at + "/length");
        o.width = number_at(member(objects[i], "width", at), at + "/width");
        o.height = number_at(member(objects[i], "height", at), at + "/height");
        scene.objects.push_back(o);
    }
    try {
        scene.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError("", e.what());
    }
    return scene;
}

Json messages_to_json(const std::vector<AgentMessage>& messages)
{
    Json out = Json::array();
    for (const auto& m : messages) {
        Json boxes = Json::array();
        Json confidences = Json::array();
        for (const auto& b : m.boxes) {
            const auto p = b.parameters();
            boxes.push_back(Json(std::vector<double>(p.begin(), p.end())));
            confidences.push_back(b.confidence);
        }
        out.push_back({{"agent_id", m.agent_id},
                       {"measured_pose", pose_to_json(m.measured_pose)},
                       {"boxes", boxes},
                       {"confidences", confidences}});
    }
    return out;
}

std::vector<AgentMessage> messages_from_json(const Json& j)
{
    array_at(j, "");
    std::vector<AgentMessage> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string at = "/" + std::to_string(i);
        AgentMessage m;
        m.agent_id = int_at(member(j[i], "agent_id", at), at + "/agent_id");
        m.measured_pose = pose_from_json(member(j[i], "measured_pose", at), at + "/measured_pose");
        const Json& boxes = array_at(member(j[i], "boxes", at), at + "/boxes");
        const Json& conf = array_at(member(j[i], "confidences", at), at + "/confidences");
        if (conf.size() != boxes.size())
            throw SchemaError(at + "/confidences", "length differs from boxes");
        for (std::size_t b = 0; b < boxes.size(); ++b) {
            const std::string bat = at + "/boxes/" + std::to_string(b);
            if (!boxes[b].is_array() || boxes[b].size() != 10)
                throw SchemaError(bat, "expected a 10-field box array");
            std::array<double, 10> params{};
            for (std::size_t f = 0; f < 10; ++f)
                params[f] = number_at(boxes[b][f], bat + "/" + std::to_string(f));
            try {
                m.boxes.push_back(BoxDetection::from_parameters(
                    params, number_at(conf[b], at + "/confidences/" + std::to_string(b)),
                    m.agent_id));
            } catch (const std::invalid_argument& e) {
                throw SchemaError(bat, e.what());
            }
        }
        out.push_back(std::move(m));
    }
    return out;
}

SolveOutput solve_scene(const Scene& scene, const NoiseSpec& noise,
                        const DetectorSpec& detector, const ClusterParams& cluster,
                        const SolverParams& solver, AgentId ego_id, std::uint64_t seed)
{
    SolveOutput out;
    out.seed = seed;
    out.ego_id = ego_id;
    out.noise = noise;
    scene.agent(ego_id);
    out.messages = make_messages(scene, noise, detector, seed);
    out.graph = build_pose_graph(out.messages, ego_id, cluster);
    out.result = optimize(out.graph, solver);
    out.corrected_relative = relative_poses(agent_pose_map(out.graph, out.result.agent_poses), ego_id);

    std::map<AgentId, Pose2> measured;
    for (const auto& m : out.messages)
        measured.emplace(m.agent_id, m.measured_pose);
    out.measured_relative = relative_poses(measured, ego_id);
    return out;
}

Json solve_output_to_json(const SolveOutput& out)
{
    Json measured = Json::array();
    for (const auto& m : out.messages)
        measured.push_back({{"agent_id", m.agent_id}, {"pose", pose_to_json(m.measured_pose)}});

    Json corrected = Json::array();
    for (std::size_t i = 0; i < out.graph.agent_nodes.size(); ++i)
        corrected.push_back({{"agent_id", out.graph.agent_nodes[i].id},
                             {"pose", pose_to_json(out.result.agent_poses[i])}});

    auto relative = [](const std::map<AgentId, Pose2>& rel) {
        Json arr = Json::array();
        for (const auto& [id, p] : rel)
            arr.push_back({{"agent_id", id}, {"pose", pose_to_json(p)}});
        return arr;
    };

    Json objects = Json::array();
    for (std::size_t k = 0; k < out.graph.object_nodes.size(); ++k)
        objects.push_back({{"object_id", out.graph.object_nodes[k].id},
                           {"pose", pose_to_json(out.result.object_poses[k])}});

    return Json{{"seed", out.seed},
                {"ego_id", out.ego_id},
                {"noise", {{"kind", to_string(out.noise.kind)},
                           {"trans", out.noise.trans_scale},
                           {"rot_deg", out.noise.rot_scale_deg}}},
                {"graph", {{"agents", out.graph.agent_nodes.size()},
                           {"objects", out.graph.object_nodes.size()},
                           {"edges", out.graph.edges.size()}}},
                {"measured_poses", measured},
                {"corrected_poses", corrected},
                {"measured_relative_poses", relative(out.measured_relative)},
                {"corrected_relative_poses", relative(out.corrected_relative)},
                {"object_poses", objects},
                {"objective_trace", out.result.objective_trace},
                {"initial_objective", out.result.initial_objective},
                {"final_objective", out.result.objective},
                {"iterations", out.result.iterations},
                {"converged", out.result.converged},
                {"messages", messages_to_json(out.messages)}};
}

Json report_to_json(const BenchmarkReport& report)
{
    const BenchmarkConfig& c = report.config;
    Json levels = Json::array();
    for (const auto& lr : report.levels) {
        Json series = Json::object();
        for (Series s : kAllSeries) {
            const int i = static_cast<int>(s);
            Json entry{{"trans_quantiles", quantiles_json(lr.trans_quantiles[i])},
                       {"rot_quantiles", quantiles_json(lr.rot_quantiles[i])}};
            if (c.include_pair_errors) {
                entry["trans_errors"] = lr.errors[i].trans;
                entry["rot_errors_deg"] = lr.errors[i].rot_deg;
            }
            series[series_name(s)] = entry;
        }

        Json reduction = Json::object();
        const std::array<Series, 2> afters{Series::AfterGraph, Series::AfterGraphUncertainty};
        for (std::size_t a = 0; a < 2; ++a) {
            const RatioSummary& r = lr.median_reduction[a];
            reduction[series_name(afters[a])] = {{"trans", optional_json(r.trans)},
                                                 {"rot", optional_json(r.rot)},
                                                 {"degenerate", r.degenerate}};
        }

        Json ap = Json::object();
        for (std::size_t t = 0; t < c.ap_thresholds.size(); ++t)
            ap[threshold_key(c.ap_thresholds[t])] = {{"uncorrected", lr.ap[t][0]},
                                                     {"graph", lr.ap[t][1]},
                                                     {"graph_uncertainty", lr.ap[t][2]}};

        levels.push_back({{"noise", {{"kind", to_string(lr.noise.kind)},
                                     {"trans", lr.noise.trans_scale},
                                     {"rot_deg", lr.noise.rot_scale_deg}}},
                          {"scenes_completed", lr.scenes_completed},
                          {"series", series},
                          {"median_reduction_ratio", reduction},
                          {"ap", ap},
                          {"solver", {{"total_iterations", lr.total_iterations},
                                      {"not_converged", lr.not_converged},
                                      {"monotone_violations", lr.monotone_violations},
                                      {"ego_moved", lr.ego_moved}}}});
    }

    Json skipped = Json::array();
    for (const auto& s : report.skipped)
        skipped.push_back({{"level", s.level_index}, {"scene", s.scene_index}, {"reason", s.reason}});

    Json thresholds = c.ap_thresholds;
    return Json{{"metadata", {{"seed", c.seed},
                              {"scenes", c.scenes},
                              {"agents", c.scene.num_agents},
                              {"objects", c.scene.num_objects},
                              {"area", Json::array({c.scene.area_x, c.scene.area_y})},
                              {"noise_kind", to_string(c.noise_kind)},
                              {"ap_thresholds", thresholds},
                              {"ap_interpolation", c.ap_interpolation == ApInterpolation::AllPoint
                                                       ? "all_point" : "eleven_point"},
                              {"empty_ap_convention", "no ground truth and no detections scores 1"},
                              {"rotation_units", "degrees"},
                              {"translation_error", "euclidean norm"}}},
                {"levels", levels},
                {"skipped", skipped},
                {"status", report.clean() ? "clean" : "partial"}};
}

std::string report_histograms_csv(const BenchmarkReport& report)
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "noise_trans,noise_rot_deg,metric,bin_left,bin_right,density,series\n";
    for (const auto& lr : report.levels) {
        for (const char* metric : {"trans", "rot"}) {
            const bool trans = std::string(metric) == "trans";
            for (Series s : kAllSeries) {
                const auto& errs = lr.errors[static_cast<int>(s)];
                const Histogram h = make_histogram(trans ? errs.trans : errs.rot_deg, 0.0,
                                                   trans ? kTransHistogramMax : kRotHistogramMax,
                                                   kHistogramBins);
                for (std::size_t b = 0; b < h.density.size(); ++b) {
                    os << lr.noise.trans_scale << ',' << lr.noise.rot_scale_deg << ',' << metric
                       << ',' << h.lower + b * h.bin_width() << ','
                       << h.lower + (b + 1) * h.bin_width() << ',' << h.density[b] << ','
                       << series_name(s) << '\n';
                }
            }
        }
    }
    return os.str();
}

Json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error(path.string() + ": cannot open for reading");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw SchemaError(path.string(), e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error(path.string() + ": cannot open for writing");
    out << text;
    if (!out)
        throw std::runtime_error(path.string() + ": write failed");
}

std::string dump_json(const Json& j)
{
    return j.dump(2) + "\n";
}

} /* namespace coalign */
