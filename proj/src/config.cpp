/* config.cpp */

#include "coalign/config.hpp"

#include <cmath>
#include <functional>
#include <map>

namespace coalign {

namespace {

double number(const std::string& key, const Json& v)
{
    if (!v.is_number())
        throw ConfigError(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d))
        throw ConfigError(key, "must be finite");
    return d;
}

double positive(const std::string& key, const Json& v)
{
    const double d = number(key, v);
    if (!(d > 0.0))
        throw ConfigError(key, "must be positive");
    return d;
}

double non_negative(const std::string& key, const Json& v)
{
    const double d = number(key, v);
    if (!(d >= 0.0))
        throw ConfigError(key, "must be non-negative");
    return d;
}

double unit_interval(const std::string& key, const Json& v)
{
    const double d = number(key, v);
    if (!(d >= 0.0 && d <= 1.0))
        throw ConfigError(key, "must lie in [0, 1]");
    return d;
}

long long integer(const std::string& key, const Json& v, long long min)
{
    if (!v.is_number_integer())
        throw ConfigError(key, "expected an integer");
    const auto i = v.get<long long>();
    if (i < min)
        throw ConfigError(key, "must be at least " + std::to_string(min));
    return i;
}

NoiseLevel noise_pair(const std::string& key, const Json& v)
{
    if (!v.is_array() || v.size() != 2)
        throw ConfigError(key, "expected [trans_m, rot_deg]");
    return {non_negative(key, v[0]), non_negative(key, v[1])};
}

std::vector<double> number_list(const std::string& key, const Json& v,
                                 const std::function<double(const std::string&, const Json&)>& each)
{
    if (!v.is_array())
        throw ConfigError(key, "expected an array");
    std::vector<double> out;
    for (const auto& e : v)
        out.push_back(each(key, e));
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const Json&)>;

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = {
        {"agents", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.scene.num_agents = static_cast<int>(integer(k, v, 1)); }},
        {"objects", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.scene.num_objects = static_cast<int>(integer(k, v, 0)); }},
        {"area_x", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.scene.area_x = positive(k, v); }},
        {"area_y", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.scene.area_y = positive(k, v); }},
        {"min_object_gap", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.scene.min_object_gap = non_negative(k, v); }},
        {"max_placement_attempts", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.scene.max_placement_attempts = static_cast<int>(integer(k, v, 1)); }},
        {"extent_x", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.scene.extent.half_x = positive(k, v); }},
        {"extent_y", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.scene.extent.half_y = positive(k, v); }},
        {"noise_kind", [](RunConfig& c, const std::string& k, const Json& v) {
             if (!v.is_string())
                 throw ConfigError(k, "expected \"gaussian\" or \"laplace\"");
             try {
                 c.benchmark.noise_kind = noise_kind_from_string(v.get<std::string>());
             } catch (const std::invalid_argument& e) {
                 throw ConfigError(k, e.what());
             } }},
        {"noise_levels", [](RunConfig& c, const std::string& k, const Json& v) {
             if (!v.is_array() || v.empty())
                 throw ConfigError(k, "expected a non-empty array of [trans_m, rot_deg]");
             c.benchmark.noise_levels.clear();
             for (const auto& e : v)
                 c.benchmark.noise_levels.push_back(noise_pair(k, e)); }},
        {"solve_noise", [](RunConfig& c, const std::string& k, const Json& v) {
             c.solve_noise = noise_pair(k, v); }},
        {"detection_range", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.detector.detection_range = positive(k, v); }},
        {"miss_rate", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.detector.miss_rate = unit_interval(k, v); }},
        {"center_noise_sd", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.detector.center_noise_sd = non_negative(k, v); }},
        {"heading_noise_sd", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.detector.heading_noise_sd = non_negative(k, v); }},
        {"variance_calibration", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.detector.variance_calibration = positive(k, v); }},
        {"min_variance", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.detector.min_variance = positive(k, v); }},
        {"noise_scale_choices", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.detector.noise_scale_choices = number_list(k, v, positive); }},
        {"confidence_base", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.detector.confidence_base = unit_interval(k, v); }},
        {"confidence_decay", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.detector.confidence_decay = non_negative(k, v); }},
        {"max_iterations", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.solver.max_iterations = static_cast<int>(integer(k, v, 1)); }},
        {"initial_damping", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.solver.initial_damping = positive(k, v); }},
        {"damping_up", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.solver.damping_up = positive(k, v);
             if (!(c.benchmark.solver.damping_up > 1.0))
                 throw ConfigError(k, "must exceed 1"); }},
        {"damping_down", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.solver.damping_down = positive(k, v);
             if (!(c.benchmark.solver.damping_down < 1.0))
                 throw ConfigError(k, "must be below 1"); }},
        {"convergence_tol", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.solver.convergence_tol = positive(k, v); }},
        {"gradient_tol", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.solver.gradient_tol = positive(k, v); }},
        {"center_gap", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.cluster.center_gap = positive(k, v); }},
        {"nms_iou", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.nms_iou = positive(k, v);
             if (c.benchmark.nms_iou > 1.0)
                 throw ConfigError(k, "must lie in (0, 1]"); }},
        {"scenes", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.scenes = static_cast<int>(integer(k, v, 1)); }},
        {"seed", [](RunConfig& c, const std::string& k, const Json& v) {
             c.seed = static_cast<std::uint64_t>(integer(k, v, 0)); }},
        {"ego_id", [](RunConfig& c, const std::string& k, const Json& v) {
             c.ego_id = static_cast<AgentId>(integer(k, v, 0)); }},
        {"ap_thresholds", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.ap_thresholds = number_list(k, v, [](const std::string& key, const Json& e) {
                 const double t = number(key, e);
                 if (!(t > 0.0 && t < 1.0))
                     throw ConfigError(key, "thresholds must lie in (0, 1)");
                 return t;
             }); }},
        {"ap_interpolation", [](RunConfig& c, const std::string& k, const Json& v) {
             const std::string s = v.is_string() ? v.get<std::string>() : "";
             if (s == "all_point")
                 c.benchmark.ap_interpolation = ApInterpolation::AllPoint;
             else if (s == "eleven_point")
                 c.benchmark.ap_interpolation = ApInterpolation::ElevenPoint;
             else
                 throw ConfigError(k, "expected \"all_point\" or \"eleven_point\""); }},
        {"include_pair_errors", [](RunConfig& c, const std::string& k, const Json& v) {
             if (!v.is_boolean())
                 throw ConfigError(k, "expected a boolean");
             c.benchmark.include_pair_errors = v.get<bool>(); }},
        {"threads", [](RunConfig& c, const std::string& k, const Json& v) {
             c.benchmark.threads = static_cast<int>(integer(k, v, 1)); }},
    };
    return table;
}

} /* namespace */

RunConfig run_config_from_json(const Json& j)
{
    if (!j.is_object())
        throw ConfigError("<root>", "expected a JSON object");
    RunConfig config;
    for (const auto& [key, value] : j.items()) {
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError(key, "unknown field");
        it->second(config, key, value);
    }
    try {
        config.benchmark.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("<config>", e.what());
    }
    return config;
}

Json run_config_to_json(const RunConfig& config)
{
    const BenchmarkConfig& b = config.benchmark;
    Json levels = Json::array();
    for (const auto& l : b.noise_levels)
        levels.push_back(Json::array({l.trans, l.rot_deg}));

    Json j{{"agents", b.scene.num_agents},
           {"objects", b.scene.num_objects},
           {"area_x", b.scene.area_x},
           {"area_y", b.scene.area_y},
           {"min_object_gap", b.scene.min_object_gap},
           {"max_placement_attempts", b.scene.max_placement_attempts},
           {"extent_x", b.scene.extent.half_x},
           {"extent_y", b.scene.extent.half_y},
           {"noise_kind", to_string(b.noise_kind)},
           {"noise_levels", levels},
           {"solve_noise", Json::array({config.solve_noise.trans, config.solve_noise.rot_deg})},
           {"detection_range", b.detector.detection_range},
           {"miss_rate", b.detector.miss_rate},
           {"center_noise_sd", b.detector.center_noise_sd},
           {"heading_noise_sd", b.detector.heading_noise_sd},
           {"variance_calibration", b.detector.variance_calibration},
           {"min_variance", b.detector.min_variance},
           {"noise_scale_choices", b.detector.noise_scale_choices},
           {"confidence_base", b.detector.confidence_base},
           {"confidence_decay", b.detector.confidence_decay},
           {"max_iterations", b.solver.max_iterations},
           {"initial_damping", b.solver.initial_damping},
           {"damping_up", b.solver.damping_up},
           {"damping_down", b.solver.damping_down},
           {"convergence_tol", b.solver.convergence_tol},
           {"gradient_tol", b.solver.gradient_tol},
           {"center_gap", b.cluster.center_gap},
           {"nms_iou", b.nms_iou},
           {"scenes", b.scenes},
           {"ego_id", config.ego_id},
           {"ap_thresholds", b.ap_thresholds},
           {"ap_interpolation", b.ap_interpolation == ApInterpolation::AllPoint ? "all_point"
                                                                                 : "eleven_point"},
           {"include_pair_errors", b.include_pair_errors},
           {"threads", b.threads}};
    if (config.seed)
        j["seed"] = *config.seed;
    return j;
}

} /* namespace coalign */
