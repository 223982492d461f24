/* scenario.cpp */

#include "coalign/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace coalign {

namespace {

constexpr std::uint64_t kPoseStreamTag = 0x706f7365ULL;
constexpr std::uint64_t kDetectionStreamTag = 0x64657463ULL;

double degrees_to_radians(double deg)
{
    return deg * std::numbers::pi / 180.0;
}

/* One draw from the zero-mean distribution with scale `scale`; Gaussian
 * draws come from the caller's standard normal so consecutive calls
 * share its cached second variate */
double sample(NoiseKind kind, double scale, Rng& rng, std::normal_distribution<double>& normal)
{
    if (scale == 0.0)
        return 0.0;
    if (kind == NoiseKind::Gaussian)
        return scale * normal(rng);
    std::exponential_distribution<double> exp1(1.0);
    const double a = exp1(rng);
    const double b = exp1(rng);
    return scale * (a - b);
}

} /* namespace */

const AgentState& Scene::agent(AgentId id) const
{
    for (const auto& a : agents) {
        if (a.id == id)
            return a;
    }
    throw std::invalid_argument("agent " + std::to_string(id) + " not in scene");
}

void Scene::validate() const
{
    if (agents.empty())
        throw std::invalid_argument("scene needs at least one agent");
    if (!(extent.half_x > 0.0) || !(extent.half_y > 0.0))
        throw std::invalid_argument("scene extent must be positive");
    std::set<AgentId> agentIds;
    for (const auto& a : agents) {
        if (!agentIds.insert(a.id).second)
            throw std::invalid_argument("duplicate agent id " + std::to_string(a.id));
    }
    std::set<int> objectIds;
    for (const auto& o : objects) {
        if (!objectIds.insert(o.id).second)
            throw std::invalid_argument("duplicate object id " + std::to_string(o.id));
        if (!(o.length > 0.0) || !(o.width > 0.0) || !(o.height > 0.0))
            throw std::invalid_argument("object dimensions must be positive");
    }
}

void SceneConfig::validate() const
{
    if (num_agents < 1)
        throw std::invalid_argument("agents must be at least 1");
    if (num_objects < 0)
        throw std::invalid_argument("objects must be non-negative");
    if (!(area_x > 0.0) || !(area_y > 0.0))
        throw std::invalid_argument("area must be positive");
    if (!(min_object_gap >= 0.0))
        throw std::invalid_argument("min_object_gap must be non-negative");
    if (!(extent.half_x > 0.0) || !(extent.half_y > 0.0))
        throw std::invalid_argument("extent must be positive");
    if (max_placement_attempts < 1)
        throw std::invalid_argument("max_placement_attempts must be at least 1");
}

Scene generate_scene(const SceneConfig& config, std::uint64_t seed)
{
    config.validate();

    Rng rng(mix_seed(seed));
    std::uniform_real_distribution<double> ux(-0.5 * config.area_x, 0.5 * config.area_x);
    std::uniform_real_distribution<double> uy(-0.5 * config.area_y, 0.5 * config.area_y);
    std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> length(3.8, 5.0);
    std::uniform_real_distribution<double> width(1.6, 2.1);

    Scene scene;
    scene.seed = seed;
    scene.extent = config.extent;

    for (int i = 0; i < config.num_agents; ++i) {
        const double x = ux(rng);
        const double y = uy(rng);
        scene.agents.push_back({i, Pose2{x, y, heading(rng)}});
    }

    const double minGapSq = config.min_object_gap * config.min_object_gap;
    for (int k = 0; k < config.num_objects; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < config.max_placement_attempts && !placed; ++attempt) {
            const double x = ux(rng);
            const double y = uy(rng);
            bool clear = true;
            for (const auto& o : scene.objects) {
                const double dx = o.true_pose.x() - x;
                const double dy = o.true_pose.y() - y;
                if (dx * dx + dy * dy < minGapSq) {
                    clear = false;
                    break;
                }
            }
            if (!clear)
                continue;
            ObjectState obj;
            obj.id = k;
            obj.true_pose = Pose2{x, y, heading(rng)};
            obj.length = length(rng);
            obj.width = width(rng);
            scene.objects.push_back(obj);
            placed = true;
        }
        if (!placed)
            throw InfeasiblePacking("infeasible packing: could not place object " +
                                    std::to_string(k) + " of " +
                                    std::to_string(config.num_objects) + " with gap " +
                                    std::to_string(config.min_object_gap) + " m");
    }
    return scene;
}

void NoiseSpec::validate() const
{
    if (!(trans_scale >= 0.0) || !std::isfinite(trans_scale) ||
        !(rot_scale_deg >= 0.0) || !std::isfinite(rot_scale_deg))
        throw std::invalid_argument("noise scales must be finite and non-negative");
}

Pose2 corrupt_pose(const Pose2& p, const NoiseSpec& noise, Rng& rng)
{
    noise.validate();
    std::normal_distribution<double> normal(0.0, 1.0);
    const double dx = sample(noise.kind, noise.trans_scale, rng, normal);
    const double dy = sample(noise.kind, noise.trans_scale, rng, normal);
    const double dt = sample(noise.kind, degrees_to_radians(noise.rot_scale_deg), rng, normal);
    if (dx == 0.0 && dy == 0.0 && dt == 0.0)
        return p;
    return Pose2{p.x() + dx, p.y() + dy, p.theta() + dt};
}

void DetectorSpec::validate() const
{
    if (!(detection_range > 0.0))
        throw std::invalid_argument("detection_range must be positive");
    if (!(miss_rate >= 0.0 && miss_rate <= 1.0))
        throw std::invalid_argument("miss_rate must lie in [0, 1]");
    if (!(center_noise_sd >= 0.0) || !(heading_noise_sd >= 0.0))
        throw std::invalid_argument("detector noise sds must be non-negative");
    if (!(variance_calibration > 0.0))
        throw std::invalid_argument("variance_calibration must be positive");
    if (!(min_variance > 0.0))
        throw std::invalid_argument("min_variance must be positive");
    for (double c : noise_scale_choices) {
        if (!(c > 0.0))
            throw std::invalid_argument("noise_scale_choices must be positive");
    }
    if (!(confidence_base >= 0.0 && confidence_base <= 1.0) || !(confidence_decay >= 0.0))
        throw std::invalid_argument("confidence model parameters out of range");
}

std::vector<BoxDetection> detect(const Scene& scene, AgentId agent_id,
                                 const DetectorSpec& spec, Rng& rng)
{
    spec.validate();
    const Pose2 toLocal = inverse(scene.agent(agent_id).true_pose);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<BoxDetection> boxes;
    for (const auto& obj : scene.objects) {
        const double missDraw = unit(rng);
        double scale = 1.0;
        if (!spec.noise_scale_choices.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, spec.noise_scale_choices.size() - 1);
            scale = spec.noise_scale_choices[pick(rng)];
        }
        const double nx = normal(rng);
        const double ny = normal(rng);
        const double nt = normal(rng);

        const Pose2 rel = compose(toLocal, obj.true_pose);
        const double dist = std::hypot(rel.x(), rel.y());
        const bool inRange = dist <= spec.detection_range &&
                             std::abs(rel.x()) <= scene.extent.half_x &&
                             std::abs(rel.y()) <= scene.extent.half_y;
        if (!inRange || missDraw < spec.miss_rate)
            continue;

        const double centerSd = scale * spec.center_noise_sd;
        const double headingSd = scale * spec.heading_noise_sd;

        BoxDetection box;
        box.cx_hat = rel.x() + centerSd * nx;
        box.cy_hat = rel.y() + centerSd * ny;
        box.cz_hat = 0.5 * obj.height;
        box.length = obj.length;
        box.width = obj.width;
        box.height = obj.height;
        box.theta_hat = normalize_angle(rel.theta() + headingSd * nt);
        box.var_x = std::max(spec.variance_calibration * centerSd * centerSd, spec.min_variance);
        box.var_y = box.var_x;
        box.var_theta = std::max(spec.variance_calibration * headingSd * headingSd, spec.min_variance);
        box.confidence = std::clamp(spec.confidence_base - spec.confidence_decay * dist, 0.0, 1.0);
        box.agent_id = agent_id;
        boxes.push_back(box);
    }
    return boxes;
}

std::uint64_t mix_seed(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t pose_stream_seed(std::uint64_t seed, AgentId agent)
{
    return mix_seed(mix_seed(seed ^ kPoseStreamTag) + static_cast<std::uint64_t>(agent));
}

std::uint64_t detection_stream_seed(std::uint64_t seed, AgentId agent)
{
    return mix_seed(mix_seed(seed ^ kDetectionStreamTag) + static_cast<std::uint64_t>(agent));
}

std::vector<AgentMessage> make_messages(const Scene& scene, const NoiseSpec& noise,
                                        const DetectorSpec& det, std::uint64_t seed)
{
    scene.validate();
    noise.validate();
    det.validate();

    std::vector<AgentMessage> messages;
    for (const auto& agent : scene.agents) {
        Rng poseRng(pose_stream_seed(seed, agent.id));
        Rng detRng(detection_stream_seed(seed, agent.id));
        AgentMessage msg;
        msg.agent_id = agent.id;
        msg.measured_pose = corrupt_pose(agent.true_pose, noise, poseRng);
        msg.boxes = detect(scene, agent.id, det, detRng);
        messages.push_back(std::move(msg));
    }
    return messages;
}

std::string to_string(NoiseKind kind)
{
    return kind == NoiseKind::Gaussian ? "gaussian" : "laplace";
}

NoiseKind noise_kind_from_string(const std::string& name)
{
    if (name == "gaussian")
        return NoiseKind::Gaussian;
    if (name == "laplace")
        return NoiseKind::Laplace;
    throw std::invalid_argument("unknown noise kind '" + name + "' (expected gaussian|laplace)");
}

} /* namespace coalign */
