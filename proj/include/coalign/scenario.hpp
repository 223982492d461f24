/* scenario.hpp */

#ifndef COALIGN_SCENARIO_HPP
#define COALIGN_SCENARIO_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "coalign/geometry.hpp"
#include "coalign/posegraph.hpp"
#include "coalign/uncertainty.hpp"

namespace coalign {

using Rng = std::mt19937_64;

struct AgentState
{
    AgentId id = 0;
    Pose2 true_pose;
};

struct ObjectState
{
    int id = 0;
    Pose2 true_pose;
    double length = 4.5;
    double width = 1.8;
    double height = 1.6;

    OrientedBox2 footprint() const { return {true_pose, length, width}; }
};

/* Half-extents of the per-agent detection rectangle (agent frame) */
struct DetectionExtent
{
    double half_x = 140.0;
    double half_y = 40.0;
};

struct Scene
{
    std::uint64_t seed = 0;
    std::vector<AgentState> agents;
    std::vector<ObjectState> objects;
    DetectionExtent extent;

    const AgentState& agent(AgentId id) const;
    void validate() const;
};

struct SceneConfig
{
    int num_agents = 4;
    int num_objects = 10;
    double area_x = 100.0;
    double area_y = 100.0;
    double min_object_gap = 5.0;
    DetectionExtent extent;
    /* Placement attempts per object before packing is declared infeasible */
    int max_placement_attempts = 2000;

    void validate() const;
};

class InfeasiblePacking : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/* Deterministic in (config, seed); throws InfeasiblePacking */
Scene generate_scene(const SceneConfig& config, std::uint64_t seed);

enum class NoiseKind
{
    Gaussian,
    Laplace,
};

/* Pose noise; trans_scale in meters, rot_scale in degrees (sigma or b) */
struct NoiseSpec
{
    NoiseKind kind = NoiseKind::Gaussian;
    double trans_scale = 0.0;
    double rot_scale_deg = 0.0;

    void validate() const;
};

Pose2 corrupt_pose(const Pose2& p, const NoiseSpec& noise, Rng& rng);

struct DetectorSpec
{
    double detection_range = 100.0;
    double miss_rate = 0.0;
    double center_noise_sd = 0.2;
    double heading_noise_sd = 0.05;
    /* Reported variance = calibration * actual noise variance */
    double variance_calibration = 1.0;
    /* Reported variances never go below this (keeps Omega finite) */
    double min_variance = 1e-6;
    /* If non-empty, each box draws a multiplier for both noise sds from
     * this list (heteroscedastic detector) */
    std::vector<double> noise_scale_choices;
    double confidence_base = 0.95;
    double confidence_decay = 0.002;

    void validate() const;
};

/*
 * Boxes `agent_id` would report, in its own (true) frame, in scene
 * object order. Every object consumes the same number of draws whether
 * or not it ends up detected.
 */
std::vector<BoxDetection> detect(const Scene& scene, AgentId agent_id,
                                 const DetectorSpec& spec, Rng& rng);

/* Seeds for an agent's independent random substreams */
std::uint64_t pose_stream_seed(std::uint64_t seed, AgentId agent);
std::uint64_t detection_stream_seed(std::uint64_t seed, AgentId agent);

/* SplitMix64 finalizer; the basis of every derived seed */
std::uint64_t mix_seed(std::uint64_t x);

std::vector<AgentMessage> make_messages(const Scene& scene, const NoiseSpec& noise,
                                        const DetectorSpec& det, std::uint64_t seed);

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

} /* namespace coalign */

#endif /* COALIGN_SCENARIO_HPP */
