/* serialization.hpp */

#ifndef COALIGN_SERIALIZATION_HPP
#define COALIGN_SERIALIZATION_HPP

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coalign/benchmark.hpp"
#include "coalign/posegraph.hpp"
#include "coalign/scenario.hpp"

namespace coalign {

using Json = nlohmann::ordered_json;

/* Malformed document; `where` is a JSON pointer to the offending value */
class SchemaError : public std::runtime_error
{
public:
    SchemaError(const std::string& where, const std::string& what) :
        std::runtime_error(where + ": " + what), mWhere(where) {}
    const std::string& where() const { return mWhere; }

private:
    std::string mWhere;
};

/*
 * Poses are [x, y, theta_rad]. Boxes are the ten-field array
 * [x, y, z, l, w, h, theta, var_x, var_y, var_theta] with confidences
 * stored alongside in a parallel array.
 */
Json pose_to_json(const Pose2& p);
Pose2 pose_from_json(const Json& j, const std::string& where);

Json scene_to_json(const Scene& scene);
Scene scene_from_json(const Json& j);

Json messages_to_json(const std::vector<AgentMessage>& messages);
std::vector<AgentMessage> messages_from_json(const Json& j);

/* Result of one `solve` run */
struct SolveOutput
{
    std::uint64_t seed = 0;
    AgentId ego_id = 0;
    NoiseSpec noise;
    std::vector<AgentMessage> messages;
    PoseGraph graph;
    OptimizeResult result;
    std::map<AgentId, Pose2> corrected_relative;
    std::map<AgentId, Pose2> measured_relative;
};

/* Runs the solve pipeline: messages -> graph -> LM -> relative poses */
SolveOutput solve_scene(const Scene& scene, const NoiseSpec& noise,
                        const DetectorSpec& detector, const ClusterParams& cluster,
                        const SolverParams& solver, AgentId ego_id, std::uint64_t seed);

Json solve_output_to_json(const SolveOutput& out);

Json report_to_json(const BenchmarkReport& report);

/* Columns: noise_trans,noise_rot_deg,metric,bin_left,bin_right,density,series */
std::string report_histograms_csv(const BenchmarkReport& report);

Json read_json_file(const std::filesystem::path& path);
/* Writes `text` verbatim; throws std::runtime_error naming the path */
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string dump_json(const Json& j);

} /* namespace coalign */

#endif /* COALIGN_SERIALIZATION_HPP */
