/* posegraph.hpp */

#ifndef COALIGN_POSEGRAPH_HPP
#define COALIGN_POSEGRAPH_HPP

#include <cstddef>
#include <map>
#include <vector>

#include "coalign/geometry.hpp"
#include "coalign/uncertainty.hpp"

namespace coalign {

/* What one agent broadcasts: its (noisy) global pose and its local boxes */
struct AgentMessage
{
    AgentId agent_id = 0;
    Pose2 measured_pose;
    std::vector<BoxDetection> boxes;
};

struct ClusterParams
{
    /* Boxes closer than this (BEV center distance, meters) are linked */
    double center_gap = 2.0;
};

/* A box already warped into the common (measured-pose) global frame */
struct GlobalBox
{
    AgentId agent_id = 0;
    BoxDetection box;
};

using Cluster = std::vector<std::size_t>;

/*
 * Groups boxes that describe the same object. Links are pairs closer
 * than `center_gap`; they are merged nearest-first (ties: higher summed
 * confidence, then lower indices), and a merge is refused when the two
 * groups already hold boxes from a common agent. Without same-agent
 * conflicts the result is exactly the connected components of the link
 * graph. Members are sorted, clusters ordered by their smallest member.
 */
std::vector<Cluster> cluster_boxes(const std::vector<GlobalBox>& boxes,
                                   const ClusterParams& params = {});

/* A cluster member: the box in its agent's frame and that agent's pose */
struct ClusterMember
{
    BoxDetection box;
    Pose2 owner_pose;
};

/*
 * Initial object pose: information-weighted mean of the members' global
 * centers (local covariances rotated into the global frame) and the
 * 1/var_theta weighted circular mean of their global headings.
 */
Pose2 init_object_pose(const std::vector<ClusterMember>& members);

struct AgentNode
{
    AgentId id = 0;
    Pose2 pose;
    bool fixed = false;
};

struct ObjectNode
{
    int id = 0;
    Pose2 pose;
};

struct PoseGraphEdge
{
    std::size_t agent_index = 0;
    std::size_t object_index = 0;
    Pose2 measurement;
    InfoMatrix3 info = InfoMatrix3::unit();
};

struct PoseGraph
{
    std::vector<AgentNode> agent_nodes;
    std::vector<ObjectNode> object_nodes;
    std::vector<PoseGraphEdge> edges;

    std::size_t ego_index() const;
    /* Throws std::logic_error if a structural invariant is broken */
    void check_invariants() const;
};

enum class EdgeWeighting
{
    Uncertainty,  // info = diag(1/var) from each box
    Identity,     // every edge gets unit information
};

/*
 * Builds the agent-object graph seen by `ego_id`. Agents are ordered by
 * id; boxes are warped with the sender's measured pose, clustered, and
 * clusters observed by fewer than two agents are dropped.
 * Throws std::invalid_argument on an unknown ego or duplicate agent ids.
 */
PoseGraph build_pose_graph(const std::vector<AgentMessage>& messages, AgentId ego_id,
                           const ClusterParams& params = {},
                           EdgeWeighting weighting = EdgeWeighting::Uncertainty);

struct SolverParams
{
    int max_iterations = 1000;
    double initial_damping = 1e-4;
    double damping_up = 10.0;
    double damping_down = 0.5;
    /* Stop when an accepted step lowers the objective by less than this
     * fraction of its current value */
    double convergence_tol = 1e-9;
    /* Stop when max |J^T Omega e| falls below this */
    double gradient_tol = 1e-10;

    void validate() const;
};

struct OptimizeResult
{
    std::vector<Pose2> agent_poses;
    std::vector<Pose2> object_poses;
    double initial_objective = 0.0;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    /* Objective at the start and after every accepted step */
    std::vector<double> objective_trace;
};

/* sum over edges of e^T Omega e */
double graph_objective(const PoseGraph& graph,
                       const std::vector<Pose2>& agent_poses,
                       const std::vector<Pose2>& object_poses);

/*
 * Levenberg-Marquardt on the pose-consistency objective with the ego
 * node held fixed. Any agent not connected to the ego through shared
 * objects has its own connected component anchored at its lowest-id
 * agent, which also stays at its measured pose.
 */
OptimizeResult optimize(const PoseGraph& graph, const SolverParams& params = {});

/* xi'_{j->ego} = xi'_ego^-1 * xi'_j for every agent */
std::map<AgentId, Pose2> relative_poses(const std::map<AgentId, Pose2>& agent_poses,
                                        AgentId ego_id);

std::map<AgentId, Pose2> agent_pose_map(const PoseGraph& graph,
                                        const std::vector<Pose2>& agent_poses);

} /* namespace coalign */

#endif /* COALIGN_POSEGRAPH_HPP */
