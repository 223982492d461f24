/* posegraph.cpp */

#include "coalign/posegraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace coalign {

namespace {

class DisjointSets
{
public:
    explicit DisjointSets(std::size_t n) : mParent(n)
    {
        std::iota(mParent.begin(), mParent.end(), std::size_t{0});
    }

    std::size_t find(std::size_t i)
    {
        while (mParent[i] != i) {
            mParent[i] = mParent[mParent[i]];
            i = mParent[i];
        }
        return i;
    }

    /* Keeps the smaller root so representatives are deterministic */
    std::size_t unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a == b)
            return a;
        if (b < a)
            std::swap(a, b);
        mParent[b] = a;
        return a;
    }

private:
    std::vector<std::size_t> mParent;
};

struct Link
{
    double distance;
    double confidence;
    std::size_t i;
    std::size_t j;
};

bool disjoint(const std::set<AgentId>& a, const std::set<AgentId>& b)
{
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia == *ib)
            return false;
        if (*ia < *ib)
            ++ia;
        else
            ++ib;
    }
    return true;
}

/* Index of each agent's anchor: the ego for its own component, the
 * lowest-index agent for every other connected component */
std::vector<bool> anchored_agents(const PoseGraph& graph)
{
    const std::size_t numAgents = graph.agent_nodes.size();
    DisjointSets sets(numAgents + graph.object_nodes.size());
    for (const auto& e : graph.edges)
        sets.unite(e.agent_index, numAgents + e.object_index);

    const std::size_t ego = graph.ego_index();
    const std::size_t egoRoot = sets.find(ego);

    std::vector<bool> anchored(numAgents, false);
    std::set<std::size_t> seenRoots{egoRoot};
    anchored[ego] = true;
    for (std::size_t a = 0; a < numAgents; ++a) {
        if (seenRoots.insert(sets.find(a)).second)
            anchored[a] = true;
    }
    return anchored;
}

} /* namespace */

std::vector<Cluster> cluster_boxes(const std::vector<GlobalBox>& boxes,
                                   const ClusterParams& params)
{
    if (!(params.center_gap > 0.0))
        throw std::invalid_argument("center_gap must be positive");

    const std::size_t n = boxes.size();
    std::vector<Link> links;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = std::hypot(boxes[i].box.cx_hat - boxes[j].box.cx_hat,
                                        boxes[i].box.cy_hat - boxes[j].box.cy_hat);
            if (d < params.center_gap)
                links.push_back({d, boxes[i].box.confidence + boxes[j].box.confidence, i, j});
        }
    }
    std::sort(links.begin(), links.end(), [](const Link& a, const Link& b) {
        return std::tie(a.distance, b.confidence, a.i, a.j) <
               std::tie(b.distance, a.confidence, b.i, b.j);
    });

    DisjointSets sets(n);
    std::vector<std::set<AgentId>> agents(n);
    for (std::size_t i = 0; i < n; ++i)
        agents[i].insert(boxes[i].agent_id);

    for (const auto& link : links) {
        const std::size_t ri = sets.find(link.i);
        const std::size_t rj = sets.find(link.j);
        if (ri == rj || !disjoint(agents[ri], agents[rj]))
            continue;
        const std::size_t root = sets.unite(ri, rj);
        const std::size_t other = root == ri ? rj : ri;
        agents[root].insert(agents[other].begin(), agents[other].end());
        agents[other].clear();
    }

    std::vector<Cluster> clusters;
    std::vector<std::size_t> slot(n, std::numeric_limits<std::size_t>::max());
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = sets.find(i);
        if (slot[root] == std::numeric_limits<std::size_t>::max()) {
            slot[root] = clusters.size();
            clusters.emplace_back();
        }
        clusters[slot[root]].push_back(i);
    }
    return clusters;
}

Pose2 init_object_pose(const std::vector<ClusterMember>& members)
{
    if (members.empty())
        throw std::invalid_argument("cannot initialize an object from an empty cluster");

    Eigen::Matrix2d infoSum = Eigen::Matrix2d::Zero();
    Eigen::Vector2d weighted = Eigen::Vector2d::Zero();
    double sinSum = 0.0;
    double cosSum = 0.0;

    for (const auto& m : members) {
        const Pose2 global = compose(m.owner_pose, m.box.pose());
        const Eigen::Matrix2d r = m.owner_pose.rotation();
        const Eigen::Matrix2d localInfo =
            Eigen::Vector2d(1.0 / m.box.var_x, 1.0 / m.box.var_y).asDiagonal();
        const Eigen::Matrix2d info = r * localInfo * r.transpose();
        infoSum += info;
        weighted += info * global.translation();

        const double w = 1.0 / m.box.var_theta;
        sinSum += w * std::sin(global.theta());
        cosSum += w * std::cos(global.theta());
    }

    const Eigen::Vector2d center = infoSum.ldlt().solve(weighted);
    return Pose2{center.x(), center.y(), std::atan2(sinSum, cosSum)};
}

std::size_t PoseGraph::ego_index() const
{
    for (std::size_t i = 0; i < agent_nodes.size(); ++i) {
        if (agent_nodes[i].fixed)
            return i;
    }
    throw std::logic_error("pose graph has no fixed ego node");
}

void PoseGraph::check_invariants() const
{
    const auto fixedCount = std::count_if(agent_nodes.begin(), agent_nodes.end(),
                                          [](const AgentNode& a) { return a.fixed; });
    if (fixedCount != 1)
        throw std::logic_error("pose graph must have exactly one fixed agent");

    std::vector<std::set<std::size_t>> observers(object_nodes.size());
    for (const auto& e : edges) {
        if (e.agent_index >= agent_nodes.size() || e.object_index >= object_nodes.size())
            throw std::logic_error("pose graph edge references a missing node");
        if (!observers[e.object_index].insert(e.agent_index).second)
            throw std::logic_error("agent observes the same object twice");
    }
    for (const auto& o : observers) {
        if (o.size() < 2)
            throw std::logic_error("object node with degree below 2");
    }
}

PoseGraph build_pose_graph(const std::vector<AgentMessage>& messages, AgentId ego_id,
                           const ClusterParams& params, EdgeWeighting weighting)
{
    if (messages.empty())
        throw std::invalid_argument("at least one agent message is required");

    std::vector<const AgentMessage*> ordered;
    ordered.reserve(messages.size());
    for (const auto& m : messages)
        ordered.push_back(&m);
    std::sort(ordered.begin(), ordered.end(),
              [](const AgentMessage* a, const AgentMessage* b) { return a->agent_id < b->agent_id; });

    for (std::size_t i = 1; i < ordered.size(); ++i) {
        if (ordered[i]->agent_id == ordered[i - 1]->agent_id)
            throw std::invalid_argument("duplicate agent id " + std::to_string(ordered[i]->agent_id));
    }

    PoseGraph graph;
    bool egoFound = false;
    std::vector<GlobalBox> globalBoxes;
    std::vector<std::size_t> ownerIndex;
    std::vector<const BoxDetection*> localBoxes;

    for (std::size_t a = 0; a < ordered.size(); ++a) {
        const AgentMessage& msg = *ordered[a];
        const bool isEgo = msg.agent_id == ego_id;
        egoFound = egoFound || isEgo;
        graph.agent_nodes.push_back({msg.agent_id, msg.measured_pose, isEgo});

        for (const auto& box : msg.boxes) {
            box.validate();
            BoxDetection global = box.transformed(msg.measured_pose);
            global.agent_id = msg.agent_id;
            globalBoxes.push_back({msg.agent_id, global});
            ownerIndex.push_back(a);
            localBoxes.push_back(&box);
        }
    }
    if (!egoFound)
        throw std::invalid_argument("ego agent " + std::to_string(ego_id) + " not among messages");

    for (const auto& cluster : cluster_boxes(globalBoxes, params)) {
        if (cluster.size() < 2)
            continue;

        std::vector<ClusterMember> members;
        for (std::size_t idx : cluster)
            members.push_back({*localBoxes[idx], graph.agent_nodes[ownerIndex[idx]].pose});

        const std::size_t objectIndex = graph.object_nodes.size();
        graph.object_nodes.push_back({static_cast<int>(objectIndex), init_object_pose(members)});

        for (std::size_t idx : cluster) {
            const BoxDetection& box = *localBoxes[idx];
            graph.edges.push_back({ownerIndex[idx], objectIndex, box.pose(),
                                   weighting == EdgeWeighting::Uncertainty
                                       ? information_matrix(box)
                                       : InfoMatrix3::unit()});
        }
    }
    return graph;
}

void SolverParams::validate() const
{
    if (max_iterations < 1)
        throw std::invalid_argument("max_iterations must be at least 1");
    if (!(initial_damping > 0.0))
        throw std::invalid_argument("initial_damping must be positive");
    if (!(damping_up > 1.0))
        throw std::invalid_argument("damping_up must exceed 1");
    if (!(damping_down > 0.0 && damping_down < 1.0))
        throw std::invalid_argument("damping_down must lie in (0, 1)");
    if (!(convergence_tol > 0.0) || !(gradient_tol > 0.0))
        throw std::invalid_argument("solver tolerances must be positive");
}

double graph_objective(const PoseGraph& graph,
                       const std::vector<Pose2>& agent_poses,
                       const std::vector<Pose2>& object_poses)
{
    double total = 0.0;
    for (const auto& e : graph.edges) {
        const Eigen::Vector3d r = consistency_error(
            e.measurement, agent_poses[e.agent_index], object_poses[e.object_index]);
        total += r.dot(e.info.diagonal().cwiseProduct(r));
    }
    return total;
}

OptimizeResult optimize(const PoseGraph& graph, const SolverParams& params)
{
    params.validate();
    graph.check_invariants();

    const std::size_t numAgents = graph.agent_nodes.size();
    const std::size_t numObjects = graph.object_nodes.size();
    const std::vector<bool> anchored = anchored_agents(graph);

    /* Column offset of each node in the reduced system, or -1 if held */
    std::vector<int> agentCol(numAgents, -1);
    std::vector<int> objectCol(numObjects, -1);
    int dim = 0;
    for (std::size_t a = 0; a < numAgents; ++a) {
        if (!anchored[a]) {
            agentCol[a] = dim;
            dim += 3;
        }
    }
    for (std::size_t k = 0; k < numObjects; ++k) {
        objectCol[k] = dim;
        dim += 3;
    }

    OptimizeResult result;
    for (const auto& a : graph.agent_nodes)
        result.agent_poses.push_back(a.pose);
    for (const auto& o : graph.object_nodes)
        result.object_poses.push_back(o.pose);

    double objective = graph_objective(graph, result.agent_poses, result.object_poses);
    result.initial_objective = objective;
    result.objective_trace.push_back(objective);

    if (dim == 0) {
        result.objective = objective;
        result.converged = true;
        return result;
    }

    Eigen::MatrixXd hessian(dim, dim);
    Eigen::VectorXd gradient(dim);
    double lambda = params.initial_damping;
    bool relinearize = true;

    while (result.iterations < params.max_iterations) {
        if (relinearize) {
            hessian.setZero();
            gradient.setZero();
            for (const auto& e : graph.edges) {
                const ConsistencyJacobians jac = consistency_error_with_jacobians(
                    e.measurement, result.agent_poses[e.agent_index],
                    result.object_poses[e.object_index]);
                const Eigen::Matrix3d omega = e.info.matrix();
                const int ca = agentCol[e.agent_index];
                const int co = objectCol[e.object_index];

                const Eigen::Matrix3d wo = jac.d_object.transpose() * omega;
                hessian.block<3, 3>(co, co) += wo * jac.d_object;
                gradient.segment<3>(co) += wo * jac.error;
                if (ca >= 0) {
                    const Eigen::Matrix3d wa = jac.d_agent.transpose() * omega;
                    hessian.block<3, 3>(ca, ca) += wa * jac.d_agent;
                    hessian.block<3, 3>(ca, co) += wa * jac.d_object;
                    hessian.block<3, 3>(co, ca) += wo * jac.d_agent;
                    gradient.segment<3>(ca) += wa * jac.error;
                }
            }
            relinearize = false;
        }

        if (gradient.lpNorm<Eigen::Infinity>() < params.gradient_tol) {
            result.converged = true;
            break;
        }

        ++result.iterations;

        Eigen::MatrixXd damped = hessian;
        damped.diagonal() += lambda * hessian.diagonal().cwiseMax(1e-12);
        const Eigen::LLT<Eigen::MatrixXd> llt(damped);
        if (llt.info() != Eigen::Success) {
            lambda *= params.damping_up;
            continue;
        }
        const Eigen::VectorXd step = llt.solve(-gradient);
        if (!step.allFinite()) {
            lambda *= params.damping_up;
            continue;
        }

        std::vector<Pose2> agents = result.agent_poses;
        std::vector<Pose2> objects = result.object_poses;
        for (std::size_t a = 0; a < numAgents; ++a) {
            if (agentCol[a] >= 0)
                agents[a] = additive_update(agents[a], step.segment<3>(agentCol[a]));
        }
        for (std::size_t k = 0; k < numObjects; ++k)
            objects[k] = additive_update(objects[k], step.segment<3>(objectCol[k]));

        const double candidate = graph_objective(graph, agents, objects);
        if (candidate < objective) {
            const double decrease = objective - candidate;
            const double previous = objective;
            result.agent_poses = std::move(agents);
            result.object_poses = std::move(objects);
            objective = candidate;
            result.objective_trace.push_back(objective);
            lambda = std::max(lambda * params.damping_down, 1e-15);
            relinearize = true;
            if (decrease < params.convergence_tol * previous) {
                result.converged = true;
                break;
            }
        } else {
            /* Flat to within tolerance: further steps only chase rounding */
            if (candidate - objective <= params.convergence_tol * objective) {
                result.converged = true;
                break;
            }
            lambda *= params.damping_up;
            if (!std::isfinite(lambda) || lambda > 1e30)
                break;
        }
    }

    result.objective = objective;
    return result;
}

std::map<AgentId, Pose2> relative_poses(const std::map<AgentId, Pose2>& agent_poses,
                                        AgentId ego_id)
{
    const auto ego = agent_poses.find(ego_id);
    if (ego == agent_poses.end())
        throw std::invalid_argument("ego agent " + std::to_string(ego_id) + " has no pose");

    const Pose2 egoInverse = inverse(ego->second);
    std::map<AgentId, Pose2> out;
    for (const auto& [id, pose] : agent_poses)
        out.emplace(id, id == ego_id ? Pose2::identity() : compose(egoInverse, pose));
    return out;
}

std::map<AgentId, Pose2> agent_pose_map(const PoseGraph& graph,
                                        const std::vector<Pose2>& agent_poses)
{
    std::map<AgentId, Pose2> out;
    for (std::size_t i = 0; i < graph.agent_nodes.size(); ++i)
        out.emplace(graph.agent_nodes[i].id, agent_poses.at(i));
    return out;
}

} /* namespace coalign */
