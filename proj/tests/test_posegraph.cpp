/* test_posegraph.cpp */

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

#include <doctest.h>

#include "coalign/oracles.hpp"
#include "coalign/posegraph.hpp"
#include "coalign/scenario.hpp"

using namespace coalign;

namespace {

constexpr double kPi = std::numbers::pi;

double pose_distance(const Pose2& a, const Pose2& b)
{
    Eigen::Vector3d d = a.vector() - b.vector();
    d(2) = std::remainder(d(2), 2.0 * kPi);
    return d.cwiseAbs().maxCoeff();
}

/* The box an ideal detector at `agent` reports for an object at `object` */
BoxDetection observe(const Pose2& agent, const Pose2& object, AgentId id, double var = 1.0)
{
    const Pose2 rel = compose(inverse(agent), object);
    BoxDetection box;
    box.cx_hat = rel.x();
    box.cy_hat = rel.y();
    box.theta_hat = rel.theta();
    box.var_x = box.var_y = box.var_theta = var;
    box.agent_id = id;
    return box;
}

GlobalBox global_box(AgentId agent, double x, double y, double confidence = 0.9)
{
    BoxDetection box;
    box.cx_hat = x;
    box.cy_hat = y;
    box.confidence = confidence;
    box.agent_id = agent;
    return {agent, box};
}

std::vector<AgentMessage> noiseless_messages(const std::vector<Pose2>& agents,
                                             const std::vector<Pose2>& objects)
{
    std::vector<AgentMessage> msgs;
    for (std::size_t a = 0; a < agents.size(); ++a) {
        AgentMessage m;
        m.agent_id = static_cast<AgentId>(a);
        m.measured_pose = agents[a];
        for (const auto& o : objects)
            m.boxes.push_back(observe(agents[a], o, m.agent_id));
        msgs.push_back(m);
    }
    return msgs;
}

Eigen::Vector3d edge_residual(const PoseGraph& g, const OptimizeResult& r, std::size_t e)
{
    const auto& edge = g.edges[e];
    return consistency_error(edge.measurement, r.agent_poses[edge.agent_index],
                             r.object_poses[edge.object_index]);
}

void check_trace_monotone(const OptimizeResult& r)
{
    REQUIRE(!r.objective_trace.empty());
    CHECK(r.objective_trace.front() == r.initial_objective);
    CHECK(r.objective_trace.back() == r.objective);
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
        REQUIRE(r.objective_trace[i] <= r.objective_trace[i - 1]);
}

} /* namespace */

TEST_CASE("cluster_boxes examples")
{
    CHECK(cluster_boxes({}).empty());

    const auto same = cluster_boxes({global_box(0, 1.0, 1.0), global_box(1, 1.0, 1.0)});
    CHECK(same == std::vector<Cluster>{{0, 1}});

    const auto far = cluster_boxes({global_box(0, 0.0, 0.0), global_box(1, 100.0, 0.0)});
    CHECK(far == std::vector<Cluster>{{0}, {1}});

    const std::vector<GlobalBox> chain{global_box(0, 0.0, 0.0), global_box(1, 1.5, 0.0),
                                       global_box(2, 3.0, 0.0)};
    const auto oracle = oracle::transitive_closure_clusters(
        {{0.0, 0.0}, {1.5, 0.0}, {3.0, 0.0}}, 2.0);
    CHECK(oracle.size() == 1);
    CHECK(cluster_boxes(chain, {2.0}) == oracle);

    // exactly at the gap is not a link
    CHECK(cluster_boxes({global_box(0, 0.0, 0.0), global_box(1, 2.0, 0.0)}, {2.0}).size() == 2);
}

TEST_CASE("cluster_boxes keeps one box per agent")
{
    // two boxes from agent 0 near one box from agent 1: the nearer pair wins
    const auto c = cluster_boxes({global_box(0, 0.0, 0.0), global_box(0, 1.0, 0.0),
                                  global_box(1, 0.8, 0.0)});
    CHECK(c == std::vector<Cluster>{{0}, {1, 2}});

    // equal distances: the higher-confidence pair wins
    const auto t = cluster_boxes({global_box(0, -0.5, 0.0, 0.3), global_box(0, 0.5, 0.0, 0.8),
                                  global_box(1, 0.0, 0.0, 0.5)});
    CHECK(t == std::vector<Cluster>{{0}, {1, 2}});
}

TEST_CASE("cluster_boxes properties")
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> c(0.0, 10.0);
    std::uniform_int_distribution<int> agent(0, 3);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<GlobalBox> boxes;
        std::vector<Eigen::Vector2d> centers;
        const int n = 1 + trial % 15;
        for (int i = 0; i < n; ++i) {
            boxes.push_back(global_box(agent(rng), c(rng), c(rng)));
            centers.emplace_back(boxes.back().box.cx_hat, boxes.back().box.cy_hat);
        }
        const auto clusters = cluster_boxes(boxes, {2.0});
        const auto closure = oracle::transitive_closure_clusters(centers, 2.0);

        // a partition of the inputs that refines the closure components
        std::vector<int> seen(n, 0);
        for (const auto& cl : clusters) {
            std::set<AgentId> agents;
            for (std::size_t m : cl) {
                ++seen[m];
                REQUIRE(agents.insert(boxes[m].agent_id).second);
            }
            const auto home = std::find_if(closure.begin(), closure.end(), [&](const auto& k) {
                return std::find(k.begin(), k.end(), cl.front()) != k.end();
            });
            REQUIRE(home != closure.end());
            for (std::size_t m : cl)
                REQUIRE(std::find(home->begin(), home->end(), m) != home->end());
        }
        for (int s : seen)
            REQUIRE(s == 1);

        // without shared agents the result is exactly the closure
        std::vector<GlobalBox> distinct = boxes;
        for (int i = 0; i < n; ++i)
            distinct[i].agent_id = i;
        REQUIRE(cluster_boxes(distinct, {2.0}) == closure);
    }
}

TEST_CASE("init_object_pose examples")
{
    BoxDetection a;
    a.cx_hat = 1.0;
    a.cy_hat = 2.0;
    a.theta_hat = 0.5;
    CHECK(pose_distance(init_object_pose({{a, Pose2::identity()}}), {1.0, 2.0, 0.5}) < 1e-15);

    BoxDetection p, q;
    q.cx_hat = 2.0;
    CHECK(pose_distance(init_object_pose({{p, Pose2::identity()}, {q, Pose2::identity()}}),
                        {1.0, 0.0, 0.0}) < 1e-15);

    // circular mean of +170 and -170 degrees, checked against a unit-vector sum
    const double h = 170.0 * kPi / 180.0;
    p.theta_hat = h;
    q.theta_hat = -h;
    q.cx_hat = 0.0;
    const double expected = std::atan2(std::sin(h) + std::sin(-h), std::cos(h) + std::cos(-h));
    const Pose2 m = init_object_pose({{p, Pose2::identity()}, {q, Pose2::identity()}});
    CHECK(std::abs(std::remainder(m.theta() - expected, 2.0 * kPi)) < 1e-12);
    CHECK(m.theta() == doctest::Approx(kPi).epsilon(1e-12));

    // owner pose is applied before averaging
    BoxDetection r;
    r.cx_hat = 1.0;
    CHECK(pose_distance(init_object_pose({{r, Pose2{5.0, 0.0, kPi / 2}}}), {5.0, 1.0, kPi / 2}) < 1e-12);

    // the tighter member dominates
    BoxDetection tight, loose;
    tight.var_x = tight.var_y = 0.01;
    loose.cx_hat = 1.0;
    loose.var_x = loose.var_y = 0.99;
    CHECK(init_object_pose({{tight, Pose2::identity()}, {loose, Pose2::identity()}}).x() ==
          doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("build_pose_graph examples")
{
    const std::vector<Pose2> objects{{5, 0, 0}, {10, 5, 1}, {-3, 8, -2}};

    SUBCASE("one agent prunes everything")
    {
        const auto msgs = noiseless_messages({{0, 0, 0}}, objects);
        const PoseGraph g = build_pose_graph(msgs, 0);
        CHECK(g.agent_nodes.size() == 1);
        CHECK(g.object_nodes.empty());
        CHECK(g.edges.empty());
        CHECK(g.agent_nodes[0].fixed);
    }
    SUBCASE("two agents, one object")
    {
        const auto msgs = noiseless_messages({{0, 0, 0}, {2, 1, 0.3}}, {objects[0]});
        const PoseGraph g = build_pose_graph(msgs, 1);
        CHECK(g.agent_nodes.size() == 2);
        CHECK(g.object_nodes.size() == 1);
        CHECK(g.edges.size() == 2);
        CHECK(g.ego_index() == 1);
        CHECK_NOTHROW(g.check_invariants());
    }
    SUBCASE("errors")
    {
        auto msgs = noiseless_messages({{0, 0, 0}, {2, 1, 0.3}}, objects);
        CHECK_THROWS_AS(build_pose_graph(msgs, 7), std::invalid_argument);
        msgs[1].agent_id = 0;
        CHECK_THROWS_AS(build_pose_graph(msgs, 0), std::invalid_argument);
    }
}

TEST_CASE("build_pose_graph counts shared objects")
{
    const std::vector<Pose2> agents{{0, 0, 0}, {20, 0, 2.0}, {5, 15, -1.0}};
    const std::vector<Pose2> shared{{5, 5, 0.1}, {10, -4, 1.2}, {15, 10, -0.4}, {-5, 5, 3.0}, {0, -10, 0.0}};
    auto msgs = noiseless_messages(agents, shared);
    msgs[0].boxes.push_back(observe(agents[0], {40, 40, 0}, 0));
    msgs[2].boxes.push_back(observe(agents[2], {-40, 30, 0}, 2));

    // count by closure over global centers
    std::vector<Eigen::Vector2d> centers;
    std::vector<AgentId> owner;
    for (const auto& m : msgs) {
        for (const auto& b : m.boxes) {
            centers.push_back(m.measured_pose.transform_point({b.cx_hat, b.cy_hat}));
            owner.push_back(m.agent_id);
        }
    }
    std::size_t objects = 0, edges = 0;
    for (const auto& cl : oracle::transitive_closure_clusters(centers, 2.0)) {
        std::set<AgentId> who;
        for (std::size_t i : cl)
            who.insert(owner[i]);
        if (who.size() >= 2) {
            ++objects;
            edges += cl.size();
        }
    }
    CHECK(objects == 5);
    CHECK(edges == 15);

    const PoseGraph g = build_pose_graph(msgs, 0);
    CHECK(g.agent_nodes.size() == 3);
    CHECK(g.object_nodes.size() == objects);
    CHECK(g.edges.size() == edges);
    CHECK_NOTHROW(g.check_invariants());

    // the graph is the same whichever agent is ego, up to the fixed flag
    const PoseGraph g2 = build_pose_graph(msgs, 2);
    REQUIRE(g2.edges.size() == g.edges.size());
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        CHECK(g.edges[e].agent_index == g2.edges[e].agent_index);
        CHECK(g.edges[e].object_index == g2.edges[e].object_index);
        CHECK(g.edges[e].measurement == g2.edges[e].measurement);
    }
    CHECK(g2.agent_nodes[2].fixed);
    CHECK_FALSE(g2.agent_nodes[0].fixed);
}

TEST_CASE("edge weighting options")
{
    auto msgs = noiseless_messages({{0, 0, 0}, {2, 1, 0.3}}, {{5, 0, 0}});
    msgs[0].boxes[0].var_x = 0.25;
    msgs[0].boxes[0].var_theta = 4.0;
    const PoseGraph u = build_pose_graph(msgs, 0, {}, EdgeWeighting::Uncertainty);
    const PoseGraph i = build_pose_graph(msgs, 0, {}, EdgeWeighting::Identity);
    CHECK(u.edges[0].info.diagonal() == Eigen::Vector3d(4.0, 1.0, 0.25));
    CHECK(i.edges[0].info.diagonal() == Eigen::Vector3d(1.0, 1.0, 1.0));
}

TEST_CASE("optimize examples")
{
    SUBCASE("noiseless graph stays put")
    {
        const auto msgs = noiseless_messages({{0, 0, 0}, {2, 1, 0.3}, {-4, 3, 2.0}},
                                             {{5, 0, 0}, {10, 5, 1}, {-3, 8, -2}});
        const PoseGraph g = build_pose_graph(msgs, 0);
        const auto r = optimize(g);
        CHECK(r.initial_objective <= 1e-20);
        CHECK(r.objective <= 1e-20);
        CHECK(r.converged);
        for (std::size_t a = 0; a < 3; ++a)
            CHECK(pose_distance(r.agent_poses[a], msgs[a].measured_pose) < 1e-12);
    }
    SUBCASE("perturbed agent is recovered")
    {
        const std::vector<Pose2> truth{{0, 0, 0}, {6, -2, 0.8}};
        const std::vector<Pose2> objects{{4, 3, 0.2}, {9, -1, -1.0}, {2, -6, 2.5}};
        auto msgs = noiseless_messages(truth, objects);
        msgs[1].measured_pose = Pose2{6.5, -2.3, 0.9};
        const PoseGraph g = build_pose_graph(msgs, 0);
        REQUIRE(g.object_nodes.size() == 3);
        const auto r = optimize(g);
        CHECK(r.converged);
        CHECK(r.objective < 1e-16);
        CHECK(pose_distance(r.agent_poses[1], truth[1]) < 1e-6);
        CHECK(r.agent_poses[0] == truth[0]);
    }
    SUBCASE("objective agrees with a generic least-squares solver")
    {
        SceneConfig sc;
        sc.num_agents = 3;
        sc.num_objects = 8;
        sc.area_x = sc.area_y = 40.0;
        const Scene scene = generate_scene(sc, 2024);
        const auto msgs = make_messages(scene, {NoiseKind::Gaussian, 0.6, 0.6}, {}, 77);
        const PoseGraph g = build_pose_graph(msgs, 0);
        REQUIRE(g.object_nodes.size() >= 3);
        const auto r = optimize(g);
        const double ref = oracle::generic_least_squares_objective(g);
        CHECK(r.converged);
        CHECK(r.objective < r.initial_objective);
        CHECK(oracle::relative_error(r.objective, ref) <= 1e-6);
    }
}

TEST_CASE("SolverParams validation")
{
    SolverParams p;
    CHECK_NOTHROW(p.validate());
    p.max_iterations = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.initial_damping = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.convergence_tol = -1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("agents with no shared objects keep their measured pose")
{
    auto msgs = noiseless_messages({{0, 0, 0}, {3, 1, 0.2}}, {{5, 0, 0}, {8, 2, 1.0}});
    AgentMessage lone;
    lone.agent_id = 5;
    lone.measured_pose = Pose2{50, 50, 1.0};
    lone.boxes.push_back(observe(lone.measured_pose, {70, 70, 0}, 5));
    msgs.push_back(lone);
    msgs[1].measured_pose = Pose2{3.4, 0.7, 0.3};

    const PoseGraph g = build_pose_graph(msgs, 0);
    const auto r = optimize(g);
    CHECK(r.agent_poses[2] == lone.measured_pose);
    CHECK(pose_distance(r.agent_poses[1], {3, 1, 0.2}) < 1e-6);
}

TEST_CASE("optimize properties on random scenes")
{
    SceneConfig sc;
    sc.area_x = sc.area_y = 80.0;
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        const Scene scene = generate_scene(sc, rng());
        const NoiseSpec noise{trial % 2 ? NoiseKind::Laplace : NoiseKind::Gaussian, 0.6, 0.6};
        const auto msgs = make_messages(scene, noise, {}, rng());
        const PoseGraph g = build_pose_graph(msgs, 0);
        const auto r = optimize(g);

        // gauge fixing
        REQUIRE(r.agent_poses[g.ego_index()] == msgs[0].measured_pose);
        check_trace_monotone(r);

        // relative poses all come from one global solution
        const auto rel = relative_poses(agent_pose_map(g, r.agent_poses), 0);
        REQUIRE(rel.at(0) == Pose2::identity());
        for (const auto& [j, pj] : rel) {
            for (const auto& [k, pk] : rel) {
                const Pose2 kToJ = compose(inverse(pj), pk);
                REQUIRE(pose_distance(compose(pj, kToJ), pk) < 1e-10);
            }
        }

        // input order does not matter
        std::vector<AgentMessage> shuffled = msgs;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto r2 = optimize(build_pose_graph(shuffled, 0));
        REQUIRE(r2.agent_poses.size() == r.agent_poses.size());
        for (std::size_t a = 0; a < r.agent_poses.size(); ++a)
            REQUIRE(pose_distance(r.agent_poses[a], r2.agent_poses[a]) < 1e-10);
        REQUIRE(std::abs(r.objective - r2.objective) <= 1e-10 * std::max(1.0, r.objective));
    }
}

TEST_CASE("zero-noise exactness")
{
    DetectorSpec det;
    det.center_noise_sd = 0.0;
    det.heading_noise_sd = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Scene scene = generate_scene({}, seed);
        const auto msgs = make_messages(scene, {}, det, seed + 1000);
        const PoseGraph g = build_pose_graph(msgs, 0);
        const auto r = optimize(g);
        REQUIRE(r.objective <= 1e-16);
        for (std::size_t a = 0; a < scene.agents.size(); ++a)
            REQUIRE(pose_distance(r.agent_poses[a], scene.agents[a].true_pose) < 1e-8);
    }
}

TEST_CASE("raising one edge's information pulls the optimum toward it")
{
    // agent 1's view of the pair is stretched relative to the ego's view
    const std::vector<Pose2> agents{{0, 0, 0}, {10, 0, 0}};
    const std::vector<Pose2> objects{{5, 3, 0}, {5, -3, 0}};
    auto msgs = noiseless_messages(agents, objects);
    msgs[1].boxes[0].cy_hat += 0.5;
    msgs[1].boxes[0].theta_hat += 0.05;

    const PoseGraph base = build_pose_graph(msgs, 0);
    std::size_t target = base.edges.size();
    for (std::size_t e = 0; e < base.edges.size(); ++e) {
        if (base.edges[e].agent_index == 1 && base.edges[e].object_index == 0)
            target = e;
    }
    REQUIRE(target < base.edges.size());

    const auto r0 = optimize(base);
    const double before = edge_residual(base, r0, target).norm();
    REQUIRE(before > 1e-3);

    for (double var : {0.1, 0.01, 0.001}) {
        auto heavy = msgs;
        heavy[1].boxes[0].var_x = heavy[1].boxes[0].var_y = heavy[1].boxes[0].var_theta = var;
        const PoseGraph g = build_pose_graph(heavy, 0);
        const auto r = optimize(g);
        const double after = edge_residual(g, r, target).norm();
        CHECK(after < before);
    }
}

TEST_CASE("relative_poses examples")
{
    const auto one = relative_poses({{3, Pose2{4, 5, 1}}}, 3);
    CHECK(one.size() == 1);
    CHECK(pose_distance(one.at(3), Pose2::identity()) < 1e-15);

    const auto two = relative_poses({{0, Pose2::identity()}, {1, Pose2{1, 0, 0}}}, 0);
    CHECK(two.at(1) == Pose2(1, 0, 0));

    const auto rot = relative_poses({{0, Pose2{1, 0, kPi / 2}}, {1, Pose2{1, 1, kPi / 2}}}, 0);
    const Eigen::Vector3d expected = oracle::compose(oracle::inverse({1, 0, kPi / 2}), {1, 1, kPi / 2});
    CHECK(pose_distance(rot.at(1), Pose2::from_vector(expected)) < 1e-12);
    CHECK(pose_distance(rot.at(1), {1, 0, 0}) < 1e-12);

    CHECK_THROWS_AS(relative_poses({{0, Pose2::identity()}}, 4), std::invalid_argument);
}
