/* selftest.cpp */

#include "selftest.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "coalign/fusion_eval.hpp"
#include "coalign/geometry.hpp"
#include "coalign/oracles.hpp"
#include "coalign/posegraph.hpp"
#include "coalign/scenario.hpp"
#include "coalign/uncertainty.hpp"

namespace coalign::tools {

namespace {

using Check = std::function<bool(std::mt19937_64&)>;

Pose2 random_pose(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> t(-50.0, 50.0);
    std::uniform_real_distribution<double> a(-std::numbers::pi, std::numbers::pi);
    return {t(rng), t(rng), a(rng)};
}

OrientedBox2 random_box(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> c(-3.0, 3.0);
    std::uniform_real_distribution<double> s(0.5, 5.0);
    std::uniform_real_distribution<double> a(-std::numbers::pi, std::numbers::pi);
    return {c(rng), c(rng), s(rng), s(rng), a(rng)};
}

bool close(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double tol)
{
    Eigen::Vector3d d = a - b;
    d(2) = std::remainder(d(2), 2.0 * std::numbers::pi);
    return d.cwiseAbs().maxCoeff() <= tol;
}

bool group_axioms(std::mt19937_64& rng)
{
    for (int i = 0; i < 200; ++i) {
        const Pose2 a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
        if (!close(compose(compose(a, b), c).vector(), compose(a, compose(b, c)).vector(), 1e-10))
            return false;
        if (!close(compose(a, inverse(a)).vector(), Eigen::Vector3d::Zero(), 1e-10))
            return false;
        if (!close(compose(a, b).vector(), oracle::compose(a.vector(), b.vector()), 1e-10))
            return false;
    }
    return true;
}

bool iou_monte_carlo(std::mt19937_64& rng)
{
    for (int i = 0; i < 10; ++i) {
        const OrientedBox2 a = random_box(rng), b = random_box(rng);
        if (std::abs(rotated_iou_bev(a, b) - oracle::monte_carlo_iou(a, b, 200000, rng())) > 1e-2)
            return false;
    }
    return true;
}

bool loss_gradients(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        const double x0 = u(rng), th0 = u(rng);
        Eigen::VectorXd p(2);
        p << u(rng), std::exp(u(rng));
        const auto g = gaussian_center_loss(p(0), p(1), x0);
        const Eigen::VectorXd ng = oracle::numeric_gradient(
            [&](const Eigen::VectorXd& v) { return gaussian_center_loss(v(0), v(1), x0).loss; }, p, 1e-6);
        for (int k = 0; k < 2; ++k) {
            if (oracle::relative_error(g.grad[k], ng(k), 1e-3) > 1e-5)
                return false;
        }
        Eigen::VectorXd q(2);
        q << u(rng), u(rng);
        const auto vm = von_mises_angle_loss(q(0), q(1), th0, CosineMode::Plain);
        const Eigen::VectorXd nvm = oracle::numeric_gradient(
            [&](const Eigen::VectorXd& v) {
                return von_mises_angle_loss(v(0), v(1), th0, CosineMode::Plain).loss;
            }, q, 1e-6);
        for (int k = 0; k < 2; ++k) {
            if (oracle::relative_error(vm.grad[k], nvm(k), 1e-3) > 1e-5)
                return false;
        }
    }
    return true;
}

bool ap_brute_force(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> count(0, 8);
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        std::vector<OrientedBox2> gt;
        const int numGt = count(rng);
        for (int g = 0; g < numGt; ++g)
            gt.push_back(random_box(rng));
        std::vector<ScoredBox> dets;
        const int numDet = count(rng);
        for (int d = 0; d < numDet; ++d)
            dets.push_back({random_box(rng), conf(rng)});
        if (average_precision(dets, gt, 0.3) != oracle::brute_force_ap(dets, gt, 0.3))
            return false;
    }
    return true;
}

bool clustering_closure(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> c(0.0, 8.0);
    for (int i = 0; i < 100; ++i) {
        std::vector<GlobalBox> boxes;
        std::vector<Eigen::Vector2d> centers;
        for (int b = 0; b < 10; ++b) {
            BoxDetection box;
            box.cx_hat = c(rng);
            box.cy_hat = c(rng);
            boxes.push_back({b, box});
            centers.emplace_back(box.cx_hat, box.cy_hat);
        }
        if (cluster_boxes(boxes, {2.0}) != oracle::transitive_closure_clusters(centers, 2.0))
            return false;
    }
    return true;
}

bool solver_oracle(std::mt19937_64& rng)
{
    SceneConfig sc;
    sc.num_agents = 3;
    sc.num_objects = 6;
    sc.area_x = sc.area_y = 60.0;
    for (int i = 0; i < 5; ++i) {
        const Scene scene = generate_scene(sc, rng());
        const auto msgs = make_messages(scene, {NoiseKind::Gaussian, 0.6, 0.6}, {}, rng());
        const PoseGraph graph = build_pose_graph(msgs, 0);
        const auto res = optimize(graph);
        const double ref = oracle::generic_least_squares_objective(graph);
        if (oracle::relative_error(res.objective, ref, 1e-12) > 1e-6)
            return false;
    }
    return true;
}

bool noiseless_exact(std::mt19937_64& rng)
{
    DetectorSpec det;
    det.center_noise_sd = 0.0;
    det.heading_noise_sd = 0.0;
    for (int i = 0; i < 5; ++i) {
        const Scene scene = generate_scene({}, rng());
        const auto msgs = make_messages(scene, {}, det, rng());
        const PoseGraph graph = build_pose_graph(msgs, 0);
        const auto res = optimize(graph);
        if (!(res.objective <= 1e-16))
            return false;
        for (std::size_t a = 0; a < graph.agent_nodes.size(); ++a) {
            if (!close(res.agent_poses[a].vector(), scene.agents[a].true_pose.vector(), 1e-8))
                return false;
        }
    }
    return true;
}

} /* namespace */

bool run_selftest(std::ostream& out, std::uint64_t seed)
{
    const std::vector<std::pair<std::string, Check>> checks{
        {"pose group axioms vs homogeneous matrices", group_axioms},
        {"rotated IoU vs Monte-Carlo area", iou_monte_carlo},
        {"loss gradients vs central differences", loss_gradients},
        {"AP vs cut-point enumeration", ap_brute_force},
        {"clustering vs transitive closure", clustering_closure},
        {"LM objective vs generic least squares", solver_oracle},
        {"noiseless graph recovers ground truth", noiseless_exact},
    };

    bool all = true;
    std::mt19937_64 rng(seed);
    for (const auto& [name, check] : checks) {
        bool ok = false;
        try {
            ok = check(rng);
        } catch (const std::exception& e) {
            out << "  exception: " << e.what() << "\n";
        }
        out << (ok ? "PASS  " : "FAIL  ") << name << "\n";
        all = all && ok;
    }
    return all;
}

} /* namespace coalign::tools */
