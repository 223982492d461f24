/* oracles.cpp */

#include "coalign/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

namespace coalign::oracle {

namespace {

double wrap(double a)
{
    return std::atan2(std::sin(a), std::cos(a));
}

bool inside(const OrientedBox2& box, double px, double py)
{
    const double c = std::cos(box.heading());
    const double s = std::sin(box.heading());
    const double dx = px - box.cx();
    const double dy = py - box.cy();
    const double u = c * dx + s * dy;
    const double v = -s * dx + c * dy;
    return std::abs(u) <= 0.5 * box.length() && std::abs(v) <= 0.5 * box.width();
}

struct GraphResidual
{
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    const PoseGraph* graph;
    std::vector<int> agentOffset;
    std::vector<int> objectOffset;
    int numInputs;
    int numValues;

    int inputs() const { return numInputs; }
    int values() const { return numValues; }

    Eigen::Vector3d agent(const Eigen::VectorXd& x, std::size_t a) const
    {
        if (agentOffset[a] < 0)
            return graph->agent_nodes[a].pose.vector();
        return x.segment<3>(agentOffset[a]);
    }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const
    {
        for (std::size_t i = 0; i < graph->edges.size(); ++i) {
            const auto& e = graph->edges[i];
            const Eigen::Vector3d err = consistency_error(
                e.measurement.vector(), agent(x, e.agent_index),
                x.segment<3>(objectOffset[e.object_index]));
            fvec.segment<3>(3 * static_cast<int>(i)) =
                e.info.diagonal().cwiseSqrt().cwiseProduct(err);
        }
        return 0;
    }
};

} /* namespace */

Eigen::Matrix3d homogeneous(double x, double y, double theta)
{
    Eigen::Matrix3d t;
    t << std::cos(theta), -std::sin(theta), x,
         std::sin(theta),  std::cos(theta), y,
         0.0,              0.0,             1.0;
    return t;
}

Eigen::Vector3d from_homogeneous(const Eigen::Matrix3d& t)
{
    return {t(0, 2), t(1, 2), std::atan2(t(1, 0), t(0, 0))};
}

Eigen::Vector3d compose(const Eigen::Vector3d& a, const Eigen::Vector3d& b)
{
    return from_homogeneous(homogeneous(a(0), a(1), a(2)) * homogeneous(b(0), b(1), b(2)));
}

Eigen::Vector3d inverse(const Eigen::Vector3d& p)
{
    return from_homogeneous(homogeneous(p(0), p(1), p(2)).inverse());
}

Eigen::Vector3d consistency_error(const Eigen::Vector3d& z, const Eigen::Vector3d& xi,
                                  const Eigen::Vector3d& chi)
{
    const Eigen::Matrix3d t = homogeneous(z(0), z(1), z(2)).inverse() *
                              homogeneous(xi(0), xi(1), xi(2)).inverse() *
                              homogeneous(chi(0), chi(1), chi(2));
    return from_homogeneous(t);
}

double monte_carlo_iou(const OrientedBox2& a, const OrientedBox2& b, int samples,
                       std::uint64_t seed)
{
    double minX = 1e300, maxX = -1e300, minY = 1e300, maxY = -1e300;
    for (const auto& box : {a, b}) {
        for (const auto& c : box.corners()) {
            minX = std::min(minX, c.x());
            maxX = std::max(maxX, c.x());
            minY = std::min(minY, c.y());
            maxY = std::max(maxY, c.y());
        }
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(minX, maxX);
    std::uniform_real_distribution<double> uy(minY, maxY);
    long inter = 0;
    long uni = 0;
    for (int i = 0; i < samples; ++i) {
        const double px = ux(rng);
        const double py = uy(rng);
        const bool ia = inside(a, px, py);
        const bool ib = inside(b, px, py);
        inter += (ia && ib) ? 1 : 0;
        uni += (ia || ib) ? 1 : 0;
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double brute_force_ap(std::span<const ScoredBox> detections,
                      std::span<const OrientedBox2> ground_truth, double iou_threshold)
{
    const std::size_t numGt = ground_truth.size();
    if (numGt == 0)
        return detections.empty() ? 1.0 : 0.0;

    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return detections[a].confidence > detections[b].confidence;
    });

    /* true-positive count when only the top `cut` detections are kept */
    auto tp_at = [&](std::size_t cut) {
        std::vector<bool> used(numGt, false);
        int tp = 0;
        for (std::size_t r = 0; r < cut; ++r) {
            double best = -1.0;
            std::size_t arg = 0;
            for (std::size_t g = 0; g < numGt; ++g) {
                if (used[g])
                    continue;
                const double iou = rotated_iou_bev(detections[order[r]].box, ground_truth[g]);
                if (iou > best) {
                    best = iou;
                    arg = g;
                }
            }
            if (best >= iou_threshold) {
                used[arg] = true;
                ++tp;
            }
        }
        return tp;
    };

    const std::size_t n = order.size();
    std::vector<int> tp(n + 1, 0);
    std::vector<double> precision(n + 1, 0.0);
    for (std::size_t cut = 1; cut <= n; ++cut) {
        tp[cut] = tp_at(cut);
        precision[cut] = static_cast<double>(tp[cut]) / static_cast<double>(cut);
    }

    /* Each recall step of 1/numGt is credited with the best precision
     * at any cut point reaching at least that recall */
    double ap = 0.0;
    for (std::size_t cut = 1; cut <= n; ++cut) {
        if (tp[cut] == tp[cut - 1])
            continue;
        double best = 0.0;
        for (std::size_t later = cut; later <= n; ++later)
            best = std::max(best, precision[later]);
        ap += best / static_cast<double>(numGt);
    }
    return ap;
}

std::vector<std::vector<std::size_t>> transitive_closure_clusters(
    const std::vector<Eigen::Vector2d>& centers, double gap)
{
    const std::size_t n = centers.size();
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            reach[i][j] = i == j || (centers[i] - centers[j]).norm() < gap;
    }
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (reach[i][k] && reach[k][j])
                    reach[i][j] = true;
            }
        }
    }
    std::vector<std::vector<std::size_t>> clusters;
    std::vector<bool> assigned(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (assigned[i])
            continue;
        std::vector<std::size_t> c;
        for (std::size_t j = 0; j < n; ++j) {
            if (reach[i][j]) {
                c.push_back(j);
                assigned[j] = true;
            }
        }
        clusters.push_back(c);
    }
    return clusters;
}

Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double step)
{
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd hi = x;
        Eigen::VectorXd lo = x;
        hi(i) += step;
        lo(i) -= step;
        g(i) = (f(hi) - f(lo)) / (2.0 * step);
    }
    return g;
}

Eigen::MatrixXd numeric_jacobian(
    const std::function<Eigen::Vector3d(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double step)
{
    Eigen::MatrixXd j(3, x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd hi = x;
        Eigen::VectorXd lo = x;
        hi(i) += step;
        lo(i) -= step;
        Eigen::Vector3d d = f(hi) - f(lo);
        d(2) = wrap(d(2));
        j.col(i) = d / (2.0 * step);
    }
    return j;
}

double generic_least_squares_objective(const PoseGraph& graph)
{
    GraphResidual functor;
    functor.graph = &graph;
    int offset = 0;
    for (const auto& a : graph.agent_nodes) {
        functor.agentOffset.push_back(a.fixed ? -1 : offset);
        offset += a.fixed ? 0 : 3;
    }
    for (std::size_t k = 0; k < graph.object_nodes.size(); ++k) {
        functor.objectOffset.push_back(offset);
        offset += 3;
    }
    functor.numInputs = offset;
    functor.numValues = 3 * static_cast<int>(graph.edges.size());

    Eigen::VectorXd x(offset);
    for (std::size_t a = 0; a < graph.agent_nodes.size(); ++a) {
        if (functor.agentOffset[a] >= 0)
            x.segment<3>(functor.agentOffset[a]) = graph.agent_nodes[a].pose.vector();
    }
    for (std::size_t k = 0; k < graph.object_nodes.size(); ++k)
        x.segment<3>(functor.objectOffset[k]) = graph.object_nodes[k].pose.vector();

    Eigen::NumericalDiff<GraphResidual, Eigen::Central> numDiff(functor);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<GraphResidual, Eigen::Central>> lm(numDiff);
    lm.parameters.ftol = 1e-15;
    lm.parameters.xtol = 1e-15;
    lm.parameters.maxfev = 100000;
    lm.minimize(x);

    Eigen::VectorXd fvec(functor.numValues);
    functor(x, fvec);
    return fvec.squaredNorm();
}

double relative_error(double a, double b, double floor)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

} /* namespace coalign::oracle */
