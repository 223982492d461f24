/* oracles.hpp */

#ifndef COALIGN_ORACLES_HPP
#define COALIGN_ORACLES_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "coalign/fusion_eval.hpp"
#include "coalign/geometry.hpp"
#include "coalign/posegraph.hpp"

/*
 * Reference implementations that take a different route from the
 * library: homogeneous matrices instead of closed-form pose algebra,
 * sampling instead of polygon clipping, exhaustive enumeration instead
 * of incremental bookkeeping, a generic MINPACK-style solver with
 * numerical derivatives instead of the analytic LM.
 */
namespace coalign::oracle {

Eigen::Matrix3d homogeneous(double x, double y, double theta);
/* (x, y, atan2) read back from a homogeneous matrix */
Eigen::Vector3d from_homogeneous(const Eigen::Matrix3d& t);

Eigen::Vector3d compose(const Eigen::Vector3d& a, const Eigen::Vector3d& b);
Eigen::Vector3d inverse(const Eigen::Vector3d& p);
/* z^-1 * xi^-1 * chi through 3x3 products */
Eigen::Vector3d consistency_error(const Eigen::Vector3d& z, const Eigen::Vector3d& xi,
                                  const Eigen::Vector3d& chi);

/* Monte-Carlo IoU over the joint bounding rectangle */
double monte_carlo_iou(const OrientedBox2& a, const OrientedBox2& b, int samples,
                       std::uint64_t seed);

/* AP by enumerating every confidence cut point independently */
double brute_force_ap(std::span<const ScoredBox> detections,
                      std::span<const OrientedBox2> ground_truth, double iou_threshold);

/* Connected components by transitive closure of the distance relation */
std::vector<std::vector<std::size_t>> transitive_closure_clusters(
    const std::vector<Eigen::Vector2d>& centers, double gap);

/* Central differences of a scalar function of n variables */
Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double step);

/* Central differences of a vector function; angle rows wrapped */
Eigen::MatrixXd numeric_jacobian(
    const std::function<Eigen::Vector3d(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double step);

/* Minimum of the weighted consistency objective found by Eigen's
 * MINPACK port with central-difference Jacobians; ego held fixed.
 * The graph must be connected. */
double generic_least_squares_objective(const PoseGraph& graph);

/* Relative error |a - b| / max(|a|, |b|, floor) */
double relative_error(double a, double b, double floor = 1e-12);

} /* namespace coalign::oracle */

#endif /* COALIGN_ORACLES_HPP */
