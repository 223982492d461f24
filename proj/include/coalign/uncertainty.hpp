/* uncertainty.hpp */

#ifndef COALIGN_UNCERTAINTY_HPP
#define COALIGN_UNCERTAINTY_HPP

#include <array>

#include <Eigen/Core>

#include "coalign/geometry.hpp"

namespace coalign {

using AgentId = int;

/*
 * A detected 3D box with the per-box uncertainty estimate:
 * (x, y, z, l, w, h, theta, var_x, var_y, var_theta) plus a confidence
 * score. Centers and heading are in the detecting agent's frame.
 */
struct BoxDetection
{
    double cx_hat = 0.0;
    double cy_hat = 0.0;
    double cz_hat = 0.0;
    double length = 1.0;
    double width = 1.0;
    double height = 1.0;
    double theta_hat = 0.0;
    double var_x = 1.0;
    double var_y = 1.0;
    double var_theta = 1.0;
    double confidence = 1.0;
    AgentId agent_id = 0;

    /* Throws std::invalid_argument naming the offending field */
    void validate() const;

    Pose2 pose() const { return Pose2{cx_hat, cy_hat, theta_hat}; }
    OrientedBox2 footprint() const { return OrientedBox2{cx_hat, cy_hat, length, width, theta_hat}; }

    /* The ten box parameters in canonical order */
    std::array<double, 10> parameters() const;
    static BoxDetection from_parameters(const std::array<double, 10>& b,
                                        double confidence, AgentId agent);

    /* Copy with center/heading replaced by `t * pose()` */
    BoxDetection transformed(const Pose2& t) const;
};

/* Diagonal information matrix diag(w_x, w_y, w_theta) */
class InfoMatrix3
{
public:
    InfoMatrix3(double wx, double wy, double wtheta);
    static InfoMatrix3 unit() { return {1.0, 1.0, 1.0}; }

    double wx() const { return mW(0); }
    double wy() const { return mW(1); }
    double wtheta() const { return mW(2); }
    const Eigen::Vector3d& diagonal() const { return mW; }
    Eigen::Matrix3d matrix() const { return mW.asDiagonal(); }

private:
    Eigen::Vector3d mW;
};

InfoMatrix3 information_matrix(const BoxDetection& box);

/* Loss value with gradient w.r.t. the two predicted quantities */
struct LossValue
{
    double loss;
    std::array<double, 2> grad;
};

/*
 * Gaussian-vs-delta KL loss on a center coordinate:
 *   (x_hat - x0)^2 / (2 var) + log(var) / 2
 * grad = (d/dx_hat, d/dvar). Throws if var <= 0.
 */
LossValue gaussian_center_loss(double x_hat, double var, double x0);

enum class CosineMode
{
    Absolute,  // |cos(theta_hat - theta0)|, as the loss is usually written
    Plain,     // cos(theta_hat - theta0), the textbook von-Mises NLL
};

/*
 * von-Mises-vs-delta KL loss on the heading with s = log(var_theta):
 *   log I0(exp(-s)) - exp(-s) * cos_term(theta_hat - theta0)
 * grad = (d/dtheta_hat, d/ds). Throws for non-finite s or s < -700.
 * At cos(d) == 0 the Absolute variant uses the one-sided derivative
 * with sign(+0) = +1.
 */
LossValue von_mises_angle_loss(double theta_hat, double s, double theta0,
                               CosineMode mode = CosineMode::Absolute);

/* lambda * ELU(s - c) */
double elu_regularizer(double s, double c = 1.0, double lambda = 0.01);

/* Modified Bessel function I0 (overflows past x ~ 713) */
double bessel_i0(double x);
/* log I0(x), finite for every finite x >= 0 */
double log_bessel_i0(double x);
/* I1(x) / I0(x) */
double bessel_i1_over_i0(double x);

} /* namespace coalign */

#endif /* COALIGN_UNCERTAINTY_HPP */
