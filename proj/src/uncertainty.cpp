/* uncertainty.cpp */

#include "coalign/uncertainty.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace coalign {

namespace {

/* Power series is used up to here, the asymptotic expansion beyond */
constexpr double kBesselSeriesLimit = 15.0;
constexpr double kMinLogVariance = -700.0;

void require(bool ok, const std::string& message)
{
    if (!ok)
        throw std::invalid_argument(message);
}

bool positive_finite(double v)
{
    return std::isfinite(v) && v > 0.0;
}

/* sum_k (x^2/4)^k / (k! (k + order)!) scaled by (x/2)^order */
double bessel_series(double x, int order)
{
    const double q = 0.25 * x * x;
    double term = order == 0 ? 1.0 : 0.5 * x;
    double sum = term;
    for (int k = 1; k < 500; ++k) {
        term *= q / (static_cast<double>(k) * static_cast<double>(k + order));
        sum += term;
        if (term < std::numeric_limits<double>::epsilon() * 1e-2 * sum)
            break;
    }
    return sum;
}

/*
 * Bracketed sum of the large-argument expansion
 *   I_nu(x) ~ e^x / sqrt(2 pi x) * sum_k (-1)^k a_k(nu) / x^k,
 * truncated at the smallest term.
 */
double bessel_asymptotic_sum(double x, int order)
{
    const double mu = 4.0 * order * order;
    double term = 1.0;
    double sum = 1.0;
    double lastMagnitude = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        const double next = term * -(mu - odd * odd) / (8.0 * k * x);
        if (std::abs(next) >= lastMagnitude)
            break;
        term = next;
        sum += term;
        lastMagnitude = std::abs(term);
        if (lastMagnitude < std::numeric_limits<double>::epsilon() * 1e-2 * std::abs(sum))
            break;
    }
    return sum;
}

} /* namespace */

void BoxDetection::validate() const
{
    require(std::isfinite(cx_hat) && std::isfinite(cy_hat) && std::isfinite(cz_hat),
            "box center must be finite");
    require(positive_finite(length), "box length must be positive");
    require(positive_finite(width), "box width must be positive");
    require(positive_finite(height), "box height must be positive");
    require(std::isfinite(theta_hat), "box theta_hat must be finite");
    require(normalize_angle(theta_hat) == theta_hat, "box theta_hat must lie in (-pi, pi]");
    require(positive_finite(var_x), "box var_x must be positive");
    require(positive_finite(var_y), "box var_y must be positive");
    require(positive_finite(var_theta), "box var_theta must be positive");
    require(confidence >= 0.0 && confidence <= 1.0, "box confidence must lie in [0, 1]");
}

std::array<double, 10> BoxDetection::parameters() const
{
    return {cx_hat, cy_hat, cz_hat, length, width, height, theta_hat, var_x, var_y, var_theta};
}

BoxDetection BoxDetection::from_parameters(const std::array<double, 10>& b,
                                           double confidence, AgentId agent)
{
    BoxDetection box;
    box.cx_hat = b[0];
    box.cy_hat = b[1];
    box.cz_hat = b[2];
    box.length = b[3];
    box.width = b[4];
    box.height = b[5];
    box.theta_hat = b[6];
    box.var_x = b[7];
    box.var_y = b[8];
    box.var_theta = b[9];
    box.confidence = confidence;
    box.agent_id = agent;
    box.validate();
    return box;
}

BoxDetection BoxDetection::transformed(const Pose2& t) const
{
    BoxDetection out = *this;
    const Pose2 p = compose(t, pose());
    out.cx_hat = p.x();
    out.cy_hat = p.y();
    out.theta_hat = p.theta();
    return out;
}

InfoMatrix3::InfoMatrix3(double wx, double wy, double wtheta) :
    mW(wx, wy, wtheta)
{
    require(positive_finite(wx) && positive_finite(wy) && positive_finite(wtheta),
            "information matrix entries must be positive and finite");
}

InfoMatrix3 information_matrix(const BoxDetection& box)
{
    box.validate();
    return {1.0 / box.var_x, 1.0 / box.var_y, 1.0 / box.var_theta};
}

LossValue gaussian_center_loss(double x_hat, double var, double x0)
{
    require(positive_finite(var), "variance must be positive");
    const double r = x_hat - x0;
    const double loss = r * r / (2.0 * var) + 0.5 * std::log(var);
    const double dXhat = r / var;
    const double dVar = -r * r / (2.0 * var * var) + 1.0 / (2.0 * var);
    return {loss, {dXhat, dVar}};
}

LossValue von_mises_angle_loss(double theta_hat, double s, double theta0, CosineMode mode)
{
    require(std::isfinite(s), "log-variance must be finite");
    require(s >= kMinLogVariance, "log-variance below -700 overflows the concentration");
    require(std::isfinite(theta_hat) && std::isfinite(theta0), "angles must be finite");

    const double kappa = std::exp(-s);
    const double d = theta_hat - theta0;
    const double c = std::cos(d);
    const double sn = std::sin(d);

    double cosTerm = c;
    double dCosTerm = -sn;
    if (mode == CosineMode::Absolute) {
        const double sign = std::signbit(c) ? -1.0 : 1.0;
        cosTerm = std::abs(c);
        dCosTerm = -sign * sn;
    }

    const double loss = log_bessel_i0(kappa) - kappa * cosTerm;
    const double dTheta = -kappa * dCosTerm;
    const double dS = -kappa * bessel_i1_over_i0(kappa) + kappa * cosTerm;
    return {loss, {dTheta, dS}};
}

double elu_regularizer(double s, double c, double lambda)
{
    require(std::isfinite(s) && std::isfinite(c), "ELU inputs must be finite");
    require(std::isfinite(lambda) && lambda >= 0.0, "ELU weight must be non-negative");
    const double u = s - c;
    return lambda * (u >= 0.0 ? u : std::expm1(u));
}

double bessel_i0(double x)
{
    x = std::abs(x);
    if (x <= kBesselSeriesLimit)
        return bessel_series(x, 0);
    return std::exp(log_bessel_i0(x));
}

double log_bessel_i0(double x)
{
    require(std::isfinite(x), "Bessel argument must be finite");
    x = std::abs(x);
    if (x <= kBesselSeriesLimit)
        return std::log(bessel_series(x, 0));
    return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(bessel_asymptotic_sum(x, 0));
}

double bessel_i1_over_i0(double x)
{
    require(std::isfinite(x), "Bessel argument must be finite");
    const double sign = x < 0.0 ? -1.0 : 1.0;
    x = std::abs(x);
    if (x <= kBesselSeriesLimit)
        return sign * bessel_series(x, 1) / bessel_series(x, 0);
    return sign * bessel_asymptotic_sum(x, 1) / bessel_asymptotic_sum(x, 0);
}

} /* namespace coalign */
