/* geometry.cpp */

#include "coalign/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace coalign {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_finite(double v, const char* what)
{
    if (!std::isfinite(v))
        throw std::invalid_argument(std::string(what) + " must be finite");
}

/* Signed area of the parallelogram (b - a) x (p - a) */
double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p)
{
    return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

} /* namespace */

double normalize_angle(double angle)
{
    require_finite(angle, "angle");
    double r = std::remainder(angle, kTwoPi);
    if (r <= -kPi)
        r += kTwoPi;
    if (r > kPi)
        r -= kTwoPi;
    return r;
}

Pose2::Pose2(double x, double y, double theta) :
    mX(x), mY(y), mTheta(0.0)
{
    require_finite(x, "Pose2.x");
    require_finite(y, "Pose2.y");
    mTheta = normalize_angle(theta);
}

Eigen::Matrix2d Pose2::rotation() const
{
    const double c = std::cos(mTheta);
    const double s = std::sin(mTheta);
    Eigen::Matrix2d r;
    r << c, -s,
         s,  c;
    return r;
}

Eigen::Vector2d Pose2::transform_point(const Eigen::Vector2d& p) const
{
    return rotation() * p + translation();
}

Pose2 compose(const Pose2& a, const Pose2& b)
{
    const Eigen::Vector2d t = a.transform_point(b.translation());
    return Pose2{t.x(), t.y(), a.theta() + b.theta()};
}

Pose2 inverse(const Pose2& p)
{
    const Eigen::Vector2d t = -(p.rotation().transpose() * p.translation());
    return Pose2{t.x(), t.y(), -p.theta()};
}

Pose2 additive_update(const Pose2& p, const Eigen::Vector3d& delta)
{
    return Pose2{p.x() + delta(0), p.y() + delta(1), p.theta() + delta(2)};
}

Eigen::Vector3d consistency_error(const Pose2& z, const Pose2& xi, const Pose2& chi)
{
    return compose(inverse(z), compose(inverse(xi), chi)).vector();
}

ConsistencyJacobians consistency_error_with_jacobians(
    const Pose2& z, const Pose2& xi, const Pose2& chi)
{
    ConsistencyJacobians out;
    out.error = consistency_error(z, xi, chi);

    const Eigen::Matrix2d rzT = z.rotation().transpose();
    const Eigen::Matrix2d rjT = xi.rotation().transpose();
    const Eigen::Vector2d dt = chi.translation() - xi.translation();

    const double c = std::cos(xi.theta());
    const double s = std::sin(xi.theta());
    Eigen::Matrix2d drjT;
    drjT << -s,  c,
            -c, -s;

    const Eigen::Matrix2d rot = rzT * rjT;

    out.d_agent.setZero();
    out.d_agent.topLeftCorner<2, 2>() = -rot;
    out.d_agent.block<2, 1>(0, 2) = rzT * drjT * dt;
    out.d_agent(2, 2) = -1.0;

    out.d_object.setZero();
    out.d_object.topLeftCorner<2, 2>() = rot;
    out.d_object(2, 2) = 1.0;
    return out;
}

OrientedBox2::OrientedBox2(double cx, double cy, double length, double width, double heading) :
    mCx(cx), mCy(cy), mLength(length), mWidth(width), mHeading(0.0)
{
    require_finite(cx, "box.cx");
    require_finite(cy, "box.cy");
    if (!(length > 0.0) || !std::isfinite(length))
        throw std::invalid_argument("box length must be positive");
    if (!(width > 0.0) || !std::isfinite(width))
        throw std::invalid_argument("box width must be positive");
    mHeading = normalize_angle(heading);
}

OrientedBox2::OrientedBox2(const Pose2& pose, double length, double width) :
    OrientedBox2(pose.x(), pose.y(), length, width, pose.theta())
{
}

std::array<Eigen::Vector2d, 4> OrientedBox2::corners() const
{
    const Pose2 p = pose();
    const double hl = 0.5 * mLength;
    const double hw = 0.5 * mWidth;
    return {p.transform_point({ hl,  hw}),
            p.transform_point({-hl,  hw}),
            p.transform_point({-hl, -hw}),
            p.transform_point({ hl, -hw})};
}

OrientedBox2 OrientedBox2::transformed(const Pose2& t) const
{
    return OrientedBox2{compose(t, pose()), mLength, mWidth};
}

double polygon_area(const Polygon2& poly)
{
    const std::size_t n = poly.size();
    if (n < 3)
        return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % n];
        twice += a.x() * b.y() - b.x() * a.y();
    }
    return 0.5 * twice;
}

Polygon2 clip_convex(const Polygon2& subject, const Polygon2& clip)
{
    Polygon2 output = subject;
    const std::size_t m = clip.size();
    for (std::size_t e = 0; e < m && !output.empty(); ++e) {
        const Eigen::Vector2d& a = clip[e];
        const Eigen::Vector2d& b = clip[(e + 1) % m];

        Polygon2 input;
        input.swap(output);
        const std::size_t n = input.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::Vector2d& cur = input[i];
            const Eigen::Vector2d& prev = input[(i + n - 1) % n];
            const double dCur = cross(a, b, cur);
            const double dPrev = cross(a, b, prev);
            const bool curIn = dCur >= 0.0;
            const bool prevIn = dPrev >= 0.0;
            if (curIn != prevIn) {
                const double t = dPrev / (dPrev - dCur);
                output.push_back(prev + t * (cur - prev));
            }
            if (curIn)
                output.push_back(cur);
        }
    }
    return output;
}

double rotated_iou_bev(const OrientedBox2& a, const OrientedBox2& b)
{
    if (a.cx() == b.cx() && a.cy() == b.cy() && a.length() == b.length() &&
        a.width() == b.width() && a.heading() == b.heading())
        return 1.0;

    const double dx = a.cx() - b.cx();
    const double dy = a.cy() - b.cy();
    const double ra = 0.5 * std::hypot(a.length(), a.width());
    const double rb = 0.5 * std::hypot(b.length(), b.width());
    if (std::hypot(dx, dy) >= ra + rb)
        return 0.0;

    const auto ca = a.corners();
    const auto cb = b.corners();
    const Polygon2 pa(ca.begin(), ca.end());
    const Polygon2 pb(cb.begin(), cb.end());

    const double inter = std::max(0.0, polygon_area(clip_convex(pa, pb)));
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0)
        return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

} /* namespace coalign */
