/* geometry.hpp */

#ifndef COALIGN_GEOMETRY_HPP
#define COALIGN_GEOMETRY_HPP

#include <array>
#include <vector>

#include <Eigen/Core>

namespace coalign {

/* Wraps an angle into (-pi, pi]. Throws std::invalid_argument on NaN/Inf. */
double normalize_angle(double angle);

/*
 * Pose2 is a planar rigid transform (x, y, theta). The heading is kept
 * in (-pi, pi] and all components are finite; the constructor enforces
 * both, so every Pose2 in circulation is valid.
 */
class Pose2
{
public:
    Pose2() = default;
    Pose2(double x, double y, double theta);

    static Pose2 identity() { return Pose2{}; }
    static Pose2 from_vector(const Eigen::Vector3d& v) { return Pose2{v(0), v(1), v(2)}; }

    double x() const { return mX; }
    double y() const { return mY; }
    double theta() const { return mTheta; }

    Eigen::Vector2d translation() const { return {mX, mY}; }
    Eigen::Matrix2d rotation() const;
    Eigen::Vector3d vector() const { return {mX, mY, mTheta}; }

    /* Maps a point expressed in this frame into the parent frame */
    Eigen::Vector2d transform_point(const Eigen::Vector2d& p) const;

    bool operator==(const Pose2&) const = default;

private:
    double mX = 0.0;
    double mY = 0.0;
    double mTheta = 0.0;
};

/* T(a) * T(b) on homogeneous matrices */
Pose2 compose(const Pose2& a, const Pose2& b);
Pose2 inverse(const Pose2& p);

/* Applies `delta` component-wise and renormalizes the heading */
Pose2 additive_update(const Pose2& p, const Eigen::Vector3d& delta);

/*
 * Pose consistency residual between an agent pose `xi`, an object pose
 * `chi` and the agent's local measurement `z` of that object: the
 * (x, y, theta) coordinates of z^-1 * (xi^-1 * chi). Zero iff
 * chi == xi * z.
 */
Eigen::Vector3d consistency_error(const Pose2& z, const Pose2& xi, const Pose2& chi);

/* Residual plus its Jacobians w.r.t. the (x, y, theta) of xi and chi */
struct ConsistencyJacobians
{
    Eigen::Vector3d error;
    Eigen::Matrix3d d_agent;
    Eigen::Matrix3d d_object;
};

ConsistencyJacobians consistency_error_with_jacobians(
    const Pose2& z, const Pose2& xi, const Pose2& chi);

/* Bird's-eye-view footprint of a box; length runs along the heading */
class OrientedBox2
{
public:
    OrientedBox2(double cx, double cy, double length, double width, double heading);
    OrientedBox2(const Pose2& pose, double length, double width);

    double cx() const { return mCx; }
    double cy() const { return mCy; }
    double length() const { return mLength; }
    double width() const { return mWidth; }
    double heading() const { return mHeading; }
    double area() const { return mLength * mWidth; }
    Pose2 pose() const { return Pose2{mCx, mCy, mHeading}; }

    /* Counter-clockwise corners */
    std::array<Eigen::Vector2d, 4> corners() const;

    /* Same footprint seen through a rigid transform applied from the left */
    OrientedBox2 transformed(const Pose2& t) const;

private:
    double mCx;
    double mCy;
    double mLength;
    double mWidth;
    double mHeading;
};

using Polygon2 = std::vector<Eigen::Vector2d>;

/* Shoelace area; positive for counter-clockwise vertex order */
double polygon_area(const Polygon2& poly);

/* Sutherland-Hodgman clip of `subject` against a convex CCW `clip` polygon */
Polygon2 clip_convex(const Polygon2& subject, const Polygon2& clip);

/* Exact intersection-over-union of two BEV footprints */
double rotated_iou_bev(const OrientedBox2& a, const OrientedBox2& b);

} /* namespace coalign */

#endif /* COALIGN_GEOMETRY_HPP */
