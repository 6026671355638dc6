#pragma once

#include <cmath>

namespace gridnav {

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a <= 0.0) a += 2.0 * kPi;
    return a - kPi;
}

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double squared_norm() const { return x * x + y * y; }
};

inline Vec2 rotate(Vec2 v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Planar rigid transform, also used as a robot pose in the world frame.
/// theta is kept in (-pi, pi].
struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    Vec2 position() const { return {x, y}; }
    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta);
    }
};

inline Pose2 pose_identity() { return {0.0, 0.0, 0.0}; }

/// Group composition a * b (apply b in a's frame).
inline Pose2 compose(const Pose2& a, const Pose2& b) {
    const double c = std::cos(a.theta), s = std::sin(a.theta);
    return {a.x + c * b.x - s * b.y,
            a.y + s * b.x + c * b.y,
            normalize_angle(a.theta + b.theta)};
}

inline Pose2 inverse(const Pose2& p) {
    const double c = std::cos(p.theta), s = std::sin(p.theta);
    return {-(c * p.x + s * p.y),
            -(-s * p.x + c * p.y),
            normalize_angle(-p.theta)};
}

/// Difference a^-1 * b: the motion that takes frame a to frame b.
inline Pose2 between(const Pose2& a, const Pose2& b) {
    return compose(inverse(a), b);
}

/// Maps a point from the local frame of p into the world frame.
inline Vec2 transform_point(const Pose2& p, Vec2 q) {
    const double c = std::cos(p.theta), s = std::sin(p.theta);
    return {p.x + c * q.x - s * q.y, p.y + s * q.x + c * q.y};
}

/// Rigid motion estimate produced by the registration solver.
struct Transform2 {
    double rotation = 0.0;           // radians
    Vec2 translation{0.0, 0.0};      // meters
    double residual = 0.0;           // mean squared correspondence error
    int iterations = 0;
    bool converged = false;

    Pose2 to_pose() const { return {translation.x, translation.y, normalize_angle(rotation)}; }
    bool finite() const {
        return std::isfinite(rotation) && std::isfinite(translation.x) &&
               std::isfinite(translation.y);
    }
};

inline Transform2 transform_from_pose(const Pose2& p) {
    Transform2 t;
    t.rotation = p.theta;
    t.translation = {p.x, p.y};
    return t;
}

inline Transform2 transform_identity() { return {}; }

}  // namespace gridnav
