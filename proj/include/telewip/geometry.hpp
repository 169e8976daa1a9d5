#pragma once

#include <cmath>

namespace telewip {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double norm_sq(Vec2 a) { return a.x * a.x + a.y * a.y; }

/// Vector `a` expressed in a frame rotated by `angle`.
inline Vec2 rotate_into(Vec2 a, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * a.x + s * a.y, -s * a.x + c * a.y};
}

/// Closest point to `p` on segment [a, b].
Vec2 closest_point_on_segment(Vec2 p, Vec2 a, Vec2 b);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

/// True when segment [a, b] comes within `radius` of `center`.
bool segment_intersects_disc(Vec2 a, Vec2 b, Vec2 center, double radius);

}  // namespace telewip
