#include "telewip/geometry.hpp"

#include <algorithm>

namespace telewip {

Vec2 closest_point_on_segment(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len_sq = norm_sq(ab);
    if (len_sq == 0.0) return a;
    const double t = std::clamp(dot(p - a, ab) / len_sq, 0.0, 1.0);
    return a + t * ab;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    return norm(p - closest_point_on_segment(p, a, b));
}

bool segment_intersects_disc(Vec2 a, Vec2 b, Vec2 center, double radius) {
    return point_segment_distance(center, a, b) <= radius;
}

}  // namespace telewip
