#include "telewip/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace telewip {

std::optional<double> metric_completion_time(const TrialRecord& rec) {
    if (rec.outcome != Outcome::Success) return std::nullopt;
    return rec.end_time;
}

double metric_collision_number(std::span<const TrialRecord> records) {
    if (records.empty()) return 0.0;
    std::size_t total = 0;
    for (const TrialRecord& r : records) total += r.collisions.size();
    return static_cast<double>(total) / static_cast<double>(records.size());
}

double metric_completed_distance(const TrialRecord& rec, double start_x, double goal_x) {
    const double span = goal_x - start_x;
    if (!(span > 0.0)) throw std::invalid_argument("completed distance needs goal_x > start_x");
    double furthest = start_x;
    for (const TrajectorySample& s : rec.trajectory) furthest = std::max(furthest, s.state.x);
    return std::clamp((furthest - start_x) / span, 0.0, 1.0);
}

double metric_completed_distance(const TrialRecord& rec, const MapSpec& map) {
    return metric_completed_distance(rec, map.start.x, map.goal_x);
}

double metric_success_rate(std::span<const TrialRecord> records) {
    if (records.empty()) return 0.0;
    const auto ok = std::count_if(records.begin(), records.end(),
                                  [](const TrialRecord& r) { return r.outcome == Outcome::Success; });
    return static_cast<double>(ok) / static_cast<double>(records.size());
}

TrialMetrics compute_metrics(const TrialRecord& rec) {
    TrialMetrics m;
    m.completion_time = metric_completion_time(rec);
    m.completed_distance = metric_completed_distance(rec, rec.start_x, rec.goal_x);
    m.collisions = static_cast<int>(rec.collisions.size());
    for (const CollisionEvent& e : rec.collisions) {
        (e.target == CollisionTarget::Wall ? m.wall_collisions : m.obstacle_collisions) += 1;
    }
    return m;
}

}  // namespace telewip
