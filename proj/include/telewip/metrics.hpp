#pragma once

#include "telewip/trial.hpp"

#include <optional>
#include <span>

namespace telewip {

/// C-T: time to goal; absent unless the trial succeeded.
std::optional<double> metric_completion_time(const TrialRecord& rec);

/// C-N: total collisions over the case divided by its trial count.
double metric_collision_number(std::span<const TrialRecord> records);

/// C-D: furthest x reached (monotone envelope of the trajectory) over the
/// start-to-goal x span, clamped to [0, 1].
double metric_completed_distance(const TrialRecord& rec, double start_x, double goal_x);
double metric_completed_distance(const TrialRecord& rec, const MapSpec& map);

/// S-R: successful trials over all trials.
double metric_success_rate(std::span<const TrialRecord> records);

/// Per-trial metrics from the record's own logs.
TrialMetrics compute_metrics(const TrialRecord& rec);

}  // namespace telewip
