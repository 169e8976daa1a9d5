#pragma once

#include "telewip/operators.hpp"
#include "telewip/trial.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace telewip {

struct ExperimentPlan {
    std::vector<MapName> maps{MapName::S1Static, MapName::S1Dynamic, MapName::S2StaticBright,
                              MapName::S2StaticDark, MapName::S2Dynamic};
    std::vector<FeedbackKind> modes{FeedbackKind::NF, FeedbackKind::FH, FeedbackKind::FC, FeedbackKind::Combo};
    int trials_static = 5;
    int trials_dynamic = 10;   // S2Dynamic
    int trials_override = 0;   // > 0 replaces both counts
    std::uint64_t master_seed = 1;

    void validate() const;
    int trials_for(MapName map) const;
};

/// One entry of the schedule. Seeds depend only on (master seed, map, index),
/// so trial `index` sees the same map and the same operator under every mode.
struct ScheduledTrial {
    int order = 0;
    MapName map = MapName::Empty;
    FeedbackKind mode = FeedbackKind::NF;
    int index = 0;
    std::uint64_t map_seed = 0;
    std::uint64_t operator_seed = 0;

    friend bool operator==(const ScheduledTrial&, const ScheduledTrial&) = default;
};

/// Maps run in plan order; within a map all (mode, index) pairs are shuffled
/// together by a generator seeded from the master seed and the map.
std::vector<ScheduledTrial> make_schedule(const ExperimentPlan& plan);

std::uint64_t derive_seed(std::uint64_t master, MapName map, int index, std::uint64_t stream);

struct Stat {
    int n = 0;
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation, 0 for n < 2
};

Stat describe(std::span<const double> values);

/// One (map, mode) row of the results table.
struct CaseSummary {
    MapName map = MapName::Empty;
    FeedbackKind mode = FeedbackKind::NF;
    int trials = 0;
    int successes = 0;
    int timeouts = 0;
    int falls = 0;
    int errors = 0;
    Stat completion_time;       // over successful trials only
    Stat collisions;            // per-trial counts; mean is the collision number
    Stat obstacle_collisions;
    Stat wall_collisions;
    Stat completed_distance;
    double success_rate = 0.0;
};

/// Per-(map, mode) aggregation in `maps` x `modes` order. Independent of the
/// order of `records`.
std::vector<CaseSummary> summarize(std::span<const TrialRecord> records, std::span<const MapName> maps,
                                   std::span<const FeedbackKind> modes);

struct ExperimentResult {
    std::vector<ScheduledTrial> schedule;
    std::vector<TrialRecord> records;  // schedule order
    std::vector<CaseSummary> table;
};

using ProgressFn = std::function<void(const ScheduledTrial&, const TrialRecord&)>;

/// Runs the schedule with `workers` threads (0 = hardware concurrency). A
/// trial that throws is recorded as aborted with reason "error: ...".
ExperimentResult run_experiment(const ExperimentPlan& plan, const TrialConfig& config, const OperatorParams& op,
                                unsigned workers = 1, const ProgressFn& progress = {});

TrialRecord run_scheduled(const ScheduledTrial& entry, const TrialConfig& config, const OperatorParams& op);

bool is_error_abort(const TrialRecord& rec);

std::string results_csv(std::span<const CaseSummary> table);

/// Writes trials/trial_NNNN.json, results.csv and results.json under `dir`.
void write_experiment(const ExperimentResult& result, const std::string& dir);

}  // namespace telewip
