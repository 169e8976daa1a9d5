#include "telewip/experiment.hpp"

#include "telewip/metrics.hpp"
#include "telewip/record_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace telewip {

void ExperimentPlan::validate() const {
    if (maps.empty()) throw std::invalid_argument("plan needs at least one map");
    if (modes.empty()) throw std::invalid_argument("plan needs at least one mode");
    if (trials_override < 0) throw std::invalid_argument("plan trials must be >= 0");
    if (trials_override == 0 && (trials_static < 1 || trials_dynamic < 1))
        throw std::invalid_argument("plan trial counts must be >= 1");
}

int ExperimentPlan::trials_for(MapName map) const {
    if (trials_override > 0) return trials_override;
    return map == MapName::S2Dynamic ? trials_dynamic : trials_static;
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, MapName map, int index, std::uint64_t stream) {
    std::uint64_t h = splitmix(master);
    h = splitmix(h ^ static_cast<std::uint64_t>(map));
    h = splitmix(h ^ static_cast<std::uint64_t>(index));
    return splitmix(h ^ stream);
}

std::vector<ScheduledTrial> make_schedule(const ExperimentPlan& plan) {
    plan.validate();
    std::vector<ScheduledTrial> out;
    for (MapName map : plan.maps) {
        std::vector<ScheduledTrial> block;
        const int n = plan.trials_for(map);
        for (FeedbackKind mode : plan.modes) {
            for (int i = 0; i < n; ++i) {
                ScheduledTrial t;
                t.map = map;
                t.mode = mode;
                t.index = i;
                t.map_seed = derive_seed(plan.master_seed, map, i, 0);
                t.operator_seed = derive_seed(plan.master_seed, map, i, 1);
                block.push_back(t);
            }
        }
        // Fisher-Yates with an explicit draw so the order is the same on every
        // standard library.
        std::mt19937_64 rng(derive_seed(plan.master_seed, map, -1, 2));
        for (std::size_t i = block.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng() % i);
            std::swap(block[i - 1], block[j]);
        }
        out.insert(out.end(), block.begin(), block.end());
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].order = static_cast<int>(i);
    return out;
}

Stat describe(std::span<const double> values) {
    Stat s;
    s.n = static_cast<int>(values.size());
    if (values.empty()) return s;
    // Sorting first makes the sums independent of the input order.
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

bool is_error_abort(const TrialRecord& rec) {
    return rec.outcome == Outcome::Aborted && rec.abort_reason.rfind("error", 0) == 0;
}

std::vector<CaseSummary> summarize(std::span<const TrialRecord> records, std::span<const MapName> maps,
                                   std::span<const FeedbackKind> modes) {
    std::vector<CaseSummary> table;
    for (MapName map : maps) {
        for (FeedbackKind mode : modes) {
            CaseSummary row;
            row.map = map;
            row.mode = mode;
            std::vector<TrialRecord> cases;
            std::vector<double> ct, cn, obs, wall, cd;
            for (const TrialRecord& r : records) {
                if (r.map != map || r.mode != mode) continue;
                cases.push_back(r);
                ++row.trials;
                row.successes += r.outcome == Outcome::Success;
                row.timeouts += r.outcome == Outcome::Timeout;
                row.falls += r.outcome == Outcome::Aborted && r.abort_reason == "fall";
                row.errors += is_error_abort(r);
                if (const auto t = metric_completion_time(r)) ct.push_back(*t);
                cn.push_back(static_cast<double>(r.metrics.collisions));
                obs.push_back(static_cast<double>(r.metrics.obstacle_collisions));
                wall.push_back(static_cast<double>(r.metrics.wall_collisions));
                cd.push_back(r.metrics.completed_distance);
            }
            row.completion_time = describe(ct);
            row.collisions = describe(cn);
            row.obstacle_collisions = describe(obs);
            row.wall_collisions = describe(wall);
            row.completed_distance = describe(cd);
            row.success_rate = metric_success_rate(cases);
            table.push_back(row);
        }
    }
    return table;
}

TrialRecord run_scheduled(const ScheduledTrial& entry, const TrialConfig& config, const OperatorParams& op) {
    OperatorParams params = op;
    params.seed = entry.operator_seed;
    try {
        const MapSpec map = make_map(entry.map, entry.map_seed, config.map);
        return run_trial(map, entry.mode, params, config);
    } catch (const std::exception& e) {
        TrialRecord rec;
        rec.map = entry.map;
        rec.map_seed = entry.map_seed;
        rec.mode = entry.mode;
        rec.operator_params = params;
        rec.config = config;
        rec.outcome = Outcome::Aborted;
        rec.abort_reason = std::string("error: ") + e.what();
        return rec;
    }
}

ExperimentResult run_experiment(const ExperimentPlan& plan, const TrialConfig& config, const OperatorParams& op,
                                unsigned workers, const ProgressFn& progress) {
    ExperimentResult result;
    result.schedule = make_schedule(plan);
    result.records.resize(result.schedule.size());
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, result.schedule.size())));

    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < result.schedule.size(); i = next++) {
            result.records[i] = run_scheduled(result.schedule[i], config, op);
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(result.schedule[i], result.records[i]);
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    result.table = summarize(result.records, plan.maps, plan.modes);
    return result;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

std::string results_csv(std::span<const CaseSummary> table) {
    std::ostringstream out;
    out << "map,mode,trials,successes,timeouts,falls,errors,success_rate,"
           "ct_n,ct_mean,ct_std,cn_mean,cn_std,cn_obstacle_mean,cn_wall_mean,cd_mean,cd_std\n";
    for (const CaseSummary& r : table) {
        out << to_string(r.map) << ',' << to_string(r.mode) << ',' << r.trials << ',' << r.successes << ','
            << r.timeouts << ',' << r.falls << ',' << r.errors << ',' << fmt(r.success_rate) << ','
            << r.completion_time.n << ',';
        if (r.completion_time.n > 0) out << fmt(r.completion_time.mean) << ',' << fmt(r.completion_time.std);
        else out << ',';
        out << ',' << fmt(r.collisions.mean) << ',' << fmt(r.collisions.std) << ',' << fmt(r.obstacle_collisions.mean)
            << ',' << fmt(r.wall_collisions.mean) << ',' << fmt(r.completed_distance.mean) << ','
            << fmt(r.completed_distance.std) << '\n';
    }
    return out.str();
}

void write_experiment(const ExperimentResult& result, const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root / "trials");
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "trial_%04zu.json", i);
        save_trial(result.records[i], (root / "trials" / name).string());
    }
    {
        std::ofstream out(root / "results.csv");
        out << results_csv(result.table);
    }
    {
        std::ofstream out(root / "results.json");
        out << results_to_json(result.table).dump(2) << '\n';
    }
}

}  // namespace telewip
