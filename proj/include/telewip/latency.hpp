#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace telewip {

/// One-way delay drawn uniformly from [min, max] seconds.
struct LatencyModel {
    double min = 0.005;
    double max = 0.010;

    void validate() const {
        if (!(min >= 0.0) || !(max >= min)) throw std::invalid_argument("latency needs 0 <= min <= max");
    }
};

/// Seeded delay stream. Uses its own uniform mapping so a seed gives the same
/// sequence on every standard library.
class DelaySampler {
public:
    DelaySampler(LatencyModel model, std::uint64_t seed) : model_(model), rng_(seed) { model_.validate(); }

    double sample() {
        if (model_.max == model_.min) return model_.min;
        const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        return model_.min + (model_.max - model_.min) * u;
    }

    const LatencyModel& model() const { return model_; }

private:
    LatencyModel model_;
    std::mt19937_64 rng_;
};

/// Delivery time of a message sent at `send_time` on a stream whose previous
/// message is delivered at `last_delivery`. Never earlier than the previous
/// delivery, so the stream stays FIFO.
inline double inject_latency(double send_time, DelaySampler& sampler, double last_delivery) {
    const double t = send_time + sampler.sample();
    return t < last_delivery ? last_delivery : t;
}

/// One direction of a delayed link.
template <typename T>
class LatencyQueue {
public:
    LatencyQueue(LatencyModel model, std::uint64_t seed) : sampler_(model, seed) {}

    /// Returns the delivery time assigned to `item`.
    double push(double send_time, T item) {
        last_ = inject_latency(send_time, sampler_, last_);
        items_.emplace_back(last_, std::move(item));
        return last_;
    }

    /// Items due at or before `now`, in send order.
    std::vector<T> pop_ready(double now) {
        std::vector<T> out;
        while (!items_.empty() && items_.front().first <= now) {
            out.push_back(std::move(items_.front().second));
            items_.pop_front();
        }
        return out;
    }

    bool empty() const { return items_.empty(); }
    std::size_t size() const { return items_.size(); }
    double next_delivery() const {
        return items_.empty() ? std::numeric_limits<double>::infinity() : items_.front().first;
    }

private:
    DelaySampler sampler_;
    double last_ = -std::numeric_limits<double>::infinity();
    std::deque<std::pair<double, T>> items_;
};

}  // namespace telewip
