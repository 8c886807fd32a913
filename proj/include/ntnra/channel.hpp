#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include "ntnra/timing.hpp"

namespace ntnra::channel {

using timing::Duration;
using timing::TimeStamp;

inline const Duration kMaxRtt = Duration::ms(600);

enum class Direction { Downlink, Uplink };

// Optional impairments; the default leaves the channel ideal.
struct Impairments {
    double loss_probability = 0.0;
    Duration max_jitter{0};
    std::uint64_t seed = 0;
};

// Fixed-delay FIFO for one direction.
template <typename Message>
class DelayLine {
public:
    struct InFlight {
        Message message;
        TimeStamp enqueued;
        TimeStamp release;
    };

    explicit DelayLine(Duration delay = Duration{0}) { set_delay(delay); }

    void set_delay(Duration d)
    {
        if (d.count() < 0) throw std::invalid_argument("negative one-way delay");
        if (!queue_.empty()) throw std::logic_error("cannot change the delay with messages in flight");
        delay_ = d;
    }
    Duration delay() const { return delay_; }

    void set_impairments(const Impairments& imp)
    {
        if (imp.loss_probability < 0 || imp.loss_probability > 1 || imp.max_jitter.count() < 0)
            throw std::invalid_argument("bad impairment settings");
        imp_ = imp;
        rng_.seed(imp.seed);
    }

    // Release time of the message, or nullopt when the impairment model drops it.
    std::optional<TimeStamp> send(Message m, TimeStamp now)
    {
        if (last_enqueue_ && now < *last_enqueue_) throw std::logic_error("non-monotone enqueue time");
        last_enqueue_ = now;
        ++sent_;
        if (imp_.loss_probability > 0 && std::bernoulli_distribution(imp_.loss_probability)(rng_)) {
            ++dropped_;
            return std::nullopt;
        }
        auto release = now + delay_;
        if (imp_.max_jitter.count() > 0)
            release = release + Duration(std::uniform_int_distribution<std::int64_t>(0, imp_.max_jitter.count())(rng_));
        // jitter never overtakes an earlier message
        if (!queue_.empty() && release < queue_.back().release) release = queue_.back().release;
        queue_.push_back({std::move(m), now, release});
        return release;
    }

    bool has_due(TimeStamp now) const { return !queue_.empty() && queue_.front().release <= now; }

    // throws std::logic_error when nothing is due
    InFlight deliver(TimeStamp now)
    {
        if (!has_due(now)) throw std::logic_error("no message due at " + timing::to_string(now));
        auto f = std::move(queue_.front());
        queue_.pop_front();
        ++delivered_;
        return f;
    }

    std::size_t in_flight() const { return queue_.size(); }
    std::uint64_t sent() const { return sent_; }
    std::uint64_t delivered() const { return delivered_; }
    std::uint64_t dropped() const { return dropped_; }

private:
    Duration delay_{0};
    std::deque<InFlight> queue_;
    std::optional<TimeStamp> last_enqueue_;
    Impairments imp_;
    std::mt19937_64 rng_;
    std::uint64_t sent_ = 0;
    std::uint64_t delivered_ = 0;
    std::uint64_t dropped_ = 0;
};

// Both directions of one UE-BS link.
template <typename Message>
class DelayChannel {
public:
    DelayChannel() = default;
    explicit DelayChannel(Duration rtt) { set_rtt(rtt); }

    // splits rtt into downlink = floor(rtt/2) samples and uplink = the rest
    void set_rtt(Duration rtt)
    {
        if (rtt.count() < 0 || rtt > kMaxRtt) throw std::invalid_argument("RTT outside [0, 600 ms]");
        set_delays(Duration(rtt.count() / 2), Duration(rtt.count() - rtt.count() / 2));
    }
    void set_delays(Duration downlink, Duration uplink)
    {
        downlink_.set_delay(downlink);
        uplink_.set_delay(uplink);
    }
    Duration rtt() const { return downlink_.delay() + uplink_.delay(); }

    DelayLine<Message>& line(Direction d) { return d == Direction::Downlink ? downlink_ : uplink_; }
    const DelayLine<Message>& line(Direction d) const { return d == Direction::Downlink ? downlink_ : uplink_; }
    DelayLine<Message>& downlink() { return downlink_; }
    DelayLine<Message>& uplink() { return uplink_; }
    const DelayLine<Message>& downlink() const { return downlink_; }
    const DelayLine<Message>& uplink() const { return uplink_; }

private:
    DelayLine<Message> downlink_;
    DelayLine<Message> uplink_;
};

}  // namespace ntnra::channel
