#pragma once

// Append-only, sequence-numbered session event log with replay and live
// fan-out to any number of subscribers.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "preprod/domain.hpp"

namespace preprod {

using Clock = std::function<Timestamp()>;

/// Wall-clock UTC milliseconds.
Clock system_clock();
/// Deterministic clock: start, start+step, start+2*step, ...
Clock logical_clock(Timestamp start = 1'700'000'000'000, Timestamp step = 1000);

class EventLog {
public:
    EventLog(std::string session_id, Clock clock);

    /// Assigns the next sequence number (first event is 1) and a timestamp.
    SessionEvent append(EventKind kind, AgentRole agent, json payload);

    /// Events with event_seq >= from_seq.
    std::vector<SessionEvent> since(std::int64_t from_seq) const;
    std::vector<SessionEvent> all() const { return since(0); }
    std::int64_t last_seq() const;
    std::size_t size() const;

    /// Waits until an event with event_seq >= seq exists. False on timeout or close.
    bool wait_for(std::int64_t seq, std::chrono::milliseconds timeout) const;

    /// Wakes every waiter; later waits return immediately.
    void close();
    bool closed() const;

    /// Replays from `from_seq`, then follows live appends.
    class Subscription {
    public:
        Subscription(const EventLog& log, std::int64_t from_seq) : log_(&log), next_(std::max<std::int64_t>(from_seq, 1)) {}
        /// Next event, or nullopt after `timeout` without one.
        std::optional<SessionEvent> next(std::chrono::milliseconds timeout);
        std::int64_t next_seq() const noexcept { return next_; }

    private:
        const EventLog* log_;
        std::int64_t next_;
    };

    Subscription subscribe(std::int64_t from_seq) const { return Subscription(*this, from_seq); }

private:
    std::string session_id_;
    Clock clock_;
    mutable std::mutex mutex_;
    mutable std::condition_variable cv_;
    std::vector<SessionEvent> events_;
    bool closed_ = false;
};

} // namespace preprod
