#include "preprod/event_log.hpp"

#include <atomic>

namespace preprod {

Clock system_clock() {
    return [] {
        using namespace std::chrono;
        return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
    };
}

Clock logical_clock(Timestamp start, Timestamp step) {
    auto counter = std::make_shared<std::atomic<Timestamp>>(0);
    return [counter, start, step] { return start + step * counter->fetch_add(1); };
}

EventLog::EventLog(std::string session_id, Clock clock)
    : session_id_(std::move(session_id)), clock_(clock ? std::move(clock) : system_clock()) {}

SessionEvent EventLog::append(EventKind kind, AgentRole agent, json payload) {
    SessionEvent e;
    {
        std::lock_guard lock(mutex_);
        e.event_seq = static_cast<std::int64_t>(events_.size()) + 1;
        e.event_kind = kind;
        e.payload = std::move(payload);
        e.agent = agent;
        e.session_id = session_id_;
        e.timestamp = clock_();
        events_.push_back(e);
    }
    cv_.notify_all();
    return e;
}

std::vector<SessionEvent> EventLog::since(std::int64_t from_seq) const {
    std::lock_guard lock(mutex_);
    const auto first = static_cast<std::size_t>(std::max<std::int64_t>(from_seq, 1) - 1);
    if (first >= events_.size()) return {};
    return {events_.begin() + static_cast<std::ptrdiff_t>(first), events_.end()};
}

std::int64_t EventLog::last_seq() const {
    std::lock_guard lock(mutex_);
    return static_cast<std::int64_t>(events_.size());
}

std::size_t EventLog::size() const {
    std::lock_guard lock(mutex_);
    return events_.size();
}

bool EventLog::wait_for(std::int64_t seq, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    return cv_.wait_for(lock, timeout, [&] { return closed_ || static_cast<std::int64_t>(events_.size()) >= seq; }) &&
           static_cast<std::int64_t>(events_.size()) >= seq;
}

void EventLog::close() {
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
    }
    cv_.notify_all();
}

bool EventLog::closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
}

std::optional<SessionEvent> EventLog::Subscription::next(std::chrono::milliseconds timeout) {
    if (!log_->wait_for(next_, timeout)) return std::nullopt;
    std::lock_guard lock(log_->mutex_);
    auto e = log_->events_.at(static_cast<std::size_t>(next_ - 1));
    ++next_;
    return e;
}

} // namespace preprod
