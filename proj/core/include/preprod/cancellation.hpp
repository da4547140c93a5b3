#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "preprod/error.hpp"

namespace preprod {

/// Set-once cancellation flag carried by every request. Provider calls poll it
/// at their safe-points.
class CancellationToken {
public:
    explicit CancellationToken(std::string request_id = {}) : request_id_(std::move(request_id)) {}

    const std::string& request_id() const noexcept { return request_id_; }
    void cancel() noexcept { cancelled_.store(true, std::memory_order_release); }
    bool cancelled() const noexcept { return cancelled_.load(std::memory_order_acquire); }

    void throw_if_cancelled() const {
        if (cancelled()) throw Error(Errc::Cancelled, "request " + request_id_ + " was cancelled");
    }

private:
    std::string request_id_;
    std::atomic<bool> cancelled_{false};
};

using CancellationHandle = std::shared_ptr<CancellationToken>;

inline void throw_if_cancelled(const CancellationToken* token) {
    if (token != nullptr) token->throw_if_cancelled();
}

/// Called with a label at every safe-point: before each provider call, after
/// each provider response and before publication. May throw to inject a fault.
/// Must be thread-safe: parallel slots reach safe-points concurrently.
using SafePointHook = std::function<void(std::string_view label)>;

/// Per-request execution control passed down the pipeline.
struct RequestControl {
    const CancellationToken* cancel = nullptr;
    SafePointHook hook;

    void checkpoint(std::string_view label) const {
        if (hook) hook(label);
        throw_if_cancelled(cancel);
    }
};

} // namespace preprod
