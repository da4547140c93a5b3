#pragma once

// Project sessions: one worker per session runs the Core pipeline for one
// request at a time, streams events, and rolls back on failure or cancel.

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "preprod/assets.hpp"
#include "preprod/cancellation.hpp"
#include "preprod/config.hpp"
#include "preprod/core_agent.hpp"
#include "preprod/event_log.hpp"
#include "preprod/prompts.hpp"
#include "preprod/provider.hpp"

namespace preprod {

struct SessionOptions {
    EngineConfig config = EngineConfig::defaults();
    PromptSet prompts = PromptSet::defaults();
    Providers providers;
    /// Defaults to the system clock.
    Clock clock;
    /// Fault/cancel injection at safe-points (tests).
    SafePointHook hook;
};

inline constexpr int kTranscriptFormatVersion = 1;

class Session {
    struct Private {};

public:
    /// New project in `project_dir`. Throws bad-brief for an empty brief.
    static std::shared_ptr<Session> create(std::string id, const std::string& brief,
                                           std::filesystem::path project_dir, SessionOptions options);
    /// Loads a saved project; the session keeps working next to the file.
    static std::shared_ptr<Session> open(std::string id, const std::filesystem::path& project_file,
                                         SessionOptions options);

    Session(Private, std::string id, std::filesystem::path project_dir, SessionOptions options);
    ~Session();
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    const std::string& id() const noexcept { return id_; }

    /// Starts processing and returns the request id. Throws busy while a
    /// request is in flight, invalid-selection for a selection that does not
    /// resolve; neither emits events nor changes state.
    std::string post_message(UserTurn turn);

    /// Throws no-such-request unless `request_id` is in flight.
    void cancel(const std::string& request_id);

    bool busy() const;
    std::optional<std::string> in_flight() const;
    /// True once idle; false on timeout.
    bool wait_idle(std::chrono::milliseconds timeout) const;

    const EventLog& events() const noexcept { return log_; }
    Workspace workspace() const;
    const AssetStore& assets() const noexcept { return assets_; }
    const std::filesystem::path& project_dir() const noexcept { return assets_.project_dir(); }
    const EngineConfig& config() const noexcept { return core_.config(); }
    void set_hook(SafePointHook hook);

    /// Stores an uploaded image and returns its asset reference.
    std::string store_upload(const std::string& filename, const std::string& bytes);

    /// Transcript: header (session metadata + initial events) and records
    /// (user messages, chat messages and all other events in order).
    json export_transcript() const;
    void write_transcript(const std::filesystem::path& file) const;

    /// Saves the committed project state (and assets) to `file`.
    void save(const std::filesystem::path& file) const;

    // Direct board edits from the UI; busy while a request is in flight.
    void set_active_version(const std::string& block_id, int version_index);
    void set_pinned(const std::string& block_id, bool pinned);
    void set_collapsed(const std::string& block_id, bool collapsed);
    void set_placement(const std::string& block_id, Point p);

private:
    struct RequestRecord {
        std::string request_id;
        std::int64_t after_seq = 0;
        UserTurn turn;
        Timestamp timestamp = 0;
    };

    void run(std::string request_id, UserTurn turn, CancellationHandle token, SafePointHook hook);
    json capped(json payload) const;
    void edit_block(const std::string& block_id, const std::string& change, const std::function<void(BoardStore&)>& fn);

    std::string id_;
    SessionOptions options_;
    CoreAgent core_;
    AssetStore assets_;
    EventLog log_;
    Timestamp created_at_ = 0;
    std::int64_t initial_events_ = 0;

    mutable std::mutex mutex_;
    mutable std::condition_variable idle_cv_;
    Workspace ws_;
    bool in_flight_ = false;
    std::string current_request_;
    CancellationHandle token_;
    std::int64_t request_counter_ = 0;
    std::vector<RequestRecord> requests_;
    std::thread worker_;
};

/// Owns sessions by id. Each session gets a fresh SessionOptions from the
/// factory (scripted providers carry per-session state).
class SessionManager {
public:
    SessionManager(std::filesystem::path root, std::function<SessionOptions()> factory);

    std::shared_ptr<Session> create(const std::string& brief);
    std::shared_ptr<Session> open(const std::filesystem::path& project_file);
    /// Throws unknown-session.
    std::shared_ptr<Session> get(const std::string& id) const;
    std::vector<std::string> ids() const;
    const std::filesystem::path& root() const noexcept { return root_; }

private:
    std::string next_id();

    std::filesystem::path root_;
    std::function<SessionOptions()> factory_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::int64_t counter_ = 0;
};

} // namespace preprod
