#include "preprod/session.hpp"

#include <fstream>

#include "preprod/error.hpp"
#include "preprod/project.hpp"

namespace preprod {

namespace fs = std::filesystem;

Session::Session(Private, std::string id, fs::path project_dir, SessionOptions options)
    : id_(std::move(id)),
      options_(std::move(options)),
      core_(options_.config, options_.prompts, options_.providers),
      assets_(std::move(project_dir)),
      log_(id_, options_.clock ? options_.clock : system_clock()) {
    if (!options_.clock) options_.clock = system_clock();
}

Session::~Session() {
    {
        std::lock_guard lock(mutex_);
        if (token_) token_->cancel();
    }
    if (worker_.joinable()) worker_.join();
    log_.close();
}

std::shared_ptr<Session> Session::create(std::string id, const std::string& brief, fs::path project_dir,
                                         SessionOptions options) {
    if (brief.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw Error(Errc::BadBrief, "the project brief is empty");
    }
    std::error_code ec;
    fs::create_directories(project_dir, ec);
    if (ec) throw Error(Errc::IoFailure, "cannot create project directory " + project_dir.string());

    auto s = std::make_shared<Session>(Private{}, std::move(id), std::move(project_dir), std::move(options));
    s->created_at_ = s->options_.clock();
    TurnIO io;
    io.emit = [&](EventKind k, AgentRole a, json p) { s->log_.append(k, a, std::move(p)); };
    io.assets = &s->assets_;
    io.now = s->options_.clock;
    s->core_.start_project(s->ws_, brief, io);
    s->initial_events_ = s->log_.last_seq();
    return s;
}

std::shared_ptr<Session> Session::open(std::string id, const fs::path& project_file, SessionOptions options) {
    auto project = load_project(project_file);
    const auto dir = project_file.has_parent_path() ? project_file.parent_path() : fs::path(".");
    auto s = std::make_shared<Session>(Private{}, std::move(id), dir, std::move(options));
    s->created_at_ = s->options_.clock();
    s->ws_.project = std::move(project);
    const auto& p = s->ws_.project;
    s->log_.append(EventKind::StageChanged, AgentRole::Core,
                   json{{"from", nullptr},
                        {"to", p.current_stage},
                        {"reason", "project loaded"},
                        {"cause", "session-load"},
                        {"progress", p.progress}});
    s->log_.append(EventKind::ChatMessage, AgentRole::Core,
                   json{{"speaker", "core"},
                        {"text", "Welcome back. " + suggest_next(p, p.current_stage, s->core_.config()).text}});
    s->initial_events_ = s->log_.last_seq();
    return s;
}

std::string Session::post_message(UserTurn turn) {
    std::lock_guard lock(mutex_);
    if (in_flight_) throw Error(Errc::Busy, "request " + current_request_ + " is still in flight", {current_request_});
    if (turn.selection) {
        try {
            (void)ws_.project.boards.resolve_selection(*turn.selection);
        } catch (const Error& e) {
            throw Error(Errc::InvalidSelection, e.what(), {turn.selection->block_id});
        }
    }
    for (const auto& ref : turn.uploads) {
        if (!assets_.resolves(ref)) throw Error(Errc::InvalidSelection, "upload '" + ref + "' does not resolve", {ref});
    }
    if (worker_.joinable()) worker_.join();

    char buf[32];
    std::snprintf(buf, sizeof buf, "req-%04lld", static_cast<long long>(++request_counter_));
    const std::string rid = buf;
    token_ = std::make_shared<CancellationToken>(rid);
    in_flight_ = true;
    current_request_ = rid;
    requests_.push_back({rid, log_.last_seq(), turn, options_.clock()});
    worker_ = std::thread(&Session::run, this, rid, std::move(turn), token_, options_.hook);
    return rid;
}

void Session::cancel(const std::string& request_id) {
    std::lock_guard lock(mutex_);
    if (!in_flight_ || request_id != current_request_) {
        throw Error(Errc::NoSuchRequest, "request '" + request_id + "' is not in flight", {request_id});
    }
    token_->cancel();
}

bool Session::busy() const {
    std::lock_guard lock(mutex_);
    return in_flight_;
}

std::optional<std::string> Session::in_flight() const {
    std::lock_guard lock(mutex_);
    if (!in_flight_) return std::nullopt;
    return current_request_;
}

bool Session::wait_idle(std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    return idle_cv_.wait_for(lock, timeout, [&] { return !in_flight_; });
}

Workspace Session::workspace() const {
    std::lock_guard lock(mutex_);
    return ws_;
}

void Session::set_hook(SafePointHook hook) {
    std::lock_guard lock(mutex_);
    options_.hook = std::move(hook);
}

std::string Session::store_upload(const std::string& filename, const std::string& bytes) {
    return assets_.store_upload(filename, bytes);
}

json Session::capped(json payload) const {
    const auto cap = core_.config().event_payload_cap;
    if (cap == 0 || !payload.contains("block") || payload.dump().size() <= cap) return payload;
    const auto bid = payload.value("block_id", std::string{});
    payload["block"] = nullptr;
    payload["block_ref"] = json{{"block_id", bid}, {"fetch", "/sessions/" + id_ + "/blocks/" + bid}};
    return payload;
}

void Session::run(std::string request_id, UserTurn turn, CancellationHandle token, SafePointHook hook) {
    Workspace snapshot;
    {
        std::lock_guard lock(mutex_);
        snapshot = ws_;
    }
    Workspace working = snapshot;

    std::size_t emitted = 0;
    const std::size_t ceiling = core_.config().max_events_per_request;
    TurnIO io;
    io.emit = [&](EventKind kind, AgentRole agent, json payload) {
        if (ceiling > 0 && ++emitted > ceiling) {
            throw Error(Errc::PreconditionViolation, "request exceeded " + std::to_string(ceiling) + " events");
        }
        log_.append(kind, agent, capped(std::move(payload)));
    };
    io.control.cancel = token.get();
    io.control.hook = std::move(hook);
    io.assets = &assets_;
    io.now = options_.clock;

    bool ok = false;
    json error;
    std::string status = "failed";
    try {
        core_.handle_turn(working, turn, io);
        ok = true;
        status = "ok";
    } catch (const Error& e) {
        const bool cancelled = e.code() == Errc::Cancelled || e.code() == Errc::AllSlotsCancelled;
        status = cancelled ? "cancelled" : "failed";
        error = json{{"reason", cancelled ? "cancelled" : std::string(to_string(e.code()))},
                     {"message", e.what()},
                     {"details", e.details()}};
    } catch (const std::exception& e) {
        error = json{{"reason", "exception"}, {"message", e.what()}, {"details", json::array()}};
    } catch (...) {
        error = json{{"reason", "exception"}, {"message", "unknown exception"}, {"details", json::array()}};
    }

    std::lock_guard lock(mutex_);
    if (ok) {
        ws_ = std::move(working);
    } else {
        ws_ = std::move(snapshot);
        error["request_id"] = request_id;
        error["rolled_back"] = true;
        log_.append(EventKind::Error, AgentRole::Core, std::move(error));
    }
    log_.append(EventKind::Done, AgentRole::Core, json{{"request_id", request_id}, {"status", status}});
    in_flight_ = false;
    token_.reset();
    idle_cv_.notify_all();
}

json Session::export_transcript() const {
    std::lock_guard lock(mutex_);
    const auto events = log_.all();
    json header{{"session_id", id_},
                {"created_at", created_at_},
                {"brief", ws_.project.progress.project_brief},
                {"initial_events", json::array()}};
    json records = json::array();
    std::size_t next_request = 0;

    auto flush_requests = [&](std::int64_t before_seq) {
        while (next_request < requests_.size() && requests_[next_request].after_seq < before_seq) {
            const auto& r = requests_[next_request++];
            json rec{{"type", "message"},
                     {"role", "user"},
                     {"request_id", r.request_id},
                     {"text", r.turn.text},
                     {"selection", r.turn.selection ? json(*r.turn.selection) : json(nullptr)},
                     {"uploads", r.turn.uploads},
                     {"timestamp", r.timestamp}};
            records.push_back(std::move(rec));
        }
    };

    for (const auto& e : events) {
        if (e.event_seq <= initial_events_) {
            header["initial_events"].push_back(e);
            continue;
        }
        flush_requests(e.event_seq);
        if (e.event_kind == EventKind::ChatMessage) {
            records.push_back({{"type", "message"},
                               {"role", e.payload.value("speaker", std::string(to_string(e.agent)))},
                               {"agent", e.agent},
                               {"text", e.payload.value("text", std::string{})},
                               {"selection", e.payload.value("selection", json(nullptr))},
                               {"event_seq", e.event_seq},
                               {"timestamp", e.timestamp}});
        } else {
            records.push_back({{"type", "event"}, {"event", e}});
        }
    }
    flush_requests(std::numeric_limits<std::int64_t>::max());
    return json{{"format", "preprod-transcript"},
                {"format_version", kTranscriptFormatVersion},
                {"header", header},
                {"records", records}};
}

void Session::write_transcript(const fs::path& file) const {
    const auto doc = export_transcript();
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << doc.dump(2) << "\n";
    if (!out) throw Error(Errc::IoFailure, "cannot write transcript " + file.string());
}

void Session::save(const fs::path& file) const {
    std::lock_guard lock(mutex_);
    save_project(file, ws_.project, assets_);
}

void Session::edit_block(const std::string& block_id, const std::string& change,
                         const std::function<void(BoardStore&)>& fn) {
    std::lock_guard lock(mutex_);
    if (in_flight_) throw Error(Errc::Busy, "request " + current_request_ + " is still in flight", {current_request_});
    BoardStore boards = ws_.project.boards;
    fn(boards);
    ws_.project.boards = std::move(boards);
    const auto& b = ws_.project.boards.block(block_id);
    const auto& board = ws_.project.boards.board(b.stage);
    log_.append(EventKind::BlockUpdated, AgentRole::Core,
                capped(json{{"block_id", block_id},
                            {"change", change},
                            {"placement", board.placement.at(block_id)},
                            {"block", b}}));
}

void Session::set_active_version(const std::string& block_id, int version_index) {
    edit_block(block_id, "active-version", [&](BoardStore& b) { b.set_active_version(block_id, version_index); });
}

void Session::set_pinned(const std::string& block_id, bool pinned) {
    edit_block(block_id, "pinned", [&](BoardStore& b) { b.set_pinned(block_id, pinned); });
}

void Session::set_collapsed(const std::string& block_id, bool collapsed) {
    edit_block(block_id, "collapsed", [&](BoardStore& b) { b.set_collapsed(block_id, collapsed); });
}

void Session::set_placement(const std::string& block_id, Point p) {
    edit_block(block_id, "placement", [&](BoardStore& b) { b.set_placement(block_id, p); });
}

// --- manager ------------------------------------------------------------------

SessionManager::SessionManager(fs::path root, std::function<SessionOptions()> factory)
    : root_(std::move(root)), factory_(std::move(factory)) {}

std::string SessionManager::next_id() {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s-%04lld", static_cast<long long>(++counter_));
    return buf;
}

std::shared_ptr<Session> SessionManager::create(const std::string& brief) {
    std::string id;
    {
        std::lock_guard lock(mutex_);
        id = next_id();
    }
    auto s = Session::create(id, brief, root_ / id, factory_ ? factory_() : SessionOptions{});
    std::lock_guard lock(mutex_);
    sessions_[id] = s;
    return s;
}

std::shared_ptr<Session> SessionManager::open(const fs::path& project_file) {
    std::string id;
    {
        std::lock_guard lock(mutex_);
        id = next_id();
    }
    auto s = Session::open(id, project_file, factory_ ? factory_() : SessionOptions{});
    std::lock_guard lock(mutex_);
    sessions_[id] = s;
    return s;
}

std::shared_ptr<Session> SessionManager::get(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(Errc::UnknownSession, "no session '" + id + "'", {id});
    return it->second;
}

std::vector<std::string> SessionManager::ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, s] : sessions_) out.push_back(id);
    return out;
}

} // namespace preprod
