#include "preprod/http_server.hpp"

#include <httplib.h>

#include "preprod/project.hpp"

namespace preprod {

int http_status(Errc code) noexcept {
    switch (code) {
    case Errc::UnknownSession:
    case Errc::UnknownBlock:
    case Errc::NoSuchRequest: return 404;
    case Errc::Busy: return 409;
    case Errc::FormatVersionMismatch: return 422;
    case Errc::BadBrief:
    case Errc::InvalidSelection:
    case Errc::StaleSelection:
    case Errc::BadIndex:
    case Errc::FormatError:
    case Errc::PreconditionViolation: return 400;
    default: return 500;
    }
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
    send_json(res, http_status(e.code()),
              {{"error", to_string(e.code())}, {"message", e.what()}, {"details", e.details()}});
}

json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        auto j = json::parse(req.body);
        if (!j.is_object()) throw Error(Errc::FormatError, "request body must be a JSON object");
        return j;
    } catch (const json::exception& e) {
        throw Error(Errc::FormatError, std::string("request body is not JSON: ") + e.what());
    }
}

std::string content_type_for(const std::string& name) {
    const auto dot = name.rfind('.');
    const auto ext = dot == std::string::npos ? "" : name.substr(dot + 1);
    if (ext == "png") return "image/png";
    if (ext == "jpg" || ext == "jpeg") return "image/jpeg";
    if (ext == "ppm") return "image/x-portable-pixmap";
    if (ext == "webp") return "image/webp";
    return "application/octet-stream";
}

std::string sse_frame(const SessionEvent& e) {
    return "id: " + std::to_string(e.event_seq) + "\nevent: " + std::string(to_string(e.event_kind)) +
           "\ndata: " + json(e).dump() + "\n\n";
}

} // namespace

struct HttpServer::Impl {
    SessionManager& sessions;
    HttpServerOptions options;
    httplib::Server server;
    std::atomic<bool> stopping{false};

    Impl(SessionManager& s, HttpServerOptions o) : sessions(s), options(std::move(o)) {
        const auto threads = options.worker_threads;
        server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
        routes();
    }

    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    Handler guarded(Handler h) {
        return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
            try {
                h(req, res);
            } catch (const Error& e) {
                send_error(res, e);
            } catch (const json::exception& e) {
                send_json(res, 400, {{"error", "format-error"}, {"message", e.what()}, {"details", json::array()}});
            } catch (const std::exception& e) {
                send_json(res, 500, {{"error", "exception"}, {"message", e.what()}, {"details", json::array()}});
            }
        };
    }

    std::shared_ptr<Session> session(const httplib::Request& req) { return sessions.get(req.path_params.at("id")); }

    UserTurn turn_from(const httplib::Request& req, Session& s) {
        UserTurn turn;
        if (req.is_multipart_form_data()) {
            if (req.has_file("text")) turn.text = req.get_file_value("text").content;
            if (req.has_file("selection")) {
                const auto raw = req.get_file_value("selection").content;
                if (!raw.empty() && raw != "null") turn.selection = json::parse(raw).get<Selection>();
            }
            for (const auto& f : req.get_file_values("uploads")) {
                turn.uploads.push_back(s.store_upload(f.filename.empty() ? "upload.bin" : f.filename, f.content));
            }
            return turn;
        }
        const auto body = body_of(req);
        turn.text = body.value("text", std::string{});
        if (body.contains("selection") && !body.at("selection").is_null()) {
            turn.selection = body.at("selection").get<Selection>();
        }
        turn.uploads = body.value("uploads", std::vector<std::string>{});
        return turn;
    }

    void routes() {
        server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = body_of(req);
            std::shared_ptr<Session> s;
            if (body.contains("project_file")) {
                s = sessions.open(body.at("project_file").get<std::string>());
            } else {
                s = sessions.create(body.value("brief", std::string{}));
            }
            send_json(res, 201, {{"session_id", s->id()}, {"events", "/sessions/" + s->id() + "/events"}});
        }));

        server.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, {{"sessions", sessions.ids()}});
        }));

        server.Get("/sessions/:id/status", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            const auto in_flight = s->in_flight();
            send_json(res, 200,
                      {{"session_id", s->id()},
                       {"busy", in_flight.has_value()},
                       {"in_flight", in_flight ? json(*in_flight) : json(nullptr)},
                       {"last_seq", s->events().last_seq()}});
        }));

        server.Post("/sessions/:id/messages", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            const auto id = s->post_message(turn_from(req, *s));
            send_json(res, 202, {{"request_id", id}});
        }));

        server.Post("/sessions/:id/cancel", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            const auto body = body_of(req);
            std::string id = body.value("request_id", std::string{});
            if (id.empty()) id = s->in_flight().value_or("");
            s->cancel(id);
            send_json(res, 202, {{"request_id", id}});
        }));

        server.Get("/sessions/:id/events", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            std::int64_t from = 1;
            if (req.has_param("from_seq")) {
                from = std::stoll(req.get_param_value("from_seq"));
            } else if (req.has_header("Last-Event-ID")) {
                from = std::stoll(req.get_header_value("Last-Event-ID")) + 1;
            }
            const bool follow = req.get_param_value("follow") != "0" && req.get_param_value("follow") != "false";
            res.set_header("Cache-Control", "no-cache");
            auto sub = std::make_shared<EventLog::Subscription>(s->events().subscribe(from));
            const auto heartbeat = options.heartbeat;
            res.set_chunked_content_provider(
                "text/event-stream",
                [this, s, sub, follow, heartbeat](std::size_t, httplib::DataSink& sink) {
                    if (!follow) {
                        for (const auto& e : s->events().since(sub->next_seq())) {
                            const auto frame = sse_frame(e);
                            if (!sink.write(frame.data(), frame.size())) return false;
                        }
                        sink.done();
                        return true;
                    }
                    auto quiet = std::chrono::milliseconds(0);
                    const auto step = std::chrono::milliseconds(200);
                    while (!stopping) {
                        if (auto e = sub->next(step)) {
                            const auto frame = sse_frame(*e);
                            return sink.write(frame.data(), frame.size());
                        }
                        if (!sink.is_writable()) return false;
                        quiet += step;
                        if (quiet >= heartbeat) {
                            static constexpr std::string_view ping = ": keep-alive\n\n";
                            return sink.write(ping.data(), ping.size());
                        }
                    }
                    sink.done();
                    return true;
                });
        }));

        server.Get("/sessions/:id/assets/:name", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            const auto name = req.path_params.at("name");
            const auto ref = "assets/" + name;
            if (!s->assets().resolves(ref)) throw Error(Errc::UnknownBlock, "no asset '" + ref + "'", {ref});
            res.set_content(s->assets().read(ref), content_type_for(name));
        }));

        server.Get("/sessions/:id/transcript", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, session(req)->export_transcript());
        }));

        server.Get("/sessions/:id/project", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, project_to_json(session(req)->workspace().project));
        }));

        server.Post("/sessions/:id/save", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            const auto body = body_of(req);
            const std::filesystem::path file =
                body.contains("path") ? std::filesystem::path(body.at("path").get<std::string>())
                                      : s->project_dir() / "project.json";
            s->save(file);
            send_json(res, 200, {{"path", file.string()}});
        }));

        server.Get("/sessions/:id/blocks/:bid", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto ws = session(req)->workspace();
            send_json(res, 200, ws.project.boards.block(req.path_params.at("bid")));
        }));

        server.Post("/sessions/:id/blocks/:bid/:op", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            const auto bid = req.path_params.at("bid");
            const auto op = req.path_params.at("op");
            const auto body = body_of(req);
            if (op == "active_version") {
                s->set_active_version(bid, body.at("version_index").get<int>());
            } else if (op == "pinned") {
                s->set_pinned(bid, body.at("pinned").get<bool>());
            } else if (op == "collapsed") {
                s->set_collapsed(bid, body.at("collapsed").get<bool>());
            } else if (op == "placement") {
                s->set_placement(bid, Point{body.at("x").get<int>(), body.at("y").get<int>()});
            } else {
                send_json(res, 404, {{"error", "unknown-operation"}, {"message", op}, {"details", json::array()}});
                return;
            }
            send_json(res, 200, s->workspace().project.boards.block(bid));
        }));
    }
};

HttpServer::HttpServer(SessionManager& sessions, HttpServerOptions options)
    : impl_(std::make_unique<Impl>(sessions, std::move(options))) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(impl_->options.host);
    } else if (impl_->server.bind_to_port(impl_->options.host, port)) {
        port_ = port;
    } else {
        port_ = -1;
    }
    if (port_ < 0) throw Error(Errc::IoFailure, "cannot bind " + impl_->options.host + ":" + std::to_string(port));
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port_;
}

void HttpServer::run(int port) {
    if (!impl_->server.bind_to_port(impl_->options.host, port)) {
        throw Error(Errc::IoFailure, "cannot bind " + impl_->options.host + ":" + std::to_string(port));
    }
    port_ = port;
    impl_->server.listen_after_bind();
}

void HttpServer::stop() {
    impl_->stopping = true;
    impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

} // namespace preprod
