#pragma once

// HTTP + server-sent-events front end over a SessionManager.
//
//   POST /sessions                               {"brief"} or {"project_file"}
//   GET  /sessions
//   GET  /sessions/{id}/status
//   POST /sessions/{id}/messages                 JSON or multipart (text, selection, uploads)
//   POST /sessions/{id}/cancel                   {"request_id"}
//   GET  /sessions/{id}/events                   SSE; ?from_seq=N or Last-Event-ID; ?follow=0
//   GET  /sessions/{id}/assets/{name}
//   GET  /sessions/{id}/transcript
//   GET  /sessions/{id}/project
//   POST /sessions/{id}/save                     {"path"} optional
//   GET  /sessions/{id}/blocks/{bid}
//   POST /sessions/{id}/blocks/{bid}/{active_version|pinned|collapsed|placement}

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <thread>

#include "preprod/error.hpp"
#include "preprod/session.hpp"

namespace preprod {

struct HttpServerOptions {
    std::string host = "127.0.0.1";
    /// SSE comment line sent when a stream has been quiet this long.
    std::chrono::milliseconds heartbeat{15000};
    std::size_t worker_threads = 256;
};

/// HTTP status for an engine error code.
int http_status(Errc code) noexcept;

class HttpServer {
public:
    HttpServer(SessionManager& sessions, HttpServerOptions options = {});
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds (port 0 picks a free one) and serves on a background thread.
    /// Returns the bound port.
    int start(int port = 0);
    /// Binds and serves on the calling thread until stop().
    void run(int port);
    void stop();
    int port() const noexcept { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
    int port_ = 0;
};

} // namespace preprod
