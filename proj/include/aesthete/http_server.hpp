#pragma once

#include <memory>
#include <string>

#include "aesthete/session.hpp"

namespace aesthete {

/// HTTP status used for an engine error of the given kind.
int http_status(ErrorKind kind) noexcept;

/// JSON API over a SessionStore:
///   POST  /sessions?abn=true|false          multipart field "image" or raw body
///   GET   /sessions/{id}
///   PATCH /sessions/{id}/params
///   POST  /sessions/{id}/optimize           {"steps": n} -> 202
///   POST  /sessions/{id}/stop
///   GET   /sessions/{id}/render             image/png
///   GET   /sessions/{id}/preview/{pid}      image/png
///   GET   /sessions/{id}/events             text/event-stream
class HttpServer {
 public:
  explicit HttpServer(SessionStore& store);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds without accepting yet. Port 0 picks a free port; returns the port.
  int bind(const std::string& host, int port);
  /// Accepts connections on the calling thread until `stop`.
  void listen();
  /// Accepts on a background thread; returns once the server is ready.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace aesthete
