#include "aesthete/http_server.hpp"

#include <atomic>
#include <charconv>
#include <thread>

#include <httplib.h>

namespace aesthete {

namespace {

using namespace std::chrono_literals;

constexpr auto kEventPoll = 250ms;
constexpr int kKeepAlivePolls = 8;  // comment line every ~2 s of silence

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_png(httplib::Response& res, const Bytes& png) {
  res.set_content(std::string(png.begin(), png.end()), "image/png");
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::InvalidArgument, "request body is not valid JSON");
  }
}

bool parse_bool_param(const httplib::Request& req, const char* key, bool fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorKind::InvalidArgument, std::string(key) + " must be true or false");
}

std::string image_payload(const httplib::Request& req) {
  if (!req.is_multipart_form_data()) return req.body;
  if (req.has_file("image")) return req.get_file_value("image").content;
  if (req.files.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  return req.files.begin()->second.content;
}

}  // namespace

int http_status(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Busy:
    case ErrorKind::InvalidState: return 409;
    case ErrorKind::UnsupportedImage: return 415;
    case ErrorKind::EmptyInput:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::OutOfBounds:
    case ErrorKind::FixedParameter:
    case ErrorKind::InvalidArgument:
    case ErrorKind::Schema: return 400;
    case ErrorKind::DivergentGradient:
    case ErrorKind::AssessorLoad:
    case ErrorKind::Encode:
    case ErrorKind::Io: return 500;
  }
  return 500;
}

struct HttpServer::Impl {
  explicit Impl(SessionStore& s) : store(s) {}

  SessionStore& store;
  httplib::Server server;
  std::thread thread;
  std::atomic<bool> stopping{false};

  void routes();
  void events(const httplib::Request& req, httplib::Response& res);
};

void HttpServer::Impl::routes() {
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      send_json(res, Json{{"error", e.what()}}, http_status(e.kind()));
    } catch (const std::exception& e) {
      send_json(res, Json{{"error", e.what()}}, 500);
    } catch (...) {
      send_json(res, Json{{"error", "internal error"}}, 500);
    }
  });

  server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    SessionOptions options;
    options.abn = parse_bool_param(req, "abn", true);
    const std::string payload = image_payload(req);
    const auto session =
        store.create(std::span(reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()), options);
    const SessionState st = session->state();
    send_json(res,
              Json{{"id", st.id},
                   {"abn_report", to_json(st.abn_report)},
                   {"initial_score", st.history.front().mean_score}},
              201);
  });

  server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    send_json(res, to_json(store.get(req.matches[1])->state()));
  });

  server.Patch(R"(/sessions/([^/]+)/params)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto session = store.get(req.matches[1]);
    send_json(res, to_json(session->set_params(params_update_from_json(parse_body(req)))));
  });

  server.Post(R"(/sessions/([^/]+)/optimize)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto session = store.get(req.matches[1]);
    const Json body = parse_body(req);
    std::optional<int> steps;
    if (body.is_object() && body.contains("steps") && !body.at("steps").is_null()) {
      if (!body.at("steps").is_number_integer()) throw Error(ErrorKind::InvalidArgument, "steps must be an integer");
      steps = body.at("steps").get<int>();
    }
    session->optimize(steps);
    send_json(res, Json{{"id", session->id()}, {"status", std::string(to_string(session->status()))}}, 202);
  });

  server.Post(R"(/sessions/([^/]+)/stop)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto session = store.get(req.matches[1]);
    session->stop();
    send_json(res, Json{{"id", session->id()}, {"status", std::string(to_string(session->status()))}});
  });

  server.Get(R"(/sessions/([^/]+)/render)", [this](const httplib::Request& req, httplib::Response& res) {
    send_png(res, store.get(req.matches[1])->render());
  });

  server.Get(R"(/sessions/([^/]+)/preview/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string text = req.matches[2];
    int pid = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), pid);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw Error(ErrorKind::NotFound, "preview not found: " + text);
    }
    send_png(res, store.get(req.matches[1])->preview(pid));
  });

  server.Get(R"(/sessions/([^/]+)/events)",
             [this](const httplib::Request& req, httplib::Response& res) { events(req, res); });
}

void HttpServer::Impl::events(const httplib::Request& req, httplib::Response& res) {
  const auto session = store.get(req.matches[1]);
  const auto queue = session->subscribe();
  res.set_header("Cache-Control", "no-cache");
  auto idle = std::make_shared<int>(0);
  res.set_chunked_content_provider(
      "text/event-stream",
      [this, queue, idle](std::size_t, httplib::DataSink& sink) {
        if (stopping) {
          sink.done();
          return true;
        }
        const auto event = queue->pop(kEventPoll);
        if (!event) {
          if (queue->closed()) {
            sink.done();
            return true;
          }
          if (++*idle < kKeepAlivePolls) return true;
          *idle = 0;
          static constexpr char kPing[] = ": keep-alive\n\n";
          return sink.write(kPing, sizeof(kPing) - 1);
        }
        *idle = 0;
        const std::string frame = "id: " + std::to_string(event->sequence) + "\nevent: " +
                                  std::string(to_string(event->kind)) + "\ndata: " + to_json(*event).dump() + "\n\n";
        return sink.write(frame.data(), frame.size());
      },
      [session, queue](bool) { session->unsubscribe(queue); });
}

HttpServer::HttpServer(SessionStore& store) : impl_(std::make_unique<Impl>(store)) { impl_->routes(); }

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound <= 0) throw Error(ErrorKind::Io, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  impl_->stopping = true;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace aesthete
