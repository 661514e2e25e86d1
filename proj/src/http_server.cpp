#include "gazecoach/service.hpp"

#include <httplib.h>

#include <atomic>

namespace gazecoach {

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Phase:
    case ErrorCode::EmptyAudience:
    case ErrorCode::Ordering: return 409;
    default: return 400;
  }
}

void reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& code, const std::string& msg) {
  Json j;
  j["schema"] = kSchemaVersion;
  j["ok"] = false;
  j["error"] = Json{{"code", code}, {"message", msg}};
  reply(res, status, j);
}

Json state_json(const SessionPhase& s) {
  return Json{{"phase", to_string(s.phase)}, {"muted", s.muted}, {"capturing", s.capturing}};
}

Json template_json(const LayoutMember& m) {
  return Json{{"id", m.id.str()},
              {"ordinal", m.id.ordinal},
              {"global_offset", m.global_offset},
              {"crop", Json{{"frame_id", m.crop.frame_id},
                            {"box", Json::array({m.crop.box.min().x(), m.crop.box.min().y(),
                                                 m.crop.box.max().x(), m.crop.box.max().y()})}}}};
}

std::string sse_frame(const StreamEvent& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.name + "\ndata: " + e.data + "\n\n";
}

}  // namespace

struct HttpServer::Impl {
  SessionService& service;
  ServerOptions options;
  httplib::Server http;
  std::thread thread;
  std::atomic<bool> stopping{false};

  Impl(SessionService& s, ServerOptions o) : service(s), options(std::move(o)) { routes(); }

  void routes() {
    http.Get("/api/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      const auto snap = service.snapshot();
      reply(res, 200, Json{{"schema", kSchemaVersion}, {"status", "ok"},
                           {"phase", to_string(snap.state.phase)}});
    });

    http.Get("/api/v1/snapshot", [this](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, to_json(service.snapshot()));
    });

    http.Get("/api/v1/layout", [this](const httplib::Request&, httplib::Response& res) {
      const auto layout = service.layout();
      if (!layout) {
        reply_error(res, 404, to_string(ErrorCode::EmptyAudience), "no audience map yet");
        return;
      }
      Json members = Json::array();
      for (const auto& m : layout->members()) members.push_back(template_json(m));
      reply(res, 200, Json{{"schema", kSchemaVersion}, {"n_members", layout->size()},
                           {"members", std::move(members)}});
    });

    http.Post("/api/v1/control", [this](const httplib::Request& req, httplib::Response& res) {
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
      } catch (const std::exception& e) {
        reply_error(res, 400, to_string(ErrorCode::Parse), e.what());
        return;
      }
      if (!body.is_object() || body.value("schema", 0) != kSchemaVersion) {
        reply_error(res, 400, to_string(ErrorCode::Parse), "expected schema 1 control message");
        return;
      }
      try {
        const Command cmd = parse_command(body.at("command").get<std::string>());
        std::optional<TimeMs> t;
        if (body.contains("t") && !body.at("t").is_null()) t = body.at("t").get<TimeMs>();
        const ControlResult r = service.control(cmd, t);
        Json j;
        j["schema"] = kSchemaVersion;
        j["ok"] = true;
        j["command"] = to_string(cmd);
        j["state"] = state_json(r.state);
        if (cmd == Command::BuildAudienceMap) {
          Json templates = Json::array();
          for (const auto& m : r.templates) templates.push_back(template_json(m));
          j["templates"] = std::move(templates);
        }
        reply(res, 200, j);
      } catch (const Error& e) {
        reply_error(res, status_for(e.code()), to_string(e.code()), e.what());
      } catch (const nlohmann::json::exception& e) {
        reply_error(res, 400, to_string(ErrorCode::Parse), e.what());
      }
    });

    http.Post("/api/v1/frames", [this](const httplib::Request& req, httplib::Response& res) {
      const IngestResult r = service.ingest_records(req.body);
      Json j;
      j["schema"] = kSchemaVersion;
      j["ok"] = r.errors.empty();
      j["accepted"] = r.accepted;
      j["ignored"] = r.ignored;
      j["gaze"] = r.gaze;
      j["errors"] = r.errors;
      reply(res, r.errors.empty() ? 200 : 422, j);
    });

    http.Get("/api/v1/events", [this](const httplib::Request&, httplib::Response& res) {
      res.set_header("Cache-Control", "no-cache");
      auto last = std::make_shared<std::int64_t>(-1);
      res.set_chunked_content_provider(
          "text/event-stream", [this, last](std::size_t, httplib::DataSink& sink) {
            EventHub& hub = service.events();
            if (stopping || hub.closed()) {
              sink.done();
              return true;
            }
            if (*last < 0) {
              // Start from the current state; snapshots are self-contained.
              *last = hub.last_seq();
              std::string hello = "retry: 1000\n\n";
              if (auto s = hub.latest_snapshot()) hello += sse_frame(*s);
              return sink.write(hello.data(), hello.size());
            }
            const auto events = hub.wait_after(*last, std::chrono::milliseconds(500));
            if (events.empty()) {
              static const std::string keepalive = ": keepalive\n\n";
              return sink.write(keepalive.data(), keepalive.size());
            }
            std::string out;
            for (const auto& e : events) out += sse_frame(e);
            *last = events.back().seq;
            return sink.write(out.data(), out.size());
          });
    });
  }
};

HttpServer::HttpServer(SessionService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start() {
  int port = impl_->options.port;
  if (port == 0) {
    port = impl_->http.bind_to_any_port(impl_->options.host);
  } else if (!impl_->http.bind_to_port(impl_->options.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw Error(ErrorCode::Io, "cannot bind " + impl_->options.host + ":" +
                                   std::to_string(impl_->options.port));
  }
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return port;
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->stopping = true;
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void HttpServer::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace gazecoach
