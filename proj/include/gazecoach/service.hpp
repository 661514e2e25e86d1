#pragma once

#include "gazecoach/session.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

namespace gazecoach {

/// Push-stream message. `data` is one JSON object.
struct StreamEvent {
  std::int64_t seq = 0;
  std::string name;  ///< snapshot | advice | error
  std::string data;
};

/// Fan-out buffer for the push stream. Keeps the newest events and the
/// latest snapshot so a reconnecting client starts from current state.
class EventHub {
 public:
  explicit EventHub(std::size_t capacity = 512) : capacity_(capacity) {}

  void publish(const std::string& name, const std::string& data);
  /// Events with seq > after; waits up to `timeout` when none are pending.
  std::vector<StreamEvent> wait_after(std::int64_t after, std::chrono::milliseconds timeout);
  std::optional<StreamEvent> latest_snapshot() const;
  std::int64_t last_seq() const;
  void close();
  bool closed() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<StreamEvent> events_;
  std::optional<StreamEvent> snapshot_;
  std::int64_t seq_ = 0;
  std::size_t capacity_;
  bool closed_ = false;
};

struct IngestResult {
  std::int64_t accepted = 0;  ///< frames handed to the session (incl. still pending pairing)
  std::int64_t ignored = 0;   ///< frames outside Registering/Presenting
  std::int64_t gaze = 0;
  std::vector<std::string> errors;
};

/// Owns the session on a single worker thread. Every mutation is a message
/// to that worker; readers get immutable copies.
class SessionService {
 public:
  SessionService(EngineConfig config, IdentifierSpec identifier,
                 std::optional<AudienceLayout> layout, Session::LineSink log_sink,
                 TimeMs start_t = 0);
  ~SessionService();

  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  /// Blocks until applied; rethrows the session's error.
  ControlResult control(Command cmd, std::optional<TimeMs> t = std::nullopt);

  /// Frame/gaze records, one JSON object per line. Records without `t` are
  /// stamped on arrival. Frames without a `gaze` field are paired with the
  /// separately posted gaze records.
  IngestResult ingest_records(const std::string& ndjson);

  /// Fire-and-forget paired frame; errors surface as `error` stream events.
  void submit_frame(FrameObservation frame);

  /// Terminates at `end_t` if still live and waits for the worker to drain.
  void finish(TimeMs end_t);

  SessionSnapshot snapshot() const;
  std::optional<AudienceLayout> layout() const;
  EventHub& events() { return hub_; }

  /// Session ms for a record arriving now.
  TimeMs arrival_time() const;

  /// Waits until every queued message has been processed.
  void drain();

 private:
  void post(std::function<void(Session&)> task);
  void run();
  void publish_state(Session& s);
  void pair_and_ingest(Session& s, std::vector<FrameObservation> frames, IngestResult* result);

  std::chrono::steady_clock::time_point epoch_;
  TimeMs start_t_;
  std::unique_ptr<Session> session_;
  std::unique_ptr<AdviceSink> null_sink_;
  std::optional<FrameAssembler> assembler_;
  TimeMs pairing_tolerance_;
  EventHub hub_;

  mutable std::mutex state_mu_;
  SessionSnapshot snapshot_;
  std::optional<AudienceLayout> layout_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  std::deque<std::function<void(Session&)>> queue_;
  bool busy_ = false;
  bool stopping_ = false;
  std::thread worker_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8750;  ///< 0 picks a free port
};

/// HTTP control/streaming API over a SessionService (see README for routes).
class HttpServer {
 public:
  HttpServer(SessionService& service, ServerOptions options);
  ~HttpServer();

  /// Binds and serves on a background thread; returns the bound port.
  int start();
  void stop();
  /// Blocks the caller until stop().
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gazecoach
