#include "gazecoach/service.hpp"

#include <future>
#include <sstream>

namespace gazecoach {

// ---- EventHub --------------------------------------------------------------

void EventHub::publish(const std::string& name, const std::string& data) {
  {
    std::lock_guard lock(mu_);
    StreamEvent e{++seq_, name, data};
    if (name == "snapshot") snapshot_ = e;
    events_.push_back(std::move(e));
    while (events_.size() > capacity_) events_.pop_front();
  }
  cv_.notify_all();
}

std::vector<StreamEvent> EventHub::wait_after(std::int64_t after, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return closed_ || seq_ > after; });
  std::vector<StreamEvent> out;
  for (const auto& e : events_) {
    if (e.seq > after) out.push_back(e);
  }
  return out;
}

std::optional<StreamEvent> EventHub::latest_snapshot() const {
  std::lock_guard lock(mu_);
  return snapshot_;
}

std::int64_t EventHub::last_seq() const {
  std::lock_guard lock(mu_);
  return seq_;
}

void EventHub::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool EventHub::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

// ---- SessionService --------------------------------------------------------

SessionService::SessionService(EngineConfig config, IdentifierSpec identifier,
                               std::optional<AudienceLayout> layout, Session::LineSink log_sink,
                               TimeMs start_t)
    : epoch_(std::chrono::steady_clock::now()),
      start_t_(start_t),
      null_sink_(std::make_unique<NullAdviceSink>()) {
  pairing_tolerance_ = config.pairing_tolerance_ms.value_or(default_pairing_tolerance(30));
  assembler_.emplace(pairing_tolerance_);
  session_ = std::make_unique<Session>(std::move(config), std::move(identifier), std::move(layout),
                                       std::move(log_sink), start_t);
  session_->set_advice_sink(null_sink_.get());
  session_->on_snapshot([this](const SessionSnapshot& s) {
    hub_.publish("snapshot", to_json(s).dump());
  });
  session_->on_advice([this](const AdviceEvent& e) {
    Json j = advice_fields(e);
    j["schema"] = kSchemaVersion;
    j["t"] = e.t;
    j["delivered"] = !session_->state().muted;
    hub_.publish("advice", j.dump());
  });
  publish_state(*session_);
  worker_ = std::thread([this] { run(); });
}

SessionService::~SessionService() {
  {
    std::lock_guard lock(queue_mu_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  if (worker_.joinable()) worker_.join();
  hub_.close();
}

TimeMs SessionService::arrival_time() const {
  const auto dt = std::chrono::steady_clock::now() - epoch_;
  return start_t_ + std::chrono::duration_cast<std::chrono::milliseconds>(dt).count();
}

void SessionService::post(std::function<void(Session&)> task) {
  {
    std::lock_guard lock(queue_mu_);
    queue_.push_back(std::move(task));
  }
  queue_cv_.notify_one();
}

void SessionService::run() {
  for (;;) {
    std::function<void(Session&)> task;
    {
      std::unique_lock lock(queue_mu_);
      queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      task = std::move(queue_.front());
      queue_.pop_front();
      busy_ = true;
    }
    task(*session_);
    publish_state(*session_);
    {
      std::lock_guard lock(queue_mu_);
      busy_ = false;
    }
    idle_cv_.notify_all();
  }
}

void SessionService::drain() {
  std::unique_lock lock(queue_mu_);
  idle_cv_.wait(lock, [&] { return queue_.empty() && !busy_; });
}

void SessionService::publish_state(Session& s) {
  std::lock_guard lock(state_mu_);
  snapshot_ = s.snapshot();
  layout_ = s.layout();
}

ControlResult SessionService::control(Command cmd, std::optional<TimeMs> t) {
  std::promise<ControlResult> done;
  auto fut = done.get_future();
  post([&, cmd, t](Session& s) {
    try {
      if (s.state().phase == Phase::Presenting &&
          (cmd == Command::Terminate || cmd == Command::MuteToggle)) {
        pair_and_ingest(s, assembler_->flush(), nullptr);
      }
      ControlResult r = s.control(cmd, t);
      if (cmd == Command::StartRegistration || cmd == Command::StartPresentation) {
        assembler_.emplace(pairing_tolerance_);
      }
      publish_state(s);
      hub_.publish("snapshot", to_json(s.snapshot()).dump());
      done.set_value(std::move(r));
    } catch (...) {
      done.set_exception(std::current_exception());
    }
  });
  return fut.get();
}

void SessionService::pair_and_ingest(Session& s, std::vector<FrameObservation> frames,
                                     IngestResult* result) {
  for (auto& f : frames) {
    try {
      if (!s.ingest(f) && result) ++result->ignored;
    } catch (const std::exception& e) {
      if (result) result->errors.push_back(e.what());
      Json j{{"schema", kSchemaVersion}, {"t", f.t}, {"frame_id", f.frame_id}, {"message", e.what()}};
      hub_.publish("error", j.dump());
    }
  }
}

IngestResult SessionService::ingest_records(const std::string& ndjson) {
  // Parse and stamp on the calling thread; arrival time is taken here.
  std::vector<nlohmann::json> records;
  IngestResult parse_result;
  {
    std::istringstream in(ndjson);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        auto j = nlohmann::json::parse(line);
        if (!j.contains("t")) j["t"] = arrival_time();
        records.push_back(std::move(j));
      } catch (const std::exception& e) {
        parse_result.errors.push_back("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  std::promise<IngestResult> done;
  auto fut = done.get_future();
  post([&](Session& s) {
    IngestResult r = std::move(parse_result);
    for (const auto& j : records) {
      try {
        const std::string type = j.value("type", "frame");
        if (type == "gaze") {
          assembler_->push_gaze(gaze_from_json(j));
          ++r.gaze;
        } else if (type == "frame") {
          FrameObservation f = frame_from_json(j);
          ++r.accepted;
          if (j.contains("gaze")) {
            pair_and_ingest(s, assembler_->flush(), &r);
            pair_and_ingest(s, {std::move(f)}, &r);
          } else {
            assembler_->push_frame(std::move(f));
          }
        } else {
          r.errors.push_back("unsupported record type '" + type + "'");
        }
        pair_and_ingest(s, assembler_->ready(), &r);
      } catch (const std::exception& e) {
        r.errors.push_back(e.what());
      }
    }
    r.accepted -= r.ignored;
    done.set_value(std::move(r));
  });
  return fut.get();
}

void SessionService::submit_frame(FrameObservation frame) {
  post([this, f = std::move(frame)](Session& s) mutable {
    pair_and_ingest(s, {std::move(f)}, nullptr);
  });
}

void SessionService::finish(TimeMs end_t) {
  post([this, end_t](Session& s) {
    try {
      if (s.state().phase == Phase::Presenting) pair_and_ingest(s, assembler_->flush(), nullptr);
      s.finish(end_t);
      hub_.publish("snapshot", to_json(s.snapshot()).dump());
    } catch (const std::exception& e) {
      hub_.publish("error", Json{{"schema", kSchemaVersion}, {"message", e.what()}}.dump());
    }
  });
  drain();
}

SessionSnapshot SessionService::snapshot() const {
  std::lock_guard lock(state_mu_);
  return snapshot_;
}

std::optional<AudienceLayout> SessionService::layout() const {
  std::lock_guard lock(state_mu_);
  return layout_;
}

}  // namespace gazecoach
