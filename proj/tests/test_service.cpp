#include "gazecoach/service.hpp"
#include "gazecoach/simulator.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

using namespace gazecoach;

namespace {

nlohmann::json control(httplib::Client& c, const std::string& cmd, int* status = nullptr) {
  const std::string body = nlohmann::json{{"schema", 1}, {"command", cmd}}.dump();
  auto res = c.Post("/api/v1/control", body, "application/json");
  REQUIRE(res);
  if (status) *status = res->status;
  return nlohmann::json::parse(res->body);
}

std::string frame_line(const FrameObservation& f, bool with_gaze) {
  Json j;
  j["type"] = "frame";
  j["t"] = f.t;
  const Json body = frame_fields(f);
  for (auto it = body.begin(); it != body.end(); ++it) {
    if (!with_gaze && it.key() == "gaze") continue;
    j[it.key()] = it.value();
  }
  return j.dump() + "\n";
}

std::string gaze_line(const GazeSample& g) {
  Json j = to_json(g);
  j["type"] = "gaze";
  return j.dump() + "\n";
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("control and streaming API drives a full session") {
  ScenarioSpec spec = reference_scenario("static");
  spec.duration_s = 31;
  spec.gaze_script = {GazeSegment{0, 31, std::nullopt, "laptop"}};

  std::string log;
  std::mutex log_mu;
  SessionService service({}, identifier_spec_for(spec), std::nullopt,
                         [&](const std::string& line) {
                           std::lock_guard lock(log_mu);
                           log += line + "\n";
                         });
  HttpServer server(service, ServerOptions{"127.0.0.1", 0});
  const int port = server.start();
  httplib::Client c("127.0.0.1", port);
  c.set_read_timeout(10, 0);

  auto health = c.Get("/api/v1/health");
  REQUIRE(health);
  CHECK(nlohmann::json::parse(health->body).at("phase") == "idle");
  CHECK(c.Get("/api/v1/layout")->status == 404);

  int status = 0;
  auto rejected = control(c, "start_presentation", &status);
  CHECK(status == 409);
  CHECK(rejected.at("error").at("code") == "phase");
  CHECK(rejected.at("schema") == 1);

  auto bad = c.Post("/api/v1/control", R"({"command":"terminate"})", "application/json");
  CHECK(bad->status == 400);

  CHECK(control(c, "start_registration").at("state").at("phase") == "registering");
  std::string sweep;
  for (const auto& f : generate_sweep(spec).frames) sweep += frame_line(f, true);
  auto posted = c.Post("/api/v1/frames", sweep, "application/x-ndjson");
  REQUIRE(posted);
  CHECK(posted->status == 200);

  const auto built = control(c, "build_audience_map");
  REQUIRE(built.at("templates").size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(built.at("templates").at(static_cast<std::size_t>(i)).at("id") == "S_" + std::to_string(i + 1));
  auto layout = c.Get("/api/v1/layout");
  CHECK(layout->status == 200);
  CHECK(nlohmann::json::parse(layout->body).at("n_members") == 6);

  // Event stream listener.
  std::atomic<bool> saw_advice{false};
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
  std::atomic<int> snapshots{0};
  std::string advice_data;
  std::thread listener([&] {
    httplib::Client sc("127.0.0.1", port);
    sc.set_read_timeout(10, 0);
    std::string buf;
    sc.Get("/api/v1/events", [&](const char* data, std::size_t n) {
      if (std::chrono::steady_clock::now() > deadline) return false;
      buf.append(data, n);
      std::size_t pos;
      while ((pos = buf.find("\n\n")) != std::string::npos) {
        const std::string block = buf.substr(0, pos);
        buf.erase(0, pos + 2);
        if (block.find("event: snapshot") != std::string::npos) ++snapshots;
        if (block.find("event: advice") != std::string::npos) {
          advice_data = block.substr(block.find("data: ") + 6);
          saw_advice = true;
          return false;
        }
      }
      return true;
    });
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(200));

  // Presentation clock continues after the sweep.
  const TimeMs t0 = 10000;
  const std::string start = nlohmann::json{{"schema", 1}, {"command", "start_presentation"}, {"t", t0}}.dump();
  auto started = c.Post("/api/v1/control", start, "application/json");
  REQUIRE(started);
  CHECK(nlohmann::json::parse(started->body).at("state").at("phase") == "presenting");
  SimSession sim = generate_session(spec);
  for (auto& f : sim.frames) {
    f.t += t0;
    f.gaze.t += t0;
  }
  for (auto& s : sim.gaze_samples) s.t += t0;
  // Frames without gaze plus a separate gaze stream, posted in chunks.
  std::size_t g = 0;
  for (std::size_t i = 0; i < sim.frames.size(); i += 90) {
    std::string chunk;
    for (std::size_t k = i; k < std::min(sim.frames.size(), i + 90); ++k) {
      while (g < sim.gaze_samples.size() && sim.gaze_samples[g].t <= sim.frames[k].t + 20) {
        chunk += gaze_line(sim.gaze_samples[g++]);
      }
      chunk += frame_line(sim.frames[k], false);
    }
    auto r = c.Post("/api/v1/frames", chunk, "application/x-ndjson");
    REQUIRE(r);
    CHECK(r->status == 200);
  }
  listener.join();
  CHECK(saw_advice);
  CHECK(snapshots > 1);
  const auto advice = nlohmann::json::parse(advice_data);
  CHECK(advice.at("prompt") == "look at the audience");
  CHECK(advice.at("t") == t0 + 30000);
  CHECK(advice.at("schema") == 1);

  auto snap = nlohmann::json::parse(c.Get("/api/v1/snapshot")->body);
  CHECK(snap.at("phase") == "presenting");
  CHECK(snap.at("latest_advice").at("prompt") == "look at the audience");
  CHECK(snap.at("counters").at("frames").get<int>() > 900);

  CHECK(control(c, "mute_toggle").at("state").at("muted") == true);
  CHECK(control(c, "terminate").at("state").at("phase") == "terminated");
  control(c, "terminate", &status);
  CHECK(status == 409);
  server.stop();

  // The served session log is itself replayable.
  std::lock_guard lock(log_mu);
  std::istringstream in(log);
  CHECK(replay_log(read_ndjson(in)) == log);
}

TEST_CASE("frames outside registration or presentation are ignored") {
  const ScenarioSpec spec = reference_scenario("static");
  SessionService service({}, identifier_spec_for(spec), truth_layout(spec), nullptr);
  FrameObservation f = generate_session(spec).frames.front();
  const IngestResult r = service.ingest_records(frame_line(f, true));
  CHECK(r.ignored == 1);
  CHECK(r.accepted == 0);
  const IngestResult bad = service.ingest_records("{not json}\n");
  CHECK(bad.errors.size() == 1);
}

TEST_CASE("records without t are stamped on arrival") {
  const ScenarioSpec spec = reference_scenario("static");
  SessionService service({}, identifier_spec_for(spec), truth_layout(spec), nullptr, 1000);
  service.control(Command::StartPresentation, 1000);
  FrameObservation f = generate_session(spec).frames.front();
  Json j = nlohmann::ordered_json::parse(frame_line(f, true));
  j.erase("t");
  const IngestResult r = service.ingest_records(j.dump() + "\n");
  CHECK(r.errors.empty());
  CHECK(r.accepted == 1);
  CHECK(service.snapshot().t >= 1000);
  CHECK(service.snapshot().counters.frames == 1);
}

}  // TEST_SUITE
