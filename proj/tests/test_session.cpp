#include "gazecoach/session.hpp"
#include "gazecoach/simulator.hpp"

#include <doctest.h>

#include <sstream>

using namespace gazecoach;

namespace {

struct CountingSink final : AdviceSink {
  void deliver(const AdviceEvent& e) override { delivered.push_back(e); }
  std::vector<AdviceEvent> delivered;
};

struct Recorded {
  std::string text;
  Session::LineSink sink() {
    return [this](const std::string& line) {
      text += line;
      text += '\n';
    };
  }
  std::vector<nlohmann::json> records() const {
    std::istringstream in(text);
    return read_ndjson(in);
  }
};

ScenarioSpec low_contact(double seconds) {
  // 0.1 s on a member every second, the rest on the laptop: EP = 10%.
  ScenarioSpec spec = reference_scenario("static");
  spec.duration_s = seconds;
  spec.gaze_script.clear();
  for (int s = 0; s < static_cast<int>(seconds); ++s) {
    spec.gaze_script.push_back(GazeSegment{s + 0.0, s + 0.1, MemberId{1 + s % 6}, ""});
    spec.gaze_script.push_back(GazeSegment{s + 0.1, s + 1.0, std::nullopt, "laptop"});
  }
  return spec;
}

Phase phase_of(const nlohmann::json& r) { return parse_phase(r.at("phase").get<std::string>()); }

}  // namespace

TEST_SUITE("session") {

TEST_CASE("phase transitions") {
  SessionPhase s;
  s = apply_command(s, Command::StartRegistration);
  CHECK(s.phase == Phase::Registering);
  CHECK(s.capturing);
  try {
    apply_command(s, Command::StartPresentation);
    FAIL("expected phase error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Phase);
  }
  CHECK_THROWS_AS(apply_command(s, Command::MuteToggle), Error);
  s = apply_command(s, Command::StopRegistration);
  CHECK_FALSE(s.capturing);
  s = apply_command(s, Command::BuildAudienceMap);
  CHECK(s.phase == Phase::Ready);
  s = apply_command(s, Command::StartPresentation);
  s = apply_command(s, Command::MuteToggle);
  CHECK(s.muted);
  s = apply_command(s, Command::Terminate);
  CHECK(s.phase == Phase::Terminated);
  CHECK_THROWS_AS(apply_command(s, Command::StartRegistration), Error);
  CHECK_THROWS_AS(apply_command(s, Command::Terminate), Error);
}

TEST_CASE("command names round-trip") {
  for (int i = 0; i < 6; ++i) {
    const auto c = static_cast<Command>(i);
    CHECK(parse_command(to_string(c)) == c);
  }
  CHECK_THROWS_AS(parse_command("reboot"), Error);
}

TEST_CASE("audience map with no sweep data") {
  Recorded log;
  Session session({}, {}, std::nullopt, log.sink());
  session.control(Command::StartRegistration);
  try {
    session.control(Command::BuildAudienceMap);
    FAIL("expected empty-audience error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyAudience);
  }
  CHECK(session.state().phase == Phase::Registering);
}

TEST_CASE("registration inside a session") {
  const ScenarioSpec spec = reference_scenario("static");
  Recorded log;
  Session session({}, identifier_spec_for(spec), std::nullopt, log.sink());
  CHECK(session.state().phase == Phase::Idle);
  const auto sweep = generate_sweep(spec).frames;
  CHECK_FALSE(session.ingest(sweep.front()));  // Idle ignores frames
  session.control(Command::StartRegistration, 0);
  for (const auto& f : sweep) CHECK(session.ingest(f));
  const ControlResult r = session.control(Command::BuildAudienceMap);
  REQUIRE(r.templates.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(r.templates[i].id == MemberId{static_cast<int>(i) + 1});
  CHECK(*session.layout() == register_audience(sweep));

  // The whole registration replays to the same bytes.
  CHECK(replay_log(log.records()) == log.text);
}

TEST_CASE("snapshot right after start") {
  const ScenarioSpec spec = reference_scenario("static");
  Recorded log;
  Session session({}, identifier_spec_for(spec), truth_layout(spec), log.sink());
  CHECK(session.state().phase == Phase::Ready);
  session.control(Command::StartPresentation, 0);
  const SessionSnapshot s = session.snapshot();
  CHECK(s.state.phase == Phase::Presenting);
  CHECK(s.counters.frames == 0);
  CHECK(s.counters.dropped == 0);
  CHECK(s.counters.identifier_invocations == 0);
  REQUIRE(s.totals.has_value());
  CHECK(s.totals->total == 0);
  CHECK_FALSE(s.ep.has_value());
  CHECK_FALSE(s.latest_advice.has_value());
}

TEST_CASE("300 frames on S_1 give ED(S_1) = 100%") {
  ScenarioSpec spec = reference_scenario("static");
  spec.duration_s = 10;
  spec.gaze_script = {GazeSegment{0, 10, MemberId{1}, ""}};
  Recorded log;
  Session session({}, identifier_spec_for(spec), truth_layout(spec), log.sink());
  session.control(Command::StartPresentation, 0);
  for (const auto& f : generate_session(spec).frames) session.ingest(f);
  const SessionSnapshot s = session.snapshot();
  CHECK(s.counters.frames == 300);
  REQUIRE(s.ed.has_value());
  CHECK((*s.ed)[0] == 100.0);
  for (std::size_t i = 1; i < 6; ++i) CHECK((*s.ed)[i] == 0.0);
  CHECK(*s.gde == 0.0);
}

TEST_CASE("mid-window snapshot matches the log prefix") {
  const ScenarioSpec spec = reference_scenario("slow-pan");
  Recorded log;
  Session session({}, identifier_spec_for(spec), register_audience(generate_sweep(spec).frames),
                  log.sink());
  session.control(Command::StartPresentation, 0);
  const auto frames = generate_session(spec).frames;
  for (std::size_t i = 0; i < 1000; ++i) session.ingest(frames[i]);  // 33.3 s: inside window 1
  const SessionSnapshot s = session.snapshot();
  CHECK(s.provisional);
  REQUIRE(s.contact_window.has_value());
  CHECK(s.contact_window->t_start == 30000);

  std::int64_t x = 0, xbar = 0;
  for (const auto& r : log.records()) {
    if (r.at("type") != "attention") continue;
    const TimeMs t = r.at("t").get<TimeMs>();
    if (t < 30000) continue;
    ++x;
    if (r.at("classification") != "non_audience") ++xbar;
  }
  REQUIRE(x > 0);
  CHECK(s.contact_window->total == x);
  CHECK(*s.ep == doctest::Approx(100.0 * static_cast<double>(xbar) / static_cast<double>(x)));
}

TEST_CASE("mute suppresses delivery but keeps the log") {
  const ScenarioSpec spec = low_contact(60);
  Recorded log;
  CountingSink sink;
  Session session({}, identifier_spec_for(spec), truth_layout(spec), log.sink());
  session.set_advice_sink(&sink);
  session.control(Command::StartPresentation, 0);
  const auto frames = generate_session(spec).frames;
  for (const auto& f : frames) {
    if (f.t == 40000) session.control(Command::MuteToggle, f.t);
    session.ingest(f);
  }
  session.finish(60000);
  REQUIRE(session.advice().size() == 2);
  CHECK(sink.delivered.size() == 1);
  CHECK(sink.delivered[0].t == 30000);
  int logged = 0;
  for (const auto& r : log.records()) {
    if (r.at("type") != "advice") continue;
    ++logged;
    CHECK(r.at("delivered").get<bool>() == (r.at("t").get<TimeMs>() == 30000));
  }
  CHECK(logged == 2);
  CHECK(replay_log(log.records()) == log.text);
}

TEST_CASE("90 s low-contact stream logs exactly three prompts") {
  const std::string text = simulate_log(low_contact(90), {});
  std::istringstream in(text);
  std::vector<TimeMs> times;
  for (const auto& r : read_ndjson(in)) {
    if (r.at("type") == "advice" && r.at("kind") == "insufficient_eye_contact") {
      times.push_back(r.at("t").get<TimeMs>());
    }
  }
  CHECK(times == std::vector<TimeMs>{30000, 60000, 90000});
}

TEST_CASE("missing frames become dropped records") {
  ScenarioSpec spec = reference_scenario("static");
  spec.duration_s = 5;
  Recorded log;
  Session session({}, identifier_spec_for(spec), truth_layout(spec), log.sink());
  session.control(Command::StartPresentation, 0);
  const auto frames = generate_session(spec).frames;
  for (const auto& f : frames) {
    if (f.frame_id >= 10 && f.frame_id < 13) continue;
    session.ingest(f);
  }
  const SessionSnapshot s = session.snapshot();
  CHECK(s.counters.dropped == 3);
  CHECK(s.counters.frames == 147);
  CHECK(s.totals->total == 150);
  std::vector<TimeMs> dropped;
  for (const auto& r : log.records()) {
    if (r.at("type") == "dropped") dropped.push_back(r.at("t").get<TimeMs>());
  }
  // Interpolated between frame 9 (300 ms) and frame 13 (433 ms).
  CHECK(dropped == std::vector<TimeMs>{333, 367, 400});
  CHECK(replay_log(log.records()) == log.text);
}

TEST_CASE("out-of-order frames are rejected") {
  ScenarioSpec spec = reference_scenario("static");
  spec.duration_s = 1;
  Recorded log;
  Session session({}, identifier_spec_for(spec), truth_layout(spec), log.sink());
  session.control(Command::StartPresentation, 0);
  const auto frames = generate_session(spec).frames;
  session.ingest(frames[5]);
  try {
    session.ingest(frames[4]);
    FAIL("expected ordering error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Ordering);
  }
}

TEST_CASE("log invariants and replay on every reference scenario") {
  for (const auto& name : reference_scenario_names()) {
    CAPTURE(name);
    const std::string text = simulate_log(reference_scenario(name), {});
    std::istringstream in(text);
    const auto records = read_ndjson(in);
    TimeMs last = 0;
    Phase phase = Phase::Ready;
    for (const auto& r : records) {
      const TimeMs t = r.at("t").get<TimeMs>();
      CHECK(t >= last);
      last = t;
      const std::string type = r.at("type").get<std::string>();
      if (type == "phase") {
        phase = phase_of(r);
      } else {
        CHECK(phase_of(r) == phase);
        if (type != "header") CHECK(phase == Phase::Presenting);
      }
    }
    CHECK(phase == Phase::Terminated);
    CHECK(replay_log(records) == text);
  }
}

TEST_CASE("slow-pan log scores like the simulator bench") {
  const ScenarioSpec spec = reference_scenario("slow-pan");
  const std::string text = simulate_log(spec, {});
  std::istringstream in(text);
  std::vector<FrameAttention> attention;
  for (const auto& r : read_ndjson(in)) {
    if (r.at("type") == "attention") attention.push_back(attention_from_json(r));
  }
  const BenchRow from_log = score_identification(method_run_from_attention(attention),
                                                 generate_session(spec).truth);
  const BenchRow bench = bench_identify(spec, {"anchor"}).row("anchor");
  CHECK(from_log.accuracy == bench.accuracy);
  CHECK(from_log.invocation_fraction == bench.invocation_fraction);
  CHECK(from_log.correct == bench.correct);
}

TEST_CASE("frame assembler pairs separate gaze records") {
  FrameAssembler a(17);
  FrameObservation f;
  f.frame_id = 0;
  f.t = 100;
  a.push_frame(f);
  a.push_gaze(GazeSample{90, Point2(5, 5), true});
  CHECK(a.ready().empty());
  a.push_gaze(GazeSample{104, Point2(7, 7), true});
  CHECK(a.ready().empty());
  a.push_gaze(GazeSample{117, Point2(9, 9), true});
  const auto out = a.ready();
  REQUIRE(out.size() == 1);
  CHECK(out[0].gaze.t == 104);
  CHECK(out[0].gaze.point == Point2(7, 7));

  f.frame_id = 1;
  f.t = 500;
  a.push_frame(f);
  const auto flushed = a.flush();
  REQUIRE(flushed.size() == 1);
  CHECK_FALSE(flushed[0].gaze.valid);
}

TEST_CASE("config text round-trips") {
  EngineConfig c;
  c.identification.target_radius_px = 50;
  c.advisor.r_p = 25;
  c.advisor.suppress_entropy_fraction = 0.95;
  c.snapshot_hz = 10;
  const EngineConfig back = parse_config(write_config(c));
  CHECK(write_config(back) == write_config(c));
  CHECK(config_from_json(nlohmann::json::parse(to_json(c).dump())).advisor.r_p == 25);
  CHECK_THROWS_AS(parse_config("nonsense = 1\n"), Error);
  CHECK_THROWS_AS(parse_config("r_p = 0\n"), Error);
}

TEST_CASE("layout json round-trips") {
  const AudienceLayout layout = register_audience(generate_sweep(reference_scenario("static")).frames);
  CHECK(layout_from_json(nlohmann::json::parse(to_json(layout).dump())) == layout);
}

}  // TEST_SUITE
