// gazecoach command-line front end.

#include "gazecoach/config.hpp"
#include "gazecoach/records.hpp"
#include "gazecoach/service.hpp"
#include "gazecoach/session.hpp"
#include "gazecoach/simulator.hpp"
#include "gazecoach/text_format.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

using namespace gazecoach;

namespace {

std::atomic<bool> g_interrupted{false};

EngineConfig config_or_default(const std::string& path) {
  return path.empty() ? EngineConfig{} : load_config(path);
}

std::vector<FrameObservation> frames_of(const std::vector<nlohmann::json>& records) {
  std::vector<FrameObservation> frames;
  for (const auto& r : records) {
    if (r.value("type", "frame") == "frame") frames.push_back(frame_from_json(r));
  }
  return frames;
}

TimeMs median_interval(const std::vector<FrameObservation>& frames) {
  std::vector<TimeMs> d;
  for (std::size_t i = 1; i < frames.size(); ++i) d.push_back(frames[i].t - frames[i - 1].t);
  if (d.empty()) return 0;
  std::nth_element(d.begin(), d.begin() + static_cast<long>(d.size() / 2), d.end());
  return d[d.size() / 2];
}

std::string truth_ndjson(const SimSession& sim) {
  std::string out;
  for (std::size_t i = 0; i < sim.truth.frames.size(); ++i) {
    const auto& ft = sim.truth.frames[i];
    Json j;
    j["frame_id"] = ft.frame_id;
    j["t"] = sim.frames[i].t;
    j["gazed"] = ft.gazed ? Json(ft.gazed->str()) : Json(nullptr);
    Json ids = Json::array();
    for (const auto& m : ft.detection_ids) ids.push_back(m ? Json(m->str()) : Json(nullptr));
    j["detection_ids"] = std::move(ids);
    j["visible"] = ft.visible;
    j["blurred"] = ft.blurred;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string frames_ndjson(const std::vector<FrameObservation>& frames) {
  std::string out;
  for (const auto& f : frames) {
    Json j;
    j["type"] = "frame";
    j["t"] = f.t;
    Json body = frame_fields(f);
    for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
    out += j.dump();
    out += '\n';
  }
  return out;
}

void print_advice(const std::vector<AdviceEvent>& advice) {
  for (const auto& e : advice) {
    std::printf("  t=%.3fs  %-24s %s\n", static_cast<double>(e.t) / 1000.0, to_string(e.kind),
                e.prompt_text.c_str());
  }
}

void print_summary(const SessionSnapshot& s, const std::vector<AdviceEvent>& advice) {
  std::printf("frames %lld, dropped %lld, identifier invocations %lld\n",
              static_cast<long long>(s.counters.frames), static_cast<long long>(s.counters.dropped),
              static_cast<long long>(s.counters.identifier_invocations));
  if (s.totals && s.totals->total > 0) {
    std::printf("session EP %.2f%%", eye_contact_proportion(*s.totals));
    if (s.totals->per_member.sum() > 0) std::printf(", GDE %.4f", gaze_distribution_entropy(*s.totals));
    std::printf("\n");
  }
  std::printf("advice events: %zu\n", advice.size());
  print_advice(advice);
}

// ---- register ----------------------------------------------------------------

int cmd_register(const std::string& sweep_path, const std::string& out, const std::string& config) {
  const EngineConfig cfg = config_or_default(config);
  const auto frames = frames_of(read_ndjson_file(sweep_path));
  const AudienceLayout layout = register_audience(frames, cfg.registration);
  save_layout(out, layout);
  std::printf("registered %d members from %zu sweep frames -> %s\n", layout.size(), frames.size(),
              out.c_str());
  for (const auto& m : layout.members()) {
    std::printf("  %-4s offset %9.2f px  observations %d\n", m.id.str().c_str(), m.global_offset,
                m.observations);
  }
  return 0;
}

// ---- simulate ----------------------------------------------------------------

int cmd_simulate(const std::string& scenario, const std::string& out, const std::string& truth,
                 const std::string& sweep, const std::string& config) {
  const ScenarioSpec spec = load_scenario(scenario);
  const EngineConfig cfg = config_or_default(config);
  write_file(out, simulate_log(spec, cfg));
  std::printf("scenario %s: %lld frames -> %s\n", spec.name.c_str(),
              static_cast<long long>(spec.frame_count()), out.c_str());
  if (!truth.empty()) {
    write_file(truth, truth_ndjson(generate_session(spec)));
    std::printf("truth -> %s\n", truth.c_str());
  }
  if (!sweep.empty()) {
    write_file(sweep, frames_ndjson(generate_sweep(spec).frames));
    std::printf("sweep -> %s\n", sweep.c_str());
  }
  return 0;
}

// ---- analyze -----------------------------------------------------------------

int cmd_analyze(const std::string& log_path, const std::string& out) {
  const auto records = read_ndjson_file(log_path);
  if (records.empty() || records.front().value("type", "") != "header") {
    throw Error(ErrorCode::Parse, "'" + log_path + "' is not a session log");
  }
  std::optional<GazeDistribution> totals;
  int n = 0;
  if (!records.front().at("layout").is_null()) n = records.front().at("layout").at("n_members").get<int>();

  std::ostringstream csv;
  auto header = [&](int members) {
    csv << "rule,window_id,t_start_ms,t_end_ms,X,X_bar,X_unidentified,ep_pct,gde,unidentified_pct";
    for (int i = 1; i <= members; ++i) csv << ",ed_S_" << i;
    csv << '\n';
  };
  auto row = [&](const std::string& rule, const GazeDistribution& w) {
    csv << rule << ',' << w.window_id << ',' << w.t_start << ',' << w.t_end << ',' << w.total << ','
        << w.audience << ',' << w.unidentified << ','
        << (w.total > 0 ? format_double(eye_contact_proportion(w)) : "") << ','
        << (w.per_member.sum() > 0 ? format_double(gaze_distribution_entropy(w)) : "") << ','
        << (w.audience > 0 ? format_double(unidentified_share(w)) : "");
    for (int i = 1; i <= w.n_members(); ++i) {
      csv << ',' << (w.audience > 0 ? format_double(eye_contact_distribution(w, MemberId{i})) : "");
    }
    csv << '\n';
  };
  bool wrote_header = false;
  TimeMs last_t = 0;
  for (const auto& r : records) {
    const std::string type = r.at("type").get<std::string>();
    last_t = r.at("t").get<TimeMs>();
    if (type == "phase" && r.contains("layout")) n = r.at("layout").at("n_members").get<int>();
    if (type == "phase" && r.at("command") == "start_presentation") {
      totals = GazeDistribution::open(n, 0, last_t);
    }
    if (!wrote_header && n > 0) {
      header(n);
      wrote_header = true;
    }
    if (type == "metrics" && r.at("scope") != "snapshot") {
      GazeDistribution w = GazeDistribution::open(n, r.at("window_id").get<std::int64_t>(),
                                                  r.at("t_start").get<TimeMs>(), r.at("t_end").get<TimeMs>());
      w.total = r.at("X").get<std::int64_t>();
      w.audience = r.at("X_bar").get<std::int64_t>();
      w.unidentified = r.at("X_unidentified").get<std::int64_t>();
      const auto& xi = r.at("X_i");
      for (int i = 0; i < n; ++i) w.per_member(i) = xi.at(static_cast<std::size_t>(i)).get<std::int64_t>();
      row(r.at("scope").get<std::string>(), w);
    } else if (type == "attention" && totals) {
      totals->add(attention_from_json(r));
    } else if (type == "dropped" && totals) {
      totals->add_dropped(r.at("t").get<TimeMs>());
    }
  }
  if (totals) {
    totals->t_end = last_t;
    row("session", *totals);
  }
  write_file(out, csv.str());
  std::printf("analysis -> %s\n", out.c_str());
  return 0;
}

// ---- bench-identify ----------------------------------------------------------

int cmd_bench(const std::string& scenario, const std::string& methods, const std::string& out,
              const std::string& markdown, const std::string& config) {
  const ScenarioSpec spec = load_scenario(scenario);
  const EngineConfig cfg = config_or_default(config);
  std::vector<std::string> list;
  std::stringstream ss(methods);
  for (std::string m; std::getline(ss, m, ',');) {
    if (!m.empty()) list.push_back(m);
  }
  const BenchReport report = bench_identify(spec, list, cfg.identification);
  write_file(out, report.csv());
  const std::string md = report.markdown();
  if (!markdown.empty()) write_file(markdown, md);
  std::cout << md;
  return 0;
}

// ---- run -----------------------------------------------------------------------

struct RunOptions {
  std::string layout;
  std::string source;
  std::string input;
  std::string scenario;
  std::string config;
  std::string out;
  bool headless = false;
  std::string host = "127.0.0.1";
  int port = 8750;
  double speed = 1.0;
  std::string identifier = "synthetic";
  int descriptor_dim = 64;
  int identifier_layers = 8;
  std::uint64_t identifier_seed = 1;
};

class LogFile {
 public:
  explicit LogFile(const std::string& path) {
    if (!path.empty()) {
      out_.open(path, std::ios::binary);
      if (!out_) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
    }
  }
  Session::LineSink sink() {
    return [this](const std::string& line) {
      if (out_.is_open()) out_ << line << '\n';
    };
  }

 private:
  std::ofstream out_;
};

/// Feeds frames through a live service at timestamp pace while serving the API.
int serve_frames(const RunOptions& o, EngineConfig cfg, IdentifierSpec ident, AudienceLayout layout,
                 const std::vector<FrameObservation>& frames, TimeMs end_t) {
  LogFile log(o.out);
  SessionService service(std::move(cfg), std::move(ident), std::move(layout), log.sink(),
                         frames.empty() ? 0 : frames.front().t);
  HttpServer server(service, ServerOptions{o.host, o.port});
  const int port = server.start();
  std::printf("serving on http://%s:%d/api/v1 (speed x%g)\n", o.host.c_str(), port, o.speed);
  service.control(Command::StartPresentation, frames.empty() ? 0 : frames.front().t);
  const auto wall0 = std::chrono::steady_clock::now();
  for (const auto& f : frames) {
    if (g_interrupted) break;
    const auto due = wall0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                 std::chrono::duration<double, std::milli>(
                                     static_cast<double>(f.t - frames.front().t) / o.speed));
    std::this_thread::sleep_until(due);
    if (service.snapshot().state.phase != Phase::Presenting) break;
    service.submit_frame(f);
  }
  service.drain();
  service.finish(end_t);
  print_summary(service.snapshot(), {});
  server.stop();
  return 0;
}

IdentifierSpec identifier_from(const RunOptions& o) {
  return IdentifierSpec{o.identifier, o.descriptor_dim, o.identifier_layers, o.identifier_seed};
}

int run_log(const RunOptions& o) {
  if (o.input.empty()) throw Error(ErrorCode::Validation, "--input is required for --source log");
  const std::string text = read_file(o.input);
  std::istringstream in(text);
  const auto records = read_ndjson(in);
  const bool has_header = !records.empty() && records.front().value("type", "") == "header";

  if (has_header && o.headless) {
    if (!o.layout.empty()) {
      const AudienceLayout given = load_layout(o.layout);
      const auto& hl = records.front().at("layout");
      if (hl.is_null() || !(layout_from_json(hl) == given)) {
        throw Error(ErrorCode::Validation, "--layout differs from the layout recorded in the log header");
      }
    }
    NullAdviceSink sink;
    std::vector<AdviceEvent> advice;
    const std::string regenerated = replay_log(records, &sink, &advice);
    if (!o.out.empty()) write_file(o.out, regenerated);
    std::printf("replayed %zu records; regenerated log %s the input\n", records.size(),
                regenerated == text ? "is byte-identical to" : "DIFFERS from");
    std::printf("advice events: %zu\n", advice.size());
    print_advice(advice);
    return regenerated == text ? 0 : 2;
  }

  EngineConfig cfg = config_or_default(o.config);
  IdentifierSpec ident = identifier_from(o);
  std::optional<AudienceLayout> layout;
  if (has_header) {
    cfg = config_from_json(records.front().at("config"));
    ident = identifier_spec_from_json(records.front().at("identifier"));
    if (!records.front().at("layout").is_null()) layout = layout_from_json(records.front().at("layout"));
  }
  if (!o.layout.empty()) layout = load_layout(o.layout);
  if (!layout) throw Error(ErrorCode::Validation, "--layout is required for a frame-only log");

  // Frame-only input: frames may carry gaze inline or as separate gaze records.
  FrameAssembler assembler(cfg.pairing_tolerance_ms.value_or(default_pairing_tolerance(30)));
  std::vector<FrameObservation> frames;
  for (const auto& r : records) {
    const std::string type = r.value("type", "frame");
    if (type == "gaze") {
      assembler.push_gaze(gaze_from_json(r));
    } else if (type == "frame") {
      FrameObservation f = frame_from_json(r);
      if (r.contains("gaze")) {
        for (auto& p : assembler.flush()) frames.push_back(std::move(p));
        frames.push_back(std::move(f));
      } else {
        assembler.push_frame(std::move(f));
      }
    }
    if (has_header && type == "phase" && r.at("command") == "terminate") break;
  }
  for (auto& p : assembler.flush()) frames.push_back(std::move(p));
  const TimeMs end_t = frames.empty() ? 0 : frames.back().t + median_interval(frames);

  if (!o.headless) return serve_frames(o, cfg, ident, std::move(*layout), frames, end_t);

  LogFile log(o.out);
  Session session(cfg, ident, std::move(layout), log.sink(), frames.empty() ? 0 : frames.front().t);
  NullAdviceSink sink;
  session.set_advice_sink(&sink);
  session.control(Command::StartPresentation);
  for (const auto& f : frames) session.ingest(f);
  session.finish(end_t);
  print_summary(session.snapshot(), session.advice());
  return 0;
}

int run_sim(const RunOptions& o) {
  if (o.scenario.empty()) throw Error(ErrorCode::Validation, "--scenario is required for --source sim");
  const ScenarioSpec spec = load_scenario(o.scenario);
  const EngineConfig cfg = config_or_default(o.config);
  AudienceLayout layout = o.layout.empty()
                              ? register_audience(generate_sweep(spec).frames, cfg.registration)
                              : load_layout(o.layout);
  const SimSession sim = generate_session(spec);
  const TimeMs end_t = static_cast<TimeMs>(std::llround(spec.duration_s * 1000));
  if (!o.headless) return serve_frames(o, cfg, identifier_spec_for(spec), std::move(layout), sim.frames, end_t);

  LogFile log(o.out);
  Session session(cfg, identifier_spec_for(spec), std::move(layout), log.sink(), 0);
  NullAdviceSink sink;
  session.set_advice_sink(&sink);
  session.control(Command::StartPresentation, 0);
  for (const auto& f : sim.frames) session.ingest(f);
  session.finish(end_t);
  print_summary(session.snapshot(), session.advice());
  return 0;
}

int run_live(const RunOptions& o) {
  EngineConfig cfg = config_or_default(o.config);
  std::optional<AudienceLayout> layout;
  if (!o.layout.empty()) layout = load_layout(o.layout);
  LogFile log(o.out);
  SessionService service(std::move(cfg), identifier_from(o), std::move(layout), log.sink(), 0);
  HttpServer server(service, ServerOptions{o.host, o.port});
  const int port = server.start();
  std::printf("live session on http://%s:%d/api/v1, phase %s; waiting for terminate\n",
              o.host.c_str(), port, to_string(service.snapshot().state.phase));
  std::fflush(stdout);
  while (!g_interrupted && service.snapshot().state.phase != Phase::Terminated) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  service.finish(service.arrival_time());
  server.stop();
  print_summary(service.snapshot(), {});
  return 0;
}

int cmd_run(const RunOptions& o) {
  if (o.source == "log") return run_log(o);
  if (o.source == "sim") return run_sim(o);
  return run_live(o);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gazecoach: real-time eye-contact assistant engine"};
  app.require_subcommand(1);
  std::string config;
  app.add_option("--config", config, "engine config file (key = value)")->check(CLI::ExistingFile);

  std::string out, input, truth, sweep, markdown, methods = "anchor,baseline";

  auto* reg = app.add_subcommand("register", "build an audience layout from a sweep log");
  reg->add_option("sweep-log", input, "NDJSON frame records of the registration sweep")->required();
  reg->add_option("-o,--output", out, "layout file to write")->required();

  RunOptions run;
  auto* runc = app.add_subcommand("run", "run a presentation session");
  runc->add_option("--layout", run.layout, "layout file");
  runc->add_option("--source", run.source, "frame source")
      ->required()
      ->check(CLI::IsMember({"log", "sim", "live"}));
  runc->add_option("--input", run.input, "session or frame log (source log)");
  runc->add_option("--scenario", run.scenario, "scenario name or file (source sim)");
  runc->add_option("-o,--output", run.out, "session log to write");
  runc->add_flag("--headless", run.headless, "no control/streaming server; process as fast as possible");
  runc->add_option("--host", run.host, "server bind address");
  runc->add_option("--port", run.port, "server port (0 = any free port)");
  runc->add_option("--speed", run.speed, "playback speed factor when serving")->check(CLI::PositiveNumber);
  runc->add_option("--identifier", run.identifier, "identifier kind")
      ->check(CLI::IsMember({"synthetic", "descriptor-similarity"}));
  runc->add_option("--descriptor-dim", run.descriptor_dim, "descriptor dimension");
  runc->add_option("--identifier-layers", run.identifier_layers, "synthetic identifier depth");
  runc->add_option("--identifier-seed", run.identifier_seed, "synthetic identifier seed");

  std::string scenario;
  auto* sim = app.add_subcommand("simulate", "generate a synthetic session log");
  sim->add_option("scenario", scenario, "reference scenario name or scenario file")->required();
  sim->add_option("-o,--output", out, "session log to write")->required();
  sim->add_option("--truth", truth, "ground-truth NDJSON to write");
  sim->add_option("--sweep", sweep, "registration sweep frames to write");

  auto* ana = app.add_subcommand("analyze", "per-window EP/ED/GDE of a session log as CSV");
  ana->add_option("log", input, "session log")->required();
  ana->add_option("-o,--output", out, "CSV to write")->required();

  auto* bench = app.add_subcommand("bench-identify", "score identification methods on a scenario");
  bench->add_option("scenario", scenario, "reference scenario name or scenario file")->required();
  bench->add_option("--methods", methods, "comma-separated: anchor,baseline");
  bench->add_option("-o,--output", out, "CSV report to write")->required();
  bench->add_option("--markdown", markdown, "also write the markdown table here");

  CLI11_PARSE(app, argc, argv);
  std::signal(SIGINT, [](int) { g_interrupted = true; });
  std::signal(SIGTERM, [](int) { g_interrupted = true; });

  try {
    if (reg->parsed()) return cmd_register(input, out, config);
    if (runc->parsed()) {
      run.config = config;
      return cmd_run(run);
    }
    if (sim->parsed()) return cmd_simulate(scenario, out, truth, sweep, config);
    if (ana->parsed()) return cmd_analyze(input, out);
    if (bench->parsed()) return cmd_bench(scenario, methods, out, markdown, config);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gazecoach: %s\n", e.what());
    return 1;
  }
  return 0;
}
