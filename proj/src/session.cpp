#include "gazecoach/session.hpp"

#include "gazecoach/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gazecoach {

namespace {

constexpr const char* kPhaseNames[] = {"idle", "registering", "ready", "presenting", "terminated"};
constexpr const char* kCommandNames[] = {"start_registration", "stop_registration",
                                         "build_audience_map", "start_presentation",
                                         "mute_toggle",        "terminate"};

Json window_record_fields(const GazeDistribution& w) {
  Json j = to_json(w);
  j["ep"] = w.total > 0 ? Json(eye_contact_proportion(w)) : Json(nullptr);
  if (w.audience > 0) {
    Json ed = Json::array();
    for (int i = 1; i <= w.n_members(); ++i) ed.push_back(eye_contact_distribution(w, MemberId{i}));
    j["ed"] = std::move(ed);
    j["unidentified_share"] = unidentified_share(w);
  } else {
    j["ed"] = nullptr;
    j["unidentified_share"] = nullptr;
  }
  j["gde"] = w.per_member.sum() > 0 ? Json(gaze_distribution_entropy(w)) : Json(nullptr);
  return j;
}

void merge(Json& dst, const Json& src) {
  for (auto it = src.begin(); it != src.end(); ++it) dst[it.key()] = it.value();
}

Json optional_number(const std::optional<scalar_t>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

const char* to_string(Phase p) { return kPhaseNames[static_cast<int>(p)]; }

Phase parse_phase(const std::string& text) {
  for (int i = 0; i < 5; ++i) {
    if (text == kPhaseNames[i]) return static_cast<Phase>(i);
  }
  throw Error(ErrorCode::Parse, "unknown phase '" + text + "'");
}

const char* to_string(Command c) { return kCommandNames[static_cast<int>(c)]; }

Command parse_command(const std::string& text) {
  for (int i = 0; i < 6; ++i) {
    if (text == kCommandNames[i]) return static_cast<Command>(i);
  }
  throw Error(ErrorCode::Parse, "unknown command '" + text + "'");
}

SessionPhase apply_command(SessionPhase s, Command cmd) {
  auto reject = [&]() -> SessionPhase {
    throw Error(ErrorCode::Phase,
                std::string(to_string(cmd)) + " is not allowed in phase " + to_string(s.phase));
  };
  switch (cmd) {
    case Command::StartRegistration:
      if (s.phase != Phase::Idle) return reject();
      s.phase = Phase::Registering;
      s.capturing = true;
      return s;
    case Command::StopRegistration:
      if (s.phase != Phase::Registering || !s.capturing) return reject();
      s.capturing = false;
      return s;
    case Command::BuildAudienceMap:
      if (s.phase != Phase::Registering && s.phase != Phase::Ready) return reject();
      s.phase = Phase::Ready;
      s.capturing = false;
      return s;
    case Command::StartPresentation:
      if (s.phase != Phase::Ready) return reject();
      s.phase = Phase::Presenting;
      return s;
    case Command::MuteToggle:
      if (s.phase != Phase::Presenting) return reject();
      s.muted = !s.muted;
      return s;
    case Command::Terminate:
      if (s.phase == Phase::Terminated) return reject();
      s.phase = Phase::Terminated;
      s.capturing = false;
      return s;
  }
  return reject();
}

IdentifierSpec identifier_spec_for(const ScenarioSpec& spec) {
  return IdentifierSpec{"synthetic", spec.descriptor_dim, spec.identifier_layers, spec.seed};
}

std::unique_ptr<IdentifierProvider> make_identifier(const IdentifierSpec& spec) {
  if (spec.descriptor_dim < 1) throw Error(ErrorCode::Validation, "descriptor_dim must be positive");
  if (spec.kind == "synthetic") {
    return std::make_unique<SyntheticIdentifier>(spec.descriptor_dim, spec.layers, spec.seed);
  }
  if (spec.kind == "descriptor-similarity") {
    return std::make_unique<DescriptorSimilarityProvider>(spec.descriptor_dim);
  }
  throw Error(ErrorCode::Validation, "unknown identifier kind '" + spec.kind + "'");
}

Json to_json(const IdentifierSpec& spec) {
  Json j;
  j["kind"] = spec.kind;
  j["descriptor_dim"] = spec.descriptor_dim;
  if (spec.kind == "synthetic") {
    j["layers"] = spec.layers;
    j["seed"] = spec.seed;
  }
  return j;
}

IdentifierSpec identifier_spec_from_json(const nlohmann::json& j) {
  IdentifierSpec s;
  s.kind = j.at("kind").get<std::string>();
  s.descriptor_dim = j.at("descriptor_dim").get<int>();
  s.layers = j.value("layers", 0);
  s.seed = j.value("seed", std::uint64_t{0});
  return s;
}

Json to_json(const SessionSnapshot& s) {
  Json j;
  j["schema"] = kSchemaVersion;
  j["seq"] = s.seq;
  j["t"] = s.t;
  j["phase"] = to_string(s.state.phase);
  j["muted"] = s.state.muted;
  j["capturing"] = s.state.capturing;
  j["provisional"] = s.provisional;
  j["ep"] = optional_number(s.ep);
  if (s.ed) {
    j["ed"] = Json(*s.ed);
  } else {
    j["ed"] = nullptr;
  }
  j["gde"] = optional_number(s.gde);
  j["unidentified_share"] = optional_number(s.unidentified_share);
  if (s.anchor) {
    j["anchor"] = Json{{"member", s.anchor->member.str()},
                       {"x", s.anchor->center.x()},
                       {"y", s.anchor->center.y()},
                       {"frame_id", s.anchor->frame_id}};
  } else {
    j["anchor"] = nullptr;
  }
  if (s.latest_advice) {
    Json a = advice_fields(*s.latest_advice);
    a["t"] = s.latest_advice->t;
    j["latest_advice"] = std::move(a);
  } else {
    j["latest_advice"] = nullptr;
  }
  j["counters"] = Json{{"frames", s.counters.frames},
                       {"dropped", s.counters.dropped},
                       {"identifier_invocations", s.counters.identifier_invocations},
                       {"registration_frames", s.counters.registration_frames}};
  j["totals"] = s.totals ? to_json(*s.totals) : Json(nullptr);
  j["contact_window"] = s.contact_window ? to_json(*s.contact_window) : Json(nullptr);
  j["balance_window"] = s.balance_window ? to_json(*s.balance_window) : Json(nullptr);
  return j;
}

// ---- Session ---------------------------------------------------------------

Session::Session(EngineConfig config, IdentifierSpec identifier,
                 std::optional<AudienceLayout> layout, LineSink sink, TimeMs start_t)
    : config_(std::move(config)),
      identifier_spec_(std::move(identifier)),
      ident_(make_identifier(identifier_spec_)),
      layout_(std::move(layout)),
      sink_(std::move(sink)),
      last_t_(start_t) {
  config_.validate();
  if (layout_) {
    if (layout_->descriptor_dim() != ident_->descriptor_dim()) {
      throw Error(ErrorCode::Validation, "layout descriptors do not match the identifier dimension");
    }
    state_.phase = Phase::Ready;
  }
  Json h = envelope("header", start_t);
  h["schema"] = kSchemaVersion;
  h["config"] = to_json(config_);
  h["identifier"] = to_json(identifier_spec_);
  h["layout"] = layout_ ? to_json(*layout_) : Json(nullptr);
  emit(h);
}

Json Session::envelope(const char* type, TimeMs t) const {
  Json j;
  j["type"] = type;
  j["t"] = t;
  j["phase"] = to_string(state_.phase);
  return j;
}

void Session::emit(const Json& record) {
  if (sink_) sink_(record.dump());
}

void Session::check_time(TimeMs t) const {
  if (t < last_t_) {
    throw Error(ErrorCode::Ordering, "time " + std::to_string(t) + " precedes session time " +
                                         std::to_string(last_t_));
  }
}

void Session::emit_phase(Command cmd, TimeMs t, const AudienceLayout* layout) {
  Json j = envelope("phase", t);
  j["command"] = to_string(cmd);
  j["muted"] = state_.muted;
  j["capturing"] = state_.capturing;
  if (layout) j["layout"] = to_json(*layout);
  emit(j);
}

ControlResult Session::control(Command cmd, std::optional<TimeMs> t_in) {
  const TimeMs t = t_in.value_or(last_t_);
  check_time(t);
  SessionPhase next = apply_command(state_, cmd);
  ControlResult result;

  if (cmd == Command::BuildAudienceMap) {
    if (state_.phase == Phase::Registering) {
      if (sweep_.tracks.empty()) {
        throw Error(ErrorCode::EmptyAudience, "no sweep data to build an audience map from");
      }
      AudienceLayout built = finalize_layout(sweep_, config_.registration);
      if (built.descriptor_dim() != ident_->descriptor_dim()) {
        throw Error(ErrorCode::Validation, "sweep descriptors do not match the identifier dimension");
      }
      layout_ = std::move(built);
      last_t_ = t;
      state_ = next;
      emit_phase(cmd, t, &*layout_);
    } else {
      last_t_ = t;
      state_ = next;
      emit_phase(cmd, t, nullptr);
    }
    result.state = state_;
    result.templates = layout_->members();
    return result;
  }

  if (cmd == Command::StartPresentation) {
    if (!layout_) throw Error(ErrorCode::EmptyAudience, "no audience layout");
    identifier_.emplace(*layout_, *ident_, config_.identification);
    advisor_.emplace(config_.advisor, layout_->size(), t);
    totals_ = GazeDistribution::open(layout_->size(), 0, t);
    next_snapshot_t_ = t;
    last_frame_id_.reset();
  }

  if (cmd == Command::Terminate && advisor_ && state_.phase == Phase::Presenting) {
    std::vector<ClosedWindow> closed;
    auto events = advisor_->tick(t, &closed);
    drain(std::move(events), std::move(closed));
  }

  last_t_ = t;
  state_ = next;
  emit_phase(cmd, t, nullptr);
  result.state = state_;
  return result;
}

void Session::drain(std::vector<AdviceEvent> events, std::vector<ClosedWindow> closed) {
  // Window closes and their advice share the window end; interleave by time,
  // window record first, then any advice it produced.
  std::size_t e = 0;
  for (auto& cw : closed) {
    Json m = envelope("metrics", cw.window.t_end);
    m["scope"] = to_string(cw.rule);
    merge(m, window_record_fields(cw.window));
    emit(m);
    while (e < events.size() && events[e].window_id == cw.window.window_id &&
           events[e].t == cw.window.t_end &&
           ((cw.rule == WindowRule::Contact) ==
            (events[e].kind == AdviceKind::InsufficientEyeContact))) {
      const AdviceEvent& ev = events[e++];
      Json a = envelope("advice", ev.t);
      merge(a, advice_fields(ev));
      a["delivered"] = !state_.muted;
      emit(a);
      advice_.push_back(ev);
      if (!state_.muted && advice_sink_) advice_sink_->deliver(ev);
      if (advice_fn_) advice_fn_(ev);
    }
    closed_.push_back(std::move(cw));
  }
  if (e != events.size()) throw Error(ErrorCode::Validation, "advice event without a closed window");
}

bool Session::ingest(const FrameObservation& frame) {
  if (state_.phase == Phase::Registering && state_.capturing) {
    check_time(frame.t);
    if (last_frame_t_ && frame.t <= *last_frame_t_) {
      throw Error(ErrorCode::Ordering, "frame timestamps must increase");
    }
    sweep_ = ingest_sweep_frame(std::move(sweep_), frame, config_.registration);
    last_frame_t_ = frame.t;
    last_t_ = frame.t;
    ++counters_.registration_frames;
    Json j = envelope("frame", frame.t);
    merge(j, frame_fields(frame));
    emit(j);
    return true;
  }
  if (state_.phase == Phase::Presenting) {
    present(frame);
    return true;
  }
  return false;
}

void Session::present(const FrameObservation& frame) {
  check_time(frame.t);
  if (last_frame_t_ && frame.t <= *last_frame_t_) {
    throw Error(ErrorCode::Ordering, "frame timestamps must increase");
  }
  if (last_frame_id_ && frame.frame_id <= *last_frame_id_) {
    throw Error(ErrorCode::Ordering, "frame ids must increase");
  }
  validate_frame(frame, ident_->descriptor_dim());

  // Missing frame ids become dropped records with interpolated times.
  if (last_frame_id_ && frame.frame_id > *last_frame_id_ + 1) {
    const std::int64_t a = *last_frame_id_;
    const std::int64_t b = frame.frame_id;
    const TimeMs ta = *last_frame_t_;
    const double step = static_cast<double>(frame.t - ta) / static_cast<double>(b - a);
    for (std::int64_t id = a + 1; id < b; ++id) {
      const TimeMs td = ta + static_cast<TimeMs>(std::llround(step * static_cast<double>(id - a)));
      std::vector<ClosedWindow> closed;
      auto events = advisor_->on_dropped(td, &closed);
      drain(std::move(events), std::move(closed));
      totals_.add_dropped(td);
      ++counters_.dropped;
      Json d = envelope("dropped", td);
      d["frame_id"] = id;
      emit(d);
    }
  }

  std::vector<ClosedWindow> closed;
  auto events = advisor_->tick(frame.t, &closed);
  drain(std::move(events), std::move(closed));

  Json fr = envelope("frame", frame.t);
  merge(fr, frame_fields(frame));
  emit(fr);

  FrameAttention fa = identifier_->process(frame);
  Json at = envelope("attention", frame.t);
  merge(at, attention_fields(fa));
  emit(at);

  advisor_->on_frame(fa);  // windows already closed up to frame.t
  totals_.add(fa);
  ++counters_.frames;
  if (fa.identifier_invoked) ++counters_.identifier_invocations;
  last_frame_id_ = frame.frame_id;
  last_frame_t_ = frame.t;
  last_t_ = frame.t;

  if (frame.t >= next_snapshot_t_) {
    const TimeMs interval = config_.snapshot_interval_ms();
    while (next_snapshot_t_ <= frame.t) next_snapshot_t_ += interval;
    ++snapshot_seq_;
    SessionSnapshot snap = snapshot();
    Json m = envelope("metrics", frame.t);
    m["scope"] = "snapshot";
    Json body = to_json(snap);
    body.erase("t");
    body.erase("phase");
    merge(m, body);
    emit(m);
    if (snapshot_fn_) snapshot_fn_(snap);
  }
}

void Session::finish(TimeMs end_t) {
  if (state_.phase == Phase::Terminated) return;
  control(Command::Terminate, std::max(end_t, last_t_));
}

SessionSnapshot Session::snapshot() const {
  SessionSnapshot s;
  s.seq = snapshot_seq_;
  s.t = last_t_;
  s.state = state_;
  s.counters = counters_;
  if (!advice_.empty()) s.latest_advice = advice_.back();
  if (identifier_) s.anchor = identifier_->anchor();
  if (advisor_) {
    s.provisional = state_.phase == Phase::Presenting;
    s.totals = totals_;
    s.contact_window = advisor_->contact_window();
    s.balance_window = advisor_->balance_window();
    const auto& c = *s.contact_window;
    if (c.total > 0) s.ep = eye_contact_proportion(c);
    const auto& b = *s.balance_window;
    if (b.audience > 0) {
      std::vector<scalar_t> ed;
      for (int i = 1; i <= b.n_members(); ++i) ed.push_back(eye_contact_distribution(b, MemberId{i}));
      s.ed = std::move(ed);
      s.unidentified_share = unidentified_share(b);
    }
    if (b.per_member.sum() > 0) s.gde = gaze_distribution_entropy(b);
  }
  return s;
}

// ---- FrameAssembler --------------------------------------------------------

TimeMs default_pairing_tolerance(double frame_rate) {
  return static_cast<TimeMs>(std::llround(500.0 / frame_rate));
}

void FrameAssembler::push_gaze(const GazeSample& sample) {
  if (!gaze_.empty() && sample.t < gaze_.back().t) {
    throw Error(ErrorCode::Ordering, "gaze samples must be time-ordered");
  }
  gaze_.push_back(sample);
}

void FrameAssembler::push_frame(FrameObservation frame) {
  if (!pending_.empty() && frame.t <= pending_.back().t) {
    throw Error(ErrorCode::Ordering, "frame timestamps must increase");
  }
  pending_.push_back(std::move(frame));
}

FrameObservation FrameAssembler::pair(FrameObservation frame) const {
  frame.gaze = pair_gaze(frame.t, gaze_, tolerance_);
  return frame;
}

std::vector<FrameObservation> FrameAssembler::ready() {
  std::vector<FrameObservation> out;
  while (!pending_.empty() && !gaze_.empty() && gaze_.back().t >= pending_.front().t + tolerance_) {
    out.push_back(pair(std::move(pending_.front())));
    pending_.pop_front();
  }
  // Samples too old for any pending or future frame.
  const TimeMs horizon = (pending_.empty() ? (out.empty() ? TimeMs{0} : out.back().t)
                                           : pending_.front().t) - tolerance_;
  auto keep = std::lower_bound(gaze_.begin(), gaze_.end(), horizon,
                               [](const GazeSample& g, TimeMs t) { return g.t < t; });
  if (keep != gaze_.begin() && !out.empty()) gaze_.erase(gaze_.begin(), keep);
  return out;
}

std::vector<FrameObservation> FrameAssembler::flush() {
  std::vector<FrameObservation> out = ready();
  while (!pending_.empty()) {
    out.push_back(pair(std::move(pending_.front())));
    pending_.pop_front();
  }
  return out;
}

// ---- replay / simulate -----------------------------------------------------

std::string replay_log(const std::vector<nlohmann::json>& records, AdviceSink* sink,
                       std::vector<AdviceEvent>* advice_out) {
  if (records.empty() || records.front().value("type", "") != "header") {
    throw Error(ErrorCode::Parse, "session log must start with a header record");
  }
  const auto& h = records.front();
  if (h.at("schema").get<int>() != kSchemaVersion) {
    throw Error(ErrorCode::Parse, "unsupported log schema " + h.at("schema").dump());
  }
  std::optional<AudienceLayout> layout;
  if (!h.at("layout").is_null()) layout = layout_from_json(h.at("layout"));

  std::string out;
  Session session(config_from_json(h.at("config")), identifier_spec_from_json(h.at("identifier")),
                  std::move(layout), [&](const std::string& line) { out += line; out += '\n'; },
                  h.at("t").get<TimeMs>());
  session.set_advice_sink(sink);
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::string type = r.at("type").get<std::string>();
    if (type == "phase") {
      session.control(parse_command(r.at("command").get<std::string>()), r.at("t").get<TimeMs>());
    } else if (type == "frame") {
      session.ingest(frame_from_json(r));
    }
  }
  if (advice_out) *advice_out = session.advice();
  return out;
}

std::string simulate_log(const ScenarioSpec& spec, const EngineConfig& config) {
  const SimSession sim = generate_session(spec);
  AudienceLayout layout = register_audience(generate_sweep(spec).frames, config.registration);
  std::string out;
  Session session(config, identifier_spec_for(spec), std::move(layout),
                  [&](const std::string& line) { out += line; out += '\n'; }, 0);
  session.control(Command::StartPresentation, 0);
  for (const auto& f : sim.frames) session.ingest(f);
  session.finish(static_cast<TimeMs>(std::llround(spec.duration_s * 1000)));
  return out;
}

}  // namespace gazecoach
