#pragma once

#include "gazecoach/advisor.hpp"
#include "gazecoach/config.hpp"
#include "gazecoach/identification.hpp"
#include "gazecoach/records.hpp"
#include "gazecoach/registration.hpp"

#include <deque>
#include <functional>
#include <memory>

namespace gazecoach {

struct ScenarioSpec;

enum class Phase { Idle, Registering, Ready, Presenting, Terminated };

const char* to_string(Phase p);
Phase parse_phase(const std::string& text);

enum class Command {
  StartRegistration,
  StopRegistration,
  BuildAudienceMap,
  StartPresentation,
  MuteToggle,
  Terminate,
};

const char* to_string(Command c);
Command parse_command(const std::string& text);

struct SessionPhase {
  Phase phase = Phase::Idle;
  bool muted = false;
  bool capturing = false;  ///< sweep frames accepted (Registering only)

  friend bool operator==(const SessionPhase&, const SessionPhase&) = default;
};

/// Pure transition table. BuildAudienceMap's data check lives in Session.
/// Illegal commands throw a Phase error.
SessionPhase apply_command(SessionPhase state, Command cmd);

/// Recipe for rebuilding the identifier on replay.
struct IdentifierSpec {
  std::string kind = "synthetic";  ///< synthetic | descriptor-similarity
  int descriptor_dim = 64;
  int layers = 8;
  std::uint64_t seed = 1;
};

IdentifierSpec identifier_spec_for(const ScenarioSpec& spec);
std::unique_ptr<IdentifierProvider> make_identifier(const IdentifierSpec& spec);
Json to_json(const IdentifierSpec& spec);
IdentifierSpec identifier_spec_from_json(const nlohmann::json& j);

/// Delivery adapter for prompt text (speech on the console side).
class AdviceSink {
 public:
  virtual ~AdviceSink() = default;
  virtual void deliver(const AdviceEvent& event) = 0;
};

class NullAdviceSink final : public AdviceSink {
 public:
  void deliver(const AdviceEvent&) override {}
};

struct SessionCounters {
  std::int64_t frames = 0;   ///< presentation frames processed
  std::int64_t dropped = 0;
  std::int64_t identifier_invocations = 0;
  std::int64_t registration_frames = 0;
};

struct SessionSnapshot {
  std::int64_t seq = 0;
  TimeMs t = 0;
  SessionPhase state;
  bool provisional = false;
  std::optional<scalar_t> ep;                ///< open contact window
  std::optional<std::vector<scalar_t>> ed;   ///< open balance window, per ordinal
  std::optional<scalar_t> gde;               ///< open balance window
  std::optional<scalar_t> unidentified_share;
  AnchorState anchor;
  std::optional<AdviceEvent> latest_advice;
  SessionCounters counters;
  std::optional<GazeDistribution> totals;    ///< whole presentation
  std::optional<GazeDistribution> contact_window;
  std::optional<GazeDistribution> balance_window;
};

Json to_json(const SessionSnapshot& s);

struct ControlResult {
  SessionPhase state;
  std::vector<LayoutMember> templates;  ///< BuildAudienceMap: ordered left to right
};

/// One speaker session: phase machine, registration sweep, per-frame
/// identification, windows, advice and the append-only log.
///
/// Every record goes to `sink` as one JSON line without the trailing newline.
class Session {
 public:
  using LineSink = std::function<void(const std::string&)>;

  /// With a layout the session starts in Ready; otherwise in Idle.
  Session(EngineConfig config, IdentifierSpec identifier, std::optional<AudienceLayout> layout,
          LineSink sink, TimeMs start_t = 0);

  /// `t` defaults to the latest session time.
  ControlResult control(Command cmd, std::optional<TimeMs> t = std::nullopt);

  /// Routes a paired frame by phase: sweep ingest while Registering,
  /// identification while Presenting. Returns false if the frame was ignored.
  bool ingest(const FrameObservation& frame);

  /// Terminates (if still live) at `end_t`, closing every window ending by then.
  void finish(TimeMs end_t);

  SessionSnapshot snapshot() const;

  const SessionPhase& state() const { return state_; }
  const EngineConfig& config() const { return config_; }
  const IdentifierSpec& identifier_spec() const { return identifier_spec_; }
  const std::optional<AudienceLayout>& layout() const { return layout_; }
  const std::vector<AdviceEvent>& advice() const { return advice_; }
  const std::vector<ClosedWindow>& closed_windows() const { return closed_; }
  TimeMs now() const { return last_t_; }

  void set_advice_sink(AdviceSink* sink) { advice_sink_ = sink; }
  /// Called on every snapshot-cadence boundary.
  void on_snapshot(std::function<void(const SessionSnapshot&)> fn) { snapshot_fn_ = std::move(fn); }
  void on_advice(std::function<void(const AdviceEvent&)> fn) { advice_fn_ = std::move(fn); }

 private:
  Json envelope(const char* type, TimeMs t) const;
  void emit(const Json& record);
  void check_time(TimeMs t) const;
  void present(const FrameObservation& frame);
  void drain(std::vector<AdviceEvent> events, std::vector<ClosedWindow> closed);
  void emit_phase(Command cmd, TimeMs t, const AudienceLayout* layout);

  EngineConfig config_;
  IdentifierSpec identifier_spec_;
  std::unique_ptr<IdentifierProvider> ident_;
  std::optional<AudienceLayout> layout_;
  LineSink sink_;
  SessionPhase state_;
  TimeMs last_t_ = 0;
  std::optional<TimeMs> last_frame_t_;

  SweepState sweep_;
  std::optional<AnchorIdentifier> identifier_;
  std::optional<Advisor> advisor_;
  GazeDistribution totals_;
  std::optional<std::int64_t> last_frame_id_;
  TimeMs next_snapshot_t_ = 0;
  std::int64_t snapshot_seq_ = 0;
  SessionCounters counters_;
  std::vector<AdviceEvent> advice_;
  std::vector<ClosedWindow> closed_;

  AdviceSink* advice_sink_ = nullptr;
  std::function<void(const SessionSnapshot&)> snapshot_fn_;
  std::function<void(const AdviceEvent&)> advice_fn_;
};

/// Joins frame records with gaze samples arriving as a separate stream.
/// A frame is released once a sample at or past t + tolerance has arrived,
/// or on flush.
class FrameAssembler {
 public:
  explicit FrameAssembler(TimeMs tolerance_ms) : tolerance_(tolerance_ms) {}

  void push_gaze(const GazeSample& sample);
  void push_frame(FrameObservation frame);
  std::vector<FrameObservation> ready();
  std::vector<FrameObservation> flush();

 private:
  FrameObservation pair(FrameObservation frame) const;

  TimeMs tolerance_;
  std::vector<GazeSample> gaze_;
  std::deque<FrameObservation> pending_;
};

/// Half the frame interval, rounded.
TimeMs default_pairing_tolerance(double frame_rate);

/// Re-runs a recorded log: header config/layout/identifier, phase commands
/// and frame records are inputs; every other record is regenerated.
/// Returns the regenerated log text (newline-terminated lines).
std::string replay_log(const std::vector<nlohmann::json>& records,
                       AdviceSink* sink = nullptr,
                       std::vector<AdviceEvent>* advice_out = nullptr);

/// Log text for a simulated scenario: layout registered from the scenario's
/// sweep, presentation from t = 0 to the scenario duration.
std::string simulate_log(const ScenarioSpec& spec, const EngineConfig& config);

}  // namespace gazecoach
