#pragma once

#include "gazecoach/core.hpp"
#include "gazecoach/identification.hpp"
#include "gazecoach/registration.hpp"

#include <limits>
#include <random>

namespace gazecoach {

struct CameraKey {
  double t_s = 0;
  double yaw_deg = 0;
};

/// What the speaker looks at over [t_start_s, t_end_s): a member or a named
/// non-audience region (laptop, ceiling, notes, screen).
struct GazeSegment {
  double t_start_s = 0;
  double t_end_s = 0;
  std::optional<MemberId> member;
  std::string region;
};

struct TimeSpan {
  double t_start_s = 0;
  double t_end_s = 0;
  bool contains(double t) const { return t >= t_start_s && t < t_end_s; }
};

enum class OcclusionMode { Drop, Degrade };

/// Occlusion of one member over frames [frame_start, frame_end] (inclusive).
struct Occlusion {
  MemberId member;
  std::int64_t frame_start = 0;
  std::int64_t frame_end = 0;
  OcclusionMode mode = OcclusionMode::Degrade;
};

/// Appearance and sensing noise. Identity confidence of a detection is the
/// cosine between its descriptor and its member's base vector; the model
/// draws that cosine and builds the descriptor around it.
struct NoiseModel {
  double conf_min = 1.0;
  double conf_max = 1.0;
  double sweep_conf_min = 1.0;
  double sweep_conf_max = 1.0;
  double pose_penalty_per_deg = 0;  ///< confidence lost per degree off the optical axis
  /// Camera yaw speed above which frames are motion-blurred; infinite disables.
  double blur_speed_deg_s = std::numeric_limits<double>::infinity();
  double blur_conf_min = 0.2;
  double blur_conf_max = 0.5;
  std::vector<TimeSpan> blur_episodes;
  std::vector<Occlusion> occlusions;
  double gaze_jitter_px = 0;
  double detection_jitter_px = 0;
  double camera_jitter_px = 0;
  double spurious_rate = 0;  ///< per-frame probability of one false detection
  double dropout = 0;        ///< per-face probability of a missed detection

  bool is_zero() const;
};

struct ScenarioSpec {
  std::string name = "custom";
  std::vector<double> seats_deg;   ///< member azimuths, strictly increasing (S_1 leftmost)
  std::vector<double> seat_y_px;   ///< vertical offsets from frame middle; empty = 0
  FrameSize frame_size;
  double fov_deg = 90;
  double face_size_px = 56;
  double frame_rate = 30;
  double gaze_rate = 120;
  double duration_s = 60;
  std::vector<CameraKey> camera;   ///< piecewise-linear yaw; empty = fixed at 0
  std::vector<GazeSegment> gaze_script;
  NoiseModel noise;
  std::uint64_t seed = 1;
  int descriptor_dim = 64;
  int identifier_layers = 8;       ///< feature-extraction depth of the synthetic identifier
  double sweep_speed_deg_s = 8;

  int n_members() const { return static_cast<int>(seats_deg.size()); }
  double px_per_deg() const { return frame_size.width / fov_deg; }
  std::int64_t frame_count() const;
  void validate() const;
};

/// Truth for one rendered frame.
struct FrameTruth {
  std::int64_t frame_id = 0;
  std::optional<MemberId> gazed;                       ///< none = non-audience
  std::vector<std::optional<MemberId>> detection_ids;  ///< none = spurious detection
  std::vector<bool> visible;                           ///< per member, by projection
  bool blurred = false;
};

struct GroundTruth {
  std::vector<FrameTruth> frames;
};

struct SimSession {
  std::vector<FrameObservation> frames;
  std::vector<GazeSample> gaze_samples;
  GroundTruth truth;
};

/// Camera yaw (deg) and yaw speed (deg/s) at time t.
double camera_yaw(const ScenarioSpec& spec, double t_s);
double camera_speed(const ScenarioSpec& spec, double t_s);

/// Horizontal pixel position of a member's face center at camera yaw `yaw`.
double project_x(const ScenarioSpec& spec, int member_index, double yaw_deg);

/// Whether the member's whole face box lies inside the frame at yaw `yaw`.
bool projected_visible(const ScenarioSpec& spec, int member_index, double yaw_deg);

/// Per-member unit base descriptors (columns), mutually orthogonal.
Eigen::MatrixXd member_basis(const ScenarioSpec& spec);

SimSession generate_session(const ScenarioSpec& spec);

/// Pre-presentation left-to-right scan over the whole audience.
SimSession generate_sweep(const ScenarioSpec& spec);

/// Layout built straight from the base descriptors, bypassing registration.
AudienceLayout truth_layout(const ScenarioSpec& spec);

/// Identifier with a stack of orthogonal feature layers in front of cosine
/// matching. The layers preserve angles, so confidence equals the descriptor
/// cosine; they exist to give each call a realistic extraction cost.
class SyntheticIdentifier final : public IdentifierProvider {
 public:
  SyntheticIdentifier(int descriptor_dim, int layers, std::uint64_t seed);
  int descriptor_dim() const override { return dim_; }
  Identification identify(const FaceDetection& face, const AudienceLayout& layout) const override;
  std::string name() const override { return "synthetic"; }

 private:
  Eigen::VectorXd extract(const Eigen::VectorXd& x) const;

  int dim_;
  std::vector<Eigen::MatrixXd> layers_;
};

std::unique_ptr<IdentifierProvider> synthetic_identifier(const ScenarioSpec& spec);

/// Reference scenarios: static, slow-pan, fast-pan-with-blur, occlusion-heavy.
std::vector<std::string> reference_scenario_names();
ScenarioSpec reference_scenario(const std::string& name);

/// Parse / write the plain-text scenario format (see README).
ScenarioSpec parse_scenario(const std::string& text);
ScenarioSpec load_scenario(const std::string& name_or_path);
std::string write_scenario(const ScenarioSpec& spec);

// ---- benchmarking ---------------------------------------------------------

/// One method's per-frame output, aligned with the truth by frame id.
struct MethodRun {
  std::string method;
  std::vector<std::int64_t> frame_ids;
  std::vector<std::vector<std::optional<MemberId>>> detection_ids;
  std::vector<bool> invoked;
  std::vector<double> latency_ms;
};

struct BenchRow {
  std::string method;
  double accuracy = 0;             ///< percent over all detected faces
  double invocation_fraction = 0; ///< percent of frames invoking the identifier
  double latency_mean_ms = 0;
  double latency_median_ms = 0;
  double latency_p95_ms = 0;
  std::int64_t frames = 0;
  std::int64_t faces = 0;
  std::int64_t correct = 0;
};

struct BenchReport {
  std::string scenario;
  std::vector<BenchRow> rows;

  const BenchRow& row(const std::string& method) const;
  std::string csv() const;
  std::string markdown() const;
};

BenchRow score_identification(const MethodRun& run, const GroundTruth& truth);

/// Converts an attention stream (anchor method) into a MethodRun.
MethodRun method_run_from_attention(const std::vector<FrameAttention>& attention,
                                    std::vector<double> latency_ms = {});

MethodRun run_anchor_method(const std::vector<FrameObservation>& frames,
                            const AudienceLayout& layout, const IdentifierProvider& ident,
                            const IdentificationConfig& config,
                            std::vector<FrameAttention>* attention_out = nullptr);

MethodRun run_baseline_method(const std::vector<FrameObservation>& frames,
                              const AudienceLayout& layout, const IdentifierProvider& ident,
                              const IdentificationConfig& config);

/// Generates the scenario, registers the audience from its sweep, and scores
/// the requested methods ("anchor", "baseline").
BenchReport bench_identify(const ScenarioSpec& spec, const std::vector<std::string>& methods,
                           const IdentificationConfig& config = {});

}  // namespace gazecoach
