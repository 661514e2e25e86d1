#pragma once

#include "gazecoach/core.hpp"

namespace gazecoach {

struct RegistrationConfig {
  /// Tracks seen fewer times than this are dropped at finalization.
  int min_track_observations = 2;
  /// Association gate in pixels; unset means 0.08 x frame width.
  std::optional<scalar_t> gate_px;
  /// Use every k-th sweep frame.
  int sample_stride = 1;

  scalar_t resolved_gate(const FrameSize& size) const {
    return gate_px ? *gate_px : 0.08 * size.width;
  }
};

/// Provisional audience track on the virtual sweep line.
struct SweepTrack {
  scalar_t offset = 0;       ///< mean global x over all observations
  scalar_t last_global = 0;  ///< global x at the latest observation
  FaceDetection best;        ///< highest det_confidence observation
  std::int64_t best_frame_id = 0;
  std::int64_t first_frame_id = 0;
  std::int64_t last_frame_id = 0;
  int observations = 0;
};

/// Accumulated sweep. Global x of a detection is its frame x plus `pan_total`.
struct SweepState {
  std::vector<SweepTrack> tracks;
  scalar_t last_frame_shift = 0;
  scalar_t pan_total = 0;
  std::optional<TimeMs> last_t;
  std::int64_t frames_seen = 0;
  FrameSize frame_size;
};

struct CropRef {
  std::int64_t frame_id = 0;
  Box2 box;
};

struct LayoutMember {
  MemberId id;
  scalar_t global_offset = 0;
  Descriptor descriptor;
  CropRef crop;
  scalar_t det_confidence = 0;
  int observations = 0;
};

/// Registered left-to-right audience, S_1..S_N. Immutable once finalized.
class AudienceLayout {
 public:
  AudienceLayout() = default;
  AudienceLayout(std::vector<LayoutMember> members, FrameSize frame_size);

  int size() const { return static_cast<int>(members_.size()); }
  bool contains(MemberId id) const { return id.ordinal >= 1 && id.ordinal <= size(); }
  const LayoutMember& member(MemberId id) const;
  const std::vector<LayoutMember>& members() const { return members_; }
  const FrameSize& frame_size() const { return frame_size_; }
  int descriptor_dim() const;

  friend bool operator==(const AudienceLayout& a, const AudienceLayout& b);

 private:
  std::vector<LayoutMember> members_;
  FrameSize frame_size_;
};

/// Associates one sweep frame's detections with existing tracks.
///
/// Candidate inter-frame shifts are voted on by every (track, detection)
/// displacement; the winning candidate maximizes summed descriptor
/// similarity of its gated matches. The stored shift is then the median of
/// the winner's matched displacements. Unmatched detections open new tracks.
SweepState ingest_sweep_frame(SweepState state, const FrameObservation& frame,
                              const RegistrationConfig& config = {});

/// Orders surviving tracks by global offset and labels them S_1..S_N.
AudienceLayout finalize_layout(const SweepState& state, const RegistrationConfig& config = {});

/// Convenience: ingest a whole sweep and finalize.
AudienceLayout register_audience(const std::vector<FrameObservation>& sweep,
                                 const RegistrationConfig& config = {});

}  // namespace gazecoach
