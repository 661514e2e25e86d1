#pragma once

#include "gazecoach/core.hpp"
#include "gazecoach/registration.hpp"

#include <cstddef>
#include <memory>

namespace gazecoach {

struct Identification {
  MemberId member;
  scalar_t confidence = 0;  ///< in [0, 1]
};

/// Maps a face descriptor to the best-matching registered member.
/// Implementations must be deterministic and safe to call concurrently.
class IdentifierProvider {
 public:
  virtual ~IdentifierProvider() = default;
  virtual int descriptor_dim() const = 0;
  virtual Identification identify(const FaceDetection& face, const AudienceLayout& layout) const = 0;
  virtual std::string name() const = 0;
};

/// Cosine similarity against the layout templates, clamped to [0, 1].
/// Equal scores resolve to the lower ordinal.
class DescriptorSimilarityProvider final : public IdentifierProvider {
 public:
  explicit DescriptorSimilarityProvider(int dim) : dim_(dim) {}
  int descriptor_dim() const override { return dim_; }
  Identification identify(const FaceDetection& face, const AudienceLayout& layout) const override;
  std::string name() const override { return "descriptor-similarity"; }

 private:
  int dim_;
};

struct Anchor {
  MemberId member;
  Point2 center = Point2::Zero();
  std::int64_t frame_id = 0;
  std::size_t detection_index = 0;  ///< index into the frame it was last seen in
};

/// Established anchor or absent.
using AnchorState = std::optional<Anchor>;

enum class Classification { NonAudience, AudienceIdentified, AudienceUnidentified };

const char* to_string(Classification c);
Classification parse_classification(const std::string& text);

struct FrameAttention {
  std::int64_t frame_id = 0;
  TimeMs t = 0;
  Classification classification = Classification::NonAudience;
  std::optional<MemberId> member;            ///< set iff AudienceIdentified
  std::optional<std::size_t> target_index;   ///< selected target detection
  bool identifier_invoked = false;
  AnchorState anchor_after;
  /// Identity inferred for every detection of the frame (empty when no anchor).
  std::vector<std::optional<MemberId>> detection_ids;
};

struct IdentificationConfig {
  std::optional<scalar_t> target_radius_px;  ///< L; default 0.05 x frame width
  std::optional<scalar_t> track_gate_px;     ///< D; default 0.08 x frame width
  scalar_t anchor_confidence = 0.8;          ///< p
  scalar_t baseline_sim_threshold = 0.8;

  scalar_t target_radius(const FrameSize& s) const {
    return target_radius_px ? *target_radius_px : 0.05 * s.width;
  }
  scalar_t track_gate(const FrameSize& s) const {
    return track_gate_px ? *track_gate_px : 0.08 * s.width;
  }
};

/// Detection nearest the gaze point if closer than `radius`; ties go to the
/// leftmost center. Invalid gaze selects nothing.
std::optional<std::size_t> select_target(const FrameObservation& frame, scalar_t radius);

struct AnchorUpdate {
  AnchorState anchor;
  bool identifier_invoked = false;
};

AnchorUpdate maintain_anchor(const AnchorState& prev, const FrameObservation& frame,
                             const AudienceLayout& layout, const IdentifierProvider& ident,
                             scalar_t min_confidence, scalar_t track_gate);

/// Left-to-right rank of each detection: by x, then y, then input order.
std::vector<int> in_frame_ordinals(const FrameObservation& frame);

/// Identity of `target_index` from its in-frame ordinal offset to the anchor.
std::optional<MemberId> infer_identity(std::size_t target_index, const Anchor& anchor,
                                       const FrameObservation& frame, const AudienceLayout& layout);

FrameAttention identify_frame(const AnchorState& prev, const FrameObservation& frame,
                              const AudienceLayout& layout, const IdentifierProvider& ident,
                              const IdentificationConfig& config);

/// Per-frame identification of every detection; assigned iff confidence
/// strictly exceeds `sim_threshold`.
std::vector<std::optional<MemberId>> baseline_identify(const FrameObservation& frame,
                                                       const AudienceLayout& layout,
                                                       const IdentifierProvider& ident,
                                                       scalar_t sim_threshold);

/// Stateful wrapper owning the anchor across frames of one session.
class AnchorIdentifier {
 public:
  AnchorIdentifier(const AudienceLayout& layout, const IdentifierProvider& ident,
                   IdentificationConfig config)
      : layout_(&layout), ident_(&ident), config_(std::move(config)) {}

  FrameAttention process(const FrameObservation& frame);
  const AnchorState& anchor() const { return anchor_; }
  std::int64_t invocations() const { return invocations_; }

 private:
  const AudienceLayout* layout_;
  const IdentifierProvider* ident_;
  IdentificationConfig config_;
  AnchorState anchor_;
  std::int64_t invocations_ = 0;
};

}  // namespace gazecoach
