#include "gazecoach/identification.hpp"

#include <algorithm>
#include <numeric>

namespace gazecoach {

namespace {

// Nearest detection to `p`; ties go to the leftmost center, then lower index.
std::optional<std::size_t> nearest_detection(const FrameObservation& frame, const Point2& p,
                                             scalar_t* out_dist) {
  std::optional<std::size_t> best;
  scalar_t best_dist = 0;
  for (std::size_t i = 0; i < frame.detections.size(); ++i) {
    const auto& c = frame.detections[i].center;
    const scalar_t d = (c - p).norm();
    if (!best || d < best_dist ||
        (d == best_dist && c.x() < frame.detections[*best].center.x())) {
      best = i;
      best_dist = d;
    }
  }
  if (best && out_dist) *out_dist = best_dist;
  return best;
}

}  // namespace

const char* to_string(Classification c) {
  switch (c) {
    case Classification::NonAudience: return "non_audience";
    case Classification::AudienceIdentified: return "identified";
    case Classification::AudienceUnidentified: return "unidentified";
  }
  return "?";
}

Classification parse_classification(const std::string& text) {
  if (text == "non_audience") return Classification::NonAudience;
  if (text == "identified") return Classification::AudienceIdentified;
  if (text == "unidentified") return Classification::AudienceUnidentified;
  throw Error(ErrorCode::Parse, "unknown classification '" + text + "'");
}

Identification DescriptorSimilarityProvider::identify(const FaceDetection& face,
                                                      const AudienceLayout& layout) const {
  Identification best{MemberId{1}, -1};
  for (const auto& m : layout.members()) {
    const scalar_t c = cosine_confidence(face.descriptor, m.descriptor);
    if (c > best.confidence) best = {m.id, c};
  }
  best.confidence = std::max<scalar_t>(best.confidence, 0);
  return best;
}

std::optional<std::size_t> select_target(const FrameObservation& frame, scalar_t radius) {
  if (!frame.gaze.valid) return std::nullopt;
  scalar_t dist = 0;
  auto best = nearest_detection(frame, frame.gaze.point, &dist);
  if (best && dist < radius) return best;
  return std::nullopt;
}

AnchorUpdate maintain_anchor(const AnchorState& prev, const FrameObservation& frame,
                             const AudienceLayout& layout, const IdentifierProvider& ident,
                             scalar_t min_confidence, scalar_t track_gate) {
  if (frame.detections.empty()) return {std::nullopt, false};

  if (prev) {
    scalar_t dist = 0;
    auto candidate = nearest_detection(frame, prev->center, &dist);
    if (candidate && dist < track_gate) {
      const auto& det = frame.detections[*candidate];
      return {Anchor{prev->member, det.center, frame.frame_id, *candidate}, false};
    }
  }

  // Re-selection over every detection of this frame.
  std::optional<std::size_t> best;
  Identification best_id;
  for (std::size_t i = 0; i < frame.detections.size(); ++i) {
    const Identification id = ident.identify(frame.detections[i], layout);
    const bool better =
        !best || id.confidence > best_id.confidence ||
        (id.confidence == best_id.confidence &&
         frame.detections[i].center.x() < frame.detections[*best].center.x());
    if (better) {
      best = i;
      best_id = id;
    }
  }
  if (best_id.confidence >= min_confidence && layout.contains(best_id.member)) {
    const auto& det = frame.detections[*best];
    return {Anchor{best_id.member, det.center, frame.frame_id, *best}, true};
  }
  return {std::nullopt, true};
}

std::vector<int> in_frame_ordinals(const FrameObservation& frame) {
  const auto& dets = frame.detections;
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = dets[a].center;
    const auto& cb = dets[b].center;
    if (ca.x() != cb.x()) return ca.x() < cb.x();
    return ca.y() < cb.y();
  });
  std::vector<int> rank(dets.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<int>(r);
  return rank;
}

namespace {

std::optional<MemberId> infer_with_ranks(std::size_t target_index, const Anchor& anchor,
                                         const std::vector<int>& rank,
                                         const AudienceLayout& layout) {
  const int offset = rank[target_index] - rank[anchor.detection_index];
  const MemberId inferred{anchor.member.ordinal + offset};
  if (!layout.contains(inferred)) return std::nullopt;
  return inferred;
}

}  // namespace

std::optional<MemberId> infer_identity(std::size_t target_index, const Anchor& anchor,
                                       const FrameObservation& frame,
                                       const AudienceLayout& layout) {
  if (target_index >= frame.detections.size() || anchor.detection_index >= frame.detections.size()) {
    throw Error(ErrorCode::Validation, "detection index out of range");
  }
  return infer_with_ranks(target_index, anchor, in_frame_ordinals(frame), layout);
}

FrameAttention identify_frame(const AnchorState& prev, const FrameObservation& frame,
                              const AudienceLayout& layout, const IdentifierProvider& ident,
                              const IdentificationConfig& config) {
  FrameAttention fa;
  fa.frame_id = frame.frame_id;
  fa.t = frame.t;
  fa.target_index = select_target(frame, config.target_radius(frame.frame_size));

  const AnchorUpdate update = maintain_anchor(prev, frame, layout, ident, config.anchor_confidence,
                                              config.track_gate(frame.frame_size));
  fa.identifier_invoked = update.identifier_invoked;
  fa.anchor_after = update.anchor;

  if (fa.anchor_after) {
    const auto rank = in_frame_ordinals(frame);
    fa.detection_ids.reserve(frame.detections.size());
    for (std::size_t i = 0; i < frame.detections.size(); ++i) {
      fa.detection_ids.push_back(infer_with_ranks(i, *fa.anchor_after, rank, layout));
    }
  }

  if (!fa.target_index) {
    fa.classification = Classification::NonAudience;
  } else if (fa.anchor_after && fa.detection_ids[*fa.target_index]) {
    fa.classification = Classification::AudienceIdentified;
    fa.member = fa.detection_ids[*fa.target_index];
  } else {
    fa.classification = Classification::AudienceUnidentified;
  }
  return fa;
}

std::vector<std::optional<MemberId>> baseline_identify(const FrameObservation& frame,
                                                       const AudienceLayout& layout,
                                                       const IdentifierProvider& ident,
                                                       scalar_t sim_threshold) {
  std::vector<std::optional<MemberId>> out;
  out.reserve(frame.detections.size());
  for (const auto& det : frame.detections) {
    const Identification id = ident.identify(det, layout);
    if (id.confidence > sim_threshold && layout.contains(id.member)) {
      out.push_back(id.member);
    } else {
      out.push_back(std::nullopt);
    }
  }
  return out;
}

FrameAttention AnchorIdentifier::process(const FrameObservation& frame) {
  FrameAttention fa = identify_frame(anchor_, frame, *layout_, *ident_, config_);
  anchor_ = fa.anchor_after;
  if (fa.identifier_invoked) ++invocations_;
  return fa;
}

}  // namespace gazecoach
