#pragma once

#include "gazecoach/identification.hpp"
#include "gazecoach/registration.hpp"

namespace testing {

using namespace gazecoach;

inline Descriptor unit(int dim, int k) {
  Descriptor d = Descriptor::Zero(dim);
  d(k) = 1;
  return d;
}

/// Members S_1..S_n with one-hot descriptors and offsets 100, 200, ...
inline AudienceLayout one_hot_layout(int n, int dim = 8) {
  std::vector<LayoutMember> members;
  for (int k = 1; k <= n; ++k) {
    LayoutMember m;
    m.id = MemberId{k};
    m.global_offset = 100.0 * k;
    m.descriptor = unit(dim, k - 1);
    m.crop.box = Box2(Point2(0, 0), Point2(10, 10));
    m.det_confidence = 1;
    m.observations = 2;
    members.push_back(std::move(m));
  }
  return AudienceLayout(std::move(members), FrameSize{});
}

inline FrameObservation frame_at(std::int64_t id, TimeMs t, const std::vector<Point2>& centers,
                                 std::optional<Point2> gaze, int dim = 8) {
  FrameObservation f;
  f.frame_id = id;
  f.t = t;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    f.detections.push_back(make_detection(centers[i], 40, 1, Descriptor::Zero(dim)));
  }
  f.gaze = GazeSample{t, gaze.value_or(Point2::Zero()), gaze.has_value()};
  return f;
}

/// Identifier whose answer is written into the descriptor:
/// descriptor(0) = member ordinal, descriptor(1) = confidence.
class ScriptedIdentifier final : public IdentifierProvider {
 public:
  int descriptor_dim() const override { return 2; }
  Identification identify(const FaceDetection& face, const AudienceLayout&) const override {
    ++calls;
    return {MemberId{static_cast<int>(face.descriptor(0))}, face.descriptor(1)};
  }
  std::string name() const override { return "scripted"; }

  mutable int calls = 0;
};

inline Descriptor scripted(int ordinal, double confidence) {
  Descriptor d(2);
  d << ordinal, confidence;
  return d;
}

}  // namespace testing
