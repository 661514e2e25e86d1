#include "gazecoach/core.hpp"

#include <algorithm>
#include <charconv>

namespace gazecoach {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Ordering: return "ordering";
    case ErrorCode::EmptyAudience: return "empty-audience";
    case ErrorCode::UndefinedWindow: return "undefined-window";
    case ErrorCode::NoEyeContact: return "no-eye-contact";
    case ErrorCode::UndefinedEntropy: return "undefined-entropy";
    case ErrorCode::WindowRange: return "window-range";
    case ErrorCode::Phase: return "phase";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::Alignment: return "alignment";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + " error: " + what), code_(code) {}

std::string MemberId::str() const { return "S_" + std::to_string(ordinal); }

MemberId MemberId::parse(const std::string& text) {
  if (text.size() < 3 || text[0] != 'S' || text[1] != '_') {
    throw Error(ErrorCode::Parse, "bad member id '" + text + "'");
  }
  int value = 0;
  const auto* first = text.data() + 2;
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || value < 1) {
    throw Error(ErrorCode::Parse, "bad member id '" + text + "'");
  }
  return MemberId{value};
}

FaceDetection make_detection(const Point2& center, scalar_t size, scalar_t confidence,
                             Descriptor descriptor) {
  FaceDetection d;
  const Point2 half = Point2::Constant(size / 2);
  d.box = Box2(center - half, center + half);
  d.center = center;
  d.det_confidence = confidence;
  d.descriptor = std::move(descriptor);
  return d;
}

void validate_frame(const FrameObservation& frame, int descriptor_dim) {
  const Box2 bounds(Point2(0, 0), Point2(frame.frame_size.width, frame.frame_size.height));
  for (const auto& d : frame.detections) {
    if (!d.box.contains(d.center)) {
      throw Error(ErrorCode::Validation, "detection center outside its box in frame " +
                                             std::to_string(frame.frame_id));
    }
    if (!bounds.contains(d.box)) {
      throw Error(ErrorCode::Validation,
                  "detection box outside frame bounds in frame " + std::to_string(frame.frame_id));
    }
    if (d.det_confidence < 0 || d.det_confidence > 1) {
      throw Error(ErrorCode::Validation, "detection confidence outside [0,1]");
    }
    if (descriptor_dim > 0 && d.descriptor.size() != descriptor_dim) {
      throw Error(ErrorCode::Validation, "descriptor dimension mismatch");
    }
  }
  if (frame.gaze.valid && !bounds.contains(frame.gaze.point)) {
    throw Error(ErrorCode::Validation,
                "valid gaze point outside frame in frame " + std::to_string(frame.frame_id));
  }
}

GazeSample pair_gaze(TimeMs t, const std::vector<GazeSample>& samples, TimeMs tolerance_ms) {
  auto it = std::lower_bound(samples.begin(), samples.end(), t,
                             [](const GazeSample& g, TimeMs value) { return g.t < value; });
  const GazeSample* best = nullptr;
  TimeMs best_dt = 0;
  auto consider = [&](const GazeSample& g) {
    const TimeMs dt = g.t > t ? g.t - t : t - g.t;
    if (dt > tolerance_ms) return;
    if (best == nullptr || dt < best_dt) {
      best = &g;
      best_dt = dt;
    }
  };
  if (it != samples.begin()) consider(*std::prev(it));
  if (it != samples.end()) consider(*it);
  if (best == nullptr) return GazeSample{t, Point2::Zero(), false};
  return *best;
}

}  // namespace gazecoach
