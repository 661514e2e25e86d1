#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gazecoach {

/** Scalar type used for all geometry and descriptor math */
using scalar_t = double;

/** Pixel position in scene-frame coordinates */
using Point2 = Eigen::Matrix<scalar_t, 2, 1>;

/** Axis-aligned pixel rectangle */
using Box2 = Eigen::AlignedBox<scalar_t, 2>;

/** Appearance embedding of one face */
using Descriptor = Eigen::Matrix<scalar_t, Eigen::Dynamic, 1>;

/** Exact frame counters */
using Counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/** Session clock, milliseconds derived from frame timestamps */
using TimeMs = std::int64_t;

enum class ErrorCode {
  Ordering,
  EmptyAudience,
  UndefinedWindow,
  NoEyeContact,
  UndefinedEntropy,
  WindowRange,
  Phase,
  Validation,
  Alignment,
  Parse,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Audience member identity S_k; the ordinal k is 1-based and left-to-right.
struct MemberId {
  int ordinal = 0;

  std::string str() const;
  static MemberId parse(const std::string& text);

  friend bool operator==(MemberId, MemberId) = default;
  friend auto operator<=>(MemberId, MemberId) = default;
};

struct FrameSize {
  int width = 1280;
  int height = 720;

  friend bool operator==(FrameSize, FrameSize) = default;
};

struct FaceDetection {
  Box2 box;
  Point2 center = Point2::Zero();
  scalar_t det_confidence = 1.0;
  Descriptor descriptor;
};

struct GazeSample {
  TimeMs t = 0;
  Point2 point = Point2::Zero();
  bool valid = false;
};

struct FrameObservation {
  std::int64_t frame_id = 0;
  TimeMs t = 0;
  std::vector<FaceDetection> detections;
  GazeSample gaze;
  FrameSize frame_size;
};

/// Builds a square detection box centered on `center`.
FaceDetection make_detection(const Point2& center, scalar_t size, scalar_t confidence,
                             Descriptor descriptor);

/// Checks center-in-box, box-in-frame and (when dim > 0) descriptor length.
void validate_frame(const FrameObservation& frame, int descriptor_dim = 0);

/// Cosine similarity clamped to [0, 1]; zero vectors score 0.
template <typename DerivedA, typename DerivedB>
scalar_t cosine_confidence(const Eigen::MatrixBase<DerivedA>& a,
                           const Eigen::MatrixBase<DerivedB>& b) {
  const scalar_t na = a.norm();
  const scalar_t nb = b.norm();
  if (na == 0 || nb == 0) return 0;
  const scalar_t c = a.dot(b) / (na * nb);
  return std::clamp<scalar_t>(c, 0, 1);
}

/// Nearest gaze sample to `t` within `tolerance_ms`; ties go to the earlier sample.
/// `samples` must be sorted by time.
GazeSample pair_gaze(TimeMs t, const std::vector<GazeSample>& samples, TimeMs tolerance_ms);

}  // namespace gazecoach
