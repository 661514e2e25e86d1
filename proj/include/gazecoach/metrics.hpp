#pragma once

#include "gazecoach/core.hpp"
#include "gazecoach/identification.hpp"

#include <cmath>
#include <limits>

namespace gazecoach {

/// Frame counters for one accumulation window [t_start, t_end).
///
/// total = X (all frames), audience = X-bar (frames with a target face),
/// per_member(i-1) = X_i, unidentified = audience frames of unknown identity.
/// Invariant: audience == per_member.sum() + unidentified <= total.
struct GazeDistribution {
  std::int64_t window_id = 0;
  TimeMs t_start = 0;
  TimeMs t_end = std::numeric_limits<TimeMs>::max();
  std::int64_t total = 0;
  std::int64_t audience = 0;
  std::int64_t unidentified = 0;
  Counts per_member;

  static GazeDistribution open(int n_members, std::int64_t window_id = 0, TimeMs t_start = 0,
                               TimeMs t_end = std::numeric_limits<TimeMs>::max());

  int n_members() const { return static_cast<int>(per_member.size()); }
  bool covers(TimeMs t) const { return t >= t_start && t < t_end; }

  /// In-place form of update_distribution.
  void add(const FrameAttention& fa);
  /// A frame that never arrived: counts toward X only.
  void add_dropped(TimeMs t);

  friend bool operator==(const GazeDistribution&, const GazeDistribution&) = default;
};

GazeDistribution update_distribution(GazeDistribution dist, const FrameAttention& fa);

/// X-bar / X * 100.
scalar_t eye_contact_proportion(const GazeDistribution& dist);

/// X_i / X-bar * 100.
scalar_t eye_contact_distribution(const GazeDistribution& dist, MemberId member);

/// Share of audience frames with unknown identity, percent.
scalar_t unidentified_share(const GazeDistribution& dist);

/// Shannon entropy (nats) of a count vector, with 0 ln 0 = 0.
/// Bounded by [0, ln N]. Throws UndefinedEntropy when every count is zero.
template <typename Derived>
scalar_t gaze_distribution_entropy(const Eigen::MatrixBase<Derived>& counts) {
  using Value = typename Derived::Scalar;
  Value sum = 0;
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    if (counts(i) < 0) throw Error(ErrorCode::Validation, "negative gaze count");
    sum += counts(i);
  }
  if (sum == 0) throw Error(ErrorCode::UndefinedEntropy, "all gaze counts are zero");
  const scalar_t total = static_cast<scalar_t>(sum);
  scalar_t h = 0;
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    if (counts(i) == 0) continue;
    const scalar_t p = static_cast<scalar_t>(counts(i)) / total;
    h -= p * std::log(p);
  }
  return std::max<scalar_t>(h, 0);
}

inline scalar_t gaze_distribution_entropy(const GazeDistribution& dist) {
  return gaze_distribution_entropy(dist.per_member);
}

}  // namespace gazecoach
