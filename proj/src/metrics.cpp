#include "gazecoach/metrics.hpp"

namespace gazecoach {

GazeDistribution GazeDistribution::open(int n_members, std::int64_t window_id, TimeMs t_start,
                                        TimeMs t_end) {
  GazeDistribution d;
  d.window_id = window_id;
  d.t_start = t_start;
  d.t_end = t_end;
  d.per_member = Counts::Zero(n_members);
  return d;
}

void GazeDistribution::add(const FrameAttention& fa) {
  if (!covers(fa.t)) {
    throw Error(ErrorCode::WindowRange, "frame at t=" + std::to_string(fa.t) +
                                            " outside window [" + std::to_string(t_start) + ", " +
                                            std::to_string(t_end) + ")");
  }
  total += 1;
  switch (fa.classification) {
    case Classification::NonAudience:
      break;
    case Classification::AudienceIdentified: {
      if (!fa.member || fa.member->ordinal < 1 || fa.member->ordinal > n_members()) {
        throw Error(ErrorCode::Validation, "identified frame names no layout member");
      }
      audience += 1;
      per_member(fa.member->ordinal - 1) += 1;
      break;
    }
    case Classification::AudienceUnidentified:
      audience += 1;
      unidentified += 1;
      break;
  }
}

void GazeDistribution::add_dropped(TimeMs t) {
  if (!covers(t)) {
    throw Error(ErrorCode::WindowRange, "dropped frame at t=" + std::to_string(t) + " outside window");
  }
  total += 1;
}

GazeDistribution update_distribution(GazeDistribution dist, const FrameAttention& fa) {
  dist.add(fa);
  return dist;
}

scalar_t eye_contact_proportion(const GazeDistribution& dist) {
  if (dist.total == 0) throw Error(ErrorCode::UndefinedWindow, "window has no frames");
  return static_cast<scalar_t>(dist.audience) / static_cast<scalar_t>(dist.total) * 100;
}

scalar_t eye_contact_distribution(const GazeDistribution& dist, MemberId member) {
  if (dist.audience == 0) throw Error(ErrorCode::NoEyeContact, "window has no audience frames");
  if (member.ordinal < 1 || member.ordinal > dist.n_members()) {
    throw Error(ErrorCode::Validation, "no member " + member.str() + " in distribution");
  }
  return static_cast<scalar_t>(dist.per_member(member.ordinal - 1)) /
         static_cast<scalar_t>(dist.audience) * 100;
}

scalar_t unidentified_share(const GazeDistribution& dist) {
  if (dist.audience == 0) throw Error(ErrorCode::NoEyeContact, "window has no audience frames");
  return static_cast<scalar_t>(dist.unidentified) / static_cast<scalar_t>(dist.audience) * 100;
}

}  // namespace gazecoach
