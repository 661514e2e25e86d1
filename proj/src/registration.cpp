#include "gazecoach/registration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace gazecoach {

namespace {

bool detection_less(const FaceDetection& a, const FaceDetection& b) {
  if (a.center.x() != b.center.x()) return a.center.x() < b.center.x();
  if (a.center.y() != b.center.y()) return a.center.y() < b.center.y();
  if (a.det_confidence != b.det_confidence) return a.det_confidence < b.det_confidence;
  return std::lexicographical_compare(a.descriptor.data(), a.descriptor.data() + a.descriptor.size(),
                                      b.descriptor.data(), b.descriptor.data() + b.descriptor.size());
}

scalar_t similarity(const FaceDetection& det, const SweepTrack& track) {
  if (det.descriptor.size() == 0 || det.descriptor.size() != track.best.descriptor.size()) return 0;
  return cosine_confidence(det.descriptor, track.best.descriptor);
}

struct Match {
  std::size_t track;
  std::size_t det;
  scalar_t displacement;
};

struct Assignment {
  std::vector<Match> matches;
  scalar_t score = 0;
};

// Greedy gated assignment for one candidate shift. `shift` is the displacement
// of faces in frame pixels between the previous and the current frame.
Assignment assign(const SweepState& state, const std::vector<FaceDetection>& dets, scalar_t shift,
                  scalar_t gate, const std::vector<std::vector<scalar_t>>& sims) {
  struct Pair {
    scalar_t dist;
    scalar_t sim;
    std::size_t track;
    std::size_t det;
  };
  std::vector<Pair> pairs;
  const scalar_t pan = state.pan_total - shift;
  for (std::size_t ti = 0; ti < state.tracks.size(); ++ti) {
    for (std::size_t di = 0; di < dets.size(); ++di) {
      const scalar_t global = dets[di].center.x() + pan;
      const scalar_t dist = std::abs(global - state.tracks[ti].last_global);
      if (dist < gate) pairs.push_back({dist, sims[ti][di], ti, di});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.dist, b.sim, a.track, a.det) < std::tie(b.dist, a.sim, b.track, b.det);
  });
  Assignment out;
  std::vector<bool> track_used(state.tracks.size(), false);
  std::vector<bool> det_used(dets.size(), false);
  for (const auto& p : pairs) {
    if (track_used[p.track] || det_used[p.det]) continue;
    track_used[p.track] = det_used[p.det] = true;
    const scalar_t predicted_x = state.tracks[p.track].last_global - state.pan_total;
    out.matches.push_back({p.track, p.det, dets[p.det].center.x() - predicted_x});
    out.score += p.sim;
  }
  return out;
}

scalar_t median(std::vector<scalar_t> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

AudienceLayout::AudienceLayout(std::vector<LayoutMember> members, FrameSize frame_size)
    : members_(std::move(members)), frame_size_(frame_size) {
  if (members_.empty()) throw Error(ErrorCode::EmptyAudience, "layout has no members");
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (members_[i].id.ordinal != static_cast<int>(i) + 1) {
      throw Error(ErrorCode::Validation, "layout member ids must be S_1..S_N in order");
    }
  }
}

const LayoutMember& AudienceLayout::member(MemberId id) const {
  if (!contains(id)) throw Error(ErrorCode::Validation, "no member " + id.str() + " in layout");
  return members_[static_cast<std::size_t>(id.ordinal - 1)];
}

int AudienceLayout::descriptor_dim() const {
  return members_.empty() ? 0 : static_cast<int>(members_.front().descriptor.size());
}

bool operator==(const AudienceLayout& a, const AudienceLayout& b) {
  if (a.size() != b.size() || !(a.frame_size_ == b.frame_size_)) return false;
  for (int i = 0; i < a.size(); ++i) {
    const auto& x = a.members_[i];
    const auto& y = b.members_[i];
    if (x.id != y.id || x.global_offset != y.global_offset || x.descriptor != y.descriptor ||
        x.crop.frame_id != y.crop.frame_id || !x.crop.box.isApprox(y.crop.box, 0) ||
        x.det_confidence != y.det_confidence || x.observations != y.observations) {
      return false;
    }
  }
  return true;
}

SweepState ingest_sweep_frame(SweepState state, const FrameObservation& frame,
                              const RegistrationConfig& config) {
  if (state.last_t && frame.t <= *state.last_t) {
    throw Error(ErrorCode::Ordering, "sweep frame " + std::to_string(frame.frame_id) + " at t=" +
                                         std::to_string(frame.t) + " is not after t=" +
                                         std::to_string(*state.last_t));
  }
  if (frame.detections.empty()) return state;

  const std::int64_t index = state.frames_seen++;
  state.last_t = frame.t;
  state.frame_size = frame.frame_size;
  if (config.sample_stride > 1 && index % config.sample_stride != 0) return state;

  std::vector<FaceDetection> dets = frame.detections;
  std::sort(dets.begin(), dets.end(), detection_less);
  const scalar_t gate = config.resolved_gate(frame.frame_size);

  Assignment best;
  scalar_t best_shift = state.last_frame_shift;
  if (!state.tracks.empty()) {
    std::vector<std::vector<scalar_t>> sims(state.tracks.size(),
                                            std::vector<scalar_t>(dets.size(), 0));
    std::vector<scalar_t> candidates{state.last_frame_shift};
    for (std::size_t ti = 0; ti < state.tracks.size(); ++ti) {
      const scalar_t predicted_x = state.tracks[ti].last_global - state.pan_total;
      for (std::size_t di = 0; di < dets.size(); ++di) {
        sims[ti][di] = similarity(dets[di], state.tracks[ti]);
        candidates.push_back(dets[di].center.x() - predicted_x);
      }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    bool have = false;
    for (scalar_t s : candidates) {
      Assignment a = assign(state, dets, s, gate, sims);
      if (a.matches.empty()) continue;
      const bool better =
          !have || a.score > best.score ||
          (a.score == best.score &&
           std::abs(s - state.last_frame_shift) < std::abs(best_shift - state.last_frame_shift));
      if (better) {
        best = std::move(a);
        best_shift = s;
        have = true;
      }
    }
    if (have) {
      std::vector<scalar_t> displacements;
      displacements.reserve(best.matches.size());
      for (const auto& m : best.matches) displacements.push_back(m.displacement);
      best_shift = median(std::move(displacements));
    }
  }

  state.last_frame_shift = best_shift;
  state.pan_total -= best_shift;

  std::vector<bool> matched(dets.size(), false);
  for (const auto& m : best.matches) {
    auto& track = state.tracks[m.track];
    const auto& det = dets[m.det];
    const scalar_t global = det.center.x() + state.pan_total;
    track.last_global = global;
    track.observations += 1;
    track.offset += (global - track.offset) / track.observations;
    track.last_frame_id = frame.frame_id;
    if (det.det_confidence > track.best.det_confidence) {
      track.best = det;
      track.best_frame_id = frame.frame_id;
    }
    matched[m.det] = true;
  }
  for (std::size_t di = 0; di < dets.size(); ++di) {
    if (matched[di]) continue;
    SweepTrack track;
    track.offset = track.last_global = dets[di].center.x() + state.pan_total;
    track.best = dets[di];
    track.best_frame_id = track.first_frame_id = track.last_frame_id = frame.frame_id;
    track.observations = 1;
    state.tracks.push_back(std::move(track));
  }
  return state;
}

AudienceLayout finalize_layout(const SweepState& state, const RegistrationConfig& config) {
  std::vector<const SweepTrack*> survivors;
  for (const auto& t : state.tracks) {
    if (t.observations >= std::max(1, config.min_track_observations)) survivors.push_back(&t);
  }
  if (survivors.empty()) {
    throw Error(ErrorCode::EmptyAudience,
                "no sweep track reached " + std::to_string(config.min_track_observations) +
                    " observations");
  }
  std::stable_sort(survivors.begin(), survivors.end(), [](const SweepTrack* a, const SweepTrack* b) {
    if (a->offset != b->offset) return a->offset < b->offset;
    if (a->observations != b->observations) return a->observations > b->observations;
    return a->first_frame_id < b->first_frame_id;
  });
  std::vector<LayoutMember> members;
  members.reserve(survivors.size());
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    const SweepTrack& t = *survivors[i];
    LayoutMember m;
    m.id = MemberId{static_cast<int>(i) + 1};
    m.global_offset = t.offset;
    m.descriptor = t.best.descriptor;
    m.crop = CropRef{t.best_frame_id, t.best.box};
    m.det_confidence = t.best.det_confidence;
    m.observations = t.observations;
    members.push_back(std::move(m));
  }
  return AudienceLayout(std::move(members), state.frame_size);
}

AudienceLayout register_audience(const std::vector<FrameObservation>& sweep,
                                 const RegistrationConfig& config) {
  SweepState state;
  for (const auto& f : sweep) state = ingest_sweep_frame(std::move(state), f, config);
  return finalize_layout(state, config);
}

}  // namespace gazecoach
