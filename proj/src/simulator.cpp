#include "gazecoach/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace gazecoach {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent random stream per (seed, purpose, index).
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed ^ splitmix64(tag)) + index));
}

enum StreamTag : std::uint64_t {
  kBasis = 1,
  kFrame = 2,
  kGaze = 3,
  kSweep = 4,
  kIdentifier = 5,
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  if (hi <= lo) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double normal(std::mt19937_64& rng, double sigma) {
  if (sigma <= 0) return 0;
  return std::normal_distribution<double>(0, sigma)(rng);
}

Eigen::MatrixXd gaussian(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = n(rng);
  return m;
}

Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, int rows, int cols) {
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(rng, rows, std::max(cols, 1)));
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

// Unit descriptor whose cosine with the unit vector `base` is exactly `c`.
Descriptor descriptor_with_cosine(std::mt19937_64& rng, const Eigen::VectorXd& base, double c) {
  Eigen::VectorXd u = gaussian(rng, static_cast<int>(base.size()), 1);
  u -= u.dot(base) * base;
  const double norm = u.norm();
  if (norm > 0) u /= norm;
  return c * base + std::sqrt(std::max(0.0, 1 - c * c)) * u;
}

const char* const kRegions[] = {"laptop", "notes", "ceiling", "screen"};

Point2 region_point(const std::string& region, const FrameSize& size) {
  const double w = size.width;
  const double h = size.height;
  if (region == "laptop") return {0.5 * w, 0.92 * h};
  if (region == "notes") return {0.2 * w, 0.9 * h};
  if (region == "ceiling") return {0.5 * w, 0.08 * h};
  if (region == "screen") return {0.85 * w, 0.1 * h};
  throw Error(ErrorCode::Validation, "unknown gaze region '" + region + "'");
}

const GazeSegment* segment_at(const ScenarioSpec& spec, double t_s) {
  for (const auto& g : spec.gaze_script) {
    if (t_s >= g.t_start_s && t_s < g.t_end_s) return &g;
  }
  if (!spec.gaze_script.empty() && t_s >= spec.gaze_script.back().t_end_s) {
    return &spec.gaze_script.back();
  }
  return nullptr;
}

double seat_y(const ScenarioSpec& spec, int m) {
  const double offset = spec.seat_y_px.empty() ? 0.0 : spec.seat_y_px[static_cast<std::size_t>(m)];
  return spec.frame_size.height / 2.0 + offset;
}

Point2 clamp_into(const Point2& p, double margin, const FrameSize& size) {
  return {std::clamp(p.x(), margin, size.width - margin),
          std::clamp(p.y(), margin, size.height - margin)};
}

TimeMs frame_time(std::int64_t i, double rate) {
  return static_cast<TimeMs>(std::llround(static_cast<double>(i) * 1000.0 / rate));
}

}  // namespace

bool NoiseModel::is_zero() const {
  return conf_min == 1 && conf_max == 1 && pose_penalty_per_deg == 0 && !std::isfinite(blur_speed_deg_s) &&
         blur_episodes.empty() && occlusions.empty() && gaze_jitter_px == 0 &&
         detection_jitter_px == 0 && camera_jitter_px == 0 && spurious_rate == 0 && dropout == 0;
}

std::int64_t ScenarioSpec::frame_count() const {
  return static_cast<std::int64_t>(std::floor(duration_s * frame_rate + 1e-9));
}

void ScenarioSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::Validation, what); };
  if (seats_deg.empty()) fail("scenario needs at least one seat");
  for (std::size_t i = 1; i < seats_deg.size(); ++i) {
    if (!(seats_deg[i] > seats_deg[i - 1])) fail("seats_deg must be strictly increasing");
  }
  if (!seat_y_px.empty() && seat_y_px.size() != seats_deg.size()) {
    fail("seat_y_px must list one offset per seat");
  }
  if (!(duration_s > 0)) fail("duration must be positive");
  if (!(frame_rate > 0) || !(gaze_rate > 0)) fail("rates must be positive");
  if (frame_size.width <= 0 || frame_size.height <= 0) fail("frame size must be positive");
  if (!(fov_deg > 0) || !(face_size_px > 0)) fail("fov and face size must be positive");
  if (descriptor_dim < n_members()) fail("descriptor_dim must be at least the member count");
  if (identifier_layers < 0) fail("identifier_layers must be non-negative");
  for (std::size_t i = 1; i < camera.size(); ++i) {
    if (!(camera[i].t_s > camera[i - 1].t_s)) fail("camera keyframes must increase in time");
  }
  if (gaze_script.empty()) fail("gaze_script is empty");
  double covered = 0;
  for (const auto& g : gaze_script) {
    if (std::abs(g.t_start_s - covered) > 1e-9) fail("gaze_script must tile [0, duration] without gaps");
    if (!(g.t_end_s > g.t_start_s)) fail("gaze segment has non-positive length");
    if (g.member) {
      if (g.member->ordinal < 1 || g.member->ordinal > n_members()) {
        fail("gaze_script references nonexistent member " + g.member->str());
      }
    } else {
      region_point(g.region, frame_size);
    }
    covered = g.t_end_s;
  }
  if (covered + 1e-9 < duration_s) fail("gaze_script does not cover the whole duration");
  const auto& n = noise;
  if (n.conf_min > n.conf_max || n.sweep_conf_min > n.sweep_conf_max ||
      n.blur_conf_min > n.blur_conf_max) {
    fail("noise confidence ranges must have min <= max");
  }
  for (double c : {n.conf_min, n.conf_max, n.sweep_conf_min, n.sweep_conf_max, n.blur_conf_min,
                   n.blur_conf_max, n.spurious_rate, n.dropout}) {
    if (c < 0 || c > 1) fail("noise probabilities and confidences must lie in [0, 1]");
  }
  for (const auto& o : n.occlusions) {
    if (o.member.ordinal < 1 || o.member.ordinal > n_members()) {
      fail("occlusion references nonexistent member " + o.member.str());
    }
    if (o.frame_end < o.frame_start) fail("occlusion frame range is empty");
  }
}

double camera_yaw(const ScenarioSpec& spec, double t_s) {
  const auto& keys = spec.camera;
  if (keys.empty()) return 0;
  if (t_s <= keys.front().t_s) return keys.front().yaw_deg;
  if (t_s >= keys.back().t_s) return keys.back().yaw_deg;
  auto hi = std::upper_bound(keys.begin(), keys.end(), t_s,
                             [](double t, const CameraKey& k) { return t < k.t_s; });
  auto lo = std::prev(hi);
  const double a = (t_s - lo->t_s) / (hi->t_s - lo->t_s);
  return lo->yaw_deg + a * (hi->yaw_deg - lo->yaw_deg);
}

double camera_speed(const ScenarioSpec& spec, double t_s) {
  const auto& keys = spec.camera;
  if (keys.size() < 2 || t_s < keys.front().t_s || t_s >= keys.back().t_s) return 0;
  auto hi = std::upper_bound(keys.begin(), keys.end(), t_s,
                             [](double t, const CameraKey& k) { return t < k.t_s; });
  auto lo = std::prev(hi);
  return (hi->yaw_deg - lo->yaw_deg) / (hi->t_s - lo->t_s);
}

double project_x(const ScenarioSpec& spec, int member_index, double yaw_deg) {
  return spec.frame_size.width / 2.0 +
         (spec.seats_deg[static_cast<std::size_t>(member_index)] - yaw_deg) * spec.px_per_deg();
}

bool projected_visible(const ScenarioSpec& spec, int member_index, double yaw_deg) {
  const double x = project_x(spec, member_index, yaw_deg);
  const double y = seat_y(spec, member_index);
  const double half = spec.face_size_px / 2;
  return x - half >= 0 && x + half <= spec.frame_size.width && y - half >= 0 &&
         y + half <= spec.frame_size.height;
}

Eigen::MatrixXd member_basis(const ScenarioSpec& spec) {
  auto rng = stream(spec.seed, kBasis, 0);
  return random_orthogonal(rng, spec.descriptor_dim, spec.n_members());
}

namespace {

struct Rendered {
  std::vector<FaceDetection> detections;
  FrameTruth truth;
};

// Renders every face of one frame. `presentation` enables blur, occlusion and
// the presentation confidence range; sweeps use the sweep range only.
Rendered render_frame(const ScenarioSpec& spec, const Eigen::MatrixXd& basis, std::int64_t index,
                      double t_s, double yaw, double speed, bool presentation,
                      std::mt19937_64& rng) {
  const auto& noise = spec.noise;
  Rendered out;
  out.truth.frame_id = index;
  out.truth.visible.assign(static_cast<std::size_t>(spec.n_members()), false);
  const Point2 shake(normal(rng, noise.camera_jitter_px), normal(rng, noise.camera_jitter_px));
  bool blurred = false;
  if (presentation) {
    blurred = std::abs(speed) > noise.blur_speed_deg_s;
    for (const auto& e : noise.blur_episodes) blurred = blurred || e.contains(t_s);
  }
  out.truth.blurred = blurred;
  const double half = spec.face_size_px / 2;
  const Box2 bounds(Point2(0, 0), Point2(spec.frame_size.width, spec.frame_size.height));

  for (int m = 0; m < spec.n_members(); ++m) {
    const Point2 projected = Point2(project_x(spec, m, yaw), seat_y(spec, m)) + shake;
    const Box2 box(projected - Point2::Constant(half), projected + Point2::Constant(half));
    if (!bounds.contains(box)) continue;
    out.truth.visible[static_cast<std::size_t>(m)] = true;

    std::optional<OcclusionMode> occluded;
    if (presentation) {
      for (const auto& o : noise.occlusions) {
        if (o.member.ordinal == m + 1 && index >= o.frame_start && index <= o.frame_end) {
          occluded = o.mode;
          if (o.mode == OcclusionMode::Drop) break;
        }
      }
    }
    const double miss = uniform(rng, 0, 1);
    if (occluded == OcclusionMode::Drop || miss < noise.dropout) continue;

    double c;
    if (!presentation) {
      c = uniform(rng, noise.sweep_conf_min, noise.sweep_conf_max);
    } else if (blurred || occluded == OcclusionMode::Degrade) {
      c = uniform(rng, noise.blur_conf_min, noise.blur_conf_max);
    } else {
      c = uniform(rng, noise.conf_min, noise.conf_max);
      c -= noise.pose_penalty_per_deg * std::abs(spec.seats_deg[static_cast<std::size_t>(m)] - yaw);
    }
    c = std::clamp(c, 0.0, 1.0);

    const Point2 jitter(normal(rng, noise.detection_jitter_px), normal(rng, noise.detection_jitter_px));
    const Point2 center = clamp_into(projected + jitter, half, spec.frame_size);
    const Eigen::VectorXd base = basis.col(m);
    Descriptor desc = c == 1.0 ? Descriptor(base) : descriptor_with_cosine(rng, base, c);
    out.detections.push_back(make_detection(center, spec.face_size_px, 0.5 + 0.5 * c, std::move(desc)));
    out.truth.detection_ids.push_back(MemberId{m + 1});
  }

  if (noise.spurious_rate > 0 && uniform(rng, 0, 1) < noise.spurious_rate) {
    const Point2 p(uniform(rng, half, spec.frame_size.width - half),
                   uniform(rng, half, spec.frame_size.height - half));
    Eigen::VectorXd d = gaussian(rng, spec.descriptor_dim, 1);
    d.normalize();
    out.detections.push_back(make_detection(p, spec.face_size_px, uniform(rng, 0.3, 0.6), d));
    out.truth.detection_ids.push_back(std::nullopt);
  }
  return out;
}

}  // namespace

SimSession generate_session(const ScenarioSpec& spec) {
  spec.validate();
  const Eigen::MatrixXd basis = member_basis(spec);
  SimSession session;

  // Gaze stream at its own rate.
  const auto n_gaze = static_cast<std::int64_t>(std::floor(spec.duration_s * spec.gaze_rate + 1e-9));
  std::vector<std::optional<MemberId>> gaze_target;
  session.gaze_samples.reserve(static_cast<std::size_t>(n_gaze));
  for (std::int64_t j = 0; j < n_gaze; ++j) {
    auto rng = stream(spec.seed, kGaze, static_cast<std::uint64_t>(j));
    GazeSample g;
    g.t = frame_time(j, spec.gaze_rate);
    const double t_s = static_cast<double>(j) / spec.gaze_rate;
    const GazeSegment* seg = segment_at(spec, t_s);
    const Point2 jitter(normal(rng, spec.noise.gaze_jitter_px), normal(rng, spec.noise.gaze_jitter_px));
    std::optional<MemberId> target;
    if (seg && seg->member) {
      const int m = seg->member->ordinal - 1;
      const double yaw = camera_yaw(spec, t_s);
      if (projected_visible(spec, m, yaw)) {
        g.point = clamp_into(Point2(project_x(spec, m, yaw), seat_y(spec, m)) + jitter, 0,
                             spec.frame_size);
        g.valid = true;
        target = seg->member;
      }
    } else if (seg) {
      g.point = clamp_into(region_point(seg->region, spec.frame_size) + jitter, 0, spec.frame_size);
      g.valid = true;
    }
    session.gaze_samples.push_back(g);
    gaze_target.push_back(target);
  }

  const TimeMs tolerance = static_cast<TimeMs>(std::llround(500.0 / spec.frame_rate));
  const std::int64_t n_frames = spec.frame_count();
  session.frames.reserve(static_cast<std::size_t>(n_frames));
  session.truth.frames.reserve(static_cast<std::size_t>(n_frames));
  for (std::int64_t i = 0; i < n_frames; ++i) {
    auto rng = stream(spec.seed, kFrame, static_cast<std::uint64_t>(i));
    const double t_s = static_cast<double>(i) / spec.frame_rate;
    const double yaw = camera_yaw(spec, t_s);
    Rendered r = render_frame(spec, basis, i, t_s, yaw, camera_speed(spec, t_s), true, rng);

    FrameObservation f;
    f.frame_id = i;
    f.t = frame_time(i, spec.frame_rate);
    f.frame_size = spec.frame_size;
    f.detections = std::move(r.detections);
    f.gaze = pair_gaze(f.t, session.gaze_samples, tolerance);
    if (f.gaze.valid) {
      auto it = std::lower_bound(session.gaze_samples.begin(), session.gaze_samples.end(), f.gaze.t,
                                 [](const GazeSample& g, TimeMs v) { return g.t < v; });
      const auto& target = gaze_target[static_cast<std::size_t>(it - session.gaze_samples.begin())];
      if (target && r.truth.visible[static_cast<std::size_t>(target->ordinal - 1)]) {
        r.truth.gazed = target;
      }
    }
    session.frames.push_back(std::move(f));
    session.truth.frames.push_back(std::move(r.truth));
  }
  return session;
}

SimSession generate_sweep(const ScenarioSpec& spec) {
  spec.validate();
  const Eigen::MatrixXd basis = member_basis(spec);
  const double yaw_start = spec.seats_deg.front() - 5;
  const double yaw_end = spec.seats_deg.back() + 5;
  const double speed = spec.sweep_speed_deg_s;
  const double duration = (yaw_end - yaw_start) / speed;
  const auto n_frames = static_cast<std::int64_t>(std::floor(duration * spec.frame_rate)) + 1;

  SimSession session;
  for (std::int64_t i = 0; i < n_frames; ++i) {
    auto rng = stream(spec.seed, kSweep, static_cast<std::uint64_t>(i));
    const double t_s = static_cast<double>(i) / spec.frame_rate;
    const double yaw = yaw_start + speed * t_s;
    Rendered r = render_frame(spec, basis, i, t_s, yaw, speed, false, rng);
    FrameObservation f;
    f.frame_id = i;
    f.t = frame_time(i, spec.frame_rate);
    f.frame_size = spec.frame_size;
    f.detections = std::move(r.detections);
    f.gaze = GazeSample{f.t, Point2::Zero(), false};
    session.frames.push_back(std::move(f));
    session.truth.frames.push_back(std::move(r.truth));
  }
  return session;
}

AudienceLayout truth_layout(const ScenarioSpec& spec) {
  spec.validate();
  const Eigen::MatrixXd basis = member_basis(spec);
  std::vector<LayoutMember> members;
  const double half = spec.face_size_px / 2;
  for (int m = 0; m < spec.n_members(); ++m) {
    LayoutMember lm;
    lm.id = MemberId{m + 1};
    lm.global_offset = spec.seats_deg[static_cast<std::size_t>(m)] * spec.px_per_deg();
    lm.descriptor = basis.col(m);
    const Point2 c(project_x(spec, m, 0), seat_y(spec, m));
    lm.crop = CropRef{0, Box2(c - Point2::Constant(half), c + Point2::Constant(half))};
    lm.det_confidence = 1;
    lm.observations = 1;
    members.push_back(std::move(lm));
  }
  return AudienceLayout(std::move(members), spec.frame_size);
}

SyntheticIdentifier::SyntheticIdentifier(int descriptor_dim, int layers, std::uint64_t seed)
    : dim_(descriptor_dim) {
  for (int l = 0; l < layers; ++l) {
    auto rng = stream(seed, kIdentifier, static_cast<std::uint64_t>(l));
    layers_.push_back(random_orthogonal(rng, dim_, dim_));
  }
}

Eigen::VectorXd SyntheticIdentifier::extract(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = x;
  for (const auto& layer : layers_) y = layer * y;
  return y;
}

Identification SyntheticIdentifier::identify(const FaceDetection& face,
                                             const AudienceLayout& layout) const {
  if (face.descriptor.size() != dim_) {
    throw Error(ErrorCode::Validation, "descriptor dimension mismatch in synthetic identifier");
  }
  const Eigen::VectorXd query = extract(face.descriptor);
  Identification best{MemberId{1}, -1};
  for (const auto& m : layout.members()) {
    const scalar_t c = cosine_confidence(query, extract(m.descriptor));
    if (c > best.confidence) best = {m.id, c};
  }
  best.confidence = std::max<scalar_t>(best.confidence, 0);
  return best;
}

std::unique_ptr<IdentifierProvider> synthetic_identifier(const ScenarioSpec& spec) {
  return std::make_unique<SyntheticIdentifier>(spec.descriptor_dim, spec.identifier_layers,
                                               spec.seed);
}

}  // namespace gazecoach
