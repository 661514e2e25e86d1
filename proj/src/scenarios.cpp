#include "gazecoach/simulator.hpp"
#include "gazecoach/text_format.hpp"

#include <cmath>
#include <sstream>

namespace gazecoach {

namespace {

const std::vector<double> kSeats = {-25, -15, -5, 5, 15, 25};
const std::vector<double> kSeatY = {0, 12, -6, 9, -4, 7};
const char* const kGazeRegions[] = {"laptop", "notes", "ceiling", "screen"};

ScenarioSpec base_spec(const std::string& name, std::uint64_t seed) {
  ScenarioSpec s;
  s.name = name;
  s.seats_deg = kSeats;
  s.seat_y_px = kSeatY;
  s.seed = seed;
  return s;
}

// Dwell-based gaze script: each dwell looks at a random member or, with
// probability `p_away`, at a random non-audience region.
std::vector<GazeSegment> random_gaze(std::uint64_t seed, double duration, int n, double p_away,
                                     double dwell_min, double dwell_max) {
  std::mt19937_64 rng(seed * 0x2545f4914f6cdd1dULL + 17);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<GazeSegment> out;
  double t = 0;
  while (t < duration) {
    const double dwell = dwell_min + (dwell_max - dwell_min) * u(rng);
    GazeSegment g;
    g.t_start_s = t;
    g.t_end_s = std::min(duration, t + dwell);
    if (u(rng) < p_away) {
      g.region = kGazeRegions[static_cast<int>(u(rng) * 4) % 4];
    } else {
      g.member = MemberId{1 + static_cast<int>(u(rng) * n) % n};
    }
    out.push_back(g);
    t = g.t_end_s;
  }
  return out;
}

ScenarioSpec make_static() {
  ScenarioSpec s = base_spec("static", 11);
  s.gaze_script = random_gaze(s.seed, s.duration_s, s.n_members(), 0.25, 0.8, 3.0);
  return s;
}

ScenarioSpec make_slow_pan() {
  ScenarioSpec s = base_spec("slow-pan", 12);
  // Edge members leave the view near the turning points.
  s.camera = {{0, 0}, {12, 22}, {27, -22}, {42, 22}, {57, 0}, {60, 0}};
  s.gaze_script = random_gaze(s.seed, s.duration_s, s.n_members(), 0.25, 0.8, 3.0);
  return s;
}

NoiseModel reference_noise() {
  NoiseModel n;
  n.conf_min = 0.6;
  n.conf_max = 0.95;
  n.sweep_conf_min = 0.95;
  n.sweep_conf_max = 1.0;
  n.pose_penalty_per_deg = 0.002;
  n.blur_speed_deg_s = 40;
  n.blur_conf_min = 0.15;
  n.blur_conf_max = 0.55;
  n.gaze_jitter_px = 6;
  n.detection_jitter_px = 1.5;
  n.camera_jitter_px = 2;
  return n;
}

ScenarioSpec make_fast_pan() {
  ScenarioSpec s = base_spec("fast-pan-with-blur", 13);
  s.noise = reference_noise();
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> u(0, 1);
  double t = 0;
  double yaw = 0;
  s.camera.push_back({0, 0});
  while (t < s.duration_s) {
    t += 1.0 + 1.5 * u(rng);  // hold
    s.camera.push_back({t, yaw});
    double next = yaw;
    while (std::abs(next - yaw) < 20) next = -55 + 110 * u(rng);
    // Faces sit ~142 px apart; keeping per-frame motion under ~26 px keeps a
    // departing anchor's neighbour outside the tracking gate.
    const double speed = 45 + 10 * u(rng);
    t += std::abs(next - yaw) / speed;
    yaw = next;
    s.camera.push_back({t, yaw});
  }
  s.gaze_script = random_gaze(s.seed, s.duration_s, s.n_members(), 0.2, 0.5, 2.0);
  return s;
}

ScenarioSpec make_occlusion_heavy() {
  ScenarioSpec s = base_spec("occlusion-heavy", 14);
  s.noise = reference_noise();
  s.noise.blur_speed_deg_s = std::numeric_limits<double>::infinity();
  s.noise.conf_min = 0.65;
  s.camera = {{0, 0}, {20, 6}, {40, -6}, {60, 0}};
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> u(0, 1);
  const std::int64_t frames = s.frame_count();
  for (std::int64_t start = 60; start < frames - 90; start += 120 + static_cast<std::int64_t>(60 * u(rng))) {
    Occlusion o;
    o.member = MemberId{1 + static_cast<int>(u(rng) * s.n_members()) % s.n_members()};
    o.frame_start = start;
    o.frame_end = start + 45 + static_cast<std::int64_t>(45 * u(rng));
    // Hands in front of edge faces hide them; inner faces stay detectable but degraded.
    const bool edge = o.member.ordinal == 1 || o.member.ordinal == s.n_members();
    o.mode = edge ? OcclusionMode::Drop : OcclusionMode::Degrade;
    s.noise.occlusions.push_back(o);
  }
  s.gaze_script = random_gaze(s.seed, s.duration_s, s.n_members(), 0.25, 0.8, 3.0);
  return s;
}

std::pair<double, double> parse_range(const std::string& word, char sep = '-') {
  // Ranges are "a-b" with a >= 0, so the first separator after index 0 splits.
  const auto pos = word.find(sep, 1);
  if (pos == std::string::npos) throw Error(ErrorCode::Parse, "expected range, got '" + word + "'");
  return {parse_double(word.substr(0, pos)), parse_double(word.substr(pos + 1))};
}

std::pair<double, double> parse_pair(const std::string& value) {
  const auto words = split_words(value);
  if (words.size() != 2) throw Error(ErrorCode::Parse, "expected two numbers, got '" + value + "'");
  return {parse_double(words[0]), parse_double(words[1])};
}

std::vector<double> parse_doubles(const std::string& value) {
  std::vector<double> out;
  for (const auto& w : split_words(value)) out.push_back(parse_double(w));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace

std::vector<std::string> reference_scenario_names() {
  return {"static", "slow-pan", "fast-pan-with-blur", "occlusion-heavy"};
}

ScenarioSpec reference_scenario(const std::string& name) {
  ScenarioSpec s;
  if (name == "static") s = make_static();
  else if (name == "slow-pan") s = make_slow_pan();
  else if (name == "fast-pan-with-blur") s = make_fast_pan();
  else if (name == "occlusion-heavy") s = make_occlusion_heavy();
  else throw Error(ErrorCode::Validation, "unknown reference scenario '" + name + "'");
  s.validate();
  return s;
}

ScenarioSpec parse_scenario(const std::string& text) {
  ScenarioSpec s;
  bool gaze_seen = false;
  for (const auto& kv : parse_key_values(text)) {
    const std::string& k = kv.key;
    const std::string& v = kv.value;
    try {
      if (k == "name") s.name = v;
      else if (k == "seats_deg") s.seats_deg = parse_doubles(v);
      else if (k == "seat_y_px") s.seat_y_px = parse_doubles(v);
      else if (k == "frame_width") s.frame_size.width = static_cast<int>(parse_int(v));
      else if (k == "frame_height") s.frame_size.height = static_cast<int>(parse_int(v));
      else if (k == "fov_deg") s.fov_deg = parse_double(v);
      else if (k == "face_size_px") s.face_size_px = parse_double(v);
      else if (k == "frame_rate") s.frame_rate = parse_double(v);
      else if (k == "gaze_rate") s.gaze_rate = parse_double(v);
      else if (k == "duration_s") s.duration_s = parse_double(v);
      else if (k == "seed") s.seed = static_cast<std::uint64_t>(parse_int(v));
      else if (k == "descriptor_dim") s.descriptor_dim = static_cast<int>(parse_int(v));
      else if (k == "identifier_layers") s.identifier_layers = static_cast<int>(parse_int(v));
      else if (k == "sweep_speed_deg_s") s.sweep_speed_deg_s = parse_double(v);
      else if (k == "camera") {
        s.camera.clear();
        for (const auto& w : split_words(v)) {
          const auto [t, yaw] = parse_range(w, ':');
          s.camera.push_back({t, yaw});
        }
      } else if (k == "gaze") {
        if (!gaze_seen) s.gaze_script.clear();
        gaze_seen = true;
        for (const auto& w : split_words(v)) {
          const auto colon = w.find(':');
          if (colon == std::string::npos) throw Error(ErrorCode::Parse, "gaze entry needs 'a-b:TARGET'");
          const auto [a, b] = parse_range(w.substr(0, colon));
          GazeSegment g;
          g.t_start_s = a;
          g.t_end_s = b;
          const std::string target = w.substr(colon + 1);
          if (target.rfind("S_", 0) == 0) g.member = MemberId::parse(target);
          else g.region = target;
          s.gaze_script.push_back(g);
        }
      } else if (k == "noise.conf") std::tie(s.noise.conf_min, s.noise.conf_max) = parse_pair(v);
      else if (k == "noise.sweep_conf") std::tie(s.noise.sweep_conf_min, s.noise.sweep_conf_max) = parse_pair(v);
      else if (k == "noise.blur_conf") std::tie(s.noise.blur_conf_min, s.noise.blur_conf_max) = parse_pair(v);
      else if (k == "noise.pose_penalty_per_deg") s.noise.pose_penalty_per_deg = parse_double(v);
      else if (k == "noise.blur_speed_deg_s") s.noise.blur_speed_deg_s = parse_double(v);
      else if (k == "noise.blur") {
        for (const auto& w : split_words(v)) {
          const auto [a, b] = parse_range(w);
          s.noise.blur_episodes.push_back({a, b});
        }
      } else if (k == "noise.occlusion") {
        const auto words = split_words(v);
        if (words.size() != 3) throw Error(ErrorCode::Parse, "occlusion needs 'S_i a-b drop|degrade'");
        Occlusion o;
        o.member = MemberId::parse(words[0]);
        const auto [a, b] = parse_range(words[1]);
        o.frame_start = static_cast<std::int64_t>(a);
        o.frame_end = static_cast<std::int64_t>(b);
        if (words[2] == "drop") o.mode = OcclusionMode::Drop;
        else if (words[2] == "degrade") o.mode = OcclusionMode::Degrade;
        else throw Error(ErrorCode::Parse, "occlusion mode must be drop or degrade");
        s.noise.occlusions.push_back(o);
      } else if (k == "noise.gaze_jitter_px") s.noise.gaze_jitter_px = parse_double(v);
      else if (k == "noise.detection_jitter_px") s.noise.detection_jitter_px = parse_double(v);
      else if (k == "noise.camera_jitter_px") s.noise.camera_jitter_px = parse_double(v);
      else if (k == "noise.spurious_rate") s.noise.spurious_rate = parse_double(v);
      else if (k == "noise.dropout") s.noise.dropout = parse_double(v);
      else throw Error(ErrorCode::Parse, "unknown key '" + k + "'");
    } catch (const Error& e) {
      throw Error(ErrorCode::Parse, "scenario line " + std::to_string(kv.line) + ": " + e.what());
    }
  }
  s.validate();
  return s;
}

ScenarioSpec load_scenario(const std::string& name_or_path) {
  for (const auto& name : reference_scenario_names()) {
    if (name == name_or_path) return reference_scenario(name);
  }
  return parse_scenario(read_file(name_or_path));
}

std::string write_scenario(const ScenarioSpec& s) {
  std::ostringstream out;
  out << "name = " << s.name << "\n";
  out << "seats_deg = " << join(s.seats_deg) << "\n";
  if (!s.seat_y_px.empty()) out << "seat_y_px = " << join(s.seat_y_px) << "\n";
  out << "frame_width = " << s.frame_size.width << "\n";
  out << "frame_height = " << s.frame_size.height << "\n";
  out << "fov_deg = " << format_double(s.fov_deg) << "\n";
  out << "face_size_px = " << format_double(s.face_size_px) << "\n";
  out << "frame_rate = " << format_double(s.frame_rate) << "\n";
  out << "gaze_rate = " << format_double(s.gaze_rate) << "\n";
  out << "duration_s = " << format_double(s.duration_s) << "\n";
  out << "seed = " << s.seed << "\n";
  out << "descriptor_dim = " << s.descriptor_dim << "\n";
  out << "identifier_layers = " << s.identifier_layers << "\n";
  out << "sweep_speed_deg_s = " << format_double(s.sweep_speed_deg_s) << "\n";
  if (!s.camera.empty()) {
    out << "camera =";
    for (const auto& k : s.camera) out << ' ' << format_double(k.t_s) << ':' << format_double(k.yaw_deg);
    out << "\n";
  }
  for (const auto& g : s.gaze_script) {
    out << "gaze = " << format_double(g.t_start_s) << '-' << format_double(g.t_end_s) << ':'
        << (g.member ? g.member->str() : g.region) << "\n";
  }
  const auto& n = s.noise;
  out << "noise.conf = " << format_double(n.conf_min) << ' ' << format_double(n.conf_max) << "\n";
  out << "noise.sweep_conf = " << format_double(n.sweep_conf_min) << ' ' << format_double(n.sweep_conf_max) << "\n";
  out << "noise.blur_conf = " << format_double(n.blur_conf_min) << ' ' << format_double(n.blur_conf_max) << "\n";
  out << "noise.pose_penalty_per_deg = " << format_double(n.pose_penalty_per_deg) << "\n";
  out << "noise.blur_speed_deg_s = " << format_double(n.blur_speed_deg_s) << "\n";
  for (const auto& e : n.blur_episodes) {
    out << "noise.blur = " << format_double(e.t_start_s) << '-' << format_double(e.t_end_s) << "\n";
  }
  for (const auto& o : n.occlusions) {
    out << "noise.occlusion = " << o.member.str() << ' ' << o.frame_start << '-' << o.frame_end << ' '
        << (o.mode == OcclusionMode::Drop ? "drop" : "degrade") << "\n";
  }
  out << "noise.gaze_jitter_px = " << format_double(n.gaze_jitter_px) << "\n";
  out << "noise.detection_jitter_px = " << format_double(n.detection_jitter_px) << "\n";
  out << "noise.camera_jitter_px = " << format_double(n.camera_jitter_px) << "\n";
  out << "noise.spurious_rate = " << format_double(n.spurious_rate) << "\n";
  out << "noise.dropout = " << format_double(n.dropout) << "\n";
  return out.str();
}

}  // namespace gazecoach
