#include "gazecoach/config.hpp"

#include "gazecoach/text_format.hpp"

#include <cmath>
#include <sstream>

namespace gazecoach {

namespace {

TimeMs seconds_to_ms(double s) { return static_cast<TimeMs>(std::llround(s * 1000)); }

template <typename T>
void put_optional(nlohmann::ordered_json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
  else j[key] = nullptr;
}

template <typename T>
std::optional<T> get_optional(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

void EngineConfig::validate() const {
  advisor.validate();
  const auto& id = identification;
  if (id.target_radius_px && !(*id.target_radius_px > 0)) throw Error(ErrorCode::Validation, "L must be positive");
  if (id.track_gate_px && !(*id.track_gate_px > 0)) throw Error(ErrorCode::Validation, "track gate must be positive");
  if (!(id.anchor_confidence >= 0 && id.anchor_confidence <= 1)) {
    throw Error(ErrorCode::Validation, "anchor_confidence must lie in [0, 1]");
  }
  if (!(id.baseline_sim_threshold >= 0 && id.baseline_sim_threshold <= 1)) {
    throw Error(ErrorCode::Validation, "baseline_sim_threshold must lie in [0, 1]");
  }
  if (registration.min_track_observations < 1) {
    throw Error(ErrorCode::Validation, "min_track_observations must be at least 1");
  }
  if (registration.sample_stride < 1) throw Error(ErrorCode::Validation, "sample stride must be at least 1");
  if (pairing_tolerance_ms && *pairing_tolerance_ms < 0) {
    throw Error(ErrorCode::Validation, "pairing tolerance must be non-negative");
  }
  if (!(snapshot_hz > 0)) throw Error(ErrorCode::Validation, "snapshot_hz must be positive");
}

TimeMs EngineConfig::snapshot_interval_ms() const {
  return std::max<TimeMs>(1, static_cast<TimeMs>(std::llround(1000.0 / snapshot_hz)));
}

EngineConfig parse_config(const std::string& text) {
  EngineConfig c;
  for (const auto& kv : parse_key_values(text)) {
    const auto& k = kv.key;
    const auto& v = kv.value;
    try {
      if (k == "target_radius_px") c.identification.target_radius_px = parse_double(v);
      else if (k == "track_gate_px") c.identification.track_gate_px = parse_double(v);
      else if (k == "anchor_confidence") c.identification.anchor_confidence = parse_double(v);
      else if (k == "baseline_sim_threshold") c.identification.baseline_sim_threshold = parse_double(v);
      else if (k == "r_p") c.advisor.r_p = parse_double(v);
      else if (k == "n_s") c.advisor.n_ms = seconds_to_ms(parse_double(v));
      else if (k == "k_s") c.advisor.k_ms = seconds_to_ms(parse_double(v));
      else if (k == "suppress_entropy_fraction") {
        if (v == "off") c.advisor.suppress_entropy_fraction.reset();
        else c.advisor.suppress_entropy_fraction = parse_double(v);
      } else if (k == "pairing_tolerance_ms") c.pairing_tolerance_ms = parse_int(v);
      else if (k == "snapshot_hz") c.snapshot_hz = parse_double(v);
      else if (k == "min_track_observations") c.registration.min_track_observations = static_cast<int>(parse_int(v));
      else if (k == "registration_gate_px") c.registration.gate_px = parse_double(v);
      else if (k == "registration_sample_stride") c.registration.sample_stride = static_cast<int>(parse_int(v));
      else throw Error(ErrorCode::Parse, "unknown key '" + k + "'");
    } catch (const Error& e) {
      throw Error(ErrorCode::Parse, "config line " + std::to_string(kv.line) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

EngineConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

std::string write_config(const EngineConfig& c) {
  std::ostringstream out;
  auto opt = [&](const char* key, const std::optional<double>& v, const char* note) {
    if (v) out << key << " = " << format_double(*v) << "\n";
    else out << "# " << key << " = <" << note << ">\n";
  };
  opt("target_radius_px", c.identification.target_radius_px, "0.05 x frame width");
  opt("track_gate_px", c.identification.track_gate_px, "0.08 x frame width");
  out << "anchor_confidence = " << format_double(c.identification.anchor_confidence) << "\n";
  out << "baseline_sim_threshold = " << format_double(c.identification.baseline_sim_threshold) << "\n";
  out << "r_p = " << format_double(c.advisor.r_p) << "\n";
  out << "n_s = " << format_double(static_cast<double>(c.advisor.n_ms) / 1000) << "\n";
  out << "k_s = " << format_double(static_cast<double>(c.advisor.k_ms) / 1000) << "\n";
  out << "suppress_entropy_fraction = "
      << (c.advisor.suppress_entropy_fraction ? format_double(*c.advisor.suppress_entropy_fraction) : "off")
      << "\n";
  if (c.pairing_tolerance_ms) out << "pairing_tolerance_ms = " << *c.pairing_tolerance_ms << "\n";
  else out << "# pairing_tolerance_ms = <half the frame interval>\n";
  out << "snapshot_hz = " << format_double(c.snapshot_hz) << "\n";
  out << "min_track_observations = " << c.registration.min_track_observations << "\n";
  opt("registration_gate_px", c.registration.gate_px, "0.08 x frame width");
  out << "registration_sample_stride = " << c.registration.sample_stride << "\n";
  return out.str();
}

nlohmann::ordered_json to_json(const EngineConfig& c) {
  nlohmann::ordered_json j;
  put_optional(j, "target_radius_px", c.identification.target_radius_px);
  put_optional(j, "track_gate_px", c.identification.track_gate_px);
  j["anchor_confidence"] = c.identification.anchor_confidence;
  j["baseline_sim_threshold"] = c.identification.baseline_sim_threshold;
  j["r_p"] = c.advisor.r_p;
  j["n_ms"] = c.advisor.n_ms;
  j["k_ms"] = c.advisor.k_ms;
  put_optional(j, "suppress_entropy_fraction", c.advisor.suppress_entropy_fraction);
  put_optional(j, "pairing_tolerance_ms", c.pairing_tolerance_ms);
  j["snapshot_hz"] = c.snapshot_hz;
  j["min_track_observations"] = c.registration.min_track_observations;
  put_optional(j, "registration_gate_px", c.registration.gate_px);
  j["registration_sample_stride"] = c.registration.sample_stride;
  return j;
}

EngineConfig config_from_json(const nlohmann::json& j) {
  EngineConfig c;
  c.identification.target_radius_px = get_optional<double>(j, "target_radius_px");
  c.identification.track_gate_px = get_optional<double>(j, "track_gate_px");
  c.identification.anchor_confidence = j.at("anchor_confidence").get<double>();
  c.identification.baseline_sim_threshold = j.at("baseline_sim_threshold").get<double>();
  c.advisor.r_p = j.at("r_p").get<double>();
  c.advisor.n_ms = j.at("n_ms").get<TimeMs>();
  c.advisor.k_ms = j.at("k_ms").get<TimeMs>();
  c.advisor.suppress_entropy_fraction = get_optional<double>(j, "suppress_entropy_fraction");
  c.pairing_tolerance_ms = get_optional<TimeMs>(j, "pairing_tolerance_ms");
  c.snapshot_hz = j.at("snapshot_hz").get<double>();
  c.registration.min_track_observations = j.at("min_track_observations").get<int>();
  c.registration.gate_px = get_optional<double>(j, "registration_gate_px");
  c.registration.sample_stride = j.at("registration_sample_stride").get<int>();
  c.validate();
  return c;
}

}  // namespace gazecoach
