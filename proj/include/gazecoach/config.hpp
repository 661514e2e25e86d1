#pragma once

#include "gazecoach/advisor.hpp"
#include "gazecoach/identification.hpp"
#include "gazecoach/registration.hpp"

#include <json.hpp>

namespace gazecoach {

/// Every tunable threshold of a session. Pixel thresholds left unset resolve
/// against the frame width at run time.
struct EngineConfig {
  IdentificationConfig identification;
  AdvisorConfig advisor;
  RegistrationConfig registration;
  std::optional<TimeMs> pairing_tolerance_ms;  ///< default: half the frame interval
  double snapshot_hz = 5;

  void validate() const;
  TimeMs snapshot_interval_ms() const;
};

/// Reads the `key = value` config format; unknown keys are errors.
EngineConfig parse_config(const std::string& text);
EngineConfig load_config(const std::string& path);
std::string write_config(const EngineConfig& config);

nlohmann::ordered_json to_json(const EngineConfig& config);
EngineConfig config_from_json(const nlohmann::json& j);

}  // namespace gazecoach
