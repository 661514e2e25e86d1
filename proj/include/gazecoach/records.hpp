#pragma once

#include "gazecoach/advisor.hpp"
#include "gazecoach/identification.hpp"
#include "gazecoach/metrics.hpp"
#include "gazecoach/registration.hpp"

#include <istream>
#include <json.hpp>

namespace gazecoach {

/// Wire/log version stamped on headers, layout files and API messages.
inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

Json to_json(const GazeSample& g);
GazeSample gaze_from_json(const nlohmann::json& j);

/// Frame fields (without `type`/`t`/`phase` envelope keys).
Json frame_fields(const FrameObservation& f);
FrameObservation frame_from_json(const nlohmann::json& j);

Json attention_fields(const FrameAttention& fa);
FrameAttention attention_from_json(const nlohmann::json& j);

Json advice_fields(const AdviceEvent& e);
AdviceEvent advice_from_json(const nlohmann::json& j);

Json to_json(const GazeDistribution& d);

Json to_json(const AudienceLayout& layout);
AudienceLayout layout_from_json(const nlohmann::json& j);

AudienceLayout load_layout(const std::string& path);
void save_layout(const std::string& path, const AudienceLayout& layout);

/// Parses newline-delimited JSON; blank lines are skipped.
std::vector<nlohmann::json> read_ndjson(std::istream& in);
std::vector<nlohmann::json> read_ndjson_file(const std::string& path);

}  // namespace gazecoach
