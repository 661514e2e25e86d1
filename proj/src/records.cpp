#include "gazecoach/records.hpp"

#include "gazecoach/text_format.hpp"

#include <fstream>
#include <sstream>

namespace gazecoach {

namespace {

Json box_json(const Box2& b) {
  return Json::array({b.min().x(), b.min().y(), b.max().x(), b.max().y()});
}

Box2 box_from(const nlohmann::json& j) {
  return Box2(Point2(j.at(0).get<double>(), j.at(1).get<double>()),
              Point2(j.at(2).get<double>(), j.at(3).get<double>()));
}

Json vector_json(const Descriptor& d) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < d.size(); ++i) arr.push_back(d(i));
  return arr;
}

Descriptor vector_from(const nlohmann::json& j) {
  Descriptor d(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) d(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
  return d;
}

Json member_json(const std::optional<MemberId>& m) {
  return m ? Json(m->str()) : Json(nullptr);
}

std::optional<MemberId> member_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return MemberId::parse(j.get<std::string>());
}

}  // namespace

Json to_json(const GazeSample& g) {
  Json j;
  j["t"] = g.t;
  j["x"] = g.point.x();
  j["y"] = g.point.y();
  j["valid"] = g.valid;
  return j;
}

GazeSample gaze_from_json(const nlohmann::json& j) {
  GazeSample g;
  g.t = j.at("t").get<TimeMs>();
  g.point = Point2(j.value("x", 0.0), j.value("y", 0.0));
  g.valid = j.at("valid").get<bool>();
  return g;
}

Json frame_fields(const FrameObservation& f) {
  Json j;
  j["frame_id"] = f.frame_id;
  j["width"] = f.frame_size.width;
  j["height"] = f.frame_size.height;
  j["gaze"] = to_json(f.gaze);
  Json dets = Json::array();
  for (const auto& d : f.detections) {
    Json dj;
    dj["box"] = box_json(d.box);
    dj["center"] = Json::array({d.center.x(), d.center.y()});
    dj["confidence"] = d.det_confidence;
    dj["descriptor"] = vector_json(d.descriptor);
    dets.push_back(std::move(dj));
  }
  j["detections"] = std::move(dets);
  return j;
}

FrameObservation frame_from_json(const nlohmann::json& j) {
  FrameObservation f;
  f.frame_id = j.at("frame_id").get<std::int64_t>();
  f.t = j.at("t").get<TimeMs>();
  f.frame_size = FrameSize{j.at("width").get<int>(), j.at("height").get<int>()};
  if (j.contains("gaze") && !j.at("gaze").is_null()) {
    f.gaze = gaze_from_json(j.at("gaze"));
  } else {
    f.gaze = GazeSample{f.t, Point2::Zero(), false};
  }
  for (const auto& dj : j.at("detections")) {
    FaceDetection d;
    d.box = box_from(dj.at("box"));
    const auto& c = dj.at("center");
    d.center = Point2(c.at(0).get<double>(), c.at(1).get<double>());
    d.det_confidence = dj.value("confidence", 1.0);
    if (dj.contains("descriptor")) d.descriptor = vector_from(dj.at("descriptor"));
    f.detections.push_back(std::move(d));
  }
  return f;
}

Json attention_fields(const FrameAttention& fa) {
  Json j;
  j["frame_id"] = fa.frame_id;
  j["classification"] = to_string(fa.classification);
  j["member"] = member_json(fa.member);
  j["target"] = fa.target_index ? Json(*fa.target_index) : Json(nullptr);
  j["identifier_invoked"] = fa.identifier_invoked;
  if (fa.anchor_after) {
    const auto& a = *fa.anchor_after;
    j["anchor"] = Json{{"member", a.member.str()},
                       {"x", a.center.x()},
                       {"y", a.center.y()},
                       {"detection", a.detection_index}};
  } else {
    j["anchor"] = nullptr;
  }
  Json ids = Json::array();
  for (const auto& m : fa.detection_ids) ids.push_back(member_json(m));
  j["detection_ids"] = std::move(ids);
  return j;
}

FrameAttention attention_from_json(const nlohmann::json& j) {
  FrameAttention fa;
  fa.frame_id = j.at("frame_id").get<std::int64_t>();
  fa.t = j.at("t").get<TimeMs>();
  fa.classification = parse_classification(j.at("classification").get<std::string>());
  fa.member = member_from(j.at("member"));
  if (!j.at("target").is_null()) fa.target_index = j.at("target").get<std::size_t>();
  fa.identifier_invoked = j.at("identifier_invoked").get<bool>();
  if (!j.at("anchor").is_null()) {
    const auto& a = j.at("anchor");
    fa.anchor_after = Anchor{MemberId::parse(a.at("member").get<std::string>()),
                             Point2(a.at("x").get<double>(), a.at("y").get<double>()), fa.frame_id,
                             a.at("detection").get<std::size_t>()};
  }
  for (const auto& m : j.at("detection_ids")) fa.detection_ids.push_back(member_from(m));
  return fa;
}

Json advice_fields(const AdviceEvent& e) {
  Json j;
  j["kind"] = to_string(e.kind);
  j["side"] = e.side ? Json(to_string(*e.side)) : Json(nullptr);
  j["member"] = member_json(e.member);
  j["prompt"] = e.prompt_text;
  j["window_id"] = e.window_id;
  return j;
}

AdviceEvent advice_from_json(const nlohmann::json& j) {
  AdviceEvent e;
  e.t = j.at("t").get<TimeMs>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "insufficient_eye_contact") e.kind = AdviceKind::InsufficientEyeContact;
  else if (kind == "imbalanced_attention") e.kind = AdviceKind::ImbalancedAttention;
  else throw Error(ErrorCode::Parse, "unknown advice kind '" + kind + "'");
  if (!j.at("side").is_null()) e.side = j.at("side").get<std::string>() == "left" ? Side::Left : Side::Right;
  e.member = member_from(j.at("member"));
  e.prompt_text = j.at("prompt").get<std::string>();
  e.window_id = j.at("window_id").get<std::int64_t>();
  return e;
}

Json to_json(const GazeDistribution& d) {
  Json j;
  j["window_id"] = d.window_id;
  j["t_start"] = d.t_start;
  j["t_end"] = d.t_end == std::numeric_limits<TimeMs>::max() ? Json(nullptr) : Json(d.t_end);
  j["X"] = d.total;
  j["X_bar"] = d.audience;
  j["X_unidentified"] = d.unidentified;
  Json xi = Json::array();
  for (Eigen::Index i = 0; i < d.per_member.size(); ++i) xi.push_back(d.per_member(i));
  j["X_i"] = std::move(xi);
  return j;
}

Json to_json(const AudienceLayout& layout) {
  Json j;
  j["schema"] = kSchemaVersion;
  j["n_members"] = layout.size();
  j["frame_width"] = layout.frame_size().width;
  j["frame_height"] = layout.frame_size().height;
  Json members = Json::array();
  for (const auto& m : layout.members()) {
    Json mj;
    mj["id"] = m.id.str();
    mj["ordinal"] = m.id.ordinal;
    mj["global_offset"] = m.global_offset;
    mj["det_confidence"] = m.det_confidence;
    mj["observations"] = m.observations;
    mj["crop"] = Json{{"frame_id", m.crop.frame_id}, {"box", box_json(m.crop.box)}};
    mj["descriptor"] = vector_json(m.descriptor);
    members.push_back(std::move(mj));
  }
  j["members"] = std::move(members);
  return j;
}

AudienceLayout layout_from_json(const nlohmann::json& j) {
  std::vector<LayoutMember> members;
  for (const auto& mj : j.at("members")) {
    LayoutMember m;
    m.id = MemberId::parse(mj.at("id").get<std::string>());
    if (mj.at("ordinal").get<int>() != m.id.ordinal) {
      throw Error(ErrorCode::Parse, "layout ordinal does not match id " + m.id.str());
    }
    m.global_offset = mj.at("global_offset").get<double>();
    m.det_confidence = mj.value("det_confidence", 1.0);
    m.observations = mj.value("observations", 1);
    m.crop.frame_id = mj.at("crop").at("frame_id").get<std::int64_t>();
    m.crop.box = box_from(mj.at("crop").at("box"));
    m.descriptor = vector_from(mj.at("descriptor"));
    members.push_back(std::move(m));
  }
  if (static_cast<int>(members.size()) != j.at("n_members").get<int>()) {
    throw Error(ErrorCode::Parse, "layout n_members does not match member list");
  }
  return AudienceLayout(std::move(members),
                        FrameSize{j.at("frame_width").get<int>(), j.at("frame_height").get<int>()});
}

AudienceLayout load_layout(const std::string& path) {
  try {
    return layout_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, "layout '" + path + "': " + e.what());
  }
}

void save_layout(const std::string& path, const AudienceLayout& layout) {
  write_file(path, to_json(layout).dump(2) + "\n");
}

std::vector<nlohmann::json> read_ndjson(std::istream& in) {
  std::vector<nlohmann::json> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Parse, "record line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<nlohmann::json> read_ndjson_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return read_ndjson(in);
}

}  // namespace gazecoach
