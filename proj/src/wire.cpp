#include "airstar/wire.hpp"

#include "airstar/error.hpp"
#include "airstar/skills.hpp"

namespace airstar::wire {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { fail(ErrorCode::kDecodeError, what); }

json vec(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 vec_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) bad(std::string(what) + " must be [x, y, z]");
  for (const auto& x : j) {
    if (!x.is_number()) bad(std::string(what) + " must hold numbers");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

const json& need(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) bad(std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_number()) bad(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

std::string string(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_string()) bad(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::uint64_t count(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    bad(std::string("field '") + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::optional<double> opt_number(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) bad(std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

json pose_json(const Pose& p) {
  return {{"position", vec(p.position)}, {"velocity", vec(p.velocity)}, {"yaw", p.yaw}};
}

Pose pose_from(const json& j) {
  if (!j.is_object()) bad("pose must be an object");
  Pose p;
  p.position = vec_from(need(j, "position"), "pose.position");
  p.velocity = vec_from(need(j, "velocity"), "pose.velocity");
  p.yaw = number(j, "yaw");
  return p;
}

json mission_json(const mission::MissionState& m) {
  return {{"state", mission::to_string(m.phase)},
          {"step", m.step ? json(*m.step) : json()},
          {"plan_id", m.plan_id ? json(*m.plan_id) : json()}};
}

mission::MissionState mission_from(const json& j) {
  if (!j.is_object()) bad("mission_state must be an object");
  mission::MissionState m;
  const auto phase = mission::phase_from_string(string(j, "state"));
  if (!phase) bad("unknown mission state");
  m.phase = *phase;
  if (auto it = j.find("step"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) bad("mission_state.step must be an integer");
    m.step = it->get<int>();
  }
  if (auto it = j.find("plan_id"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) bad("mission_state.plan_id must be a string");
    m.plan_id = it->get<std::string>();
  }
  return m;
}

json object_json(const sim::VisibleObject& o) {
  return {{"id", o.object_id},
          {"class_tag", o.class_tag},
          {"landmark_tags", o.landmark_tags},
          {"bbox", {o.bbox.u_min, o.bbox.v_min, o.bbox.u_max, o.bbox.v_max}},
          {"depth", o.centroid_depth}};
}

sim::VisibleObject object_from(const json& j) {
  if (!j.is_object()) bad("object must be an object");
  sim::VisibleObject o;
  o.object_id = string(j, "id");
  o.class_tag = string(j, "class_tag");
  const json& tags = need(j, "landmark_tags");
  if (!tags.is_array()) bad("landmark_tags must be an array");
  for (const auto& t : tags) {
    if (!t.is_string()) bad("landmark_tags must hold strings");
    o.landmark_tags.push_back(t.get<std::string>());
  }
  const json& b = need(j, "bbox");
  if (!b.is_array() || b.size() != 4) bad("bbox must be [u_min, v_min, u_max, v_max]");
  for (const auto& x : b) {
    if (!x.is_number()) bad("bbox must hold numbers");
  }
  o.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
  o.centroid_depth = number(j, "depth");
  return o;
}

std::optional<planner::FailureCause> cause_from(const json& j) {
  auto it = j.find("cause");
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) bad("cause must be a string");
  const auto c = planner::failure_cause_from_string(it->get<std::string>());
  if (!c) bad("unknown failure cause '" + it->get<std::string>() + "'");
  return c;
}

json cause_json(const std::optional<planner::FailureCause>& c) {
  return c ? json(planner::to_string(*c)) : json();
}

constexpr std::pair<SetpointMode, const char*> kModeNames[] = {
    {SetpointMode::kHold, "hold"},         {SetpointMode::kTakeoff, "takeoff"},
    {SetpointMode::kGoto, "goto"},         {SetpointMode::kTrajectory, "trajectory"},
    {SetpointMode::kYaw, "yaw"},           {SetpointMode::kTrack, "track"},
    {SetpointMode::kGesture, "gesture"},   {SetpointMode::kFrameHuman, "frame_human"},
};

SetpointMode mode_from(const json& j) {
  const auto m = setpoint_mode_from_string(string(j, "mode"));
  if (!m) bad("unknown setpoint mode");
  return *m;
}

struct ToJson {
  json operator()(const Command& m) const { return {{"type", "command"}, {"text", m.text}}; }
  json operator()(const Click& m) const { return {{"type", "click"}, {"u", m.u}, {"v", m.v}}; }
  json operator()(const Gesture& m) const { return {{"type", "gesture"}, {"dir", m.dir}}; }
  json operator()(const Abort&) const { return {{"type", "abort"}}; }
  json operator()(const Telemetry& m) const {
    return {{"type", "telemetry"},
            {"tick", m.tick},
            {"pose", pose_json(m.pose)},
            {"mode", sim::to_string(m.mode)},
            {"mission_state", mission_json(m.mission_state)}};
  }
  json operator()(const PlanMsg& m) const { return {{"type", "plan"}, {"plan", m.plan}}; }
  json operator()(const StepUpdate& m) const {
    return {{"type", "step_update"},
            {"plan_id", m.plan_id},
            {"index", m.index},
            {"status", planner::to_string(m.status)},
            {"cause", cause_json(m.cause)}};
  }
  json operator()(const FrameMeta& m) const {
    json objs = json::array();
    for (const auto& o : m.objects) objs.push_back(object_json(o));
    return {{"type", "frame_meta"},
            {"tick", m.tick},
            {"objects", objs},
            {"camera", camera_to_json(m.camera)},
            {"pose_at_capture", pose_json(m.pose_at_capture)}};
  }
  json operator()(const Answer& m) const { return {{"type", "answer"}, {"text", m.text}}; }
  json operator()(const Event& m) const {
    json j = {{"type", "event"}, {"level", m.level}, {"text", m.text}};
    if (m.replay) j["replay"] = true;
    return j;
  }
  json operator()(const Setpoint& m) const {
    json j = {{"type", "setpoint"}, {"seq", m.seq}, {"mode", to_string(m.mode)}};
    if (m.uav_mode) j["uav_mode"] = sim::to_string(*m.uav_mode);
    if (m.position) j["position"] = vec(*m.position);
    if (m.yaw) j["yaw"] = *m.yaw;
    if (m.z) j["z"] = *m.z;
    if (!m.points.empty()) {
      json pts = json::array();
      for (const auto& p : m.points) pts.push_back(vec(p));
      j["points"] = pts;
    }
    if (!m.target_id.empty()) j["target_id"] = m.target_id;
    if (m.click) j["click"] = {(*m.click)[0], (*m.click)[1]};
    if (m.standoff) j["standoff"] = *m.standoff;
    if (!m.dir.empty()) j["dir"] = m.dir;
    if (m.step) j["step"] = *m.step;
    return j;
  }
  json operator()(const SkillStatus& m) const {
    return {{"type", "skill_status"},
            {"seq", m.seq},
            {"mode", to_string(m.mode)},
            {"state", to_string(m.state)},
            {"cause", cause_json(m.cause)},
            {"detail", m.detail}};
  }
};

}  // namespace

Pose pose_of(const sim::UavState& s) { return {s.position, s.velocity, s.yaw}; }

const char* to_string(SetpointMode m) {
  for (const auto& [mode, name] : kModeNames) {
    if (mode == m) return name;
  }
  return "?";
}

std::optional<SetpointMode> setpoint_mode_from_string(std::string_view s) {
  for (const auto& [mode, name] : kModeNames) {
    if (s == name) return mode;
  }
  return std::nullopt;
}

const char* to_string(SkillState s) {
  switch (s) {
    case SkillState::kActive: return "active";
    case SkillState::kDone: return "done";
    case SkillState::kFailed: return "failed";
  }
  return "?";
}

const char* type_name(const WireMessage& m) {
  static constexpr const char* kNames[] = {"command",    "click",  "gesture", "abort",
                                           "telemetry",  "plan",   "step_update", "frame_meta",
                                           "answer",     "event",  "setpoint", "skill_status"};
  return kNames[m.index()];
}

json camera_to_json(const CameraModel& c) {
  json rot = json::array();
  for (int i = 0; i < 9; ++i) rot.push_back(c.extrinsic.rotation(i / 3, i % 3));
  return {{"fx", c.fx},
          {"fy", c.fy},
          {"cx", c.cx},
          {"cy", c.cy},
          {"width", c.width},
          {"height", c.height},
          {"extrinsic", {{"rotation", rot}, {"translation", vec(c.extrinsic.translation)}}}};
}

CameraModel camera_from_json(const json& j) {
  if (!j.is_object()) bad("camera must be an object");
  CameraModel c;
  c.fx = number(j, "fx");
  c.fy = number(j, "fy");
  c.cx = number(j, "cx");
  c.cy = number(j, "cy");
  c.width = static_cast<int>(count(j, "width"));
  c.height = static_cast<int>(count(j, "height"));
  const json& e = need(j, "extrinsic");
  const json& r = need(e, "rotation");
  if (!r.is_array() || r.size() != 9) bad("camera rotation must have 9 numbers");
  for (int i = 0; i < 9; ++i) {
    if (!r[i].is_number()) bad("camera rotation must have 9 numbers");
    c.extrinsic.rotation(i / 3, i % 3) = r[i].get<double>();
  }
  c.extrinsic.translation = vec_from(need(e, "translation"), "camera translation");
  return c;
}

json to_json(const WireMessage& m) { return std::visit(ToJson{}, m); }

WireMessage from_json(const json& j) {
  if (!j.is_object()) bad("message must be a JSON object");
  const std::string type = string(j, "type");
  if (type == "command") return Command{string(j, "text")};
  if (type == "click") return Click{number(j, "u"), number(j, "v")};
  if (type == "gesture") {
    Gesture g{string(j, "dir")};
    if (!skills::direction_from_string(g.dir)) bad("unknown gesture direction '" + g.dir + "'");
    return g;
  }
  if (type == "abort") return Abort{};
  if (type == "telemetry") {
    Telemetry t;
    t.tick = count(j, "tick");
    t.pose = pose_from(need(j, "pose"));
    const auto mode = sim::uav_mode_from_string(string(j, "mode"));
    if (!mode) bad("unknown uav mode");
    t.mode = *mode;
    t.mission_state = mission_from(need(j, "mission_state"));
    return t;
  }
  if (type == "plan") {
    const json& p = need(j, "plan");
    if (!p.is_object()) bad("plan must be an object");
    return PlanMsg{p};
  }
  if (type == "step_update") {
    StepUpdate s;
    s.plan_id = string(j, "plan_id");
    s.index = static_cast<int>(count(j, "index"));
    const auto status = planner::step_status_from_string(string(j, "status"));
    if (!status) bad("unknown step status");
    s.status = *status;
    s.cause = cause_from(j);
    return s;
  }
  if (type == "frame_meta") {
    FrameMeta f;
    f.tick = count(j, "tick");
    const json& objs = need(j, "objects");
    if (!objs.is_array()) bad("objects must be an array");
    for (const auto& o : objs) f.objects.push_back(object_from(o));
    f.camera = camera_from_json(need(j, "camera"));
    f.pose_at_capture = pose_from(need(j, "pose_at_capture"));
    return f;
  }
  if (type == "answer") return Answer{string(j, "text")};
  if (type == "event") {
    Event e;
    e.level = string(j, "level");
    e.text = string(j, "text");
    if (auto it = j.find("replay"); it != j.end()) {
      if (!it->is_boolean()) bad("replay must be a boolean");
      e.replay = it->get<bool>();
    }
    return e;
  }
  if (type == "setpoint") {
    Setpoint s;
    s.seq = count(j, "seq");
    s.mode = mode_from(j);
    if (auto it = j.find("uav_mode"); it != j.end()) {
      const auto m = it->is_string() ? sim::uav_mode_from_string(it->get<std::string>()) : std::nullopt;
      if (!m) bad("unknown uav_mode");
      s.uav_mode = m;
    }
    if (j.contains("position")) s.position = vec_from(j["position"], "position");
    s.yaw = opt_number(j, "yaw");
    s.z = opt_number(j, "z");
    if (auto it = j.find("points"); it != j.end()) {
      if (!it->is_array()) bad("points must be an array");
      for (const auto& p : *it) s.points.push_back(vec_from(p, "points[]"));
    }
    if (j.contains("target_id")) s.target_id = string(j, "target_id");
    if (auto it = j.find("click"); it != j.end()) {
      if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
        bad("click must be [u, v]");
      }
      s.click = std::array<double, 2>{(*it)[0].get<double>(), (*it)[1].get<double>()};
    }
    s.standoff = opt_number(j, "standoff");
    if (j.contains("dir")) s.dir = string(j, "dir");
    s.step = opt_number(j, "step");
    return s;
  }
  if (type == "skill_status") {
    SkillStatus s;
    s.seq = count(j, "seq");
    s.mode = mode_from(j);
    const std::string state = string(j, "state");
    if (state == "active") {
      s.state = SkillState::kActive;
    } else if (state == "done") {
      s.state = SkillState::kDone;
    } else if (state == "failed") {
      s.state = SkillState::kFailed;
    } else {
      bad("unknown skill state");
    }
    s.cause = cause_from(j);
    s.detail = j.value("detail", std::string());
    return s;
  }
  bad("unknown message type '" + type + "'");
}

// Invalid UTF-8 in text fields is replaced rather than thrown.
std::string encode(const WireMessage& m) {
  return to_json(m).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

WireMessage decode(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
  try {
    return from_json(j);
  } catch (const json::exception& e) {
    bad(std::string("bad field: ") + e.what());
  }
}

}  // namespace airstar::wire
