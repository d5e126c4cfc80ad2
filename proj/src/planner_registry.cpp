#include <cmath>
#include <set>

#include "airstar/error.hpp"
#include "airstar/geo_nav.hpp"
#include "airstar/planner.hpp"
#include "airstar/skills.hpp"

namespace airstar::planner {

namespace {

[[noreturn]] void reject(const std::string& what) { fail(ErrorCode::kPlanRejected, what); }

template <typename E, std::size_t N>
std::optional<E> lookup_name(const std::pair<E, const char*> (&table)[N], std::string_view s) {
  for (const auto& [value, name] : table) {
    if (s == name) return value;
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
const char* name_of(const std::pair<E, const char*> (&table)[N], E v) {
  for (const auto& [value, name] : table) {
    if (value == v) return name;
  }
  return "?";
}

constexpr std::pair<StepStatus, const char*> kStatusNames[] = {
    {StepStatus::kPending, "pending"},
    {StepStatus::kRunning, "running"},
    {StepStatus::kSucceeded, "succeeded"},
    {StepStatus::kFailed, "failed"},
};

constexpr std::pair<FailureCause, const char*> kCauseNames[] = {
    {FailureCause::kTimeout, "timeout"},
    {FailureCause::kNoPath, "no_path"},
    {FailureCause::kNoTarget, "no_target"},
    {FailureCause::kTargetLost, "target_lost"},
    {FailureCause::kBackendUnavailable, "backend_unavailable"},
    {FailureCause::kBlocked, "blocked"},
};

constexpr std::pair<ParamType, const char*> kTypeNames[] = {
    {ParamType::kString, "string"},
    {ParamType::kNumber, "number"},
    {ParamType::kLandmark, "landmark"},
    {ParamType::kDirection, "direction"},
};

void check_param(const std::string& tool, const ParamSpec& spec, const json& value,
                 std::span<const sim::LandmarkNode> landmarks) {
  const std::string where = tool + "." + spec.name;
  switch (spec.type) {
    case ParamType::kNumber:
      if (!value.is_number() || !std::isfinite(value.get<double>())) reject(where + " must be a number");
      return;
    case ParamType::kDirection:
      if (!value.is_string() || !skills::direction_from_string(value.get<std::string>())) {
        reject(where + " must be one of up, down, left, right, forward, backward");
      }
      return;
    case ParamType::kLandmark:
      if (!value.is_string() || value.get<std::string>().empty()) reject(where + " must name a landmark");
      if (!landmarks.empty() && geo::find_landmark(landmarks, value.get<std::string>()) == nullptr) {
        reject(where + ": unknown landmark '" + value.get<std::string>() + "'");
      }
      return;
    case ParamType::kString:
      if (!value.is_string() || value.get<std::string>().empty()) reject(where + " must be a non-empty string");
      if (!spec.choices.empty()) {
        bool ok = false;
        for (const auto& c : spec.choices) ok = ok || c == value.get<std::string>();
        if (!ok) reject(where + ": '" + value.get<std::string>() + "' is not an allowed value");
      }
      return;
  }
}

}  // namespace

const char* to_string(ParamType t) { return name_of(kTypeNames, t); }
const char* to_string(StepStatus s) { return name_of(kStatusNames, s); }
const char* to_string(FailureCause c) { return name_of(kCauseNames, c); }

std::optional<StepStatus> step_status_from_string(std::string_view s) {
  return lookup_name(kStatusNames, s);
}

std::optional<FailureCause> failure_cause_from_string(std::string_view s) {
  return lookup_name(kCauseNames, s);
}

FailureCause cause_from_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNoPath:
    case ErrorCode::kStartBlocked:
    case ErrorCode::kGoalBlocked:
    case ErrorCode::kMissingGrid:
    case ErrorCode::kSmoothingFailed:
      return FailureCause::kNoPath;
    case ErrorCode::kNoTarget:
    case ErrorCode::kInvalidDepth:
    case ErrorCode::kNoHumanVisible:
    case ErrorCode::kNoInformativeView:
    case ErrorCode::kNotFound:
    case ErrorCode::kDegenerateGeometry:
      return FailureCause::kNoTarget;
    case ErrorCode::kTargetLost:
      return FailureCause::kTargetLost;
    case ErrorCode::kBackendUnavailable:
      return FailureCause::kBackendUnavailable;
    default:
      return FailureCause::kBlocked;
  }
}

const ParamSpec* ToolSchema::param(std::string_view n) const {
  for (const auto& p : params) {
    if (p.name == n) return &p;
  }
  return nullptr;
}

void ToolRegistry::add(ToolSchema tool) {
  if (tool.name.empty()) fail(ErrorCode::kInvalidArgument, "tool without a name");
  if (find(tool.name) != nullptr) fail(ErrorCode::kInvalidArgument, "duplicate tool " + tool.name);
  std::set<std::string> names;
  for (const auto& p : tool.params) {
    if (!names.insert(p.name).second || p.name == kBudgetParam) {
      fail(ErrorCode::kInvalidArgument, "duplicate parameter " + tool.name + "." + p.name);
    }
  }
  tools_.push_back(std::move(tool));
}

const ToolSchema* ToolRegistry::find(std::string_view name) const {
  for (const auto& t : tools_) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

json ToolRegistry::to_json() const {
  json out = json::array();
  for (const auto& t : tools_) {
    json params = json::array();
    for (const auto& p : t.params) {
      json pj = {{"name", p.name}, {"type", to_string(p.type)}, {"required", p.required}};
      if (!p.choices.empty()) pj["choices"] = p.choices;
      if (!p.description.empty()) pj["description"] = p.description;
      params.push_back(pj);
    }
    out.push_back({{"name", t.name},
                   {"description", t.description},
                   {"params", params},
                   {"success_criterion", t.success_criterion}});
  }
  return out;
}

ToolRegistry ToolRegistry::standard() {
  ToolRegistry r;
  const std::vector<std::string> maps = {"pedestrian_guide", "uav_autonomous"};
  r.add({"geo_navigate",
         "Fly to a named campus landmark along a planned, smoothed route at cruise altitude.",
         {{"landmark", ParamType::kLandmark, true, {}, "landmark name from the landmark map"},
          {"map", ParamType::kString, true, maps, "pedestrian_guide to lead a walking user, uav_autonomous otherwise"}},
         "UAV within 1.5 m of the landmark goal"});
  r.add({"announce_arrival", "Tell the user the destination has been reached.", {},
         "announcement sent"});
  r.add({"return_to_user", "Fly back near the user and hover.", {},
         "UAV within 1.5 m of the point 3 m from the user"});
  r.add({"object_navigate",
         "Fly to an object in the current camera view described by a phrase (ahead of, behind, above).",
         {{"instruction", ParamType::kString, true, {}, "phrase naming the object and relation"},
          {"standoff", ParamType::kNumber, false, {}, "meters from the object, default 2"}},
         "UAV within 1.0 m of the object goal"});
  r.add({"track",
         "Follow a person or object, keeping it centered and avoiding occlusions.",
         {{"query", ParamType::kString, true, {}, "what to follow"},
          {"duration", ParamType::kNumber, false, {}, "seconds, default 20"}},
         "tracked for the requested duration without losing the target"});
  r.add({"search_qa",
         "Scan views around a landmark and answer a question about it.",
         {{"question", ParamType::kString, true, {}, "the user's question"},
          {"landmark", ParamType::kLandmark, false, {}, "landmark to look at"}},
         "an answer was produced"});
  r.add({"frame_human", "Turn toward the nearest person and move into framing range (3 to 8 m).", {},
         "person centered within 5 px at 3 to 8 m"});
  r.add({"gesture_session",
         "Accept gesture commands (up, down, left, right, forward, backward) from the user.",
         {{"duration", ParamType::kNumber, false, {}, "seconds, default 10"}},
         "session ran for its duration"});
  r.add({"gesture", "Move one step in a direction.",
         {{"dir", ParamType::kDirection, true, {}, "up, down, left, right, forward or backward"},
          {"step", ParamType::kNumber, false, {}, "meters in (0, 2], default 0.5"}},
         "displacement applied"});
  return r;
}

json Plan::document() const {
  json steps_json = json::array();
  for (const auto& s : steps) steps_json.push_back({{"tool", s.tool}, {"params", s.params}});
  return {{"plan_id", plan_id}, {"attempt", attempt}, {"steps", steps_json}};
}

Plan plan_from_document(const json& doc, const ToolRegistry& registry,
                        std::span<const sim::LandmarkNode> landmarks) {
  if (!doc.is_object()) reject("plan document must be an object");
  Plan plan;
  const auto id = doc.find("plan_id");
  if (id == doc.end() || !id->is_string() || id->get<std::string>().empty()) reject("plan_id missing");
  plan.plan_id = id->get<std::string>();
  const auto attempt = doc.find("attempt");
  if (attempt == doc.end() || !attempt->is_number_integer() || attempt->get<int>() < 0) {
    reject("attempt must be a non-negative integer");
  }
  plan.attempt = attempt->get<int>();
  const auto steps = doc.find("steps");
  if (steps == doc.end() || !steps->is_array() || steps->empty()) reject("plan has no steps");

  for (std::size_t i = 0; i < steps->size(); ++i) {
    const json& s = (*steps)[i];
    const std::string where = "step " + std::to_string(i);
    if (!s.is_object() || !s.contains("tool") || !s["tool"].is_string()) reject(where + ": tool missing");
    const std::string tool = s["tool"].get<std::string>();
    const ToolSchema* schema = registry.find(tool);
    if (schema == nullptr) reject(where + ": unknown tool '" + tool + "'");
    const json params = s.value("params", json::object());
    if (!params.is_object()) reject(where + ": params must be an object");
    for (const auto& [name, value] : params.items()) {
      if (name == kBudgetParam) {
        if (!value.is_number() || !(value.get<double>() >= 1.0)) reject(where + ": bad budget_ticks");
        continue;
      }
      const ParamSpec* spec = schema->param(name);
      if (spec == nullptr) reject(where + ": " + tool + " has no parameter '" + name + "'");
      check_param(tool, *spec, value, landmarks);
    }
    for (const auto& p : schema->params) {
      if (p.required && !params.contains(p.name)) reject(where + ": " + tool + " needs '" + p.name + "'");
    }
    plan.steps.push_back({tool, params, StepStatus::kPending});
  }
  return plan;
}

std::uint64_t Budgets::for_call(const SkillCall& call) const {
  if (auto it = call.params.find(kBudgetParam); it != call.params.end()) {
    return static_cast<std::uint64_t>(it->get<double>());
  }
  auto seconds = [&](double fallback) {
    const double s = call.params.value("duration", fallback);
    return static_cast<std::uint64_t>(std::ceil(s / sim::kTickSeconds)) + duration_margin;
  };
  const std::string& t = call.tool;
  if (t == "geo_navigate") return geo_navigate;
  if (t == "object_navigate") return object_navigate;
  if (t == "search_qa") return search_qa;
  if (t == "return_to_user") return return_to_user;
  if (t == "frame_human") return frame_human;
  if (t == "gesture") return gesture;
  if (t == "announce_arrival") return announce_arrival;
  if (t == "track") return seconds(track_default_seconds);
  if (t == "gesture_session") return seconds(gesture_session_default_seconds);
  return geo_navigate;
}

}  // namespace airstar::planner
