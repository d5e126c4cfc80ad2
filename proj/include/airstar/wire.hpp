#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "airstar/camera.hpp"
#include "airstar/mission.hpp"
#include "airstar/planner.hpp"
#include "airstar/world.hpp"

namespace airstar::wire {

// ---- client -> station ---------------------------------------------------------

struct Command {
  std::string text;
  bool operator==(const Command&) const = default;
};

struct Click {
  double u = 0.0;
  double v = 0.0;
  bool operator==(const Click&) const = default;
};

struct Gesture {
  std::string dir;  // up, down, left, right, forward, backward
  bool operator==(const Gesture&) const = default;
};

struct Abort {
  bool operator==(const Abort&) const = default;
};

// ---- station -> client -----------------------------------------------------------

struct Pose {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double yaw = 0.0;
  bool operator==(const Pose&) const = default;
};

Pose pose_of(const sim::UavState& s);

struct Telemetry {
  std::uint64_t tick = 0;
  Pose pose;
  sim::UavMode mode = sim::UavMode::kGrounded;
  mission::MissionState mission_state;
  bool operator==(const Telemetry&) const = default;
};

struct PlanMsg {
  nlohmann::json plan = nlohmann::json::object();  // the plan document
  bool operator==(const PlanMsg&) const = default;
};

struct StepUpdate {
  std::string plan_id;
  int index = 0;
  planner::StepStatus status = planner::StepStatus::kPending;
  std::optional<planner::FailureCause> cause;
  bool operator==(const StepUpdate&) const = default;
};

struct FrameMeta {
  std::uint64_t tick = 0;
  std::vector<sim::VisibleObject> objects;
  CameraModel camera;
  Pose pose_at_capture;
  bool operator==(const FrameMeta&) const = default;
};

struct Answer {
  std::string text;
  bool operator==(const Answer&) const = default;
};

struct Event {
  std::string level = "info";  // info, warn, error
  std::string text;
  bool replay = false;
  bool operator==(const Event&) const = default;
};

// ---- station <-> onboard link ------------------------------------------------------

enum class SetpointMode { kHold, kTakeoff, kGoto, kTrajectory, kYaw, kTrack, kGesture, kFrameHuman };

const char* to_string(SetpointMode m);
std::optional<SetpointMode> setpoint_mode_from_string(std::string_view s);

// What the onboard tier should be doing. Fields not used by a mode stay empty.
struct Setpoint {
  std::uint64_t seq = 0;
  SetpointMode mode = SetpointMode::kHold;
  std::optional<sim::UavMode> uav_mode;       // reported in telemetry from now on
  std::optional<Vec3> position;               // goto
  std::optional<double> yaw;                  // goto, yaw
  std::optional<double> z;                    // takeoff altitude
  std::vector<Vec3> points;                   // trajectory, one per tick
  std::string target_id;                      // track
  std::optional<std::array<double, 2>> click; // track from a pixel
  std::optional<double> standoff;             // track
  std::string dir;                            // gesture
  std::optional<double> step;                 // gesture
  bool operator==(const Setpoint&) const = default;
};

enum class SkillState { kActive, kDone, kFailed };

const char* to_string(SkillState s);

struct SkillStatus {
  std::uint64_t seq = 0;
  SetpointMode mode = SetpointMode::kHold;
  SkillState state = SkillState::kActive;
  std::optional<planner::FailureCause> cause;
  std::string detail;
  bool operator==(const SkillStatus&) const = default;
};

using WireMessage = std::variant<Command, Click, Gesture, Abort, Telemetry, PlanMsg, StepUpdate,
                                 FrameMeta, Answer, Event, Setpoint, SkillStatus>;

// The "type" discriminator of a message.
const char* type_name(const WireMessage& m);

nlohmann::json to_json(const WireMessage& m);
// Throws DecodeError naming the problem.
WireMessage from_json(const nlohmann::json& j);

// One NDJSON line, without the trailing newline.
std::string encode(const WireMessage& m);
// Throws DecodeError on malformed JSON, a missing or unknown type, or bad fields.
WireMessage decode(std::string_view line);

// Camera model in the scenario file layout.
nlohmann::json camera_to_json(const CameraModel& c);
CameraModel camera_from_json(const nlohmann::json& j);

}  // namespace airstar::wire
