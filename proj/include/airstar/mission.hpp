#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace airstar::mission {

enum class Phase {
  kGrounded,
  kAscending,
  kStandbyHover,
  kPlanning,
  kExecuting,
  kReplanning,
  kReturning,
  kMissionFailed,
};

inline constexpr Phase kAllPhases[] = {Phase::kGrounded,   Phase::kAscending, Phase::kStandbyHover,
                                       Phase::kPlanning,   Phase::kExecuting, Phase::kReplanning,
                                       Phase::kReturning,  Phase::kMissionFailed};

const char* to_string(Phase p);
std::optional<Phase> phase_from_string(std::string_view s);

enum class Event {
  kTakeoff,
  kAscended,
  kCommand,
  kPlanReady,
  kPlanError,  // no usable plan came back from the backend
  kStepDone,
  kStepFailed,
  kPlanDone,
  kAttemptsExhausted,
  kAbort,
  kArrived,
  kAcknowledge,
};

inline constexpr Event kAllEvents[] = {
    Event::kTakeoff,  Event::kAscended,   Event::kCommand,           Event::kPlanReady,
    Event::kPlanError, Event::kStepDone,  Event::kStepFailed,        Event::kPlanDone,
    Event::kAttemptsExhausted, Event::kAbort, Event::kArrived,       Event::kAcknowledge};

const char* to_string(Event e);

// Next phase, or nullopt when the event is not accepted in `from`.
std::optional<Phase> transition(Phase from, Event event);

struct MissionState {
  Phase phase = Phase::kGrounded;
  std::optional<int> step;              // set while executing
  std::optional<std::string> plan_id;   // active plan

  bool operator==(const MissionState&) const = default;
};

// Guards MissionState with the transition table. Rejected events throw
// IllegalTransition and leave the state untouched.
class StateMachine {
 public:
  const MissionState& state() const { return state_; }
  Phase phase() const { return state_.phase; }
  const std::vector<Phase>& history() const { return history_; }

  bool accepts(Event e) const { return transition(state_.phase, e).has_value(); }
  void fire(Event e);
  // kPlanReady with the plan it activates; kStepDone with the next step index.
  void fire_plan_ready(const std::string& plan_id);
  void fire_step(int index);

 private:
  MissionState state_;
  std::vector<Phase> history_{Phase::kGrounded};
};

}  // namespace airstar::mission
