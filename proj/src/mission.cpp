#include "airstar/mission.hpp"

#include "airstar/error.hpp"

namespace airstar::mission {

const char* to_string(Phase p) {
  switch (p) {
    case Phase::kGrounded: return "grounded";
    case Phase::kAscending: return "ascending";
    case Phase::kStandbyHover: return "standby_hover";
    case Phase::kPlanning: return "planning";
    case Phase::kExecuting: return "executing";
    case Phase::kReplanning: return "replanning";
    case Phase::kReturning: return "returning";
    case Phase::kMissionFailed: return "mission_failed";
  }
  return "?";
}

std::optional<Phase> phase_from_string(std::string_view s) {
  for (Phase p : kAllPhases) {
    if (s == to_string(p)) return p;
  }
  return std::nullopt;
}

const char* to_string(Event e) {
  switch (e) {
    case Event::kTakeoff: return "takeoff";
    case Event::kAscended: return "ascended";
    case Event::kCommand: return "command";
    case Event::kPlanReady: return "plan_ready";
    case Event::kPlanError: return "plan_error";
    case Event::kStepDone: return "step_done";
    case Event::kStepFailed: return "step_failed";
    case Event::kPlanDone: return "plan_done";
    case Event::kAttemptsExhausted: return "attempts_exhausted";
    case Event::kAbort: return "abort";
    case Event::kArrived: return "arrived";
    case Event::kAcknowledge: return "acknowledge";
  }
  return "?";
}

std::optional<Phase> transition(Phase from, Event event) {
  using P = Phase;
  using E = Event;
  switch (from) {
    case P::kGrounded:
      if (event == E::kTakeoff) return P::kAscending;
      break;
    case P::kAscending:
      if (event == E::kAscended) return P::kStandbyHover;
      break;
    case P::kStandbyHover:
      if (event == E::kCommand) return P::kPlanning;
      break;
    case P::kPlanning:
      if (event == E::kPlanReady) return P::kExecuting;
      if (event == E::kPlanError) return P::kReplanning;
      break;
    case P::kExecuting:
      if (event == E::kStepDone) return P::kExecuting;
      if (event == E::kStepFailed) return P::kReplanning;
      if (event == E::kPlanDone || event == E::kAbort) return P::kReturning;
      break;
    case P::kReplanning:
      if (event == E::kPlanReady) return P::kExecuting;
      if (event == E::kAttemptsExhausted) return P::kMissionFailed;
      break;
    case P::kReturning:
      if (event == E::kArrived) return P::kStandbyHover;
      break;
    case P::kMissionFailed:
      if (event == E::kAcknowledge) return P::kStandbyHover;
      break;
  }
  return std::nullopt;
}

void StateMachine::fire(Event e) {
  const auto next = transition(state_.phase, e);
  if (!next) {
    fail(ErrorCode::kIllegalTransition,
         std::string("event ") + to_string(e) + " not accepted in " + to_string(state_.phase));
  }
  state_.phase = *next;
  if (*next == Phase::kExecuting) {
    if (e == Event::kPlanReady) state_.step = 0;
  } else {
    state_.step.reset();
  }
  if (*next == Phase::kStandbyHover || *next == Phase::kGrounded || *next == Phase::kAscending) {
    state_.plan_id.reset();
  }
  history_.push_back(*next);
}

void StateMachine::fire_plan_ready(const std::string& plan_id) {
  fire(Event::kPlanReady);
  state_.plan_id = plan_id;
}

void StateMachine::fire_step(int index) {
  fire(Event::kStepDone);
  state_.step = index;
}

}  // namespace airstar::mission
