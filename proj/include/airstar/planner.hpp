#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "airstar/error.hpp"
#include "airstar/knowledge.hpp"
#include "airstar/world.hpp"

namespace airstar::planner {

using nlohmann::json;

// ---- Tool registry --------------------------------------------------------------

enum class ParamType { kString, kNumber, kLandmark, kDirection };

const char* to_string(ParamType t);

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::kString;
  bool required = true;
  std::vector<std::string> choices;  // allowed string values; empty = any
  std::string description;
};

struct ToolSchema {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;
  std::string success_criterion;

  const ParamSpec* param(std::string_view n) const;
};

// Every tool additionally accepts an optional numeric "budget_ticks" that
// overrides its default tick budget; replanning uses it after a timeout.
inline constexpr const char* kBudgetParam = "budget_ticks";

class ToolRegistry {
 public:
  // Throws InvalidArgument on duplicate tool or parameter names.
  void add(ToolSchema tool);
  const ToolSchema* find(std::string_view name) const;
  const std::vector<ToolSchema>& tools() const { return tools_; }
  bool empty() const { return tools_.empty(); }
  json to_json() const;

  // geo_navigate, announce_arrival, return_to_user, object_navigate, track,
  // search_qa, frame_human, gesture_session, gesture.
  static ToolRegistry standard();

 private:
  std::vector<ToolSchema> tools_;
};

// ---- Plans -----------------------------------------------------------------------

enum class StepStatus { kPending, kRunning, kSucceeded, kFailed };

const char* to_string(StepStatus s);
std::optional<StepStatus> step_status_from_string(std::string_view s);

enum class FailureCause { kTimeout, kNoPath, kNoTarget, kTargetLost, kBackendUnavailable, kBlocked };

const char* to_string(FailureCause c);
std::optional<FailureCause> failure_cause_from_string(std::string_view s);

// Skill-level error code to the cause the planner reasons about.
FailureCause cause_from_error(ErrorCode code);

struct SkillCall {
  std::string tool;
  json params = json::object();
  StepStatus status = StepStatus::kPending;
};

struct Plan {
  std::string plan_id;
  int attempt = 0;
  std::vector<SkillCall> steps;

  // {plan_id, attempt, steps:[{tool, params}]}
  json document() const;
};

// Validates tool names, required parameters, types and choices; landmark
// parameters must name a landmark when `landmarks` is non-empty. Throws
// PlanRejected with the first problem found.
Plan plan_from_document(const json& doc, const ToolRegistry& registry,
                        std::span<const sim::LandmarkNode> landmarks = {});

// ---- Execution --------------------------------------------------------------------

struct StepRecord {
  std::size_t step = 0;
  std::uint64_t started_tick = 0;
  std::uint64_t ended_tick = 0;
  std::uint64_t budget_ticks = 0;
  StepStatus outcome = StepStatus::kSucceeded;
  std::optional<FailureCause> failure_cause;
  std::string detail;
};

struct ExecutionLog {
  std::string plan_id;
  int attempt = 0;
  json plan = json::object();  // the document that was executed
  std::vector<StepRecord> records;
  std::string plan_error;  // set when no plan could be produced

  bool failed() const;
  const StepRecord* failure() const;
  json to_json() const;
};

struct StepResult {
  bool succeeded = false;
  std::optional<FailureCause> cause;
  std::uint64_t started_tick = 0;
  std::uint64_t ended_tick = 0;
  std::string detail;
};

// Runs one skill call to completion (success or failure) within the budget.
// Implementations advance the simulation or wait on telemetry as needed.
class SkillExecutor {
 public:
  virtual ~SkillExecutor() = default;
  virtual StepResult run(const SkillCall& call, std::uint64_t budget_ticks) = 0;
};

struct Budgets {
  std::uint64_t geo_navigate = 1200;
  std::uint64_t object_navigate = 600;
  std::uint64_t search_qa = 300;
  std::uint64_t return_to_user = 1200;
  std::uint64_t frame_human = 300;
  std::uint64_t gesture = 50;
  std::uint64_t announce_arrival = 20;
  double track_default_seconds = 20.0;
  double gesture_session_default_seconds = 10.0;
  std::uint64_t duration_margin = 50;  // extra ticks for duration-based tools

  std::uint64_t for_call(const SkillCall& call) const;
};

inline constexpr double kGeoArrivalTolerance = 1.5;
inline constexpr double kObjectArrivalTolerance = 1.0;

using StepObserver = std::function<void(std::size_t index, const SkillCall& call, const StepRecord* record)>;

// Runs steps in order; halts at the first failure, leaving later steps
// pending. The observer sees every status change.
ExecutionLog execute_plan(Plan& plan, SkillExecutor& executor, const Budgets& budgets,
                          const StepObserver& observer = {});

// ---- Context and backends ---------------------------------------------------------------

struct PromptContext {
  std::string instruction;
  std::vector<kb::ScoredEntry> knowledge;
  json tools = json::array();
  std::string perception;
  std::vector<ExecutionLog> prior_logs;
  int attempt = 0;
  Vec3 uav_position = Vec3::Zero();

  json to_json() const;
};

PromptContext assemble_context(const std::string& instruction, const sim::ViewFrame& frame,
                               const kb::KnowledgeBase& kb, const ToolRegistry& registry,
                               std::span<const ExecutionLog> prior_logs);

// Fills the {{instruction}}, {{tools}}, {{knowledge}}, {{perception}},
// {{history}} and {{attempt}} slots of a prompt template.
std::string render_prompt(const std::string& tmpl, const PromptContext& ctx);

class PlannerBackend {
 public:
  virtual ~PlannerBackend() = default;
  // Returns a plan document; may throw NoMatch or BackendUnavailable.
  virtual json plan(const PromptContext& ctx) = 0;
};

// Deterministic grammar over the instruction; replans from the failure cause
// in the last prior log.
class MockPlanner : public PlannerBackend {
 public:
  explicit MockPlanner(std::vector<sim::LandmarkNode> landmarks,
                       sim::GeoPoint reference = {})
      : landmarks_(std::move(landmarks)), reference_(reference) {}
  json plan(const PromptContext& ctx) override;

 private:
  json first_plan(const PromptContext& ctx) const;
  json repair(const PromptContext& ctx) const;
  std::string canonical_landmark(const std::string& phrase) const;

  std::vector<sim::LandmarkNode> landmarks_;
  sim::GeoPoint reference_;
};

class RemotePlanner : public PlannerBackend {
 public:
  RemotePlanner(std::string url, std::string prompt_template, double timeout_s = 10.0)
      : url_(std::move(url)), template_(std::move(prompt_template)), timeout_s_(timeout_s) {}
  json plan(const PromptContext& ctx) override;

 private:
  std::string url_;
  std::string template_;
  double timeout_s_;
};

// Plan id derived from the instruction and attempt: stable across runs.
std::string make_plan_id(const std::string& instruction, int attempt);

// Backend call plus registry validation.
Plan make_plan(const PromptContext& ctx, PlannerBackend& backend, const ToolRegistry& registry,
               std::span<const sim::LandmarkNode> landmarks = {});

inline constexpr int kMaxAttempts = 3;

// Next plan after a failed attempt: context extended with the log, attempt
// incremented. Throws MissionFailed once max_attempts plans have failed.
Plan replan(PromptContext& ctx, const ExecutionLog& log, PlannerBackend& backend,
            const ToolRegistry& registry, std::span<const sim::LandmarkNode> landmarks = {},
            int max_attempts = kMaxAttempts);

}  // namespace airstar::planner
