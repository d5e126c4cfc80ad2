#include <sstream>

#include "airstar/error.hpp"
#include "airstar/http_client.hpp"
#include "airstar/planner.hpp"

namespace airstar::planner {

bool ExecutionLog::failed() const { return !plan_error.empty() || failure() != nullptr; }

const StepRecord* ExecutionLog::failure() const {
  if (records.empty() || records.back().outcome != StepStatus::kFailed) return nullptr;
  return &records.back();
}

json ExecutionLog::to_json() const {
  json recs = json::array();
  for (const auto& r : records) {
    recs.push_back({{"step", r.step},
                    {"started_tick", r.started_tick},
                    {"ended_tick", r.ended_tick},
                    {"budget_ticks", r.budget_ticks},
                    {"outcome", to_string(r.outcome)},
                    {"failure_cause", r.failure_cause ? json(to_string(*r.failure_cause)) : json()},
                    {"detail", r.detail}});
  }
  json out = {{"plan_id", plan_id}, {"attempt", attempt}, {"plan", plan}, {"records", recs}};
  if (!plan_error.empty()) out["plan_error"] = plan_error;
  return out;
}

ExecutionLog execute_plan(Plan& plan, SkillExecutor& executor, const Budgets& budgets,
                          const StepObserver& observer) {
  ExecutionLog log;
  log.plan_id = plan.plan_id;
  log.attempt = plan.attempt;
  log.plan = plan.document();
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    SkillCall& call = plan.steps[i];
    call.status = StepStatus::kRunning;
    if (observer) observer(i, call, nullptr);
    const std::uint64_t budget = budgets.for_call(call);
    const StepResult res = executor.run(call, budget);

    StepRecord rec;
    rec.step = i;
    rec.started_tick = res.started_tick;
    rec.ended_tick = res.ended_tick;
    rec.budget_ticks = budget;
    rec.detail = res.detail;
    if (res.succeeded) {
      rec.outcome = StepStatus::kSucceeded;
    } else {
      rec.outcome = StepStatus::kFailed;
      rec.failure_cause = res.cause.value_or(FailureCause::kBlocked);
    }
    call.status = rec.outcome;
    log.records.push_back(rec);
    if (observer) observer(i, call, &log.records.back());
    if (!res.succeeded) break;
  }
  return log;
}

json PromptContext::to_json() const {
  json kn = json::array();
  for (const auto& s : knowledge) {
    kn.push_back({{"id", s.entry.id},
                  {"kind", kb::to_string(s.entry.kind)},
                  {"text", s.entry.text},
                  {"score", s.score}});
  }
  json out = {{"instruction", instruction},
              {"attempt", attempt},
              {"knowledge", kn},
              {"tools", tools},
              {"perception", perception},
              {"uav_position", {uav_position.x(), uav_position.y(), uav_position.z()}}};
  if (attempt > 0) {
    json logs = json::array();
    for (const auto& l : prior_logs) logs.push_back(l.to_json());
    out["prior_logs"] = logs;
  }
  return out;
}

PromptContext assemble_context(const std::string& instruction, const sim::ViewFrame& frame,
                               const kb::KnowledgeBase& kb, const ToolRegistry& registry,
                               std::span<const ExecutionLog> prior_logs) {
  if (registry.empty()) fail(ErrorCode::kInvalidArgument, "tool registry is empty");
  if (instruction.find_first_not_of(" \t\r\n") == std::string::npos) {
    fail(ErrorCode::kInvalidArgument, "empty instruction");
  }
  PromptContext ctx;
  ctx.instruction = instruction;
  ctx.perception = kb::perception_summary(frame);
  ctx.knowledge = kb.retrieve(instruction, ctx.perception, kb::kDefaultTopK);
  ctx.tools = registry.to_json();
  ctx.prior_logs.assign(prior_logs.begin(), prior_logs.end());
  ctx.attempt = static_cast<int>(prior_logs.size());
  ctx.uav_position = frame.pose_at_capture.position;
  return ctx;
}

namespace {

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string history_text(const PromptContext& ctx) {
  if (ctx.attempt == 0 || ctx.prior_logs.empty()) return "(first attempt)";
  std::ostringstream os;
  for (const auto& log : ctx.prior_logs) {
    os << "attempt " << log.attempt << " plan " << log.plan.dump() << "\n";
    if (!log.plan_error.empty()) os << "  planning failed: " << log.plan_error << "\n";
    for (const auto& r : log.records) {
      os << "  step " << r.step << " " << to_string(r.outcome);
      if (r.failure_cause) os << " cause=" << to_string(*r.failure_cause);
      if (!r.detail.empty()) os << " (" << r.detail << ")";
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace

std::string render_prompt(const std::string& tmpl, const PromptContext& ctx) {
  std::ostringstream knowledge;
  for (const auto& s : ctx.knowledge) {
    knowledge << "- [" << kb::to_string(s.entry.kind) << "] " << s.entry.text << "\n";
  }
  std::string out = tmpl;
  replace_all(out, "{{instruction}}", ctx.instruction);
  replace_all(out, "{{tools}}", ctx.tools.dump(2));
  replace_all(out, "{{knowledge}}", ctx.knowledge.empty() ? "(none)" : knowledge.str());
  replace_all(out, "{{perception}}", ctx.perception.empty() ? "(nothing visible)" : ctx.perception);
  replace_all(out, "{{history}}", history_text(ctx));
  replace_all(out, "{{attempt}}", std::to_string(ctx.attempt));
  return out;
}

json RemotePlanner::plan(const PromptContext& ctx) {
  json body = ctx.to_json();
  body["prompt"] = render_prompt(template_, ctx);
  return post_json(url_, body, timeout_s_);
}

Plan make_plan(const PromptContext& ctx, PlannerBackend& backend, const ToolRegistry& registry,
               std::span<const sim::LandmarkNode> landmarks) {
  Plan plan = plan_from_document(backend.plan(ctx), registry, landmarks);
  if (plan.attempt != ctx.attempt) {
    fail(ErrorCode::kPlanRejected, "plan attempt " + std::to_string(plan.attempt) +
                                       " does not match context attempt " + std::to_string(ctx.attempt));
  }
  return plan;
}

Plan replan(PromptContext& ctx, const ExecutionLog& log, PlannerBackend& backend,
            const ToolRegistry& registry, std::span<const sim::LandmarkNode> landmarks,
            int max_attempts) {
  if (!log.failed()) fail(ErrorCode::kInvalidArgument, "replan needs a failed execution log");
  ctx.prior_logs.push_back(log);
  // Each attempt below is one more plan; any planning error is a failed
  // attempt in its own right.
  while (true) {
    ctx.attempt = static_cast<int>(ctx.prior_logs.size());
    if (ctx.attempt >= max_attempts) {
      fail(ErrorCode::kMissionFailed, "mission failed after " + std::to_string(ctx.attempt) + " attempts");
    }
    try {
      return make_plan(ctx, backend, registry, landmarks);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoMatch && e.code() != ErrorCode::kPlanRejected &&
          e.code() != ErrorCode::kBackendUnavailable) {
        throw;
      }
      ExecutionLog failed;
      failed.attempt = ctx.attempt;
      failed.plan_error = std::string(to_string(e.code())) + ": " + e.what();
      ctx.prior_logs.push_back(std::move(failed));
    }
  }
}

}  // namespace airstar::planner
