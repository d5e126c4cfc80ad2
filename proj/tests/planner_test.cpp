#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "airstar/error.hpp"
#include "airstar/planner.hpp"
#include "test_support.hpp"

namespace airstar::planner {
namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

const sim::World& campus() {
  static const sim::World w = airstar::testing::campus_world();
  return w;
}

PromptContext context_for(const std::string& instruction) {
  PromptContext ctx;
  ctx.instruction = instruction;
  ctx.tools = ToolRegistry::standard().to_json();
  ctx.uav_position = campus().uav.position;
  return ctx;
}

MockPlanner campus_planner() { return MockPlanner(campus().sc().landmarks, campus().sc().reference); }

Plan first_plan(const std::string& instruction) {
  MockPlanner backend = campus_planner();
  return make_plan(context_for(instruction), backend, ToolRegistry::standard(), campus().sc().landmarks);
}

// ---- registry ----------------------------------------------------------------

TEST(Registry, StandardToolsAreDescribed) {
  const ToolRegistry r = ToolRegistry::standard();
  EXPECT_EQ(r.tools().size(), 9u);
  for (const auto& t : r.tools()) {
    EXPECT_FALSE(t.description.empty()) << t.name;
    EXPECT_FALSE(t.success_criterion.empty()) << t.name;
  }
  const json j = r.to_json();
  EXPECT_EQ(j[0]["name"], "geo_navigate");
  EXPECT_EQ(j[0]["params"][1]["choices"], json({"pedestrian_guide", "uav_autonomous"}));
}

TEST(Registry, DuplicatesRejected) {
  ToolRegistry r;
  r.add({"a", "first", {}, "done"});
  EXPECT_EQ(code_of([&] { r.add({"a", "again", {}, "done"}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] {
              r.add({"b", "dup params", {{"x", ParamType::kString}, {"x", ParamType::kNumber}}, "done"});
            }),
            ErrorCode::kInvalidArgument);
}

json doc_with(json steps) { return {{"plan_id", "p"}, {"attempt", 0}, {"steps", std::move(steps)}}; }

TEST(PlanDocument, Validation) {
  const ToolRegistry r = ToolRegistry::standard();
  const auto lms = campus().sc().landmarks;
  auto rejected = [&](json steps) {
    return code_of([&] { plan_from_document(doc_with(std::move(steps)), r, lms); }) == ErrorCode::kPlanRejected;
  };
  EXPECT_TRUE(rejected({{{"tool", "teleport"}, {"params", json::object()}}}));
  EXPECT_TRUE(rejected(json::array()));
  EXPECT_TRUE(rejected({{{"tool", "geo_navigate"}, {"params", {{"landmark", "Library"}}}}}));
  EXPECT_TRUE(rejected({{{"tool", "geo_navigate"}, {"params", {{"landmark", "Library"}, {"map", "subway"}}}}}));
  EXPECT_TRUE(rejected({{{"tool", "geo_navigate"}, {"params", {{"landmark", "Moon"}, {"map", "uav_autonomous"}}}}}));
  EXPECT_TRUE(rejected({{{"tool", "gesture"}, {"params", {{"dir", "sideways"}}}}}));
  EXPECT_TRUE(rejected({{{"tool", "gesture"}, {"params", {{"dir", "up"}, {"speed", 3}}}}}));
  EXPECT_TRUE(rejected({{{"tool", "track"}, {"params", {{"query", "person"}, {"duration", "long"}}}}}));
  EXPECT_TRUE(rejected({{{"tool", "announce_arrival"}, {"params", {{"budget_ticks", 0}}}}}));
  EXPECT_FALSE(rejected({{{"tool", "announce_arrival"}, {"params", {{"budget_ticks", 40}}}}}));
  EXPECT_FALSE(rejected({{{"tool", "gesture"}, {"params", {{"dir", "up"}, {"step", 1.0}}}}}));
  EXPECT_EQ(code_of([&] { plan_from_document(json::array(), r); }), ErrorCode::kPlanRejected);
  json bad_attempt = doc_with({{{"tool", "frame_human"}}});
  bad_attempt["attempt"] = -1;
  EXPECT_EQ(code_of([&] { plan_from_document(bad_attempt, r); }), ErrorCode::kPlanRejected);
}

TEST(PlanDocument, RoundTrip) {
  const Plan p = first_plan("Hi AirStar, guide me to the badminton court.");
  const Plan again = plan_from_document(p.document(), ToolRegistry::standard(), campus().sc().landmarks);
  EXPECT_EQ(again.document(), p.document());
}

TEST(Budgets, ForCall) {
  const Budgets b;
  EXPECT_EQ(b.for_call({"geo_navigate", {{"landmark", "Library"}, {"map", "uav_autonomous"}}}), 1200u);
  EXPECT_EQ(b.for_call({"track", {{"query", "x"}}}), 250u);
  EXPECT_EQ(b.for_call({"track", {{"query", "x"}, {"duration", 3}}}), 80u);
  EXPECT_EQ(b.for_call({"gesture_session", json::object()}), 150u);
  EXPECT_EQ(b.for_call({"geo_navigate", {{"budget_ticks", 2400}}}), 2400u);
}

// ---- mock planner and goldens ------------------------------------------------------

struct GoldenCase {
  const char* file;
  const char* instruction;
};

const GoldenCase kGoldens[] = {
    {"guide_badminton.json", "Hi AirStar, guide me to the badminton court."},
    {"go_central_street.json", "Go to Central Campus Street"},
    {"fly_ahead_tree.json", "Fly ahead of the tree"},
    {"follow_person.json", "Follow the person in red"},
    {"take_picture.json", "Take my picture"},
    {"question_near_library.json", "What is the building near the library?"},
    {"question_teaching.json", "When does the Teaching Building open?"},
    {"navigate_main_library.json", "Navigate to the main library"},
};

TEST(MockPlannerGolden, MatchesCheckedInPlans) {
  const bool update = std::getenv("AIRSTAR_UPDATE_GOLDENS") != nullptr;
  const std::filesystem::path dir = std::filesystem::path(AIRSTAR_TEST_DIR) / "golden" / "plans";
  for (const auto& g : kGoldens) {
    const std::string got = first_plan(g.instruction).document().dump(2) + "\n";
    const auto path = dir / g.file;
    if (update) {
      std::filesystem::create_directories(dir);
      std::ofstream(path) << got;
      continue;
    }
    std::ifstream in(path);
    ASSERT_TRUE(in) << "missing golden " << path;
    std::stringstream want;
    want << in.rdbuf();
    EXPECT_EQ(got, want.str()) << g.instruction;
  }
}

TEST(MockPlanner, GuideShape) {
  const Plan p = first_plan("Hi AirStar, guide me to the badminton court.");
  ASSERT_EQ(p.steps.size(), 3u);
  EXPECT_EQ(p.steps[0].tool, "geo_navigate");
  EXPECT_EQ(p.steps[0].params["landmark"], "Badminton Court");
  EXPECT_EQ(p.steps[0].params["map"], "pedestrian_guide");
  EXPECT_EQ(p.steps[1].tool, "announce_arrival");
  EXPECT_EQ(p.steps[2].tool, "return_to_user");
  EXPECT_EQ(p.attempt, 0);
  EXPECT_EQ(p.plan_id, make_plan_id("Hi AirStar, guide me to the badminton court.", 0));
}

TEST(MockPlanner, UnknownRequests) {
  MockPlanner backend = campus_planner();
  EXPECT_EQ(code_of([&] { backend.plan(context_for("sing me a song")); }), ErrorCode::kNoMatch);
  EXPECT_EQ(code_of([&] { backend.plan(context_for("go to the moon")); }), ErrorCode::kNoMatch);
  EXPECT_EQ(code_of([&] { backend.plan(context_for("what is the weather?")); }), ErrorCode::kNoMatch);
}

TEST(MockPlanner, DeterministicAcrossInstances) {
  for (const auto& g : kGoldens) {
    EXPECT_EQ(first_plan(g.instruction).document(), first_plan(g.instruction).document());
  }
  EXPECT_NE(make_plan_id("go to the library", 0), make_plan_id("go to the library", 1));
}

TEST(MockPlanner, FuzzedInstructionsPlanOrNoMatch) {
  const char* words[] = {"guide", "me", "to", "the", "library", "fly", "behind", "tree", "follow",
                         "person", "?", "what", "near", "court", "take", "my", "picture", "go",
                         "badminton", "main", "street", "xyzzy", "above", "gesture", ""};
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(words) - 1);
  std::uniform_int_distribution<int> len(1, 8);
  const ToolRegistry r = ToolRegistry::standard();
  for (int i = 0; i < 500; ++i) {
    std::string s;
    for (int n = len(rng); n > 0; --n) s += std::string(words[pick(rng)]) + " ";
    MockPlanner backend = campus_planner();
    try {
      plan_from_document(backend.plan(context_for(s)), r, campus().sc().landmarks);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::kNoMatch) << s << ": " << e.what();
    }
  }
}

// ---- context and prompt -----------------------------------------------------------------

TEST(Context, AssemblesKnowledgeAndPerception) {
  kb::KnowledgeBase kb;
  kb.ingest(kb::scenario_entries(campus().sc()));
  sim::ViewFrame f;
  sim::VisibleObject o;
  o.class_tag = "court";
  o.landmark_tags = {"badminton court"};
  f.objects.push_back(o);
  f.pose_at_capture.position = Vec3(1, 2, 3);
  const PromptContext ctx = assemble_context("guide me to the badminton court", f, kb, ToolRegistry::standard(), {});
  EXPECT_EQ(ctx.attempt, 0);
  EXPECT_EQ(ctx.perception, "court badminton court");
  ASSERT_FALSE(ctx.knowledge.empty());
  EXPECT_EQ(ctx.knowledge[0].entry.id, "landmark:lm_badminton");
  EXPECT_EQ(ctx.uav_position, Vec3(1, 2, 3));
  EXPECT_FALSE(ctx.to_json().contains("prior_logs"));

  ExecutionLog log;
  log.plan_error = "NoMatch: x";
  const std::vector<ExecutionLog> logs = {log};
  const PromptContext again = assemble_context("guide me", f, kb, ToolRegistry::standard(), logs);
  EXPECT_EQ(again.attempt, 1);
  EXPECT_EQ(again.to_json()["prior_logs"].size(), 1u);
  EXPECT_EQ(code_of([&] { assemble_context(" ", f, kb, ToolRegistry::standard(), {}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { assemble_context("x", f, kb, ToolRegistry(), {}); }), ErrorCode::kInvalidArgument);
}

TEST(Context, RenderPromptFillsEverySlot) {
  PromptContext ctx = context_for("go to the library");
  const std::string tmpl = "{{instruction}}|{{attempt}}|{{perception}}|{{knowledge}}|{{history}}|{{tools}}";
  const std::string out = render_prompt(tmpl, ctx);
  EXPECT_EQ(out.find("{{"), std::string::npos);
  EXPECT_EQ(out.rfind("go to the library|0|(nothing visible)|(none)|(first attempt)|", 0), 0u);
  EXPECT_NE(out.find("geo_navigate"), std::string::npos);
}

TEST(RemotePlannerTest, UnreachableBackend) {
  RemotePlanner p("http://127.0.0.1:9/plan", "{{instruction}}", 0.2);
  EXPECT_EQ(code_of([&] { p.plan(context_for("go to the library")); }), ErrorCode::kBackendUnavailable);
}

// ---- execution and replanning -----------------------------------------------------------

// Fails the scripted step indices with the given causes; advances a fake clock.
class ScriptedExecutor : public SkillExecutor {
 public:
  std::map<std::string, std::vector<std::optional<FailureCause>>> script;  // per tool, per call
  std::vector<std::pair<std::string, std::uint64_t>> calls;
  std::uint64_t tick = 0;

  StepResult run(const SkillCall& call, std::uint64_t budget) override {
    calls.emplace_back(call.tool, budget);
    StepResult r;
    r.started_tick = tick;
    tick += 10;
    r.ended_tick = tick;
    auto& queue = script[call.tool];
    std::optional<FailureCause> cause;
    if (!queue.empty()) {
      cause = queue.front();
      queue.erase(queue.begin());
    }
    r.succeeded = !cause;
    r.cause = cause;
    return r;
  }
};

TEST(Execute, HaltsAtFirstFailure) {
  Plan p = first_plan("Hi AirStar, guide me to the badminton court.");
  ScriptedExecutor ex;
  ex.script["announce_arrival"] = {FailureCause::kBlocked};
  std::vector<std::pair<std::size_t, StepStatus>> seen;
  const ExecutionLog log = execute_plan(p, ex, Budgets{}, [&](std::size_t i, const SkillCall& c, const StepRecord*) {
    seen.emplace_back(i, c.status);
  });
  ASSERT_EQ(log.records.size(), 2u);
  EXPECT_TRUE(log.failed());
  EXPECT_EQ(log.failure()->step, 1u);
  EXPECT_EQ(p.steps[0].status, StepStatus::kSucceeded);
  EXPECT_EQ(p.steps[1].status, StepStatus::kFailed);
  EXPECT_EQ(p.steps[2].status, StepStatus::kPending);
  const std::vector<std::pair<std::size_t, StepStatus>> want = {
      {0, StepStatus::kRunning}, {0, StepStatus::kSucceeded}, {1, StepStatus::kRunning}, {1, StepStatus::kFailed}};
  EXPECT_EQ(seen, want);
  EXPECT_EQ(log.records[0].budget_ticks, 1200u);
  EXPECT_EQ(log.to_json()["records"][1]["failure_cause"], "blocked");
}

TEST(Execute, AllSucceed) {
  Plan p = first_plan("Take my picture");
  ScriptedExecutor ex;
  const ExecutionLog log = execute_plan(p, ex, Budgets{});
  EXPECT_FALSE(log.failed());
  EXPECT_EQ(log.records.size(), 2u);
  EXPECT_EQ(log.records[1].started_tick, 10u);
}

struct Replanned {
  Plan plan;
  PromptContext ctx;
};

Replanned fail_then_replan(const std::string& instruction, const std::string& tool, FailureCause cause) {
  MockPlanner backend = campus_planner();
  const ToolRegistry r = ToolRegistry::standard();
  PromptContext ctx = context_for(instruction);
  Plan p = make_plan(ctx, backend, r, campus().sc().landmarks);
  ScriptedExecutor ex;
  ex.script[tool] = {cause};
  const ExecutionLog log = execute_plan(p, ex, Budgets{});
  Plan next = replan(ctx, log, backend, r, campus().sc().landmarks);
  return {next, ctx};
}

TEST(Replan, NoPathSwitchesMap) {
  const auto [p, ctx] = fail_then_replan("guide me to the library", "geo_navigate", FailureCause::kNoPath);
  EXPECT_EQ(p.attempt, 1);
  EXPECT_EQ(ctx.prior_logs.size(), 1u);
  ASSERT_EQ(p.steps.size(), 3u);
  EXPECT_EQ(p.steps[0].params["map"], "uav_autonomous");
  EXPECT_EQ(p.steps[0].params["landmark"], "Library");
  EXPECT_NE(p.plan_id, make_plan_id("guide me to the library", 0));
}

TEST(Replan, TimeoutDoublesBudget) {
  const auto [p, ctx] = fail_then_replan("Take my picture", "gesture_session", FailureCause::kTimeout);
  ASSERT_EQ(p.steps.size(), 1u);
  EXPECT_EQ(p.steps[0].tool, "gesture_session");
  EXPECT_EQ(p.steps[0].params[kBudgetParam], 300);
  EXPECT_EQ(Budgets{}.for_call(p.steps[0]), 300u);
}

TEST(Replan, NoTargetInsertsApproach) {
  const auto [p, ctx] = fail_then_replan("Fly ahead of the tree", "object_navigate", FailureCause::kNoTarget);
  ASSERT_EQ(p.steps.size(), 2u);
  EXPECT_EQ(p.steps[0].tool, "geo_navigate");
  EXPECT_EQ(p.steps[1].tool, "object_navigate");
}

TEST(Replan, MissionFailedAfterThreeAttempts) {
  MockPlanner backend = campus_planner();
  const ToolRegistry r = ToolRegistry::standard();
  PromptContext ctx = context_for("guide me to the library");
  Plan p = make_plan(ctx, backend, r, campus().sc().landmarks);
  ScriptedExecutor ex;
  ex.script["geo_navigate"] = {FailureCause::kNoPath, FailureCause::kNoPath, FailureCause::kNoPath};
  int executed = 1;
  ExecutionLog log = execute_plan(p, ex, Budgets{});
  while (true) {
    try {
      p = replan(ctx, log, backend, r, campus().sc().landmarks);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kMissionFailed);
      break;
    }
    ++executed;
    log = execute_plan(p, ex, Budgets{});
    ASSERT_LE(executed, kMaxAttempts);
  }
  EXPECT_EQ(executed, 3);
  EXPECT_EQ(ctx.prior_logs.size(), 3u);
}

class DownBackend : public PlannerBackend {
 public:
  int calls = 0;
  json plan(const PromptContext&) override {
    ++calls;
    fail(ErrorCode::kBackendUnavailable, "down");
  }
};

TEST(Replan, PlanningErrorsCountAsAttempts) {
  DownBackend down;
  PromptContext ctx = context_for("guide me to the library");
  ExecutionLog first;
  first.plan_error = "BackendUnavailable: down";
  EXPECT_EQ(code_of([&] { replan(ctx, first, down, ToolRegistry::standard()); }), ErrorCode::kMissionFailed);
  EXPECT_EQ(down.calls, 2);
  EXPECT_EQ(ctx.prior_logs.size(), 3u);
  ExecutionLog ok;
  EXPECT_EQ(code_of([&] { replan(ctx, ok, down, ToolRegistry::standard()); }), ErrorCode::kInvalidArgument);
}

TEST(CauseFromError, Mapping) {
  EXPECT_EQ(cause_from_error(ErrorCode::kNoPath), FailureCause::kNoPath);
  EXPECT_EQ(cause_from_error(ErrorCode::kGoalBlocked), FailureCause::kNoPath);
  EXPECT_EQ(cause_from_error(ErrorCode::kNoTarget), FailureCause::kNoTarget);
  EXPECT_EQ(cause_from_error(ErrorCode::kTargetLost), FailureCause::kTargetLost);
  EXPECT_EQ(cause_from_error(ErrorCode::kBackendUnavailable), FailureCause::kBackendUnavailable);
  EXPECT_EQ(cause_from_error(ErrorCode::kInvalidArgument), FailureCause::kBlocked);
  for (FailureCause c : {FailureCause::kTimeout, FailureCause::kNoPath, FailureCause::kNoTarget,
                         FailureCause::kTargetLost, FailureCause::kBackendUnavailable, FailureCause::kBlocked}) {
    EXPECT_EQ(failure_cause_from_string(to_string(c)), c);
  }
}

}  // namespace
}  // namespace airstar::planner
