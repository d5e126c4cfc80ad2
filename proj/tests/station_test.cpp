#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "airstar/error.hpp"
#include "airstar/geo_nav.hpp"
#include "airstar/session.hpp"
#include "test_support.hpp"

namespace airstar {
namespace {

using mission::Phase;
using station::MissionReport;

struct Capture : station::ClientSink {
  std::vector<wire::WireMessage> messages;
  void publish(const wire::WireMessage& m) override { messages.push_back(m); }

  template <class T>
  std::vector<T> all() const {
    std::vector<T> out;
    for (const auto& m : messages) {
      if (const auto* x = std::get_if<T>(&m)) out.push_back(*x);
    }
    return out;
  }
};

std::shared_ptr<const sim::Scene> campus() {
  static const auto scene = sim::load_scenario(testing::data_path("scenarios/campus.json")).scene;
  return scene;
}

// Collapses repeats so the sequence reads as a list of phases visited.
std::vector<Phase> phases_seen(const std::vector<wire::Telemetry>& ts) {
  std::vector<Phase> out;
  for (const auto& t : ts) {
    if (out.empty() || out.back() != t.mission_state.phase) out.push_back(t.mission_state.phase);
  }
  return out;
}

TEST(Station, GuideMissionWalksTheStateMachine) {
  Capture cap;
  session::Session s(campus(), config::Config{}, {}, &cap);
  const MissionReport r = s.run("Hi AirStar, guide me to the badminton court.");
  EXPECT_TRUE(r.succeeded);
  EXPECT_EQ(r.final_phase, Phase::kStandbyHover);
  EXPECT_EQ(r.attempts, 1);
  EXPECT_GT(r.path_length, 100.0);
  ASSERT_TRUE(r.min_clearance.has_value());
  EXPECT_GE(*r.min_clearance, geo::default_clearance(sim::GridKind::kPedestrianGuidance));

  const std::vector<Phase> want = {Phase::kGrounded,  Phase::kAscending, Phase::kStandbyHover, Phase::kPlanning,
                                   Phase::kExecuting, Phase::kReturning, Phase::kStandbyHover};
  std::vector<Phase> walked;
  for (Phase ph : s.station().machine().history()) {
    if (walked.empty() || walked.back() != ph) walked.push_back(ph);
  }
  EXPECT_EQ(walked, want);
  // Telemetry reports the same walk (planning is instantaneous on the mock).
  const auto seen = phases_seen(cap.all<wire::Telemetry>());
  EXPECT_EQ(seen.front(), Phase::kAscending);
  EXPECT_NE(std::find(seen.begin(), seen.end(), Phase::kReturning), seen.end());
  EXPECT_EQ(seen.back(), Phase::kStandbyHover);

  // Ended near the user, 3 m off.
  const Vec2 user = s.station().machine().phase() == Phase::kStandbyHover ? campus()->user().path.front() : Vec2();
  const Vec3 p = s.station().uav().position;
  EXPECT_NEAR(std::hypot(p.x() - user.x(), p.y() - user.y()), 3.0, 1.6);

  const auto answers = cap.all<wire::Answer>();
  ASSERT_EQ(answers.size(), 1u);
  EXPECT_EQ(answers[0].text, "We have arrived at Badminton Court.");
  const auto steps = cap.all<wire::StepUpdate>();
  ASSERT_EQ(steps.size(), 6u);  // running + result for each of 3 steps
  EXPECT_EQ(steps.back().status, planner::StepStatus::kSucceeded);

  // Outcome landed in the knowledge base.
  bool found = false;
  for (const auto& e : s.station().knowledge().entries()) {
    if (e.text.find("outcome: succeeded") != std::string::npos) found = true;
  }
  EXPECT_TRUE(found);
}

TEST(Station, ExecutingStepIndexAdvances) {
  Capture cap;
  session::Session s(campus(), config::Config{}, {}, &cap);
  s.run("guide me to the library");
  std::vector<int> steps;
  for (const auto& t : cap.all<wire::Telemetry>()) {
    if (t.mission_state.phase == Phase::kExecuting && t.mission_state.step &&
        (steps.empty() || steps.back() != *t.mission_state.step)) {
      steps.push_back(*t.mission_state.step);
    }
  }
  EXPECT_EQ(steps, (std::vector<int>{0, 1, 2}));
}

TEST(Station, AbortDuringExecutingReturns) {
  Capture cap;
  session::Session s(campus(), config::Config{}, {}, &cap);
  s.station().takeoff();
  const std::uint64_t t0 = s.station().tick();
  s.station().on_tick = [&](station::Station& st) {
    if (st.tick() == t0 + 40) st.post(wire::Abort{});
  };
  const MissionReport r = s.run("go to the library");
  EXPECT_FALSE(r.succeeded);
  EXPECT_EQ(r.final_phase, Phase::kStandbyHover);
  const auto& h = s.station().machine().history();
  const auto it = std::find(h.begin(), h.end(), Phase::kExecuting);
  ASSERT_NE(it, h.end());
  EXPECT_EQ(*(it + 1), Phase::kReturning);
  EXPECT_EQ(std::count(h.begin(), h.end(), Phase::kReplanning), 0);
  bool aborted = false;
  for (const auto& e : s.station().knowledge().entries()) {
    if (e.text.find("outcome: aborted") != std::string::npos) aborted = true;
  }
  EXPECT_TRUE(aborted);
}

TEST(Station, CommandDuringMissionIsRejected) {
  Capture cap;
  session::Session s(campus(), config::Config{}, {}, &cap);
  s.station().takeoff();
  const std::uint64_t t0 = s.station().tick();
  s.station().on_tick = [&](station::Station& st) {
    if (st.tick() == t0 + 5) st.post(wire::Command{"go to the library"});
  };
  const MissionReport r = s.run("go to the teaching building");
  EXPECT_TRUE(r.succeeded);
  bool rejected = false;
  for (const auto& e : cap.all<wire::Event>()) {
    if (e.level == "warn" && e.text.find("busy") != std::string::npos) rejected = true;
  }
  EXPECT_TRUE(rejected);
}

TEST(Station, UnknownLandmarkFailsAfterThreeAttempts) {
  Capture cap;
  session::Session s(campus(), config::Config{}, {}, &cap);
  const MissionReport r = s.run("guide me to the swimming pool");
  EXPECT_FALSE(r.succeeded);
  EXPECT_EQ(r.final_phase, Phase::kMissionFailed);
  EXPECT_EQ(r.attempts, 3);
  EXPECT_TRUE(r.logs.empty());
  // The operator acknowledges with abort; the next mission then runs.
  s.station().acknowledge();
  EXPECT_EQ(s.station().machine().phase(), Phase::kStandbyHover);
  EXPECT_TRUE(s.run("go to the library").succeeded);
}

TEST(Station, ClientMessageOfStationTypeGetsErrorEvent) {
  Capture cap;
  session::Session s(campus(), config::Config{}, {}, &cap);
  s.station().post(wire::Answer{"hello"});
  s.station().takeoff();
  bool error = false;
  for (const auto& e : cap.all<wire::Event>()) error = error || e.level == "error";
  EXPECT_TRUE(error);
}

// A pedestrian standing ahead of the start so the camera sees it.
std::shared_ptr<const sim::Scene> campus_with_walker() {
  auto sc = std::make_shared<sim::Scene>(*campus());
  sim::Pedestrian p;
  p.id = "bystander";
  p.path = {Vec2(100.5, 40.5)};
  sc->pedestrians.push_back(p);
  return sc;
}

TEST(Station, ClickDuringTrackReinitializes) {
  Capture cap;
  session::Session s(campus_with_walker(), config::Config{}, {}, &cap);
  s.station().takeoff();
  std::optional<std::uint64_t> clicked_at;
  s.station().on_tick = [&](station::Station& st) {
    if (!clicked_at && st.current_tool() == "track") {
      clicked_at = st.tick();
      st.post(wire::Click{80.0, 60.0});
    }
  };
  bool saw_click = false;
  const auto before = cap.messages.size();
  const MissionReport r = s.run("follow the person");
  ASSERT_TRUE(clicked_at.has_value());
  for (std::size_t i = before; i < cap.messages.size(); ++i) {
    if (const auto* e = std::get_if<wire::Event>(&cap.messages[i])) {
      saw_click = saw_click || e->text.find("re-initialized from click") != std::string::npos;
    }
  }
  EXPECT_TRUE(saw_click);
  (void)r;
}

TEST(Station, ClickOutsideTrackIsIgnored) {
  Capture cap;
  session::Session s(campus(), config::Config{}, {}, &cap);
  s.station().post(wire::Click{10, 10});
  s.station().takeoff();
  bool warned = false;
  for (const auto& e : cap.all<wire::Event>()) warned = warned || e.text.find("click ignored") != std::string::npos;
  EXPECT_TRUE(warned);
  EXPECT_EQ(s.onboard().setpoint().mode, wire::SetpointMode::kHold);
}

TEST(Station, RecordFileIsDeterministic) {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string a = (dir / "airstar_rec_a.ndjson").string();
  const std::string b = (dir / "airstar_rec_b.ndjson").string();
  for (const auto& path : {a, b}) {
    session::Session s(campus(), config::Config{}, {.seed = 42, .record_path = path});
    s.run("guide me to the badminton court");
  }
  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string ra = slurp(a);
  EXPECT_GT(ra.size(), 1000u);
  EXPECT_EQ(ra, slurp(b));
  const auto msgs = session::read_record(a);
  EXPECT_TRUE(std::holds_alternative<wire::Command>(msgs.front()) ||
              std::holds_alternative<wire::Event>(msgs.front()) ||
              std::holds_alternative<wire::FrameMeta>(msgs.front()));
}

TEST(Station, ReadRecordNamesBadLine) {
  const std::string p = (std::filesystem::temp_directory_path() / "airstar_bad.ndjson").string();
  {
    std::ofstream out(p);
    out << wire::encode(wire::Answer{"a"}) << "\n" << wire::encode(wire::Answer{"b"}) << "\n" << "{\"type\":\"ans";
  }
  try {
    session::read_record(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDecodeError);
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos);
  }
}

TEST(Station, ReplayKeepsCadenceAndFlagsEvents) {
  std::vector<wire::WireMessage> msgs;
  for (std::uint64_t t = 1; t <= 6; ++t) {
    wire::Telemetry tm;
    tm.tick = t;
    msgs.push_back(tm);
  }
  msgs.push_back(wire::Event{"info", "x", false});
  struct Timed : station::ClientSink {
    std::vector<std::pair<link::Clock::time_point, wire::WireMessage>> got;
    void publish(const wire::WireMessage& m) override { got.emplace_back(link::Clock::now(), m); }
  } sink;
  session::replay(msgs, sink, true, 1.0);
  ASSERT_EQ(sink.got.size(), 7u);
  const double span = std::chrono::duration<double>(sink.got[5].first - sink.got[0].first).count();
  EXPECT_NEAR(span, 0.5, 0.1);  // within one tick
  EXPECT_TRUE(std::get<wire::Event>(sink.got.back().second).replay);
}

TEST(Station, EvalCampusSuite) {
  const auto report = session::evaluate(session::load_suite("campus"), config::Config{});
  EXPECT_EQ(report["summary"]["success_rate"].get<double>(), 1.0);
  for (const auto& m : report["missions"]) {
    if (!m["min_clearance"].is_null()) {
      EXPECT_GE(m["min_clearance"].get<double>(), geo::default_clearance(sim::GridKind::kPedestrianGuidance));
    }
  }
  EXPECT_FALSE(session::format_report(report).empty());
}

TEST(Station, EvalEmptySuite) {
  const auto report = session::evaluate(session::load_suite("empty"), config::Config{});
  EXPECT_TRUE(report["missions"].empty());
  EXPECT_TRUE(report["summary"]["success_rate"].is_null());
  EXPECT_THROW(session::load_suite("no_such_suite"), Error);
}

}  // namespace
}  // namespace airstar
