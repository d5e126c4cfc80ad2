#include <gtest/gtest.h>

#include <cmath>

#include "airstar/onboard.hpp"
#include "test_support.hpp"

namespace airstar::onboard {
namespace {

using testing::empty_scene;
using testing::world_from;
using wire::SetpointMode;
using wire::SkillState;

std::vector<wire::WireMessage> step(Onboard& ob, std::vector<wire::WireMessage> in = {}, bool up = true) {
  return ob.tick(in, up);
}

std::vector<wire::SkillStatus> statuses(const std::vector<wire::WireMessage>& out) {
  std::vector<wire::SkillStatus> s;
  for (const auto& m : out) {
    if (const auto* x = std::get_if<wire::SkillStatus>(&m)) s.push_back(*x);
  }
  return s;
}

wire::Setpoint go(std::uint64_t seq, Vec3 p) {
  wire::Setpoint sp;
  sp.seq = seq;
  sp.mode = SetpointMode::kGoto;
  sp.position = p;
  return sp;
}

sim::World airborne(sim::Scene sc, Vec3 at = Vec3(10, 10, 5), double yaw = 0.0) {
  sim::World w = world_from(std::move(sc));
  w.uav.position = at;
  w.uav.yaw = yaw;
  w.uav.mode = sim::UavMode::kStandbyHover;
  return w;
}

TEST(Onboard, OutputEndsWithFrameMetaThenTelemetry) {
  Onboard ob(airborne(empty_scene()));
  for (std::uint64_t t = 1; t <= 5; ++t) {
    const auto out = step(ob, {go(1, Vec3(20, 10, 5))});
    ASSERT_GE(out.size(), 2u);
    EXPECT_TRUE(std::holds_alternative<wire::FrameMeta>(out[out.size() - 2]));
    const auto& tm = std::get<wire::Telemetry>(out.back());
    EXPECT_EQ(tm.tick, t);
    EXPECT_EQ(std::get<wire::FrameMeta>(out[out.size() - 2]).tick, t);
  }
}

TEST(Onboard, GotoReachesGoalAndReportsDone) {
  Onboard ob(airborne(empty_scene()));
  auto out = step(ob, {go(7, Vec3(20, 12, 6))});
  ASSERT_EQ(statuses(out).size(), 1u);
  EXPECT_EQ(statuses(out)[0].state, SkillState::kActive);
  bool done = false;
  for (int i = 0; i < 200 && !done; ++i) {
    for (const auto& s : statuses(step(ob))) done = done || (s.seq == 7 && s.state == SkillState::kDone);
  }
  EXPECT_TRUE(done);
  EXPECT_LT((ob.world().uav.position - Vec3(20, 12, 6)).norm(), 0.3);
}

TEST(Onboard, LinkLostCommandsZeroVelocityWithinOneTick) {
  Onboard ob(airborne(empty_scene()));
  step(ob, {go(1, Vec3(35, 10, 5))});
  for (int i = 0; i < 20; ++i) step(ob);
  ASSERT_GT(ob.world().uav.velocity.norm(), 1.0);

  const auto out = step(ob, {}, false);
  EXPECT_TRUE(ob.link_lost());
  EXPECT_EQ(ob.last_control().kind, sim::Control::Kind::kVelocitySetpoint);
  EXPECT_EQ(ob.last_control().value, Vec3::Zero());
  const auto st = statuses(out);
  ASSERT_EQ(st.size(), 1u);
  EXPECT_EQ(st[0].state, SkillState::kFailed);
  EXPECT_EQ(st[0].detail, "link lost");

  // The vehicle brakes at a_max and then stays put.
  const double v0 = ob.world().uav.velocity.norm();
  const int brake_ticks = static_cast<int>(std::ceil(v0 / (2.0 * sim::kTickSeconds))) + 1;
  for (int i = 0; i < brake_ticks; ++i) step(ob, {}, false);
  EXPECT_LT(ob.world().uav.velocity.norm(), 1e-9);
  const Vec3 parked = ob.world().uav.position;
  for (int i = 0; i < 30; ++i) step(ob, {}, false);
  EXPECT_LT((ob.world().uav.position - parked).norm(), 1e-9);

  // Back up with no new setpoint: still holding.
  for (int i = 0; i < 30; ++i) step(ob);
  EXPECT_EQ(ob.setpoint().mode, SetpointMode::kHold);
  EXPECT_LT((ob.world().uav.position - parked).norm(), 0.05);
}

TEST(Onboard, StationSilenceReusesStaleSetpoint) {
  Onboard ob(airborne(empty_scene()));
  step(ob, {go(1, Vec3(10, 30, 5))});
  const Vec3 start = ob.world().uav.position;
  for (int i = 0; i < 50; ++i) step(ob);
  EXPECT_GT((ob.world().uav.position - start).norm(), 10.0);  // kept flying the old goto
  EXPECT_EQ(ob.setpoint().seq, 1u);

  // Hovering with a silent station: stays at the hover point.
  wire::Setpoint hold;
  hold.seq = 2;
  hold.position = Vec3(10, 30, 5);
  step(ob, {hold});
  for (int i = 0; i < 100; ++i) step(ob);
  const Vec3 hover = ob.world().uav.position;
  for (int i = 0; i < 50; ++i) step(ob);
  EXPECT_LT((ob.world().uav.position - hover).norm(), 1e-3);
  EXPECT_LT((hover - Vec3(10, 30, 5)).norm(), 0.05);
}

TEST(Onboard, LastSetpointInInboxWins) {
  Onboard ob(airborne(empty_scene()));
  step(ob, {go(1, Vec3(0, 0, 5)), go(2, Vec3(30, 10, 5))});
  EXPECT_EQ(ob.setpoint().seq, 2u);
}

TEST(Onboard, TakeoffClimbsToCruiseAndEntersStandby) {
  sim::Scene sc = empty_scene();
  sc.z_cruise = 6.0;
  Onboard ob(world_from(sc));
  wire::Setpoint sp;
  sp.seq = 1;
  sp.mode = SetpointMode::kTakeoff;
  auto out = step(ob, {sp});
  EXPECT_EQ(std::get<wire::Telemetry>(out.back()).mode, sim::UavMode::kAscending);
  bool done = false;
  for (int i = 0; i < 200 && !done; ++i) {
    out = step(ob);
    for (const auto& s : statuses(out)) done = done || s.state == SkillState::kDone;
  }
  ASSERT_TRUE(done);
  EXPECT_NEAR(ob.world().uav.position.z(), 6.0, 0.3);
  EXPECT_EQ(std::get<wire::Telemetry>(out.back()).mode, sim::UavMode::kStandbyHover);
}

TEST(Onboard, GestureMovesOneStep) {
  Onboard ob(airborne(empty_scene()));
  wire::Setpoint sp;
  sp.seq = 3;
  sp.mode = SetpointMode::kGesture;
  sp.dir = "up";
  sp.step = 1.0;
  step(ob, {sp});
  for (int i = 0; i < 60; ++i) step(ob);
  EXPECT_NEAR(ob.world().uav.position.z(), 6.0, 0.3);

  sp.seq = 4;
  sp.dir = "sideways";
  const auto st = statuses(step(ob, {sp}));
  ASSERT_EQ(st.size(), 1u);
  EXPECT_EQ(st[0].state, SkillState::kFailed);
  EXPECT_EQ(ob.setpoint().mode, SetpointMode::kHold);
}

TEST(Onboard, AvoidanceStopsShortOfAWall) {
  sim::Scene sc = empty_scene();
  auto& grid = sc.grids[0];
  for (int y = 0; y < 40; ++y) grid.set({y, 20}, true);  // wall occupying x in [20, 21)
  Onboard ob(airborne(sc));
  step(ob, {go(1, Vec3(30, 10, 5))});
  double max_x = 0.0;
  for (int i = 0; i < 200; ++i) {
    step(ob);
    max_x = std::max(max_x, ob.world().uav.position.x());
  }
  EXPECT_LT(max_x, 20.0);
  EXPECT_GT(max_x, 18.5);
}

TEST(Onboard, TrackingContinuesWhileStationIsSilent) {
  sim::Scene sc = empty_scene(60, 60);
  sim::Pedestrian p;
  p.id = "walker";
  p.path = {Vec2(20, 10), Vec2(40, 10)};
  p.speed = 0.8;
  sc.pedestrians.push_back(p);
  Onboard ob(airborne(sc, Vec3(14, 10, 2.0), 0.0));
  wire::Setpoint sp;
  sp.seq = 1;
  sp.mode = SetpointMode::kTrack;
  sp.target_id = "walker";
  sp.standoff = 4.0;
  step(ob, {sp});
  bool failed = false;
  for (int i = 0; i < 150; ++i) {
    for (const auto& s : statuses(step(ob))) failed = failed || s.state == SkillState::kFailed;
  }
  EXPECT_FALSE(failed);
  EXPECT_EQ(ob.setpoint().mode, SetpointMode::kTrack);
  const Vec2 w = sim::pedestrian_position(p, ob.world().time);
  const double gap = std::hypot(w.x() - ob.world().uav.position.x(), w.y() - ob.world().uav.position.y());
  EXPECT_GT(ob.world().uav.position.x(), 20.0);  // followed the walker east
  EXPECT_LT(gap, 8.0);
}

TEST(Onboard, RunnerCadenceIgnoresStationLatency) {
  link::Channel<wire::WireMessage> to_onboard(link::LatencyModel(2000.0, 0.0, 1));
  Onboard ob(airborne(empty_scene()));
  std::atomic<int> out_count{0};
  OnboardRunner runner(ob, to_onboard, [&](const wire::WireMessage&) { ++out_count; });
  runner.start();
  to_onboard.push(go(1, Vec3(20, 10, 5)));  // arrives 2 s late
  std::this_thread::sleep_for(std::chrono::milliseconds(2600));
  runner.stop();
  const auto t = runner.tick_times();
  ASSERT_GE(t.size(), 20u);
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double dt = std::chrono::duration<double>(t[i] - t[i - 1]).count();
    EXPECT_NEAR(dt, 0.1, 0.05) << "tick " << i;
  }
  EXPECT_EQ(ob.setpoint().seq, 1u);  // the late setpoint did arrive
  EXPECT_GT(out_count.load(), 40);
}

}  // namespace
}  // namespace airstar::onboard
