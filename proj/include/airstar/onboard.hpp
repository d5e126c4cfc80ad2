#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "airstar/link.hpp"
#include "airstar/skills.hpp"
#include "airstar/wire.hpp"
#include "airstar/world.hpp"

namespace airstar::onboard {

struct OnboardConfig {
  skills::TrackGains track;
  double k_goto = 1.0;             // 1/s, position error to velocity
  double k_yaw = 2.0;              // 1/s, heading error to yaw rate
  double goto_tolerance = 0.3;     // m
  double yaw_tolerance = 0.03;     // rad
  double avoid_margin = 0.3;       // m kept to the first obstacle along the motion
  double gesture_step = 0.5;       // m, when a gesture setpoint gives none
};

// The onboard control tier: holds the simulated vehicle and runs the active
// setpoint at tick rate. Nothing in tick() blocks or waits on the station.
class Onboard {
 public:
  explicit Onboard(sim::World world, OnboardConfig config = {});

  // One control tick. Setpoints in `inbox` replace the active one (the last
  // wins); with an empty inbox the previous setpoint keeps running. When the
  // link is down the vehicle is commanded to zero velocity and stays in hold
  // until a new setpoint arrives. Returns skill_status updates, then
  // frame_meta, then telemetry (always last).
  std::vector<wire::WireMessage> tick(std::span<const wire::WireMessage> inbox, bool link_up = true);

  const sim::World& world() const { return world_; }
  const wire::Setpoint& setpoint() const { return active_; }
  const sim::Control& last_control() const { return last_control_; }
  bool link_lost() const { return link_lost_; }

 private:
  void accept(const wire::Setpoint& sp, std::vector<wire::WireMessage>& out);
  sim::Control control(std::vector<wire::WireMessage>& out);
  sim::Control goto_control(const Vec3& target, std::optional<double> yaw) const;
  Vec3 avoid(const Vec3& velocity) const;
  void finish(wire::SkillState state, std::vector<wire::WireMessage>& out,
              std::optional<planner::FailureCause> cause = {}, std::string detail = {});
  void enter_hold();

  sim::World world_;
  OnboardConfig cfg_;
  wire::Setpoint active_;
  bool finished_ = true;   // active setpoint has reported done or failed
  bool link_lost_ = false;
  std::uint64_t started_tick_ = 0;
  Vec3 hold_position_;
  std::optional<Vec3> goal_;          // goto, gesture and frame_human target
  std::optional<double> goal_yaw_;
  skills::TrackState track_;
  sim::Control last_control_;
};

// Runs an Onboard at 10 Hz on its own thread, exchanging messages through
// channels. Ticks are scheduled on absolute deadlines so station latency or
// stalls never stretch the cadence.
class OnboardRunner {
 public:
  using Inbox = link::Channel<wire::WireMessage>;
  using Outbox = std::function<void(const wire::WireMessage&)>;

  OnboardRunner(Onboard& onboard, Inbox& inbox, Outbox outbox,
                std::function<bool()> link_up = [] { return true; });
  ~OnboardRunner();

  void start();
  void stop();
  // Wall-clock start time of every tick so far.
  std::vector<link::Clock::time_point> tick_times() const;

 private:
  void loop();

  Onboard& onboard_;
  Inbox& inbox_;
  Outbox outbox_;
  std::function<bool()> link_up_;
  std::atomic<bool> running_{false};
  std::thread thread_;
  mutable std::mutex mu_;
  std::vector<link::Clock::time_point> ticks_;
};

}  // namespace airstar::onboard
