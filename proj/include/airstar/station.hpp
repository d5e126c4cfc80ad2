#pragma once

#include <atomic>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "airstar/config.hpp"
#include "airstar/knowledge.hpp"
#include "airstar/link.hpp"
#include "airstar/mission.hpp"
#include "airstar/object_nav.hpp"
#include "airstar/onboard.hpp"
#include "airstar/planner.hpp"
#include "airstar/skills.hpp"
#include "airstar/wire.hpp"

namespace airstar::station {

inline constexpr std::uint64_t kTakeoffBudget = 600;  // ticks
inline constexpr double kLandmarkAimRadius = 5.0;     // m; closer than this, aim at the tagged object

// ---- links to the onboard tier -------------------------------------------------------

class OnboardPort {
 public:
  virtual ~OnboardPort() = default;
  virtual void send(const wire::WireMessage& m) = 0;
  // Messages of the next onboard tick, ending with its telemetry; nullopt when
  // the link stays silent past its timeout.
  virtual std::optional<std::vector<wire::WireMessage>> next_tick() = 0;
};

// Drives an in-process Onboard one tick per call: fully deterministic.
class LockstepPort : public OnboardPort {
 public:
  explicit LockstepPort(onboard::Onboard& onboard) : onboard_(onboard) {}
  void send(const wire::WireMessage& m) override { pending_.push_back(m); }
  std::optional<std::vector<wire::WireMessage>> next_tick() override;
  // Simulates a dropped link for the following ticks.
  void set_link_up(bool up) { link_up_ = up; }

 private:
  onboard::Onboard& onboard_;
  std::vector<wire::WireMessage> pending_;
  bool link_up_ = true;
};

// Message-passing link (in-memory channels with injected latency, or a
// WebSocket bridge feeding the same channels).
class ChannelPort : public OnboardPort {
 public:
  using Chan = link::Channel<wire::WireMessage>;
  ChannelPort(Chan& to_onboard, Chan& from_onboard, double timeout_s)
      : to_(to_onboard), from_(from_onboard),
        timeout_(std::chrono::duration_cast<link::Clock::duration>(std::chrono::duration<double>(timeout_s))) {}
  void send(const wire::WireMessage& m) override { to_.push(m); }
  std::optional<std::vector<wire::WireMessage>> next_tick() override;

 private:
  Chan& to_;
  Chan& from_;
  link::Clock::duration timeout_;
};

// ---- client side ------------------------------------------------------------------------

class ClientSink {
 public:
  virtual ~ClientSink() = default;
  virtual void publish(const wire::WireMessage& m) = 0;
};

class NullSink : public ClientSink {
 public:
  void publish(const wire::WireMessage&) override {}
};

// Appends every message as one NDJSON line, then forwards it.
class Recorder : public ClientSink {
 public:
  explicit Recorder(const std::string& path, ClientSink* next = nullptr);
  void publish(const wire::WireMessage& m) override;

 private:
  std::ofstream out_;
  ClientSink* next_;
};

struct Backends {
  std::unique_ptr<planner::PlannerBackend> planner;
  std::unique_ptr<objnav::GroundingBackend> grounding;
  std::unique_ptr<skills::ViewScorer> scorer;
  std::unique_ptr<skills::QaBackend> qa;
};

// Mock backends unless the config names remote URLs.
Backends make_backends(const config::Config& cfg, const sim::Scene& scene);

struct MissionReport {
  std::string instruction;
  bool succeeded = false;
  mission::Phase final_phase = mission::Phase::kStandbyHover;
  int attempts = 0;            // plans tried, planning failures included
  std::uint64_t ticks = 0;
  double path_length = 0.0;    // meters flown
  std::optional<double> min_clearance;  // over planned routes
  std::vector<std::string> answers;
  std::vector<planner::ExecutionLog> logs;
};

// The base-station tier: owns the mission state machine, planner, knowledge
// base and backends, and turns skill calls into onboard setpoints.
class Station : public planner::SkillExecutor {
 public:
  Station(std::shared_ptr<const sim::Scene> scene, config::Config cfg, Backends backends,
          kb::KnowledgeBase knowledge, OnboardPort& port, ClientSink& sink);

  // Thread-safe: queue a client message for the mission owner.
  void post(wire::WireMessage m);

  // grounded -> ascending -> standby_hover.
  void takeoff();
  // One instruction from standby_hover to standby_hover or mission_failed.
  MissionReport run_mission(const std::string& text);
  // mission_failed -> standby_hover.
  void acknowledge();
  // Idle loop for interactive use: forwards telemetry and runs commands as they
  // arrive, until `stop` is set.
  void serve(const std::atomic<bool>& stop);

  const mission::StateMachine& machine() const { return sm_; }
  const sim::UavState& uav() const { return uav_; }
  std::uint64_t tick() const { return tick_; }
  const kb::KnowledgeBase& knowledge() const { return kb_; }
  const std::string& current_tool() const { return current_tool_; }

  // Called after every received tick; tests use it to inject client messages.
  std::function<void(Station&)> on_tick;

  planner::StepResult run(const planner::SkillCall& call, std::uint64_t budget_ticks) override;

 private:
  bool pump();
  void handle_client(const wire::WireMessage& m);
  std::uint64_t send_setpoint(wire::Setpoint sp);
  void hold(sim::UavMode mode);
  // Pumps ticks until the watched setpoint is done and `arrived` holds, or it
  // fails, the budget runs out, or an abort arrives.
  planner::StepResult await(std::uint64_t budget, std::uint64_t start, const std::function<bool()>& arrived,
                            bool need_done = true);
  planner::StepResult fly_route(const Vec3& goal, sim::GridKind kind, std::uint64_t budget,
                                std::uint64_t start, bool allow_fallback);
  Vec3 return_goal() const;
  sim::ViewFrame frame() const;
  void publish(const wire::WireMessage& m) { sink_.publish(m); }
  void event(const std::string& level, const std::string& text) { publish(wire::Event{level, text, false}); }

  std::shared_ptr<const sim::Scene> scene_;
  config::Config cfg_;
  Backends backends_;
  kb::KnowledgeBase kb_;
  OnboardPort& port_;
  ClientSink& sink_;
  planner::ToolRegistry registry_;
  mission::StateMachine sm_;

  std::mutex inbox_mu_;
  std::deque<wire::WireMessage> inbox_;
  std::deque<std::string> pending_commands_;

  sim::UavState uav_;
  std::uint64_t tick_ = 0;
  std::optional<wire::FrameMeta> frame_;
  std::map<std::uint64_t, wire::SkillStatus> status_;
  std::uint64_t next_seq_ = 1;
  std::uint64_t watch_seq_ = 0;
  sim::UavMode flight_mode_ = sim::UavMode::kGrounded;

  bool in_mission_ = false;
  bool abort_requested_ = false;
  std::string current_tool_;
  std::string last_landmark_;
  MissionReport* report_ = nullptr;
  std::optional<Vec3> last_position_;
};

}  // namespace airstar::station
