#include "airstar/station.hpp"

#include <cmath>

#include "airstar/error.hpp"
#include "airstar/geo_nav.hpp"

namespace airstar::station {

using nlohmann::json;
using planner::FailureCause;
using planner::StepResult;
using wire::SetpointMode;

std::optional<std::vector<wire::WireMessage>> LockstepPort::next_tick() {
  std::vector<wire::WireMessage> inbox;
  inbox.swap(pending_);
  return onboard_.tick(inbox, link_up_);
}

std::optional<std::vector<wire::WireMessage>> ChannelPort::next_tick() {
  std::vector<wire::WireMessage> batch;
  while (true) {
    auto m = from_.pop(timeout_);
    if (!m) return std::nullopt;
    const bool last = std::holds_alternative<wire::Telemetry>(*m);
    batch.push_back(std::move(*m));
    if (last) return batch;
  }
}

Recorder::Recorder(const std::string& path, ClientSink* next) : out_(path), next_(next) {
  if (!out_) fail(ErrorCode::kIoError, "cannot write record file " + path);
}

void Recorder::publish(const wire::WireMessage& m) {
  out_ << wire::encode(m) << '\n';
  out_.flush();
  if (next_ != nullptr) next_->publish(m);
}

Backends make_backends(const config::Config& cfg, const sim::Scene& scene) {
  Backends b;
  const auto& urls = cfg.backends;
  if (urls.planner_url.empty()) {
    b.planner = std::make_unique<planner::MockPlanner>(scene.landmarks, scene.reference);
  } else {
    b.planner = std::make_unique<planner::RemotePlanner>(urls.planner_url, config::prompt_template(cfg), urls.timeout_s);
  }
  if (urls.grounding_url.empty()) {
    b.grounding = std::make_unique<objnav::MockGrounding>();
  } else {
    b.grounding = std::make_unique<objnav::RemoteGrounding>(urls.grounding_url, urls.timeout_s);
  }
  if (urls.scorer_url.empty()) {
    b.scorer = std::make_unique<skills::MockScorer>();
  } else {
    b.scorer = std::make_unique<skills::RemoteScorer>(urls.scorer_url, urls.timeout_s);
  }
  if (urls.qa_url.empty()) {
    b.qa = std::make_unique<skills::MockQa>();
  } else {
    b.qa = std::make_unique<skills::RemoteQa>(urls.qa_url, urls.timeout_s);
  }
  return b;
}

Station::Station(std::shared_ptr<const sim::Scene> scene, config::Config cfg, Backends backends,
                 kb::KnowledgeBase knowledge, OnboardPort& port, ClientSink& sink)
    : scene_(std::move(scene)),
      cfg_(std::move(cfg)),
      backends_(std::move(backends)),
      kb_(std::move(knowledge)),
      port_(port),
      sink_(sink),
      registry_(planner::ToolRegistry::standard()) {
  uav_ = scene_->uav_start;
  std::vector<kb::KnowledgeEntry> fresh;
  for (auto& e : kb::scenario_entries(*scene_)) {
    const kb::KnowledgeEntry* have = kb_.find(e.id);
    if (have == nullptr || !(*have == e)) fresh.push_back(std::move(e));
  }
  if (!fresh.empty()) kb_.ingest(fresh);
}

void Station::post(wire::WireMessage m) {
  std::lock_guard lock(inbox_mu_);
  inbox_.push_back(std::move(m));
}

std::uint64_t Station::send_setpoint(wire::Setpoint sp) {
  sp.seq = next_seq_++;
  if (!sp.uav_mode) sp.uav_mode = flight_mode_;
  port_.send(sp);
  return sp.seq;
}

void Station::hold(sim::UavMode mode) {
  flight_mode_ = mode;
  wire::Setpoint sp;
  sp.mode = SetpointMode::kHold;
  sp.position = uav_.position;
  send_setpoint(sp);
}

bool Station::pump() {
  auto batch = port_.next_tick();
  if (!batch) return false;
  for (auto& m : *batch) {
    if (auto* t = std::get_if<wire::Telemetry>(&m)) {
      tick_ = t->tick;
      uav_.position = t->pose.position;
      uav_.velocity = t->pose.velocity;
      uav_.yaw = t->pose.yaw;
      uav_.mode = t->mode;
      if (report_ != nullptr && last_position_) report_->path_length += (uav_.position - *last_position_).norm();
      last_position_ = uav_.position;
      t->mission_state = sm_.state();
      publish(*t);
    } else if (auto* f = std::get_if<wire::FrameMeta>(&m)) {
      frame_ = *f;
      publish(*f);
    } else if (auto* s = std::get_if<wire::SkillStatus>(&m)) {
      status_[s->seq] = *s;
    }
  }
  if (on_tick) on_tick(*this);
  std::deque<wire::WireMessage> inbox;
  {
    std::lock_guard lock(inbox_mu_);
    inbox.swap(inbox_);
  }
  for (const auto& m : inbox) handle_client(m);
  return true;
}

void Station::handle_client(const wire::WireMessage& m) {
  if (const auto* c = std::get_if<wire::Command>(&m)) {
    // Queued commands are echoed when their mission starts.
    if (!in_mission_ && sm_.phase() == mission::Phase::kStandbyHover) {
      pending_commands_.push_back(c->text);
      return;
    }
    publish(*c);
    if (sm_.phase() == mission::Phase::kMissionFailed) {
      event("warn", "mission failed: send abort to acknowledge before a new command");
    } else {
      event("warn", "busy: one mission at a time, send abort first");
    }
  } else if (std::holds_alternative<wire::Abort>(m)) {
    publish(m);
    if (in_mission_ && sm_.phase() == mission::Phase::kExecuting) {
      abort_requested_ = true;
      event("info", "abort requested");
    } else if (sm_.phase() == mission::Phase::kMissionFailed) {
      acknowledge();
    } else {
      event("warn", std::string("nothing to abort in ") + mission::to_string(sm_.phase()));
    }
  } else if (const auto* k = std::get_if<wire::Click>(&m)) {
    publish(*k);
    if (current_tool_ == "track") {
      wire::Setpoint sp;
      sp.mode = SetpointMode::kTrack;
      sp.click = std::array<double, 2>{k->u, k->v};
      sp.standoff = cfg_.track_standoff;
      watch_seq_ = send_setpoint(sp);
      event("info", "tracking re-initialized from click");
    } else {
      event("warn", "click ignored: no track step is running");
    }
  } else if (const auto* g = std::get_if<wire::Gesture>(&m)) {
    publish(*g);
    if (current_tool_ == "gesture_session") {
      wire::Setpoint sp;
      sp.mode = SetpointMode::kGesture;
      sp.dir = g->dir;
      sp.step = cfg_.onboard.gesture_step;
      send_setpoint(sp);
    } else {
      event("warn", "gesture ignored: no gesture session is running");
    }
  } else {
    event("error", std::string("unexpected message type '") + wire::type_name(m) + "' from a client");
  }
}

StepResult Station::await(std::uint64_t budget, std::uint64_t start, const std::function<bool()>& arrived,
                          bool need_done) {
  StepResult r;
  while (true) {
    if (abort_requested_) {
      r.cause = FailureCause::kBlocked;
      r.detail = "aborted by operator";
      return r;
    }
    const auto it = status_.find(watch_seq_);
    if (it != status_.end() && it->second.state == wire::SkillState::kFailed) {
      r.cause = it->second.cause.value_or(FailureCause::kBlocked);
      r.detail = it->second.detail;
      return r;
    }
    const bool done = !need_done || (it != status_.end() && it->second.state == wire::SkillState::kDone);
    if (done && arrived()) {
      r.succeeded = true;
      return r;
    }
    if (tick_ - start >= budget) {
      r.cause = FailureCause::kTimeout;
      r.detail = "budget of " + std::to_string(budget) + " ticks used up";
      return r;
    }
    if (!pump()) {
      r.cause = FailureCause::kBlocked;
      r.detail = "onboard link silent";
      return r;
    }
  }
}

sim::ViewFrame Station::frame() const {
  sim::ViewFrame f;
  f.width = scene_->camera.width;
  f.height = scene_->camera.height;
  if (frame_) {
    f.objects = frame_->objects;
    f.pose_at_capture.position = frame_->pose_at_capture.position;
    f.pose_at_capture.velocity = frame_->pose_at_capture.velocity;
    f.pose_at_capture.yaw = frame_->pose_at_capture.yaw;
  } else {
    f.pose_at_capture = uav_;
  }
  f.pose_at_capture.mode = uav_.mode;
  return f;
}

Vec3 Station::return_goal() const {
  const Vec2 user = sim::pedestrian_position(scene_->user(), static_cast<double>(tick_) * sim::kTickSeconds);
  Vec2 away(uav_.position.x() - user.x(), uav_.position.y() - user.y());
  away = away.norm() > 1e-6 ? Vec2(away.normalized()) : Vec2(1.0, 0.0);
  const Vec2 g = user + cfg_.return_offset * away;
  return Vec3(g.x(), g.y(), scene_->z_cruise);
}

StepResult Station::fly_route(const Vec3& goal, sim::GridKind kind, std::uint64_t budget, std::uint64_t start,
                              bool allow_fallback) {
  const geo::MissionKind mk =
      kind == sim::GridKind::kPedestrianGuidance ? geo::MissionKind::kPedestrianGuide : geo::MissionKind::kUavAutonomous;
  const sim::OccupancyGrid& grid = geo::select_map(*scene_, mk);
  geo::TrajectoryLimits limits;
  limits.v_max = scene_->limits.v_max;
  limits.a_max = scene_->limits.a_max;
  limits.c_min = geo::default_clearance(kind);
  geo::Route route;
  try {
    route = geo::plan_route(grid, uav_.position, goal, limits, scene_->z_cruise);
  } catch (const Error& e) {
    if (allow_fallback && kind == sim::GridKind::kPedestrianGuidance &&
        planner::cause_from_error(e.code()) == FailureCause::kNoPath) {
      return fly_route(goal, sim::GridKind::kUavExploration, budget, start, false);
    }
    throw;
  }
  const geo::TrajectoryStats stats = geo::sample_stats(route.trajectory, geo::DistanceField(grid));
  if (report_ != nullptr) {
    report_->min_clearance = std::min(report_->min_clearance.value_or(stats.min_clearance), stats.min_clearance);
  }

  wire::Setpoint sp;
  sp.mode = SetpointMode::kTrajectory;
  const double total = route.trajectory.total_time();
  const auto n = static_cast<std::size_t>(std::ceil(total / sim::kTickSeconds - 1e-9));
  for (std::size_t k = 0; k <= n; ++k) {
    sp.points.push_back(route.trajectory.position(std::min(total, static_cast<double>(k) * sim::kTickSeconds)));
  }
  watch_seq_ = send_setpoint(sp);
  const Vec3 end = route.goal;
  return await(budget, start, [&] { return (uav_.position - end).norm() <= planner::kGeoArrivalTolerance; });
}

StepResult Station::run(const planner::SkillCall& call, std::uint64_t budget) {
  const std::uint64_t start = tick_;
  current_tool_ = call.tool;
  watch_seq_ = 0;
  const json& p = call.params;
  const sim::Scene& sc = *scene_;
  StepResult res;
  try {
    if (call.tool == "geo_navigate") {
      const sim::LandmarkNode& lm = geo::lookup_landmark(sc.landmarks, p.at("landmark").get<std::string>());
      last_landmark_ = lm.name;
      Vec3 goal = geo::gps_to_local(sc.reference, lm.gps);
      goal.z() = sc.z_cruise;
      const bool ped = p.value("map", std::string()) == "pedestrian_guide";
      res = fly_route(goal, ped ? sim::GridKind::kPedestrianGuidance : sim::GridKind::kUavExploration, budget, start,
                      false);
    } else if (call.tool == "announce_arrival") {
      const std::string text =
          last_landmark_.empty() ? "We have arrived." : "We have arrived at " + last_landmark_ + ".";
      publish(wire::Answer{text});
      if (report_ != nullptr) report_->answers.push_back(text);
      res.succeeded = pump();
      if (!res.succeeded) res.cause = FailureCause::kBlocked;
    } else if (call.tool == "return_to_user") {
      res = fly_route(return_goal(), sim::GridKind::kPedestrianGuidance, budget, start, true);
    } else if (call.tool == "object_navigate") {
      const double standoff = p.value("standoff", cfg_.object_standoff);
      const objnav::ObjectGoal g = objnav::object_nav_goal(p.at("instruction").get<std::string>(), frame(),
                                                           sc.camera, uav_, *backends_.grounding, standoff,
                                                           cfg_.object_min_altitude);
      wire::Setpoint sp;
      sp.mode = SetpointMode::kGoto;
      sp.position = g.goal;
      const Vec3 look = g.target - g.goal;
      if (look.head<2>().norm() > 0.1) sp.yaw = std::atan2(look.y(), look.x());
      watch_seq_ = send_setpoint(sp);
      const Vec3 goal = g.goal;
      res = await(budget, start, [&] { return (uav_.position - goal).norm() <= planner::kObjectArrivalTolerance; });
    } else if (call.tool == "track") {
      const objnav::PixelTarget t = objnav::ground_target(p.at("query").get<std::string>(), frame(), *backends_.grounding);
      const double seconds = p.value("duration", cfg_.budgets.track_default_seconds);
      const auto ticks = static_cast<std::uint64_t>(std::ceil(seconds / sim::kTickSeconds));
      wire::Setpoint sp;
      sp.mode = SetpointMode::kTrack;
      sp.target_id = t.object_id;
      sp.standoff = cfg_.track_standoff;
      watch_seq_ = send_setpoint(sp);
      res = await(budget, start, [&] { return tick_ - start >= ticks; }, false);
      if (res.succeeded) hold(flight_mode_);
    } else if (call.tool == "search_qa") {
      const std::string question = p.at("question").get<std::string>();
      const sim::LandmarkNode* lm = nullptr;
      if (p.contains("landmark")) {
        lm = &geo::lookup_landmark(sc.landmarks, p["landmark"].get<std::string>());
      } else if (!last_landmark_.empty()) {
        lm = geo::find_landmark(sc.landmarks, last_landmark_);
      }
      if (lm == nullptr) lm = geo::find_landmark(sc.landmarks, question);
      double center = uav_.yaw;
      std::string nouns_text = question;
      if (lm != nullptr) {
        nouns_text += " " + lm->name;
        // Aim at the landmark point, or at the object carrying its tag when
        // the UAV already stands on that point.
        const Vec3 at = geo::gps_to_local(sc.reference, lm->gps);
        if (horizontal_distance(at, uav_.position) >= kLandmarkAimRadius) {
          center = skills::candidate_yaw(*lm, uav_, sc.reference);
        } else {
          double best = std::numeric_limits<double>::infinity();
          for (const auto& o : sc.objects) {
            for (const auto& tag : o.landmark_tags) {
              if (geo::find_landmark(sc.landmarks, tag) != lm) continue;
              const double d = horizontal_distance(o.center, uav_.position);
              if (d < best && d > 0.1) {
                best = d;
                center = std::atan2(o.center.y() - uav_.position.y(), o.center.x() - uav_.position.x());
              }
            }
          }
        }
      }
      sim::World snapshot = sim::make_world(scene_);
      snapshot.time = static_cast<double>(tick_) * sim::kTickSeconds;
      snapshot.uav = uav_;
      const skills::ScanResult scan =
          skills::scan_views(snapshot, uav_, sc.camera, center, skills::extract_nouns(nouns_text), *backends_.scorer);
      wire::Setpoint sp;
      sp.mode = SetpointMode::kYaw;
      sp.yaw = scan.best.yaw;
      watch_seq_ = send_setpoint(sp);
      res = await(budget, start, [] { return true; });
      if (res.succeeded) {
        const std::string answer = skills::answer_question(frame(), question, sc, *backends_.qa);
        publish(wire::Answer{answer});
        if (report_ != nullptr) report_->answers.push_back(answer);
        res.detail = answer;
      }
    } else if (call.tool == "frame_human") {
      wire::Setpoint sp;
      sp.mode = SetpointMode::kFrameHuman;
      watch_seq_ = send_setpoint(sp);
      res = await(budget, start, [] { return true; });
    } else if (call.tool == "gesture_session") {
      const double seconds = p.value("duration", cfg_.budgets.gesture_session_default_seconds);
      const auto ticks = static_cast<std::uint64_t>(std::ceil(seconds / sim::kTickSeconds));
      res = await(budget, start, [&] { return tick_ - start >= ticks; }, false);
    } else if (call.tool == "gesture") {
      wire::Setpoint sp;
      sp.mode = SetpointMode::kGesture;
      sp.dir = p.at("dir").get<std::string>();
      sp.step = p.value("step", cfg_.onboard.gesture_step);
      watch_seq_ = send_setpoint(sp);
      res = await(budget, start, [] { return true; });
    } else {
      res.cause = FailureCause::kBlocked;
      res.detail = "no executor for tool " + call.tool;
    }
  } catch (const Error& e) {
    res = StepResult{};
    res.cause = planner::cause_from_error(e.code());
    res.detail = std::string(to_string(e.code())) + ": " + e.what();
  } catch (const nlohmann::json::exception& e) {
    res = StepResult{};
    res.cause = FailureCause::kBlocked;
    res.detail = std::string("bad parameters: ") + e.what();
  }
  if (!res.succeeded) hold(flight_mode_);
  res.started_tick = start;
  res.ended_tick = tick_;
  current_tool_.clear();
  return res;
}

void Station::takeoff() {
  // ascending here means an earlier takeoff stalled; send it again.
  if (sm_.phase() != mission::Phase::kGrounded && sm_.phase() != mission::Phase::kAscending) return;
  if (sm_.phase() == mission::Phase::kGrounded) sm_.fire(mission::Event::kTakeoff);
  flight_mode_ = sim::UavMode::kAscending;
  wire::Setpoint sp;
  sp.mode = SetpointMode::kTakeoff;
  sp.z = scene_->z_cruise;
  watch_seq_ = send_setpoint(sp);
  const StepResult r = await(kTakeoffBudget, tick_, [] { return true; });
  if (!r.succeeded) fail(ErrorCode::kInvalidArgument, "takeoff failed: " + r.detail);
  sm_.fire(mission::Event::kAscended);
  hold(sim::UavMode::kStandbyHover);
  pump();
  event("info", "standby hover");
}

void Station::acknowledge() {
  if (sm_.phase() != mission::Phase::kMissionFailed) return;
  sm_.fire(mission::Event::kAcknowledge);
  hold(sim::UavMode::kStandbyHover);
  pump();
  event("info", "mission failure acknowledged");
}

MissionReport Station::run_mission(const std::string& text) {
  if (sm_.phase() != mission::Phase::kStandbyHover) {
    fail(ErrorCode::kInvalidArgument,
         std::string("a mission starts from standby_hover, not ") + mission::to_string(sm_.phase()));
  }
  MissionReport rep;
  rep.instruction = text;
  report_ = &rep;
  in_mission_ = true;
  abort_requested_ = false;
  last_landmark_.clear();
  last_position_.reset();
  const std::uint64_t start = tick_;
  struct Reset {
    Station& s;
    ~Reset() {
      s.report_ = nullptr;
      s.in_mission_ = false;
      s.abort_requested_ = false;
      s.current_tool_.clear();
    }
  } reset{*this};

  publish(wire::Command{text});
  sm_.fire(mission::Event::kCommand);
  pump();  // telemetry keeps flowing while the planner works
  planner::PromptContext ctx;
  ctx.instruction = text;
  std::optional<planner::Plan> plan;
  json last_doc = json::object();

  auto next_plan = [&](const planner::ExecutionLog& log) -> std::optional<planner::Plan> {
    try {
      return planner::replan(ctx, log, *backends_.planner, registry_, scene_->landmarks, cfg_.max_attempts);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kMissionFailed) event("error", std::string("replanning failed: ") + e.what());
      return std::nullopt;
    }
  };

  try {
    ctx = planner::assemble_context(text, frame(), kb_, registry_, {});
    plan = planner::make_plan(ctx, *backends_.planner, registry_, scene_->landmarks);
  } catch (const Error& e) {
    planner::ExecutionLog log;
    log.attempt = 0;
    log.plan_error = std::string(to_string(e.code())) + ": " + e.what();
    event("warn", "planning failed: " + log.plan_error);
    sm_.fire(mission::Event::kPlanError);
    plan = next_plan(log);
  }

  while (plan) {
    sm_.fire_plan_ready(plan->plan_id);
    flight_mode_ = sim::UavMode::kExecuting;
    last_doc = plan->document();
    publish(wire::PlanMsg{last_doc});
    const std::string plan_id = plan->plan_id;
    const planner::ExecutionLog log = planner::execute_plan(
        *plan, *this, cfg_.budgets,
        [&](std::size_t i, const planner::SkillCall&, const planner::StepRecord* rec) {
          wire::StepUpdate u;
          u.plan_id = plan_id;
          u.index = static_cast<int>(i);
          if (rec == nullptr) {
            if (i > 0) sm_.fire_step(static_cast<int>(i));
            u.status = planner::StepStatus::kRunning;
          } else {
            u.status = rec->outcome;
            u.cause = rec->failure_cause;
          }
          publish(u);
        });
    rep.logs.push_back(log);
    if (!log.failed()) {
      sm_.fire(mission::Event::kPlanDone);
      break;
    }
    if (abort_requested_) {
      sm_.fire(mission::Event::kAbort);
      event("info", "mission aborted, returning");
      break;
    }
    sm_.fire(mission::Event::kStepFailed);
    plan = next_plan(log);
  }
  const double now = static_cast<double>(tick_) * sim::kTickSeconds;

  if (!plan) {
    rep.attempts = static_cast<int>(ctx.prior_logs.size());
    sm_.fire(mission::Event::kAttemptsExhausted);
    hold(sim::UavMode::kStandbyHover);
    pump();
    event("error", "mission failed after " + std::to_string(rep.attempts) + " attempts");
    kb_.record_outcome(text, last_doc, "failed", now);
    rep.final_phase = sm_.phase();
    rep.ticks = tick_ - start;
    return rep;
  }
  rep.attempts = ctx.attempt + 1;
  const bool aborted = abort_requested_;
  abort_requested_ = false;

  flight_mode_ = sim::UavMode::kReturning;
  const Vec3 home = return_goal();
  if ((uav_.position - home).norm() > planner::kGeoArrivalTolerance) {
    current_tool_ = "return";
    try {
      const StepResult r = fly_route(home, sim::GridKind::kPedestrianGuidance, cfg_.budgets.return_to_user, tick_, true);
      if (!r.succeeded) event("warn", "return flight ended early: " + r.detail);
    } catch (const Error& e) {
      event("warn", std::string("no return route: ") + e.what());
    }
    current_tool_.clear();
  } else {
    // Already near the user: one tick so clients still see the phase.
    hold(sim::UavMode::kReturning);
    pump();
  }
  sm_.fire(mission::Event::kArrived);
  hold(sim::UavMode::kStandbyHover);
  pump();
  kb_.record_outcome(text, last_doc, aborted ? "aborted" : "succeeded", now);
  rep.succeeded = !aborted;
  rep.final_phase = sm_.phase();
  rep.ticks = tick_ - start;
  return rep;
}

void Station::serve(const std::atomic<bool>& stop) {
  while (!stop) {
    try {
      const mission::Phase ph = sm_.phase();
      if (ph == mission::Phase::kGrounded || ph == mission::Phase::kAscending) {
        // Wait for the onboard tier to report in before lifting off.
        if (pump()) takeoff();
        continue;
      }
      if (!pending_commands_.empty() && sm_.phase() == mission::Phase::kStandbyHover) {
        const std::string text = pending_commands_.front();
        pending_commands_.pop_front();
        run_mission(text);
        continue;
      }
      pump();
    } catch (const Error& e) {
      event("error", e.what());
    }
  }
}

}  // namespace airstar::station
