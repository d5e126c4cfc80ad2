#include "airstar/onboard.hpp"

#include <algorithm>
#include <cmath>

#include "airstar/error.hpp"

namespace airstar::onboard {

using wire::SetpointMode;
using wire::SkillState;

Onboard::Onboard(sim::World world, OnboardConfig config)
    : world_(std::move(world)), cfg_(config), hold_position_(world_.uav.position) {
  active_.mode = SetpointMode::kHold;
}

void Onboard::enter_hold() {
  active_.mode = SetpointMode::kHold;
  hold_position_ = world_.uav.position;
  goal_.reset();
  goal_yaw_.reset();
}

void Onboard::finish(SkillState state, std::vector<wire::WireMessage>& out,
                     std::optional<planner::FailureCause> cause, std::string detail) {
  if (finished_) return;
  finished_ = true;
  wire::SkillStatus s;
  s.seq = active_.seq;
  s.mode = active_.mode;
  s.state = state;
  s.cause = cause;
  s.detail = std::move(detail);
  out.push_back(std::move(s));
}

void Onboard::accept(const wire::Setpoint& sp, std::vector<wire::WireMessage>& out) {
  active_ = sp;
  finished_ = false;
  started_tick_ = world_.tick;
  goal_.reset();
  goal_yaw_.reset();
  if (sp.uav_mode) world_.uav.mode = *sp.uav_mode;
  const sim::UavState& uav = world_.uav;
  const CameraModel& cam = world_.sc().camera;

  auto reject = [&](planner::FailureCause cause, const std::string& why) {
    finish(SkillState::kFailed, out, cause, why);
    const std::uint64_t seq = active_.seq;
    enter_hold();
    active_.seq = seq;
  };

  try {
    switch (sp.mode) {
      case SetpointMode::kHold:
        hold_position_ = sp.position.value_or(uav.position);
        finish(SkillState::kDone, out);
        return;
      case SetpointMode::kTakeoff:
        if (!sp.uav_mode) world_.uav.mode = sim::UavMode::kAscending;
        goal_ = Vec3(uav.position.x(), uav.position.y(), sp.z.value_or(world_.sc().z_cruise));
        break;
      case SetpointMode::kGoto:
        if (!sp.position) return reject(planner::FailureCause::kBlocked, "goto without a position");
        goal_ = *sp.position;
        goal_yaw_ = sp.yaw;
        break;
      case SetpointMode::kYaw:
        if (!sp.yaw) return reject(planner::FailureCause::kBlocked, "yaw setpoint without a yaw");
        goal_ = uav.position;
        goal_yaw_ = sp.yaw;
        break;
      case SetpointMode::kTrajectory:
        if (sp.points.empty()) return reject(planner::FailureCause::kBlocked, "empty trajectory");
        break;
      case SetpointMode::kTrack: {
        const double standoff = sp.standoff.value_or(objnav::kDefaultStandoff);
        if (sp.click) {
          const sim::ViewFrame frame = sim::annotate_view(world_, uav, cam);
          objnav::PixelTarget click;
          click.u = (*sp.click)[0];
          click.v = (*sp.click)[1];
          click.source = objnav::TargetSource::kUserClick;
          track_ = skills::track_init(frame, click, standoff);
        } else if (!sp.target_id.empty()) {
          track_ = skills::TrackState{};
          track_.target_id = sp.target_id;
          track_.standoff = standoff;
        } else {
          return reject(planner::FailureCause::kNoTarget, "track setpoint names no target");
        }
        hold_position_ = uav.position;
        break;
      }
      case SetpointMode::kGesture: {
        const auto dir = skills::direction_from_string(sp.dir);
        if (!dir) return reject(planner::FailureCause::kBlocked, "unknown gesture direction '" + sp.dir + "'");
        const auto delta = skills::gesture_offset(world_.sc(), uav, *dir, sp.step.value_or(cfg_.gesture_step));
        goal_ = uav.position + delta.world;
        break;
      }
      case SetpointMode::kFrameHuman: {
        const skills::FramingAdjustment adj = skills::frame_human(world_, uav, cam);
        goal_ = Vec3(adj.position.x(), adj.position.y(), uav.position.z());
        goal_yaw_ = adj.target_yaw;
        break;
      }
    }
  } catch (const Error& e) {
    return reject(planner::cause_from_error(e.code()), e.what());
  }
  wire::SkillStatus s;
  s.seq = sp.seq;
  s.mode = sp.mode;
  s.state = SkillState::kActive;
  out.push_back(std::move(s));
}

sim::Control Onboard::goto_control(const Vec3& target, std::optional<double> yaw) const {
  const sim::UavState& uav = world_.uav;
  const sim::Limits& lim = world_.sc().limits;
  const Vec3 e = target - uav.position;
  const double d = e.norm();
  Vec3 v = Vec3::Zero();
  if (d > 1e-9) {
    double speed = std::min(lim.v_max, cfg_.k_goto * d);
    if (std::isfinite(lim.a_max)) speed = std::min(speed, std::sqrt(2.0 * lim.a_max * d));
    v = e / d * speed;
  }
  double rate = 0.0;
  if (yaw) rate = std::clamp(cfg_.k_yaw * normalize_angle(*yaw - uav.yaw), -sim::kMaxYawRate, sim::kMaxYawRate);
  return sim::Control::velocity(v, rate);
}

Vec3 Onboard::avoid(const Vec3& velocity) const {
  const double speed = velocity.norm();
  if (speed < 1e-9) return velocity;
  const Vec3 dir = velocity / speed;
  const double a = world_.sc().limits.a_max;
  const double brake = std::isfinite(a) ? speed * speed / (2.0 * a) : 0.0;
  const double look = brake + cfg_.avoid_margin + speed * sim::kTickSeconds;
  const auto hit = sim::raycast(world_.sc(), world_.uav.position, dir, look);
  if (!hit) return velocity;
  const double free = *hit - cfg_.avoid_margin;
  if (free <= 0.0) return Vec3::Zero();
  double allowed = free / sim::kTickSeconds;
  if (std::isfinite(a)) allowed = std::min(allowed, std::sqrt(2.0 * a * free));
  return dir * std::min(speed, allowed);
}

sim::Control Onboard::control(std::vector<wire::WireMessage>& out) {
  const sim::UavState& uav = world_.uav;
  switch (active_.mode) {
    case SetpointMode::kHold:
      return goto_control(hold_position_, std::nullopt);

    case SetpointMode::kTakeoff:
    case SetpointMode::kGoto:
    case SetpointMode::kYaw:
    case SetpointMode::kGesture:
    case SetpointMode::kFrameHuman: {
      const sim::Control c = goto_control(*goal_, goal_yaw_);
      const bool there = (uav.position - *goal_).norm() < cfg_.goto_tolerance;
      const bool facing = !goal_yaw_ || std::abs(normalize_angle(*goal_yaw_ - uav.yaw)) < cfg_.yaw_tolerance;
      if (there && facing) {
        if (active_.mode == SetpointMode::kTakeoff && !active_.uav_mode) {
          world_.uav.mode = sim::UavMode::kStandbyHover;
        }
        finish(SkillState::kDone, out);
      }
      return c;
    }

    case SetpointMode::kTrajectory: {
      const auto& pts = active_.points;
      const std::size_t k = static_cast<std::size_t>(world_.tick - started_tick_);
      const std::size_t idx = std::min(k, pts.size() - 1);
      const Vec3 ff = idx + 1 < pts.size() ? Vec3((pts[idx + 1] - pts[idx]) / sim::kTickSeconds) : Vec3::Zero();
      Vec3 v = ff + cfg_.k_goto * (pts[idx] - uav.position);
      const double vmax = world_.sc().limits.v_max;
      if (v.norm() > vmax) v *= vmax / v.norm();
      double rate = 0.0;
      if (ff.head<2>().norm() > 0.2) {
        const double want = std::atan2(ff.y(), ff.x());
        rate = std::clamp(cfg_.k_yaw * normalize_angle(want - uav.yaw), -sim::kMaxYawRate, sim::kMaxYawRate);
      }
      if (idx == pts.size() - 1 && (uav.position - pts.back()).norm() < cfg_.goto_tolerance) {
        finish(SkillState::kDone, out);
      }
      return sim::Control::velocity(v, rate);
    }

    case SetpointMode::kTrack: {
      const sim::ViewFrame frame = sim::annotate_view(world_, uav, world_.sc().camera);
      try {
        const skills::TrackCommand cmd = skills::track_step(track_, frame, uav, world_, cfg_.track);
        Vec3 v = cmd.velocity;
        v.z() = cfg_.k_goto * (hold_position_.z() - uav.position.z());
        return sim::Control::velocity(v, cmd.yaw_rate);
      } catch (const Error& e) {
        finish(SkillState::kFailed, out, planner::cause_from_error(e.code()), e.what());
        const std::uint64_t seq = active_.seq;
        enter_hold();
        active_.seq = seq;
        return goto_control(hold_position_, std::nullopt);
      }
    }
  }
  return sim::Control::velocity(Vec3::Zero());
}

std::vector<wire::WireMessage> Onboard::tick(std::span<const wire::WireMessage> inbox, bool link_up) {
  std::vector<wire::WireMessage> out;
  sim::Control c;
  if (!link_up) {
    if (!link_lost_) {
      link_lost_ = true;
      finish(SkillState::kFailed, out, planner::FailureCause::kBlocked, "link lost");
      const std::uint64_t seq = active_.seq;
      enter_hold();
      active_.seq = seq;
    }
    c = sim::Control::velocity(Vec3::Zero());
  } else {
    // Resume holding where braking ended, not where the link dropped.
    if (link_lost_ && active_.mode == SetpointMode::kHold) hold_position_ = world_.uav.position;
    link_lost_ = false;
    const wire::Setpoint* latest = nullptr;
    for (const auto& m : inbox) {
      if (const auto* sp = std::get_if<wire::Setpoint>(&m)) latest = sp;
    }
    if (latest != nullptr) accept(*latest, out);
    c = control(out);
    c.value = avoid(c.value);
  }
  last_control_ = c;
  sim::step(world_, c);

  const CameraModel& cam = world_.sc().camera;
  const sim::ViewFrame frame = sim::annotate_view(world_, world_.uav, cam);
  wire::FrameMeta meta;
  meta.tick = world_.tick;
  meta.objects = frame.objects;
  meta.camera = cam;
  meta.pose_at_capture = wire::pose_of(frame.pose_at_capture);
  out.push_back(std::move(meta));
  wire::Telemetry t;
  t.tick = world_.tick;
  t.pose = wire::pose_of(world_.uav);
  t.mode = world_.uav.mode;
  out.push_back(std::move(t));
  return out;
}

OnboardRunner::OnboardRunner(Onboard& onboard, Inbox& inbox, Outbox outbox, std::function<bool()> link_up)
    : onboard_(onboard), inbox_(inbox), outbox_(std::move(outbox)), link_up_(std::move(link_up)) {}

OnboardRunner::~OnboardRunner() { stop(); }

void OnboardRunner::start() {
  if (running_.exchange(true)) return;
  thread_ = std::thread([this] { loop(); });
}

void OnboardRunner::stop() {
  running_ = false;
  if (thread_.joinable()) thread_.join();
}

std::vector<link::Clock::time_point> OnboardRunner::tick_times() const {
  std::lock_guard lock(mu_);
  return ticks_;
}

void OnboardRunner::loop() {
  const auto period = std::chrono::duration_cast<link::Clock::duration>(
      std::chrono::duration<double>(sim::kTickSeconds));
  auto next = link::Clock::now();
  while (running_) {
    {
      std::lock_guard lock(mu_);
      ticks_.push_back(link::Clock::now());
    }
    const auto inbox = inbox_.drain();
    for (const auto& m : onboard_.tick(inbox, link_up_())) outbox_(m);
    next += period;
    std::this_thread::sleep_until(next);
  }
}

}  // namespace airstar::onboard
