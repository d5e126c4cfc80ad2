// Human framing, gesture steps and target tracking. Everything here runs on
// the onboard tick path and must stay non-blocking.
#include <algorithm>
#include <cmath>
#include <limits>

#include "airstar/error.hpp"
#include "airstar/skills.hpp"

namespace airstar::skills {

namespace {

// Body-frame heading of the optical axis projected onto the horizontal plane.
double camera_heading_offset(const CameraModel& camera) {
  const Vec3 f = camera.extrinsic.rotation.transpose() * Vec3::UnitZ();
  if (std::hypot(f.x(), f.y()) < 1e-9) return 0.0;
  return std::atan2(f.y(), f.x());
}

bool line_of_sight(const Scene& scene, const Vec3& from, const Vec3& to) {
  const Vec3 d = to - from;
  const double len = d.norm();
  if (len < 1e-9) return true;
  return !sim::raycast(scene, from, d / len, len).has_value();
}

Vec3 clamp_norm(const Vec3& v, double max_norm) {
  const double n = v.norm();
  return n > max_norm ? Vec3(v * (max_norm / n)) : v;
}

double clamp_yaw_rate(double r) { return std::clamp(r, -sim::kMaxYawRate, sim::kMaxYawRate); }

}  // namespace

FramingAdjustment frame_human(const World& world, const UavState& uav, const CameraModel& camera) {
  const Scene& sc = world.sc();
  const sim::Pedestrian* nearest = nullptr;
  Vec2 nearest_xy;
  double nearest_d = std::numeric_limits<double>::infinity();
  for (const auto& p : sc.pedestrians) {
    const Vec2 xy = sim::pedestrian_position(p, world.time);
    const double d = std::hypot(xy.x() - uav.position.x(), xy.y() - uav.position.y());
    if (d <= kDetectionRange && (d < nearest_d || (d == nearest_d && p.id < nearest->id))) {
      nearest = &p;
      nearest_xy = xy;
      nearest_d = d;
    }
  }
  if (nearest == nullptr) fail(ErrorCode::kNoHumanVisible, "no pedestrian within detection range");

  FramingAdjustment adj;
  adj.pedestrian_id = nearest->id;
  adj.distance = nearest_d;
  adj.position = uav.position;
  if (nearest_d < kFramingMin || nearest_d > kFramingMax) {
    const double keep = std::clamp(nearest_d, kFramingMin, kFramingMax);
    Vec2 away = nearest_d > 1e-9 ? Vec2((Vec2(uav.position.x(), uav.position.y()) - nearest_xy) / nearest_d)
                                 : Vec2(-std::cos(uav.yaw), -std::sin(uav.yaw));
    adj.position.head<2>() = nearest_xy + away * keep;
  }

  const Vec3 centroid(nearest_xy.x(), nearest_xy.y(), 0.5 * sim::kPedestrianHeight);
  double yaw = std::atan2(centroid.y() - adj.position.y(), centroid.x() - adj.position.x()) -
               camera_heading_offset(camera);
  // The camera may sit off the body axis; a few corrections converge quickly.
  for (int i = 0; i < 4; ++i) {
    const Vec3 pc = CameraPose::from(camera, adj.position, yaw).to_camera(centroid);
    yaw -= std::atan2(pc.x(), pc.z());
  }
  adj.target_yaw = normalize_angle(yaw);
  adj.yaw_delta = normalize_angle(adj.target_yaw - uav.yaw);
  if (std::abs(adj.yaw_delta) < 1e-12) adj.yaw_delta = 0.0;
  return adj;
}

const char* to_string(Direction d) {
  switch (d) {
    case Direction::kUp: return "up";
    case Direction::kDown: return "down";
    case Direction::kLeft: return "left";
    case Direction::kRight: return "right";
    case Direction::kForward: return "forward";
    case Direction::kBackward: return "backward";
  }
  return "?";
}

std::optional<Direction> direction_from_string(std::string_view s) {
  for (Direction d : {Direction::kUp, Direction::kDown, Direction::kLeft, Direction::kRight,
                      Direction::kForward, Direction::kBackward}) {
    if (s == to_string(d)) return d;
  }
  return std::nullopt;
}

GestureDelta gesture_offset(const Scene& scene, const UavState& uav, Direction dir, double step) {
  if (!(step > 0.0 && step <= kMaxGestureStep)) {
    fail(ErrorCode::kInvalidArgument, "gesture step must lie in (0, 2] m");
  }
  const double h = camera_heading_offset(scene.camera);
  const Vec3 fwd(std::cos(h), std::sin(h), 0.0);
  const Vec3 left(-fwd.y(), fwd.x(), 0.0);
  Vec3 unit;
  switch (dir) {
    case Direction::kUp: unit = Vec3::UnitZ(); break;
    case Direction::kDown: unit = -Vec3::UnitZ(); break;
    case Direction::kForward: unit = fwd; break;
    case Direction::kBackward: unit = -fwd; break;
    case Direction::kLeft: unit = left; break;
    case Direction::kRight: unit = -left; break;
  }
  const Vec3 world_unit = yaw_rotation(uav.yaw) * unit;
  double allowed = step;
  if (auto hit = sim::raycast(scene, uav.position, world_unit, step + kGestureClearance)) {
    allowed = std::clamp(*hit - kGestureClearance, 0.0, step);
  }
  return {unit * allowed, world_unit * allowed};
}

TrackState track_init(const ViewFrame& frame, const std::string& instruction, double standoff) {
  if (!(standoff > 0.0)) fail(ErrorCode::kInvalidArgument, "standoff must be > 0");
  objnav::MockGrounding grounding;
  const PixelTarget t = objnav::ground_target(instruction, frame, grounding);
  const sim::VisibleObject* o = frame.find(t.object_id);
  TrackState st;
  st.target_id = o->object_id;
  st.last_bbox = o->bbox;
  st.standoff = standoff;
  return st;
}

TrackState track_init(const ViewFrame& frame, const PixelTarget& click, double standoff) {
  if (!(standoff > 0.0)) fail(ErrorCode::kInvalidArgument, "standoff must be > 0");
  if (frame.width <= 0 || frame.height <= 0) fail(ErrorCode::kInvalidArgument, "empty frame");
  const sim::VisibleObject* best = nullptr;
  for (const auto& o : frame.objects) {
    if (!o.bbox.contains(click.u, click.v)) continue;
    if (best == nullptr || o.bbox.area() < best->bbox.area() ||
        (o.bbox.area() == best->bbox.area() && o.object_id < best->object_id)) {
      best = &o;
    }
  }
  if (best == nullptr) fail(ErrorCode::kNoTarget, "click does not hit any object");
  TrackState st;
  st.target_id = best->object_id;
  st.last_bbox = best->bbox;
  st.standoff = standoff;
  return st;
}

std::optional<Vec3> reposition_candidate(const Scene& scene, const Vec3& target, const Vec3& uav,
                                         double standoff) {
  const double bearing = std::atan2(uav.y() - target.y(), uav.x() - target.x());
  for (int k = 1; k <= 8; ++k) {
    const double a = bearing + k * kPi / 4.0;
    const Vec3 p(target.x() + standoff * std::cos(a), target.y() + standoff * std::sin(a), uav.z());
    if (line_of_sight(scene, p, target)) return p;
  }
  return std::nullopt;
}

TrackCommand track_step(TrackState& state, const ViewFrame& frame, const UavState& uav,
                        const World& world, const TrackGains& gains) {
  if (state.target_id.empty()) fail(ErrorCode::kInvalidArgument, "track state not initialized");
  const CameraModel& cam = world.sc().camera;
  TrackCommand cmd;

  if (const sim::VisibleObject* o = frame.find(state.target_id)) {
    state.lost_frames = 0;
    state.reposition_goal.reset();
    state.last_bbox = o->bbox;
    PixelTarget px;
    px.u = o->bbox.u_center();
    px.v = o->bbox.v_center();
    state.last_position = objnav::pixel_to_world(px, o->centroid_depth, cam, frame.pose_at_capture);
    cmd.yaw_rate = clamp_yaw_rate(-gains.k_yaw * (px.u - cam.cx) / cam.fx);
    Vec3 los(state.last_position->x() - uav.position.x(), state.last_position->y() - uav.position.y(), 0.0);
    const double range = los.norm();
    if (range > 1e-9) {
      cmd.velocity = clamp_norm(los / range * (gains.k_pos * (range - state.standoff)), gains.v_max);
    }
    return cmd;
  }

  ++state.lost_frames;
  if (state.lost_frames > gains.lost_threshold) {
    fail(ErrorCode::kTargetLost, "target " + state.target_id + " lost for " +
                                     std::to_string(state.lost_frames) + " ticks");
  }
  if (!state.last_position) return cmd;
  const Vec3& target = *state.last_position;
  if (!state.reposition_goal && !line_of_sight(world.sc(), uav.position, target)) {
    state.reposition_goal = reposition_candidate(world.sc(), target, uav.position, state.standoff);
  }
  if (state.reposition_goal) {
    Vec3 to_goal = *state.reposition_goal - uav.position;
    to_goal.z() = 0.0;
    cmd.velocity = clamp_norm(to_goal * gains.k_pos, gains.v_max);
  }
  const double bearing = std::atan2(target.y() - uav.position.y(), target.x() - uav.position.x());
  cmd.yaw_rate = clamp_yaw_rate(gains.k_yaw * normalize_angle(bearing - uav.yaw));
  return cmd;
}

}  // namespace airstar::skills
