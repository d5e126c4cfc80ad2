#include "airstar/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "airstar/error.hpp"

namespace airstar::sim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* to_string(GridKind kind) {
  switch (kind) {
    case GridKind::kUavExploration: return "uav_exploration";
    case GridKind::kPedestrianGuidance: return "pedestrian_guidance";
  }
  return "?";
}

std::optional<GridKind> grid_kind_from_string(std::string_view s) {
  if (s == "uav_exploration") return GridKind::kUavExploration;
  if (s == "pedestrian_guidance") return GridKind::kPedestrianGuidance;
  return std::nullopt;
}

const char* to_string(UavMode mode) {
  switch (mode) {
    case UavMode::kGrounded: return "grounded";
    case UavMode::kAscending: return "ascending";
    case UavMode::kStandbyHover: return "standby_hover";
    case UavMode::kExecuting: return "executing";
    case UavMode::kReturning: return "returning";
  }
  return "?";
}

std::optional<UavMode> uav_mode_from_string(std::string_view s) {
  for (auto m : {UavMode::kGrounded, UavMode::kAscending, UavMode::kStandbyHover,
                 UavMode::kExecuting, UavMode::kReturning}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

OccupancyGrid::OccupancyGrid(GridKind kind, Vec2 origin, double resolution, int width, int height)
    : kind_(kind),
      origin_(origin),
      resolution_(resolution),
      width_(width),
      height_(height),
      cells_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {
  if (!(resolution > 0.0)) fail(ErrorCode::kInvalidArgument, "grid resolution must be > 0");
}

Cell OccupancyGrid::cell_of(double x, double y) const {
  return {static_cast<int>(std::floor((y - origin_.y()) / resolution_)),
          static_cast<int>(std::floor((x - origin_.x()) / resolution_))};
}

Vec2 OccupancyGrid::center(Cell c) const {
  return {origin_.x() + (c.col + 0.5) * resolution_, origin_.y() + (c.row + 0.5) * resolution_};
}

const OccupancyGrid* Scene::grid(GridKind kind) const {
  for (const auto& g : grids) {
    if (g.kind() == kind) return &g;
  }
  return nullptr;
}

const Pedestrian& Scene::user() const {
  for (const auto& p : pedestrians) {
    if (p.is_user) return p;
  }
  fail(ErrorCode::kConsistencyError, "scenario has no user pedestrian");
}

const LandmarkNode* Scene::landmark(std::string_view id) const {
  for (const auto& n : landmarks) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

Vec2 pedestrian_position(const Pedestrian& p, double time) {
  if (p.path.size() < 2 || p.speed <= 0.0) return p.path.front();
  double loop = 0.0;
  for (std::size_t i = 0; i < p.path.size(); ++i) {
    loop += (p.path[(i + 1) % p.path.size()] - p.path[i]).norm();
  }
  if (loop <= 0.0) return p.path.front();
  double s = std::fmod(p.speed * time, loop);
  for (std::size_t i = 0; i < p.path.size(); ++i) {
    const Vec2& a = p.path[i];
    const Vec2& b = p.path[(i + 1) % p.path.size()];
    const double seg = (b - a).norm();
    if (s <= seg && seg > 0.0) return a + (b - a) * (s / seg);
    s -= seg;
  }
  return p.path.front();
}

World make_world(std::shared_ptr<const Scene> scene) {
  World w;
  w.uav = scene->uav_start;
  w.uav.mode = UavMode::kGrounded;
  w.rng.seed(scene->seed);
  w.scene = std::move(scene);
  return w;
}

void step(World& world, const Control& control, double dt) {
  if (!(dt > 0.0) || dt > 0.5) fail(ErrorCode::kInvalidArgument, "step dt must lie in (0, 0.5]");
  const Limits& lim = world.sc().limits;
  UavState& s = world.uav;

  Vec3 accel = control.kind == Control::Kind::kAcceleration
                   ? control.value
                   : Vec3((control.value - s.velocity) / dt);
  if (!accel.allFinite()) accel.setZero();
  const double a_norm = accel.norm();
  if (a_norm > lim.a_max) accel *= lim.a_max / a_norm;

  Vec3 v = s.velocity + accel * dt;
  const double v_norm = v.norm();
  if (v_norm > lim.v_max) v *= lim.v_max / v_norm;

  Vec3 p = s.position + v * dt;
  if (p.z() < 0.0) {
    p.z() = 0.0;
    if (v.z() < 0.0) v.z() = 0.0;
  }
  s.position = p;
  s.velocity = v;

  const double yaw_rate =
      std::isfinite(control.yaw_rate) ? std::clamp(control.yaw_rate, -kMaxYawRate, kMaxYawRate) : 0.0;
  s.yaw = normalize_angle(s.yaw + yaw_rate * dt);

  world.time += dt;
  world.tick += 1;
}

std::optional<std::pair<double, double>> ray_box(const Vec3& origin, const Vec3& dir,
                                                 const Vec3& center, const Vec3& size) {
  double t0 = 0.0;
  double t1 = kInf;
  for (int i = 0; i < 3; ++i) {
    const double lo = center[i] - 0.5 * size[i];
    const double hi = center[i] + 0.5 * size[i];
    if (dir[i] == 0.0) {
      if (origin[i] < lo || origin[i] > hi) return std::nullopt;
      continue;
    }
    double a = (lo - origin[i]) / dir[i];
    double b = (hi - origin[i]) / dir[i];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

std::optional<double> raycast(const Scene& scene, const Vec3& origin, const Vec3& dir,
                              double max_range) {
  if (!(max_range > 0.0)) fail(ErrorCode::kInvalidArgument, "raycast max_range must be > 0");
  if (std::abs(dir.norm() - 1.0) > 1e-9) {
    fail(ErrorCode::kInvalidArgument, "raycast direction must be a unit vector");
  }
  if (origin.z() < 0.0) return 0.0;

  double best = kInf;
  if (dir.z() < 0.0) best = -origin.z() / dir.z();

  const OccupancyGrid* grid = scene.obstacles();
  const double top = scene.obstacle_height;
  const double limit = std::min(best, max_range);

  if (grid != nullptr) {
    const double res = grid->resolution();
    const Vec2& org = grid->origin();

    // Column hit within [t_in, t_out] for an occupied cell: first t where z is in [0, top].
    auto column_hit = [&](double t_in, double t_out) -> std::optional<double> {
      const double z_in = origin.z() + dir.z() * t_in;
      if (z_in >= 0.0 && z_in <= top) return t_in;
      if (dir.z() == 0.0) return std::nullopt;
      if (z_in > top && dir.z() < 0.0) {
        const double t = (top - origin.z()) / dir.z();
        if (t <= t_out) return t;
      }
      return std::nullopt;
    };

    // Clip against the grid footprint.
    double t_enter = 0.0;
    double t_exit = limit;
    const double lo[2] = {org.x(), org.y()};
    const double hi[2] = {org.x() + res * grid->width(), org.y() + res * grid->height()};
    bool overlaps = true;
    for (int i = 0; i < 2 && overlaps; ++i) {
      if (dir[i] == 0.0) {
        overlaps = origin[i] >= lo[i] && origin[i] < hi[i];
        continue;
      }
      double a = (lo[i] - origin[i]) / dir[i];
      double b = (hi[i] - origin[i]) / dir[i];
      if (a > b) std::swap(a, b);
      t_enter = std::max(t_enter, a);
      t_exit = std::min(t_exit, b);
      overlaps = t_enter <= t_exit;
    }

    if (overlaps) {
      const Vec3 p = origin + dir * t_enter;
      Cell cell = grid->cell_of(p.x(), p.y());
      cell.col = std::clamp(cell.col, 0, grid->width() - 1);
      cell.row = std::clamp(cell.row, 0, grid->height() - 1);

      const int step_col = dir.x() > 0 ? 1 : (dir.x() < 0 ? -1 : 0);
      const int step_row = dir.y() > 0 ? 1 : (dir.y() < 0 ? -1 : 0);
      auto boundary_t = [&](int axis, int index, int stepv) {
        if (stepv == 0) return kInf;
        const double edge = (axis == 0 ? org.x() : org.y()) + res * (index + (stepv > 0 ? 1 : 0));
        return (edge - origin[axis]) / dir[axis];
      };
      double next_col = boundary_t(0, cell.col, step_col);
      double next_row = boundary_t(1, cell.row, step_row);
      const double d_col = step_col != 0 ? res / std::abs(dir.x()) : kInf;
      const double d_row = step_row != 0 ? res / std::abs(dir.y()) : kInf;

      double t_in = t_enter;
      const bool starts_inside = t_enter == 0.0;
      while (grid->in_bounds(cell) && t_in <= t_exit) {
        const double t_out = std::min({next_col, next_row, t_exit});
        if (grid->occupied(cell)) {
          if (starts_inside && t_in == 0.0) {
            const double z0 = origin.z();
            if (z0 >= 0.0 && z0 <= top) return 0.0;
          }
          if (auto t = column_hit(t_in, t_out); t && *t <= limit) {
            best = std::min(best, *t);
            break;
          }
        }
        if (next_col < next_row) {
          t_in = next_col;
          next_col += d_col;
          cell.col += step_col;
        } else if (next_row < next_col) {
          t_in = next_row;
          next_row += d_row;
          cell.row += step_row;
        } else {
          if (next_col == kInf) break;
          // Exact corner crossing: the diagonal neighbours are touched too.
          t_in = next_col;
          const Cell side_a{cell.row, cell.col + step_col};
          const Cell side_b{cell.row + step_row, cell.col};
          for (const Cell& side : {side_a, side_b}) {
            if (grid->in_bounds(side) && grid->occupied(side)) {
              if (auto t = column_hit(t_in, t_in); t && *t <= limit) best = std::min(best, *t);
            }
          }
          if (best <= t_in) break;
          next_col += d_col;
          next_row += d_row;
          cell.col += step_col;
          cell.row += step_row;
        }
      }
    }
  }

  if (best <= max_range) return best;
  return std::nullopt;
}

const VisibleObject* ViewFrame::find(std::string_view id) const {
  for (const auto& o : objects) {
    if (o.object_id == id) return &o;
  }
  return nullptr;
}

std::vector<SceneObject> objects_at(const Scene& scene, double time) {
  std::vector<SceneObject> out = scene.objects;
  for (const auto& p : scene.pedestrians) {
    const Vec2 xy = pedestrian_position(p, time);
    SceneObject o;
    o.id = p.id;
    o.class_tag = "person";
    if (p.is_user) o.landmark_tags = {"user"};
    o.center = Vec3(xy.x(), xy.y(), 0.5 * kPedestrianHeight);
    o.size = Vec3(kPedestrianWidth, kPedestrianWidth, kPedestrianHeight);
    out.push_back(std::move(o));
  }
  return out;
}

namespace {

// Nearest hit among object boxes along a ray, excluding `skip`.
double nearest_object_hit(const std::vector<SceneObject>& objects, const Vec3& origin,
                          const Vec3& dir, const SceneObject* skip) {
  double best = kInf;
  for (const auto& o : objects) {
    if (&o == skip) continue;
    if (auto hit = ray_box(origin, dir, o.center, o.size)) best = std::min(best, hit->first);
  }
  return best;
}

std::vector<VisibleObject> visible_from(const Scene& scene, const std::vector<SceneObject>& objects,
                                        const CameraPose& pose, const CameraModel& camera) {
  std::vector<VisibleObject> out;
  const Vec3 forward = pose.forward();
  for (const auto& o : objects) {
    const Vec3 p_cam = pose.to_camera(o.center);
    const auto px = project_camera(camera, p_cam);
    if (!px || !camera.in_image(px->u, px->v)) continue;

    const Vec3 to_center = o.center - pose.camera_center;
    const double dist = to_center.norm();
    if (dist <= 0.0) continue;
    const Vec3 dir = to_center / dist;
    const auto entry = ray_box(pose.camera_center, dir, o.center, o.size);
    if (!entry) continue;
    const double t_obj = entry->first;
    const double eps = 1e-9;

    if (t_obj > 0.0) {
      if (auto wall = raycast(scene, pose.camera_center, dir, t_obj); wall && *wall < t_obj - eps) {
        continue;
      }
      if (nearest_object_hit(objects, pose.camera_center, dir, &o) < t_obj - eps) continue;
    }
    const double depth = t_obj * dir.dot(forward);
    if (!(depth > 0.0)) continue;

    PixelBox box{kInf, kInf, -kInf, -kInf};
    for (int k = 0; k < 8; ++k) {
      const Vec3 corner = o.center + 0.5 * Vec3((k & 1) ? o.size.x() : -o.size.x(),
                                                (k & 2) ? o.size.y() : -o.size.y(),
                                                (k & 4) ? o.size.z() : -o.size.z());
      Vec3 c_cam = pose.to_camera(corner);
      // Corners behind the image plane are pulled onto a near plane so the box
      // still covers the visible part.
      c_cam.z() = std::max(c_cam.z(), 0.05);
      const auto cp = project_camera(camera, c_cam);
      box.u_min = std::min(box.u_min, cp->u);
      box.u_max = std::max(box.u_max, cp->u);
      box.v_min = std::min(box.v_min, cp->v);
      box.v_max = std::max(box.v_max, cp->v);
    }
    const double w = camera.width;
    const double h = camera.height;
    box.u_min = std::clamp(box.u_min, 0.0, w);
    box.u_max = std::clamp(box.u_max, 0.0, w);
    box.v_min = std::clamp(box.v_min, 0.0, h);
    box.v_max = std::clamp(box.v_max, 0.0, h);

    out.push_back({o.id, o.class_tag, o.landmark_tags, box, depth});
  }
  return out;
}

}  // namespace

std::vector<VisibleObject> visible_objects(const Scene& scene, double time, const UavState& pose,
                                           const CameraModel& camera) {
  const auto objects = objects_at(scene, time);
  return visible_from(scene, objects, CameraPose::from(camera, pose.position, pose.yaw), camera);
}

ViewFrame annotate_view(const World& world, const UavState& pose, const CameraModel& camera) {
  camera.validate();
  ViewFrame frame;
  frame.width = camera.width;
  frame.height = camera.height;
  frame.pose_at_capture = pose;
  frame.objects = visible_objects(world.sc(), world.time, pose, camera);
  return frame;
}

ViewFrame render_view(const World& world, const UavState& pose, const CameraModel& camera) {
  camera.validate();
  const auto objects = objects_at(world.sc(), world.time);
  const CameraPose cam_pose = CameraPose::from(camera, pose.position, pose.yaw);

  ViewFrame frame;
  frame.width = camera.width;
  frame.height = camera.height;
  frame.pose_at_capture = pose;
  frame.depth.assign(static_cast<std::size_t>(camera.width) * static_cast<std::size_t>(camera.height),
                     kInf);
  for (int v = 0; v < camera.height; ++v) {
    for (int u = 0; u < camera.width; ++u) {
      // Sample at the pixel center.
      const Vec3 ray_cam = pixel_ray(camera, u + 0.5, v + 0.5);
      const double ray_len = ray_cam.norm();
      const Vec3 dir = cam_pose.world_from_camera_rot * (ray_cam / ray_len);
      double t = nearest_object_hit(objects, cam_pose.camera_center, dir, nullptr);
      if (auto hit = raycast(world.sc(), cam_pose.camera_center, dir, std::min(t, kRenderRange))) {
        t = std::min(t, *hit);
      }
      if (t <= kRenderRange) {
        frame.depth[static_cast<std::size_t>(v) * static_cast<std::size_t>(camera.width) +
                    static_cast<std::size_t>(u)] = t / ray_len;
      }
    }
  }
  frame.objects = visible_from(world.sc(), objects, cam_pose, camera);
  return frame;
}

}  // namespace airstar::sim
