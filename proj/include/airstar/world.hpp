#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "airstar/camera.hpp"
#include "airstar/geometry.hpp"

namespace airstar::sim {

struct GeoPoint {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees
  double alt = 0.0;  // meters above reference ground

  bool operator==(const GeoPoint&) const = default;
};

struct LandmarkNode {
  std::string id;
  std::string name;
  GeoPoint gps;
  std::string orientation_tag;
  std::string description;
  std::vector<std::string> aliases;

  bool operator==(const LandmarkNode&) const = default;
};

enum class GridKind { kUavExploration, kPedestrianGuidance };

const char* to_string(GridKind kind);
std::optional<GridKind> grid_kind_from_string(std::string_view s);

struct Cell {
  int row = 0;
  int col = 0;

  bool operator==(const Cell&) const = default;
  auto operator<=>(const Cell&) const = default;
};

// Row-major boolean raster. Row index grows with y (north), column with x (east);
// `origin` is the local ENU coordinate of the (0,0) cell's lower-left corner.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(GridKind kind, Vec2 origin, double resolution, int width, int height);

  GridKind kind() const { return kind_; }
  const Vec2& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return cells_.size(); }

  bool in_bounds(Cell c) const {
    return c.row >= 0 && c.col >= 0 && c.row < height_ && c.col < width_;
  }
  // Out-of-bounds cells read as occupied.
  bool occupied(Cell c) const { return !in_bounds(c) || cells_[index(c)] != 0; }
  void set(Cell c, bool blocked) { cells_[index(c)] = blocked ? 1 : 0; }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.col);
  }
  Cell cell_at(std::size_t idx) const {
    return {static_cast<int>(idx / static_cast<std::size_t>(width_)),
            static_cast<int>(idx % static_cast<std::size_t>(width_))};
  }

  // Cell containing the point (may be out of bounds).
  Cell cell_of(double x, double y) const;
  Vec2 center(Cell c) const;

  const std::vector<std::uint8_t>& cells() const { return cells_; }

  bool operator==(const OccupancyGrid&) const = default;

 private:
  GridKind kind_ = GridKind::kUavExploration;
  Vec2 origin_ = Vec2::Zero();
  double resolution_ = 1.0;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> cells_;
};

enum class UavMode { kGrounded, kAscending, kStandbyHover, kExecuting, kReturning };

const char* to_string(UavMode mode);
std::optional<UavMode> uav_mode_from_string(std::string_view s);

struct UavState {
  Vec3 position = Vec3::Zero();  // ENU meters
  Vec3 velocity = Vec3::Zero();
  double yaw = 0.0;  // 0 = +x, counter-clockwise positive
  UavMode mode = UavMode::kGrounded;

  bool operator==(const UavState&) const = default;
};

struct Pedestrian {
  std::string id;
  std::vector<Vec2> path;  // closed loop, traversed at constant speed
  double speed = 0.0;
  bool is_user = false;

  bool operator==(const Pedestrian&) const = default;
};

// Position along the looped path after `time` seconds.
Vec2 pedestrian_position(const Pedestrian& p, double time);

// Axis-aligned box in the scene used for rendering and occlusion.
struct SceneObject {
  std::string id;
  std::string class_tag;
  std::vector<std::string> landmark_tags;
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Ones();

  bool operator==(const SceneObject&) const = default;
};

inline constexpr double kPedestrianHeight = 1.8;
inline constexpr double kPedestrianWidth = 0.6;

struct Limits {
  double v_max = 3.0;
  double a_max = 2.0;  // +inf allowed

  bool operator==(const Limits&) const = default;
};

// Immutable part of a world, shared between snapshots.
struct Scene {
  std::string name;
  std::uint64_t seed = 0;
  GeoPoint reference;
  std::vector<OccupancyGrid> grids;
  std::vector<LandmarkNode> landmarks;
  std::vector<Pedestrian> pedestrians;
  std::vector<SceneObject> objects;
  UavState uav_start;
  CameraModel camera;
  Limits limits;
  double z_cruise = 5.0;
  double obstacle_height = 30.0;  // height of occupied uav-grid columns
  nlohmann::json knowledge = nlohmann::json::array();  // static web_info entries

  const OccupancyGrid* grid(GridKind kind) const;
  // The uav_exploration grid doubles as the physical obstacle map.
  const OccupancyGrid* obstacles() const { return grid(GridKind::kUavExploration); }
  const Pedestrian& user() const;
  const LandmarkNode* landmark(std::string_view id) const;

  bool operator==(const Scene&) const = default;
};

struct World {
  std::shared_ptr<const Scene> scene;
  UavState uav;
  double time = 0.0;
  std::uint64_t tick = 0;
  std::mt19937_64 rng;

  const Scene& sc() const { return *scene; }
};

World make_world(std::shared_ptr<const Scene> scene);

// Scenario file I/O. Throws SchemaError / ConsistencyError / IoError.
Scene parse_scenario(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const Scene& scene);
World load_scenario(const std::string& path);

struct Control {
  enum class Kind { kAcceleration, kVelocitySetpoint };
  Kind kind = Kind::kVelocitySetpoint;
  Vec3 value = Vec3::Zero();
  double yaw_rate = 0.0;

  static Control velocity(Vec3 v, double yaw_rate = 0.0) {
    return {Kind::kVelocitySetpoint, v, yaw_rate};
  }
  static Control acceleration(Vec3 a, double yaw_rate = 0.0) {
    return {Kind::kAcceleration, a, yaw_rate};
  }
};

inline constexpr double kTickSeconds = 0.1;
inline constexpr double kMaxYawRate = 1.5;  // rad/s

// Semi-implicit Euler: clamp acceleration to a_max, velocity to v_max, then
// integrate position. dt must lie in (0, 0.5].
void step(World& world, const Control& control, double dt = kTickSeconds);

// Occupied-cell columns (height obstacle_height) and the ground plane z = 0.
// A ray starting inside an obstacle reports a hit at distance 0.
std::optional<double> raycast(const Scene& scene, const Vec3& origin, const Vec3& dir,
                              double max_range);
inline std::optional<double> raycast(const World& w, const Vec3& origin, const Vec3& dir,
                                     double max_range) {
  return raycast(w.sc(), origin, dir, max_range);
}

// Entry/exit parameters of a ray against a box; nullopt on a miss. Entry is
// clamped to 0 when the origin is inside.
std::optional<std::pair<double, double>> ray_box(const Vec3& origin, const Vec3& dir,
                                                 const Vec3& center, const Vec3& size);

struct PixelBox {
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;

  double area() const { return (u_max - u_min) * (v_max - v_min); }
  double u_center() const { return 0.5 * (u_min + u_max); }
  double v_center() const { return 0.5 * (v_min + v_max); }
  bool contains(double u, double v) const {
    return u >= u_min && u <= u_max && v >= v_min && v <= v_max;
  }
  bool operator==(const PixelBox&) const = default;
};

struct VisibleObject {
  std::string object_id;
  std::string class_tag;
  std::vector<std::string> landmark_tags;
  PixelBox bbox;
  double centroid_depth = 0.0;

  bool operator==(const VisibleObject&) const = default;
};

struct ViewFrame {
  int width = 0;
  int height = 0;
  std::vector<double> depth;  // row-major z-depth, +inf where nothing is hit
  std::vector<VisibleObject> objects;
  UavState pose_at_capture;

  bool has_depth() const { return !depth.empty(); }
  double depth_at(int u, int v) const {
    return depth[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
                 static_cast<std::size_t>(u)];
  }
  const VisibleObject* find(std::string_view id) const;
};

inline constexpr double kRenderRange = 400.0;

// All scene objects plus pedestrians (as boxes) at the world's current time.
std::vector<SceneObject> objects_at(const Scene& scene, double time);

// Objects whose centroid projects inside the image with positive camera z and
// an unobstructed centroid ray. Cheap enough to run every tick.
std::vector<VisibleObject> visible_objects(const Scene& scene, double time,
                                           const UavState& pose, const CameraModel& camera);

// Full render: per-pixel z-depth plus the visible-object list.
ViewFrame render_view(const World& world, const UavState& pose, const CameraModel& camera);

// Annotation-only frame (no depth image).
ViewFrame annotate_view(const World& world, const UavState& pose, const CameraModel& camera);

}  // namespace airstar::sim
