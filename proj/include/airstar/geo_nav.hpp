#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "airstar/geometry.hpp"
#include "airstar/world.hpp"

namespace airstar::geo {

using sim::Cell;
using sim::GeoPoint;
using sim::LandmarkNode;
using sim::OccupancyGrid;

// ENU meters relative to the scenario reference GeoPoint.
using LocalPoint = Vec3;

inline constexpr double kEarthRadius = 6371000.0;
inline constexpr double kMaxRegionDegrees = 0.1;

// Equirectangular projection about `ref`. Throws OutOfRegion when the point is
// 0.1 degrees or more away from the reference in latitude or longitude.
LocalPoint gps_to_local(const GeoPoint& ref, const GeoPoint& p);
GeoPoint local_to_gps(const GeoPoint& ref, const LocalPoint& p);

// Case-insensitive exact match on name or alias first, then the largest
// content-token overlap (ties: smallest id). Throws NotFound.
const LandmarkNode& lookup_landmark(std::span<const LandmarkNode> landmarks,
                                    std::string_view query);

// Like lookup_landmark but returns nullptr instead of throwing.
const LandmarkNode* find_landmark(std::span<const LandmarkNode> landmarks,
                                  std::string_view query);

enum class MissionKind { kUavAutonomous, kPedestrianGuide };

const char* to_string(MissionKind kind);
std::optional<MissionKind> mission_kind_from_string(std::string_view s);

// Throws MissingGrid.
const OccupancyGrid& select_map(const sim::Scene& scene, MissionKind kind);

// Default clearance for a grid kind: 1.0 m for the uav grid, 0.5 m pedestrian.
double default_clearance(sim::GridKind kind);

struct GridPath {
  std::vector<Cell> cells;
  double cost = 0.0;  // octile: 1 per straight step, sqrt(2) per diagonal
};

// Octile distance between two cells.
double octile(Cell a, Cell b);

// 8-connected A* with octile heuristic. Diagonal moves require both adjacent
// orthogonal cells to be free. Ties in f go to smaller h, then to the earlier
// expansion in the neighbour order E, NE, N, NW, W, SW, S, SE.
// Throws StartBlocked, GoalBlocked or NoPath.
GridPath plan_cells(const OccupancyGrid& grid, Cell start, Cell goal);
GridPath plan_waypoints(const OccupancyGrid& grid, const LocalPoint& start,
                        const LocalPoint& goal);

// Multi-source BFS distance transform (8-connected) from occupied cells.
class DistanceField {
 public:
  explicit DistanceField(const OccupancyGrid& grid);

  const OccupancyGrid& grid() const { return *grid_; }

  // Distance in cells to the nearest occupied cell; very large when the grid
  // has no obstacles; 0 for occupied and out-of-bounds cells.
  int cells_to_obstacle(Cell c) const;
  // Clearance in meters (cells x resolution).
  double clearance(Cell c) const;
  double clearance_at(double x, double y) const;
  // Unit direction of increasing clearance at a point, or zero when flat and
  // no obstacle exists.
  Vec2 gradient_at(double x, double y) const;

 private:
  const OccupancyGrid* grid_;
  std::vector<int> dist_;
  std::vector<int> source_;  // index of the nearest occupied cell, or -1
};

inline constexpr int kNoObstacle = 1 << 28;

// Copy of `grid` with every cell whose clearance is below c_min marked occupied.
OccupancyGrid inflate(const OccupancyGrid& grid, double c_min);

// Nearest in-bounds cell with clearance >= c_min within `radius` meters of
// `p` (the containing cell itself when it qualifies). Ties: row-major order.
std::optional<Cell> nearest_clear_cell(const DistanceField& field, const LocalPoint& p,
                                       double c_min, double radius);

// Every cell the straight segment between two cell centers touches, in order.
// Passing exactly through a cell corner includes both side cells.
std::vector<Cell> grid_walk(Cell from, Cell to);

// Greedy line-of-sight pruning. A waypoint is kept only when the grid walk
// from the last kept waypoint to the next path cell would cross an occupied
// cell or one with clearance below c_min. Waypoints sit at cell centers at
// height z.
std::vector<LocalPoint> simplify_path(const OccupancyGrid& grid, const GridPath& path,
                                      double c_min = 0.0, double z = 0.0);

struct TrajectoryLimits {
  double v_max = 3.0;
  double a_max = 2.0;
  double c_min = 1.0;
};

// Uniform cubic B-spline. The first and last control points are tripled so
// the curve starts and ends exactly at them, at rest.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::vector<LocalPoint> control_points, double knot_dt);

  const std::vector<LocalPoint>& control_points() const { return control_points_; }
  double knot_dt() const { return knot_dt_; }
  std::size_t spans() const { return control_points_.size() - 3; }
  double total_time() const { return knot_dt_ * static_cast<double>(spans()); }

  LocalPoint position(double t) const;
  Vec3 velocity(double t) const;
  Vec3 acceleration(double t) const;

  LocalPoint start() const { return control_points_.front(); }
  LocalPoint end() const { return control_points_.back(); }

  // `per_span` evenly spaced samples per span plus the final endpoint.
  std::vector<double> sample_times(int per_span = 10) const;

 private:
  // Span index and local parameter in [0, 1].
  std::pair<std::size_t, double> locate(double t) const;

  std::vector<LocalPoint> control_points_;
  double knot_dt_ = 1.0;
};

inline constexpr int kSamplesPerSpan = 10;
inline constexpr int kMaxRepairIterations = 50;

// Fits the spline through densified waypoints, pushes control points out of
// sub-clearance regions along the distance-field gradient, then rescales time
// so sampled speed and acceleration respect the limits. Throws
// SmoothingFailed when clearance cannot be repaired, InvalidArgument when the
// preconditions (>= 2 waypoints, each with clearance >= c_min) fail.
Trajectory smooth_trajectory(std::span<const LocalPoint> waypoints, const OccupancyGrid& grid,
                             const TrajectoryLimits& limits);

// Straight-segment fallback used when smoothing fails: one spline span per
// densified point, still time-scaled to the limits.
Trajectory linear_trajectory(std::span<const LocalPoint> waypoints, double resolution,
                             const TrajectoryLimits& limits);

struct TrajectoryStats {
  double max_speed = 0.0;
  double max_accel = 0.0;
  double min_clearance = 0.0;
  double length = 0.0;
};

TrajectoryStats sample_stats(const Trajectory& traj, const DistanceField& field,
                             int per_span = kSamplesPerSpan);

// End-to-end long-range route: snap start/goal onto clear cells of the
// clearance-inflated grid, A*, line-of-sight pruning, smoothing (falls back to
// linear interpolation on SmoothingFailed).
struct Route {
  GridPath path;
  std::vector<LocalPoint> waypoints;
  Trajectory trajectory;
  bool smoothed = true;
  LocalPoint goal;
};

Route plan_route(const OccupancyGrid& grid, const LocalPoint& start, const LocalPoint& goal,
                 const TrajectoryLimits& limits, double z);

}  // namespace airstar::geo
