#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "airstar/error.hpp"
#include "airstar/geo_nav.hpp"

namespace airstar::geo {

namespace {

struct Basis {
  double b[4];
};

Basis basis(double u) {
  const double u2 = u * u;
  const double u3 = u2 * u;
  const double m = 1.0 - u;
  return {{m * m * m / 6.0, (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
           (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0, u3 / 6.0}};
}

Basis basis_d1(double u) {
  const double u2 = u * u;
  const double m = 1.0 - u;
  return {{-0.5 * m * m, 0.5 * (3.0 * u2 - 4.0 * u), 0.5 * (-3.0 * u2 + 2.0 * u + 1.0), 0.5 * u2}};
}

Basis basis_d2(double u) { return {{1.0 - u, 3.0 * u - 2.0, 1.0 - 3.0 * u, u}}; }

Vec3 combine(const std::vector<LocalPoint>& pts, std::size_t span, const Basis& w) {
  return w.b[0] * pts[span] + w.b[1] * pts[span + 1] + w.b[2] * pts[span + 2] + w.b[3] * pts[span + 3];
}

// Waypoints resampled so consecutive points are at most `spacing` apart;
// every original waypoint is kept exactly.
std::vector<LocalPoint> densify(std::span<const LocalPoint> waypoints, double spacing) {
  std::vector<LocalPoint> out;
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const LocalPoint& a = waypoints[i];
    const LocalPoint& b = waypoints[i + 1];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / spacing)));
    for (int k = 0; k < n; ++k) out.push_back(a + (b - a) * (static_cast<double>(k) / n));
  }
  out.push_back(waypoints.back());
  return out;
}

std::vector<LocalPoint> clamped_control_points(const std::vector<LocalPoint>& dense) {
  std::vector<LocalPoint> cps;
  cps.reserve(dense.size() + 4);
  cps.push_back(dense.front());
  cps.push_back(dense.front());
  cps.insert(cps.end(), dense.begin(), dense.end());
  cps.push_back(dense.back());
  cps.push_back(dense.back());
  return cps;
}

// Smallest knot spacing for which sampled speed and acceleration respect the
// limits (speed scales with 1/dt, acceleration with 1/dt^2).
double feasible_knot_dt(const std::vector<LocalPoint>& cps, double v_max, double a_max) {
  const Trajectory unit(cps, 1.0);
  double s1 = 0.0;
  double a1 = 0.0;
  for (double t : unit.sample_times(kSamplesPerSpan)) {
    s1 = std::max(s1, unit.velocity(t).norm());
    a1 = std::max(a1, unit.acceleration(t).norm());
  }
  double dt = s1 / v_max;
  if (std::isfinite(a_max)) dt = std::max(dt, std::sqrt(a1 / a_max));
  if (!(dt > 0.0)) dt = sim::kTickSeconds;
  return dt;
}

// Lowest clearance over the cells a straight hop between two consecutive
// samples crosses, so thin walls cannot slip between samples.
double hop_clearance(const DistanceField& field, const OccupancyGrid& grid, const LocalPoint& a,
                     const LocalPoint& b) {
  double c = std::numeric_limits<double>::infinity();
  for (const Cell& cell : grid_walk(grid.cell_of(a.x(), a.y()), grid.cell_of(b.x(), b.y()))) {
    c = std::min(c, field.clearance(cell));
  }
  return c;
}

void check_limits(const TrajectoryLimits& limits) {
  if (!(limits.v_max > 0.0) || !(limits.a_max > 0.0) || limits.c_min < 0.0) {
    fail(ErrorCode::kInvalidArgument, "trajectory limits must be positive");
  }
}

}  // namespace

Trajectory::Trajectory(std::vector<LocalPoint> control_points, double knot_dt)
    : control_points_(std::move(control_points)), knot_dt_(knot_dt) {
  if (control_points_.size() < 4) fail(ErrorCode::kInvalidArgument, "trajectory needs >= 4 control points");
  if (!(knot_dt_ > 0.0)) fail(ErrorCode::kInvalidArgument, "knot_dt must be > 0");
}

std::pair<std::size_t, double> Trajectory::locate(double t) const {
  const double s = std::clamp(t / knot_dt_, 0.0, static_cast<double>(spans()));
  std::size_t span = static_cast<std::size_t>(std::floor(s));
  if (span >= spans()) span = spans() - 1;
  return {span, s - static_cast<double>(span)};
}

LocalPoint Trajectory::position(double t) const {
  const auto [span, u] = locate(t);
  return combine(control_points_, span, basis(u));
}

Vec3 Trajectory::velocity(double t) const {
  if (t < 0.0 || t > total_time()) return Vec3::Zero();
  const auto [span, u] = locate(t);
  return combine(control_points_, span, basis_d1(u)) / knot_dt_;
}

Vec3 Trajectory::acceleration(double t) const {
  if (t < 0.0 || t > total_time()) return Vec3::Zero();
  const auto [span, u] = locate(t);
  return combine(control_points_, span, basis_d2(u)) / (knot_dt_ * knot_dt_);
}

std::vector<double> Trajectory::sample_times(int per_span) const {
  std::vector<double> out;
  const std::size_t n = spans();
  out.reserve(n * static_cast<std::size_t>(per_span) + 1);
  for (std::size_t s = 0; s < n; ++s) {
    for (int k = 0; k < per_span; ++k) {
      out.push_back((static_cast<double>(s) + static_cast<double>(k) / per_span) * knot_dt_);
    }
  }
  out.push_back(total_time());
  return out;
}

Trajectory smooth_trajectory(std::span<const LocalPoint> waypoints, const OccupancyGrid& grid,
                             const TrajectoryLimits& limits) {
  check_limits(limits);
  if (waypoints.size() < 2) fail(ErrorCode::kInvalidArgument, "smoothing needs at least 2 waypoints");
  const DistanceField field(grid);
  for (const auto& w : waypoints) {
    if (field.clearance_at(w.x(), w.y()) < limits.c_min) {
      std::ostringstream os;
      os << "waypoint (" << w.x() << ", " << w.y() << ") has clearance below " << limits.c_min;
      fail(ErrorCode::kInvalidArgument, os.str());
    }
  }

  const double res = grid.resolution();
  std::vector<LocalPoint> cps = clamped_control_points(densify(waypoints, res));
  const std::size_t first_free = 3;
  const std::size_t last_free = cps.size() - 4;  // inclusive; endpoints stay fixed

  bool clear = false;
  for (int iter = 0; iter <= kMaxRepairIterations && !clear; ++iter) {
    clear = true;
    const Trajectory probe(cps, 1.0);
    std::set<std::size_t> pushed;
    LocalPoint prev = probe.position(0.0);
    for (double t : probe.sample_times(kSamplesPerSpan)) {
      const LocalPoint p = probe.position(t);
      const double c = hop_clearance(field, grid, prev, p);
      prev = p;
      if (c >= limits.c_min) continue;
      clear = false;
      if (iter == kMaxRepairIterations) break;
      const double s = std::min(t, static_cast<double>(probe.spans()) - 1e-12);
      const std::size_t span = static_cast<std::size_t>(std::floor(s));
      const double u = s - static_cast<double>(span);
      const Basis w = basis(u);
      std::size_t dom = span + static_cast<std::size_t>(std::max_element(w.b, w.b + 4) - w.b);
      if (first_free > last_free) continue;
      dom = std::clamp(dom, first_free, last_free);
      if (!pushed.insert(dom).second) continue;
      const Vec2 g = field.gradient_at(p.x(), p.y());
      const double deficit = std::isfinite(c) ? limits.c_min - c : 0.0;
      const double push = std::max(0.5 * res, deficit);
      cps[dom].x() += g.x() * push;
      cps[dom].y() += g.y() * push;
    }
  }
  if (!clear) {
    fail(ErrorCode::kSmoothingFailed, "clearance could not be repaired within " +
                                          std::to_string(kMaxRepairIterations) + " iterations");
  }
  return Trajectory(cps, feasible_knot_dt(cps, limits.v_max, limits.a_max));
}

Trajectory linear_trajectory(std::span<const LocalPoint> waypoints, double resolution,
                             const TrajectoryLimits& limits) {
  check_limits(limits);
  if (waypoints.empty()) fail(ErrorCode::kInvalidArgument, "no waypoints");
  std::vector<LocalPoint> dense;
  if (waypoints.size() == 1) {
    dense = {waypoints.front(), waypoints.front()};
  } else {
    // Tight spacing keeps the spline close to the polyline at corners.
    dense = densify(waypoints, 0.25 * resolution);
  }
  auto cps = clamped_control_points(dense);
  return Trajectory(cps, feasible_knot_dt(cps, limits.v_max, limits.a_max));
}

TrajectoryStats sample_stats(const Trajectory& traj, const DistanceField& field, int per_span) {
  TrajectoryStats st;
  st.min_clearance = std::numeric_limits<double>::infinity();
  std::optional<LocalPoint> prev;
  for (double t : traj.sample_times(per_span)) {
    const LocalPoint p = traj.position(t);
    st.max_speed = std::max(st.max_speed, traj.velocity(t).norm());
    st.max_accel = std::max(st.max_accel, traj.acceleration(t).norm());
    const double c = prev ? hop_clearance(field, field.grid(), *prev, p) : field.clearance_at(p.x(), p.y());
    st.min_clearance = std::min(st.min_clearance, c);
    if (prev) st.length += (p - *prev).norm();
    prev = p;
  }
  return st;
}

Route plan_route(const OccupancyGrid& grid, const LocalPoint& start, const LocalPoint& goal,
                 const TrajectoryLimits& limits, double z) {
  const OccupancyGrid safe = inflate(grid, limits.c_min);
  const DistanceField field(grid);
  const double snap = 5.0 * std::max(1.0, grid.resolution());
  const auto start_cell = nearest_clear_cell(field, start, limits.c_min, snap);
  if (!start_cell) fail(ErrorCode::kStartBlocked, "no clear cell near the start position");
  const auto goal_cell = nearest_clear_cell(field, goal, limits.c_min, snap);
  if (!goal_cell) fail(ErrorCode::kGoalBlocked, "no clear cell near the goal position");

  Route route;
  route.path = plan_cells(safe, *start_cell, *goal_cell);
  route.waypoints = simplify_path(safe, route.path, 0.0, z);
  // Start from where the UAV actually is and end at the exact goal when those
  // points are themselves clear; otherwise the snapped cell centers stand.
  if (field.clearance_at(start.x(), start.y()) >= limits.c_min &&
      grid.cell_of(start.x(), start.y()) == *start_cell) {
    route.waypoints.front() = LocalPoint(start.x(), start.y(), z);
  }
  if (field.clearance_at(goal.x(), goal.y()) >= limits.c_min &&
      grid.cell_of(goal.x(), goal.y()) == *goal_cell) {
    route.waypoints.back() = LocalPoint(goal.x(), goal.y(), z);
  }
  if (route.waypoints.size() == 1) route.waypoints.push_back(route.waypoints.front());
  route.goal = route.waypoints.back();
  try {
    route.trajectory = smooth_trajectory(route.waypoints, grid, limits);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSmoothingFailed) throw;
    route.trajectory = linear_trajectory(route.waypoints, grid.resolution(), limits);
    route.smoothed = false;
  }
  return route;
}

}  // namespace airstar::geo
