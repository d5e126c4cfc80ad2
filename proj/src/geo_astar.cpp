#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <queue>

#include "airstar/error.hpp"
#include "airstar/geo_nav.hpp"

namespace airstar::geo {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

struct Move {
  int drow;
  int dcol;
  double cost;
};

// E, NE, N, NW, W, SW, S, SE with north = +row.
constexpr std::array<Move, 8> kMoves = {{{0, 1, 1.0},
                                         {1, 1, kSqrt2},
                                         {1, 0, 1.0},
                                         {1, -1, kSqrt2},
                                         {0, -1, 1.0},
                                         {-1, -1, kSqrt2},
                                         {-1, 0, 1.0},
                                         {-1, 1, kSqrt2}}};

bool can_move(const OccupancyGrid& grid, Cell from, const Move& m) {
  const Cell to{from.row + m.drow, from.col + m.dcol};
  if (grid.occupied(to)) return false;
  if (m.drow != 0 && m.dcol != 0) {
    // No corner cutting.
    if (grid.occupied({from.row + m.drow, from.col}) || grid.occupied({from.row, from.col + m.dcol})) {
      return false;
    }
  }
  return true;
}

struct OpenEntry {
  double f;
  double h;
  std::uint64_t seq;
  std::size_t index;
};

struct OpenOrder {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.h != b.h) return a.h > b.h;
    return a.seq > b.seq;
  }
};

}  // namespace

double octile(Cell a, Cell b) {
  const double dx = std::abs(a.col - b.col);
  const double dy = std::abs(a.row - b.row);
  return (dx + dy) + (kSqrt2 - 2.0) * std::min(dx, dy);
}

GridPath plan_cells(const OccupancyGrid& grid, Cell start, Cell goal) {
  if (grid.occupied(start)) fail(ErrorCode::kStartBlocked, "start cell is blocked or out of bounds");
  if (grid.occupied(goal)) fail(ErrorCode::kGoalBlocked, "goal cell is blocked or out of bounds");

  const std::size_t n = grid.size();
  constexpr double kUnset = std::numeric_limits<double>::infinity();
  std::vector<double> g(n, kUnset);
  std::vector<std::size_t> parent(n, n);
  std::vector<std::uint8_t> closed(n, 0);
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenOrder> open;
  std::uint64_t seq = 0;

  const std::size_t s = grid.index(start);
  const std::size_t t = grid.index(goal);
  g[s] = 0.0;
  const double h0 = octile(start, goal);
  open.push({h0, h0, seq++, s});

  while (!open.empty()) {
    const OpenEntry cur = open.top();
    open.pop();
    if (closed[cur.index]) continue;
    closed[cur.index] = 1;
    if (cur.index == t) break;
    const Cell c = grid.cell_at(cur.index);
    for (const Move& m : kMoves) {
      if (!can_move(grid, c, m)) continue;
      const Cell nb{c.row + m.drow, c.col + m.dcol};
      const std::size_t ni = grid.index(nb);
      if (closed[ni]) continue;
      const double cand = g[cur.index] + m.cost;
      if (cand < g[ni]) {
        g[ni] = cand;
        parent[ni] = cur.index;
        const double h = octile(nb, goal);
        open.push({cand + h, h, seq++, ni});
      }
    }
  }

  if (!closed[t]) fail(ErrorCode::kNoPath, "goal is unreachable on the selected grid");

  GridPath path;
  path.cost = g[t];
  for (std::size_t i = t; i != n; i = parent[i]) {
    path.cells.push_back(grid.cell_at(i));
    if (i == s) break;
  }
  std::reverse(path.cells.begin(), path.cells.end());
  return path;
}

GridPath plan_waypoints(const OccupancyGrid& grid, const LocalPoint& start, const LocalPoint& goal) {
  return plan_cells(grid, grid.cell_of(start.x(), start.y()), grid.cell_of(goal.x(), goal.y()));
}

DistanceField::DistanceField(const OccupancyGrid& grid)
    : grid_(&grid), dist_(grid.size(), kNoObstacle), source_(grid.size(), -1) {
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.cells()[i]) {
      dist_[i] = 0;
      source_[i] = static_cast<int>(i);
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    const Cell c = grid.cell_at(i);
    for (const Move& m : kMoves) {
      const Cell nb{c.row + m.drow, c.col + m.dcol};
      if (!grid.in_bounds(nb)) continue;
      const std::size_t ni = grid.index(nb);
      if (dist_[ni] > dist_[i] + 1) {
        dist_[ni] = dist_[i] + 1;
        source_[ni] = source_[i];
        queue.push_back(ni);
      }
    }
  }
}

int DistanceField::cells_to_obstacle(Cell c) const {
  if (!grid_->in_bounds(c)) return 0;
  return dist_[grid_->index(c)];
}

double DistanceField::clearance(Cell c) const {
  const int d = cells_to_obstacle(c);
  if (d >= kNoObstacle) return std::numeric_limits<double>::infinity();
  return d * grid_->resolution();
}

double DistanceField::clearance_at(double x, double y) const {
  return clearance(grid_->cell_of(x, y));
}

Vec2 DistanceField::gradient_at(double x, double y) const {
  const Cell c = grid_->cell_of(x, y);
  if (!grid_->in_bounds(c)) return Vec2::Zero();
  const int here = cells_to_obstacle(c);
  if (here >= kNoObstacle) return Vec2::Zero();
  auto sample = [&](int dr, int dc) {
    const Cell nb{c.row + dr, c.col + dc};
    return grid_->in_bounds(nb) ? std::min(cells_to_obstacle(nb), here + 1) : here;
  };
  Vec2 grad(0.5 * (sample(0, 1) - sample(0, -1)), 0.5 * (sample(1, 0) - sample(-1, 0)));
  if (grad.norm() < 1e-12) {
    const int src = source_[grid_->index(c)];
    if (src < 0) return Vec2::Zero();
    grad = Vec2(x, y) - grid_->center(grid_->cell_at(static_cast<std::size_t>(src)));
    if (grad.norm() < 1e-12) grad = Vec2(1.0, 0.0);
  }
  return grad.normalized();
}

OccupancyGrid inflate(const OccupancyGrid& grid, double c_min) {
  const DistanceField field(grid);
  OccupancyGrid out = grid;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Cell c = grid.cell_at(i);
    if (field.clearance(c) < c_min) out.set(c, true);
  }
  return out;
}

std::optional<Cell> nearest_clear_cell(const DistanceField& field, const LocalPoint& p, double c_min,
                                       double radius) {
  const OccupancyGrid& grid = field.grid();
  const Cell c = grid.cell_of(p.x(), p.y());
  if (grid.in_bounds(c) && !grid.occupied(c) && field.clearance(c) >= c_min) return c;
  const int r = static_cast<int>(std::ceil(radius / grid.resolution()));
  std::optional<Cell> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int dr = -r; dr <= r; ++dr) {
    for (int dc = -r; dc <= r; ++dc) {
      const Cell nb{c.row + dr, c.col + dc};
      if (!grid.in_bounds(nb) || grid.occupied(nb) || field.clearance(nb) < c_min) continue;
      const double d = (grid.center(nb) - Vec2(p.x(), p.y())).norm();
      if (d > radius) continue;
      if (d < best_d) {
        best_d = d;
        best = nb;
      }
    }
  }
  return best;
}

std::vector<Cell> grid_walk(Cell from, Cell to) {
  std::vector<Cell> out{from};
  const int dx = to.col - from.col;
  const int dy = to.row - from.row;
  const int nx = std::abs(dx);
  const int ny = std::abs(dy);
  const int sx = dx > 0 ? 1 : -1;
  const int sy = dy > 0 ? 1 : -1;
  Cell c = from;
  // Integer supercover walk between cell centers: compare the crossing
  // parameters (ix + 0.5) / nx and (iy + 0.5) / ny exactly.
  for (int ix = 0, iy = 0; ix < nx || iy < ny;) {
    const long lhs = (1L + 2L * ix) * ny;
    const long rhs = (1L + 2L * iy) * nx;
    if (lhs == rhs) {
      out.push_back({c.row, c.col + sx});
      out.push_back({c.row + sy, c.col});
      c.col += sx;
      c.row += sy;
      ++ix;
      ++iy;
    } else if (lhs < rhs) {
      c.col += sx;
      ++ix;
    } else {
      c.row += sy;
      ++iy;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<LocalPoint> simplify_path(const OccupancyGrid& grid, const GridPath& path, double c_min,
                                      double z) {
  std::vector<LocalPoint> out;
  if (path.cells.empty()) return out;
  auto to_point = [&](Cell c) {
    const Vec2 xy = grid.center(c);
    return LocalPoint(xy.x(), xy.y(), z);
  };
  if (path.cells.size() == 1) return {to_point(path.cells.front())};

  const bool use_clearance = c_min > 0.0;
  std::optional<DistanceField> field;
  if (use_clearance) field.emplace(grid);
  auto visible = [&](Cell a, Cell b) {
    for (const Cell& c : grid_walk(a, b)) {
      if (grid.occupied(c)) return false;
      if (use_clearance && field->clearance(c) < c_min) return false;
    }
    return true;
  };

  Cell anchor = path.cells.front();
  out.push_back(to_point(anchor));
  for (std::size_t i = 1; i < path.cells.size(); ++i) {
    if (visible(anchor, path.cells[i])) continue;
    if (path.cells[i - 1] != anchor) {
      anchor = path.cells[i - 1];
      out.push_back(to_point(anchor));
    }
    // Even the single path step is not clear: keep every cell through it.
    if (!visible(anchor, path.cells[i])) {
      anchor = path.cells[i];
      out.push_back(to_point(anchor));
    }
  }
  if (anchor != path.cells.back()) out.push_back(to_point(path.cells.back()));
  return out;
}

}  // namespace airstar::geo
