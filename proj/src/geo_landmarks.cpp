#include <algorithm>
#include <cmath>
#include <sstream>

#include "airstar/error.hpp"
#include "airstar/geo_nav.hpp"
#include "airstar/text.hpp"

namespace airstar::geo {

namespace {

constexpr double kDegToRad = kPi / 180.0;

void check_region(const GeoPoint& ref, const GeoPoint& p) {
  if (!(std::abs(p.lat - ref.lat) < kMaxRegionDegrees) ||
      !(std::abs(p.lon - ref.lon) < kMaxRegionDegrees)) {
    std::ostringstream os;
    os.precision(10);
    os << "point (" << p.lat << ", " << p.lon << ") is outside the small-area region around ("
       << ref.lat << ", " << ref.lon << ")";
    fail(ErrorCode::kOutOfRegion, os.str());
  }
}

}  // namespace

LocalPoint gps_to_local(const GeoPoint& ref, const GeoPoint& p) {
  check_region(ref, p);
  const double x = kEarthRadius * std::cos(ref.lat * kDegToRad) * (p.lon - ref.lon) * kDegToRad;
  const double y = kEarthRadius * (p.lat - ref.lat) * kDegToRad;
  return {x, y, p.alt - ref.alt};
}

GeoPoint local_to_gps(const GeoPoint& ref, const LocalPoint& p) {
  GeoPoint out;
  out.lat = ref.lat + p.y() / kEarthRadius / kDegToRad;
  out.lon = ref.lon + p.x() / (kEarthRadius * std::cos(ref.lat * kDegToRad)) / kDegToRad;
  out.alt = ref.alt + p.z();
  check_region(ref, out);
  return out;
}

const LandmarkNode* find_landmark(std::span<const LandmarkNode> landmarks, std::string_view query) {
  const std::string q = text::to_lower(text::trim(query));
  for (const auto& n : landmarks) {
    if (text::to_lower(n.name) == q) return &n;
    for (const auto& a : n.aliases) {
      if (text::to_lower(a) == q) return &n;
    }
  }
  const auto q_tokens = text::content_tokens(query);
  const LandmarkNode* best = nullptr;
  std::size_t best_score = 0;
  for (const auto& n : landmarks) {
    auto tokens = text::content_tokens(n.name);
    for (const auto& a : n.aliases) tokens.merge(text::content_tokens(a));
    const std::size_t score = text::overlap(q_tokens, tokens);
    if (score == 0) continue;
    if (score > best_score || (score == best_score && n.id < best->id)) {
      best = &n;
      best_score = score;
    }
  }
  return best;
}

const LandmarkNode& lookup_landmark(std::span<const LandmarkNode> landmarks, std::string_view query) {
  if (text::trim(query).empty()) fail(ErrorCode::kInvalidArgument, "landmark query is empty");
  const LandmarkNode* n = find_landmark(landmarks, query);
  if (n == nullptr) fail(ErrorCode::kNotFound, "no landmark matches '" + std::string(query) + "'");
  return *n;
}

const char* to_string(MissionKind kind) {
  return kind == MissionKind::kUavAutonomous ? "uav_autonomous" : "pedestrian_guide";
}

std::optional<MissionKind> mission_kind_from_string(std::string_view s) {
  if (s == "uav_autonomous") return MissionKind::kUavAutonomous;
  if (s == "pedestrian_guide") return MissionKind::kPedestrianGuide;
  return std::nullopt;
}

const OccupancyGrid& select_map(const sim::Scene& scene, MissionKind kind) {
  const auto grid_kind = kind == MissionKind::kUavAutonomous ? sim::GridKind::kUavExploration
                                                             : sim::GridKind::kPedestrianGuidance;
  const OccupancyGrid* g = scene.grid(grid_kind);
  if (g == nullptr) {
    fail(ErrorCode::kMissingGrid, std::string("scenario has no ") + sim::to_string(grid_kind) + " grid");
  }
  return *g;
}

double default_clearance(sim::GridKind kind) {
  return kind == sim::GridKind::kUavExploration ? 1.0 : 0.5;
}

}  // namespace airstar::geo
