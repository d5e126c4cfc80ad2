#include "airstar/object_nav.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "airstar/error.hpp"
#include "airstar/http_client.hpp"
#include "airstar/text.hpp"

namespace airstar::objnav {

using nlohmann::json;

const char* to_string(TargetSource s) {
  return s == TargetSource::kUserClick ? "user_click" : "grounding_backend";
}

namespace {

std::set<std::string> tag_tokens(const VisibleObject& o) {
  std::string joined = o.class_tag;
  for (const auto& t : o.landmark_tags) joined += " " + t;
  return text::content_tokens(joined);
}

}  // namespace

PixelTarget MockGrounding::ground(const std::string& instruction, const ViewFrame& frame) {
  const auto nouns = text::content_tokens(instruction);
  const VisibleObject* best = nullptr;
  std::size_t best_score = 0;
  for (const auto& o : frame.objects) {
    const std::size_t score = text::overlap(nouns, tag_tokens(o));
    if (score == 0) continue;
    bool better = best == nullptr || score > best_score;
    if (!better && score == best_score) {
      const double a = o.bbox.area();
      const double b = best->bbox.area();
      better = a > b || (a == b && o.object_id < best->object_id);
    }
    if (better) {
      best = &o;
      best_score = score;
    }
  }
  if (best == nullptr) fail(ErrorCode::kNoTarget, "no visible object matches '" + instruction + "'");
  PixelTarget t;
  t.u = best->bbox.u_center();
  t.v = best->bbox.v_center();
  t.confidence = std::min(1.0, static_cast<double>(best_score) / static_cast<double>(nouns.size()));
  t.object_id = best->object_id;
  return t;
}

json annotations_json(const ViewFrame& frame) {
  json objects = json::array();
  for (const auto& o : frame.objects) {
    json tags = json::array({o.class_tag});
    for (const auto& t : o.landmark_tags) tags.push_back(t);
    objects.push_back({{"id", o.object_id},
                       {"tags", tags},
                       {"bbox", {o.bbox.u_min, o.bbox.v_min, o.bbox.u_max, o.bbox.v_max}},
                       {"depth", o.centroid_depth}});
  }
  return objects;
}

PixelTarget RemoteGrounding::ground(const std::string& instruction, const ViewFrame& frame) {
  const json reply = post_json(url_, {{"instruction", instruction}, {"objects", annotations_json(frame)}},
                               timeout_s_);
  if (reply.value("none", false)) fail(ErrorCode::kNoTarget, "grounding backend found no target");
  try {
    PixelTarget t;
    t.u = reply.at("u").get<double>();
    t.v = reply.at("v").get<double>();
    t.confidence = reply.value("confidence", 1.0);
    t.object_id = reply.value("id", std::string());
    return t;
  } catch (const json::exception& e) {
    fail(ErrorCode::kBackendUnavailable, std::string("malformed grounding reply: ") + e.what());
  }
}

PixelTarget ground_target(const std::string& instruction, const ViewFrame& frame,
                          GroundingBackend& backend) {
  if (frame.width <= 0 || frame.height <= 0) fail(ErrorCode::kInvalidArgument, "empty frame");
  if (frame.objects.empty()) fail(ErrorCode::kNoTarget, "nothing visible in the frame");
  PixelTarget t = backend.ground(instruction, frame);
  if (!(t.u >= 0.0 && t.v >= 0.0 && t.u < frame.width && t.v < frame.height)) {
    fail(ErrorCode::kNoTarget, "grounded pixel lies outside the image");
  }
  t.confidence = std::clamp(t.confidence, 0.0, 1.0);
  t.source = TargetSource::kGroundingBackend;
  return t;
}

Vec3 pixel_to_world(const PixelTarget& p, double depth, const CameraModel& camera,
                    const UavState& uav) {
  if (!std::isfinite(depth) || depth <= 0.0) {
    fail(ErrorCode::kInvalidDepth, "depth must be finite and positive");
  }
  const CameraPose pose = CameraPose::from(camera, uav.position, uav.yaw);
  return pose.to_world(backproject_camera(camera, p.u, p.v, depth));
}

double window_depth(const ViewFrame& frame, double u, double v) {
  if (!frame.has_depth()) fail(ErrorCode::kInvalidDepth, "frame carries no depth image");
  const int cu = static_cast<int>(std::floor(u));
  const int cv = static_cast<int>(std::floor(v));
  std::vector<double> samples;
  for (int dv = -1; dv <= 1; ++dv) {
    for (int du = -1; du <= 1; ++du) {
      const int x = cu + du;
      const int y = cv + dv;
      if (x < 0 || y < 0 || x >= frame.width || y >= frame.height) continue;
      const double d = frame.depth_at(x, y);
      if (std::isfinite(d)) samples.push_back(d);
    }
  }
  if (samples.empty()) fail(ErrorCode::kInvalidDepth, "no finite depth around the target pixel");
  const auto mid = samples.begin() + static_cast<std::ptrdiff_t>((samples.size() - 1) / 2);
  std::nth_element(samples.begin(), mid, samples.end());
  return *mid;
}

Relation parse_relation(const std::string& instruction) {
  const auto tokens = text::tokenize(instruction);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == "behind") return Relation::kBehind;
    if (tokens[i] == "above" || tokens[i] == "over") return Relation::kAbove;
  }
  return Relation::kAheadOf;
}

ObjectGoal object_nav_goal(const std::string& instruction, const ViewFrame& frame,
                           const CameraModel& camera, const UavState& uav,
                           GroundingBackend& backend, double standoff, double z_min) {
  if (!(standoff >= 0.0)) fail(ErrorCode::kInvalidArgument, "standoff must be >= 0");
  ObjectGoal out;
  out.pixel = ground_target(instruction, frame, backend);
  double depth = std::numeric_limits<double>::infinity();
  if (frame.has_depth()) {
    depth = window_depth(frame, out.pixel.u, out.pixel.v);
  } else if (const VisibleObject* o = frame.find(out.pixel.object_id)) {
    depth = o->centroid_depth;
  }
  out.target = pixel_to_world(out.pixel, depth, camera, uav);
  out.relation = parse_relation(instruction);

  Vec3 dir(out.target.x() - uav.position.x(), out.target.y() - uav.position.y(), 0.0);
  const double range = dir.norm();
  if (range > 1e-9) dir /= range;
  out.goal = out.target;
  switch (out.relation) {
    case Relation::kAheadOf:
      out.goal -= dir * std::min(standoff, range);
      break;
    case Relation::kBehind:
      out.goal += dir * standoff;
      break;
    case Relation::kAbove:
      out.goal.z() += standoff;
      break;
  }
  out.goal.z() = std::max(out.goal.z(), z_min);
  return out;
}

}  // namespace airstar::objnav
