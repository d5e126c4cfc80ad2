// Landmark search by viewpoint scanning, and question answering over the
// selected view. These may call remote backends and run on the station tier.
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "airstar/error.hpp"
#include "airstar/geo_nav.hpp"
#include "airstar/http_client.hpp"
#include "airstar/skills.hpp"
#include "airstar/text.hpp"

namespace airstar::skills {

using nlohmann::json;

namespace {

std::set<std::string> object_tokens(const sim::VisibleObject& o) {
  std::string joined = o.class_tag;
  for (const auto& t : o.landmark_tags) joined += " " + t;
  return text::content_tokens(joined);
}

std::vector<std::string> visible_tags(const ViewFrame& frame) {
  std::vector<std::string> tags;
  auto add = [&](const std::string& t) {
    if (std::find(tags.begin(), tags.end(), t) == tags.end()) tags.push_back(t);
  };
  for (const auto& o : frame.objects) {
    add(o.class_tag);
    for (const auto& t : o.landmark_tags) add(t);
  }
  return tags;
}

}  // namespace

double candidate_yaw(const sim::LandmarkNode& landmark, const UavState& uav,
                     const sim::GeoPoint& ref) {
  const Vec3 p = geo::gps_to_local(ref, landmark.gps);
  const double dx = p.x() - uav.position.x();
  const double dy = p.y() - uav.position.y();
  if (std::hypot(dx, dy) < 0.1) {
    fail(ErrorCode::kDegenerateGeometry, "UAV is on top of landmark " + landmark.id);
  }
  return normalize_angle(std::atan2(dy, dx));
}

double MockScorer::score(const std::vector<std::string>& nouns, const ViewFrame& frame,
                         const CameraModel& camera) {
  const std::set<std::string> query(nouns.begin(), nouns.end());
  double total = 0.0;
  for (const auto& o : frame.objects) {
    const auto hits = text::overlap(query, object_tokens(o));
    if (hits == 0) continue;
    const double off_axis = std::abs(std::atan((o.bbox.u_center() - camera.cx) / camera.fx));
    total += static_cast<double>(hits) / (1.0 + off_axis);
  }
  return total;
}

double RemoteScorer::score(const std::vector<std::string>& nouns, const ViewFrame& frame,
                           const CameraModel&) {
  const json reply = post_json(url_, {{"nouns", nouns}, {"objects", objnav::annotations_json(frame)}},
                               timeout_s_);
  const auto it = reply.find("score");
  if (it == reply.end() || !it->is_number() || !std::isfinite(it->get<double>())) {
    fail(ErrorCode::kBackendUnavailable, "scoring backend returned no finite score");
  }
  return it->get<double>();
}

ScanResult scan_views(const World& world, const UavState& uav, const CameraModel& camera,
                      double center_yaw, const std::vector<std::string>& nouns,
                      ViewScorer& scorer) {
  if (nouns.empty()) fail(ErrorCode::kInvalidArgument, "scan needs at least one noun");
  ScanResult out;
  std::optional<std::size_t> best;
  for (int k = -kScanHalfSteps; k <= kScanHalfSteps; ++k) {
    UavState pose = uav;
    pose.yaw = normalize_angle(center_yaw + k * kScanStep);
    ViewFrame frame = sim::annotate_view(world, pose, camera);
    ViewCandidate c;
    c.k = k;
    c.yaw = pose.yaw;
    c.score = scorer.score(nouns, frame, camera);
    c.visible_tags = visible_tags(frame);
    // Candidates arrive in increasing k, so on equal scores and |k| the
    // earlier (smaller) k is already held.
    if (c.score > 0.0 &&
        (!best || c.score > out.candidates[*best].score ||
         (c.score == out.candidates[*best].score && std::abs(k) < std::abs(out.candidates[*best].k)))) {
      best = out.candidates.size();
      out.frame = std::move(frame);
    }
    out.candidates.push_back(std::move(c));
  }
  if (!best) fail(ErrorCode::kNoInformativeView, "no scanned view shows the landmark");
  out.best = out.candidates[*best];
  return out;
}

std::vector<std::string> extract_nouns(const std::string& s) {
  std::vector<std::string> out;
  for (auto& t : text::tokenize(s)) {
    if (text::is_stopword(t) || std::find(out.begin(), out.end(), t) != out.end()) continue;
    out.push_back(std::move(t));
  }
  return out;
}

std::string MockQa::answer(const std::string& question, const ViewFrame& frame, const Scene& scene) {
  // Visible landmarks and how close to the image center each one appears.
  std::map<std::string, double> centrality;
  std::map<std::string, const sim::LandmarkNode*> by_id;
  const double cx = scene.camera.cx;
  for (const auto& o : frame.objects) {
    for (const auto& tag : o.landmark_tags) {
      const sim::LandmarkNode* lm = geo::find_landmark(scene.landmarks, tag);
      if (lm == nullptr) continue;
      const double off = std::abs(o.bbox.u_center() - cx);
      auto [it, fresh] = centrality.emplace(lm->id, off);
      if (!fresh) it->second = std::min(it->second, off);
      by_id[lm->id] = lm;
    }
  }
  if (by_id.empty()) return kNoLandmarkAnswer;

  const auto q = text::content_tokens(question);
  const sim::LandmarkNode* best = nullptr;
  std::size_t best_score = 0;
  for (const auto& [id, lm] : by_id) {
    std::string joined = lm->name + " " + lm->orientation_tag;
    for (const auto& a : lm->aliases) joined += " " + a;
    const std::size_t s = text::overlap(q, text::content_tokens(joined));
    if (best == nullptr || s > best_score ||
        (s == best_score && centrality[id] < centrality[best->id])) {
      best = lm;
      best_score = s;
    }
  }
  return best->description + " " + best->orientation_tag;
}

std::string RemoteQa::answer(const std::string& question, const ViewFrame& frame, const Scene&) {
  const json reply = post_json(url_, {{"question", question}, {"objects", objnav::annotations_json(frame)}},
                               timeout_s_);
  const auto it = reply.find("answer");
  if (it == reply.end() || !it->is_string()) {
    fail(ErrorCode::kBackendUnavailable, "QA backend reply has no answer text");
  }
  return it->get<std::string>();
}

std::string answer_question(const ViewFrame& frame, const std::string& question,
                            const Scene& scene, QaBackend& backend) {
  if (text::trim(question).empty()) fail(ErrorCode::kInvalidArgument, "empty question");
  return backend.answer(question, frame, scene);
}

}  // namespace airstar::skills
