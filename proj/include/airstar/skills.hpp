#pragma once

#include <optional>
#include <string>
#include <vector>

#include "airstar/object_nav.hpp"
#include "airstar/world.hpp"

namespace airstar::skills {

using objnav::PixelTarget;
using sim::PixelBox;
using sim::Scene;
using sim::UavState;
using sim::ViewFrame;
using sim::World;

// ---- Human framing ---------------------------------------------------------

inline constexpr double kDetectionRange = 30.0;
inline constexpr double kFramingMin = 3.0;
inline constexpr double kFramingMax = 8.0;

struct FramingAdjustment {
  std::string pedestrian_id;
  double target_yaw = 0.0;
  double yaw_delta = 0.0;  // normalized target_yaw - uav.yaw
  Vec3 position;           // unchanged when already within framing range
  double distance = 0.0;   // horizontal range to the pedestrian before adjusting
};

// Faces the nearest pedestrian (within 30 m) so it lands on the principal
// column, moving along the line of sight into [3, 8] m when outside it.
// Throws NoHumanVisible.
FramingAdjustment frame_human(const World& world, const UavState& uav, const CameraModel& camera);

// ---- Gestures ----------------------------------------------------------------

enum class Direction { kUp, kDown, kLeft, kRight, kForward, kBackward };

const char* to_string(Direction d);
std::optional<Direction> direction_from_string(std::string_view s);

inline constexpr double kGestureClearance = 0.5;
inline constexpr double kMaxGestureStep = 2.0;

struct GestureDelta {
  Vec3 body;   // x forward, y left, z up
  Vec3 world;  // same displacement in ENU
};

// Displacement for one gesture step, shortened so the UAV stays at least
// 0.5 m from the first obstacle (or the ground) along the motion.
GestureDelta gesture_offset(const Scene& scene, const UavState& uav, Direction dir, double step);

// ---- Tracking -----------------------------------------------------------------

struct TrackGains {
  double k_yaw = 1.0;  // 1/s
  double k_pos = 0.8;  // 1/s
  int lost_threshold = 20;
  double v_max = 3.0;
};

struct TrackState {
  std::string target_id;
  PixelBox last_bbox;
  int lost_frames = 0;
  double standoff = objnav::kDefaultStandoff;
  std::optional<Vec3> last_position;  // world estimate from the last sighting
  std::optional<Vec3> reposition_goal;
};

// Initializes from a phrase through the mock grounding match.
TrackState track_init(const ViewFrame& frame, const std::string& instruction,
                      double standoff = objnav::kDefaultStandoff);
// Initializes from a click: the object whose bbox contains the pixel, smallest
// area first, then smallest id.
TrackState track_init(const ViewFrame& frame, const PixelTarget& click,
                      double standoff = objnav::kDefaultStandoff);

struct TrackCommand {
  Vec3 velocity = Vec3::Zero();
  double yaw_rate = 0.0;
};

// One control tick. Yaw rate turns toward the target (counter-clockwise
// positive, so a target right of center gives a negative rate); horizontal
// velocity closes the range error to the standoff. When the target is not in
// the frame and the line of sight to its last position is blocked, a clear
// point on the standoff circle around it becomes the reposition goal.
// Throws TargetLost once lost_frames exceeds the threshold.
TrackCommand track_step(TrackState& state, const ViewFrame& frame, const UavState& uav,
                        const World& world, const TrackGains& gains = {});

// First clear point of 8 on the standoff circle around `target`, stepping
// 45 degrees counter-clockwise from the current bearing (target to UAV).
std::optional<Vec3> reposition_candidate(const Scene& scene, const Vec3& target, const Vec3& uav,
                                         double standoff);

// ---- Landmark search and QA ---------------------------------------------------

// Heading from the UAV toward the landmark. Throws DegenerateGeometry when the
// horizontal distance is below 0.1 m.
double candidate_yaw(const sim::LandmarkNode& landmark, const UavState& uav,
                     const sim::GeoPoint& ref);

struct ViewCandidate {
  int k = 0;
  double yaw = 0.0;
  double score = 0.0;
  std::vector<std::string> visible_tags;
};

// Scores a view against landmark nouns.
class ViewScorer {
 public:
  virtual ~ViewScorer() = default;
  virtual double score(const std::vector<std::string>& nouns, const ViewFrame& frame,
                       const CameraModel& camera) = 0;
};

// Sum over visible objects of tag overlap weighted by 1 / (1 + |angle off axis|).
class MockScorer : public ViewScorer {
 public:
  double score(const std::vector<std::string>& nouns, const ViewFrame& frame,
               const CameraModel& camera) override;
};

class RemoteScorer : public ViewScorer {
 public:
  explicit RemoteScorer(std::string url, double timeout_s = 10.0)
      : url_(std::move(url)), timeout_s_(timeout_s) {}
  double score(const std::vector<std::string>& nouns, const ViewFrame& frame,
               const CameraModel& camera) override;

 private:
  std::string url_;
  double timeout_s_;
};

inline constexpr int kScanHalfSteps = 3;
inline constexpr double kScanStep = 10.0 * kPi / 180.0;

struct ScanResult {
  ViewCandidate best;
  ViewFrame frame;  // annotations seen from the best view
  std::vector<ViewCandidate> candidates;  // k = -3..3 in order
};

// Views at center_yaw + k * 10 degrees for k in -3..3 from the UAV position.
// Argmax score wins; ties go to smaller |k|, then smaller k. Throws
// NoInformativeView when every score is zero.
ScanResult scan_views(const World& world, const UavState& uav, const CameraModel& camera,
                      double center_yaw, const std::vector<std::string>& nouns,
                      ViewScorer& scorer);

// Question tokens with stopwords removed, in order of first appearance.
std::vector<std::string> extract_nouns(const std::string& text);

class QaBackend {
 public:
  virtual ~QaBackend() = default;
  virtual std::string answer(const std::string& question, const ViewFrame& frame,
                             const Scene& scene) = 0;
};

inline constexpr const char* kNoLandmarkAnswer = "no relevant landmark visible";

// Describes the visible landmark that best overlaps the question: its
// description followed by its orientation tag.
class MockQa : public QaBackend {
 public:
  std::string answer(const std::string& question, const ViewFrame& frame,
                     const Scene& scene) override;
};

class RemoteQa : public QaBackend {
 public:
  explicit RemoteQa(std::string url, double timeout_s = 10.0)
      : url_(std::move(url)), timeout_s_(timeout_s) {}
  std::string answer(const std::string& question, const ViewFrame& frame,
                     const Scene& scene) override;

 private:
  std::string url_;
  double timeout_s_;
};

std::string answer_question(const ViewFrame& frame, const std::string& question,
                            const Scene& scene, QaBackend& backend);

}  // namespace airstar::skills
