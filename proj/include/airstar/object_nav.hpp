#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "airstar/camera.hpp"
#include "airstar/world.hpp"

namespace airstar::objnav {

using sim::UavState;
using sim::ViewFrame;
using sim::VisibleObject;

enum class TargetSource { kGroundingBackend, kUserClick };

const char* to_string(TargetSource s);

struct PixelTarget {
  double u = 0.0;
  double v = 0.0;
  double confidence = 1.0;
  TargetSource source = TargetSource::kGroundingBackend;
  std::string object_id;  // empty when the backend does not say

  bool operator==(const PixelTarget&) const = default;
};

// Pixel grounding of a phrase in the current view. Implementations return an
// in-bounds pixel or throw NoTarget; remote ones throw BackendUnavailable.
class GroundingBackend {
 public:
  virtual ~GroundingBackend() = default;
  virtual PixelTarget ground(const std::string& instruction, const ViewFrame& frame) = 0;
};

// Tag matching over the frame annotations: the object with the most
// instruction tokens among its class and landmark tags wins; ties go to the
// larger bbox, then the smaller id. Returns the bbox center.
class MockGrounding : public GroundingBackend {
 public:
  PixelTarget ground(const std::string& instruction, const ViewFrame& frame) override;
};

class RemoteGrounding : public GroundingBackend {
 public:
  explicit RemoteGrounding(std::string url, double timeout_s = 10.0)
      : url_(std::move(url)), timeout_s_(timeout_s) {}
  PixelTarget ground(const std::string& instruction, const ViewFrame& frame) override;

 private:
  std::string url_;
  double timeout_s_;
};

// The annotation list sent to remote backends: [{id, tags, bbox, depth}].
nlohmann::json annotations_json(const ViewFrame& frame);

// Validates the frame and backend result (in-bounds pixel).
PixelTarget ground_target(const std::string& instruction, const ViewFrame& frame,
                          GroundingBackend& backend);

// Back-projects a pixel at z-depth `depth` to a world point through the
// camera extrinsic and the UAV pose. Throws InvalidDepth for non-finite or
// non-positive depth.
Vec3 pixel_to_world(const PixelTarget& p, double depth, const CameraModel& camera,
                    const UavState& uav);

// Lower median of the finite depths in the 3x3 window around the pixel.
// Throws InvalidDepth when every sample is infinite.
double window_depth(const ViewFrame& frame, double u, double v);

enum class Relation { kAheadOf, kBehind, kAbove };

// Relation word in an instruction ("ahead of", "in front of", "behind",
// "above", "over"); ahead-of is the default.
Relation parse_relation(const std::string& instruction);

inline constexpr double kDefaultStandoff = 2.0;
inline constexpr double kMinGoalAltitude = 2.0;

struct ObjectGoal {
  Vec3 goal;
  Vec3 target;  // back-projected surface point
  PixelTarget pixel;
  Relation relation = Relation::kAheadOf;
};

// Ground, sample depth, back-project, then place the goal `standoff` meters
// from the target: toward the UAV along the horizontal line of sight (ahead
// of, never past the UAV), away from it (behind) or straight up (above).
// Goal z is clamped to >= z_min.
ObjectGoal object_nav_goal(const std::string& instruction, const ViewFrame& frame,
                           const CameraModel& camera, const UavState& uav,
                           GroundingBackend& backend, double standoff = kDefaultStandoff,
                           double z_min = kMinGoalAltitude);

}  // namespace airstar::objnav
