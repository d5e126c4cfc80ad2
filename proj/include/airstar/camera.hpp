#pragma once

#include <optional>

#include "airstar/geometry.hpp"

namespace airstar {

// Rigid transform from the UAV body frame (x forward, y left, z up) to the
// camera frame (x right, y down, z forward): p_cam = rotation * p_body + translation.
struct Extrinsic {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  bool operator==(const Extrinsic&) const = default;
};

// Level, forward-looking mount: body forward maps onto the optical axis.
Extrinsic forward_looking_extrinsic();

struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;
  Extrinsic extrinsic;

  bool operator==(const CameraModel&) const = default;

  // Throws InvalidArgument unless fx, fy > 0, dims > 0 and the rotation is
  // orthonormal with det +1 (to 1e-9).
  void validate() const;

  bool in_image(double u, double v) const {
    return u >= 0.0 && v >= 0.0 && u < width && v < height;
  }
};

struct PixelDepth {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;  // camera z
};

// World <-> camera transforms for a camera carried by a UAV at `position`
// with heading `yaw`. Pitch and roll are always zero.
struct CameraPose {
  Mat3 world_from_camera_rot;
  Vec3 camera_center;

  static CameraPose from(const CameraModel& cam, const Vec3& position, double yaw);

  Vec3 to_camera(const Vec3& p_world) const {
    return world_from_camera_rot.transpose() * (p_world - camera_center);
  }
  Vec3 to_world(const Vec3& p_cam) const {
    return world_from_camera_rot * p_cam + camera_center;
  }
  Vec3 forward() const { return world_from_camera_rot.col(2); }
};

// Pinhole projection of a camera-frame point. Returns nullopt for z <= 0.
std::optional<PixelDepth> project_camera(const CameraModel& cam, const Vec3& p_cam);

// Inverse of project_camera for a given z-depth.
Vec3 backproject_camera(const CameraModel& cam, double u, double v, double depth);

// Unit-free ray direction (camera frame, z = 1) through pixel (u, v).
inline Vec3 pixel_ray(const CameraModel& cam, double u, double v) {
  return Vec3((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
}

}  // namespace airstar
