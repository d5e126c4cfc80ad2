#include "airstar/camera.hpp"

#include <cmath>
#include <sstream>

#include "airstar/error.hpp"

namespace airstar {

Extrinsic forward_looking_extrinsic() {
  Extrinsic e;
  // camera x = -body y, camera y = -body z, camera z = body x
  e.rotation << 0, -1, 0,
                0, 0, -1,
                1, 0, 0;
  return e;
}

void CameraModel::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "camera focal lengths must be > 0");
  }
  if (width <= 0 || height <= 0) {
    fail(ErrorCode::kInvalidArgument, "camera image dimensions must be > 0");
  }
  const Mat3& r = extrinsic.rotation;
  const double ortho_err = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > 1e-9 || std::abs(r.determinant() - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "camera extrinsic rotation is not a proper rotation (orthonormality error "
       << ortho_err << ")";
    fail(ErrorCode::kInvalidArgument, os.str());
  }
}

CameraPose CameraPose::from(const CameraModel& cam, const Vec3& position, double yaw) {
  const Mat3 world_from_body = yaw_rotation(yaw);
  const Mat3 body_from_camera = cam.extrinsic.rotation.transpose();
  // Camera origin in body frame: p_body = R^T (0 - t).
  const Vec3 cam_in_body = -(body_from_camera * cam.extrinsic.translation);
  CameraPose pose;
  pose.world_from_camera_rot = world_from_body * body_from_camera;
  pose.camera_center = world_from_body * cam_in_body + position;
  return pose;
}

std::optional<PixelDepth> project_camera(const CameraModel& cam, const Vec3& p_cam) {
  if (!(p_cam.z() > 0.0)) return std::nullopt;
  return PixelDepth{cam.fx * p_cam.x() / p_cam.z() + cam.cx,
                    cam.fy * p_cam.y() / p_cam.z() + cam.cy, p_cam.z()};
}

Vec3 backproject_camera(const CameraModel& cam, double u, double v, double depth) {
  return Vec3((u - cam.cx) / cam.fx * depth, (v - cam.cy) / cam.fy * depth, depth);
}

}  // namespace airstar
