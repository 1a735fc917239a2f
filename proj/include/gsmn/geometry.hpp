#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "gsmn/common.hpp"
#include "gsmn/nn/spatial.hpp"

namespace gsmn {

// Agent pose: 2-D position, fixed altitude, yaw in (-pi, pi].
// Yaw 0 looks along world +x; positive yaw turns counter-clockwise.
struct Pose {
  Vec2 p;
  double altitude = 5.0;
  double yaw = 0.0;
};

namespace geo {

// Pinhole camera with a fixed downward pitch, rigidly mounted at the agent's
// position and altitude. Pixel coordinates are continuous with (0,0) at the
// top-left image corner; pixel (i,j) covers [j, j+1) x [i, i+1).
struct CameraModel {
  int width = 128;
  int height = 72;
  double hfov_rad = deg2rad(90.0);
  double pitch_rad = deg2rad(-30.0);  // negative pitches the optical axis below horizontal

  double fx() const { return (width / 2.0) / std::tan(hfov_rad / 2.0); }
  double fy() const { return fx(); }
  double cx() const { return width / 2.0; }
  double cy() const { return height / 2.0; }

  Eigen::Matrix3d intrinsics() const {
    Eigen::Matrix3d K;
    K << fx(), 0, cx(), 0, fy(), cy(), 0, 0, 1;
    return K;
  }
};

// Rigid camera-to-world transform. Camera frame: +z along the optical axis,
// +x to the right in the image, +y down in the image.
struct CameraToWorld {
  Eigen::Matrix3d rotation;
  Eigen::Vector3d translation;

  Eigen::Vector3d apply(const Eigen::Vector3d& v) const { return rotation * v + translation; }
  CameraToWorld inverse() const { return {rotation.transpose(), -(rotation.transpose() * translation)}; }
};

// Body frame: +x forward, +y left, +z up, origin at the agent position.
inline CameraToWorld body_to_world(const Pose& pose) {
  Eigen::Matrix3d R;
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  R << c, -s, 0, s, c, 0, 0, 0, 1;
  return {R, Eigen::Vector3d(pose.p.x, pose.p.y, pose.altitude)};
}

// Fixed mounting: camera-to-body rotation for a camera looking forward,
// pitched down by -pitch_rad from horizontal.
inline Eigen::Matrix3d mount_rotation(double pitch_rad) {
  const double down = -pitch_rad;
  const double c = std::cos(down), s = std::sin(down);
  Eigen::Matrix3d R;
  R.col(0) = Eigen::Vector3d(0, -1, 0);        // image right
  R.col(1) = Eigen::Vector3d(-s, 0, -c);       // image down
  R.col(2) = Eigen::Vector3d(c, 0, -s);        // optical axis
  return R;
}

inline CameraToWorld camera_to_world(const Pose& pose, const CameraModel& cam) {
  const CameraToWorld body = body_to_world(pose);
  return {body.rotation * mount_rotation(cam.pitch_rad), body.translation};
}

// Intersect the ray through a pixel with the ground plane z = 0.
// Returns nullopt for rays at or above the horizon (never reach the ground).
inline std::optional<Vec2> raycast_ground(double px, double py, const CameraModel& cam,
                                          const CameraToWorld& T) {
  const Eigen::Vector3d ray_cam((px - cam.cx()) / cam.fx(), (py - cam.cy()) / cam.fy(), 1.0);
  const Eigen::Vector3d d = T.rotation * ray_cam;
  constexpr double kMinSlope = 1e-9;
  if (d.z() >= -kMinSlope) return std::nullopt;
  const double t = -T.translation.z() / d.z();
  if (t <= 0.0) return std::nullopt;
  return Vec2{T.translation.x() + t * d.x(), T.translation.y() + t * d.y()};
}

// Project a world point into the image. Returns nullopt if behind the camera.
inline std::optional<Vec2> world_to_pixel(const Vec2& ground, const CameraModel& cam,
                                          const CameraToWorld& T) {
  const CameraToWorld inv = T.inverse();
  const Eigen::Vector3d pc = inv.apply(Eigen::Vector3d(ground.x, ground.y, 0.0));
  if (pc.z() <= 1e-9) return std::nullopt;
  return Vec2{cam.fx() * pc.x() / pc.z() + cam.cx(), cam.fy() * pc.y() / pc.z() + cam.cy()};
}

inline bool pixel_in_image(const Vec2& px, const CameraModel& cam) {
  return px.x >= 0.0 && px.x < double(cam.width) && px.y >= 0.0 && px.y < double(cam.height);
}

// Ground hits for every cell of a (Hf x Wf) feature map whose cells tile the
// image in f_scale x f_scale pixel patches; each hit uses the patch center ray.
inline std::vector<nn::GroundHit> feature_ground_hits(const Pose& pose, const CameraModel& cam,
                                                      int feat_h, int feat_w, int f_scale) {
  const CameraToWorld T = camera_to_world(pose, cam);
  std::vector<nn::GroundHit> hits(size_t(feat_h) * size_t(feat_w));
  for (int r = 0; r < feat_h; ++r)
    for (int c = 0; c < feat_w; ++c) {
      const double px = (c + 0.5) * f_scale;
      const double py = (r + 0.5) * f_scale;
      if (auto p = raycast_ground(px, py, cam, T)) {
        nn::GroundHit& h = hits[size_t(r) * size_t(feat_w) + size_t(c)];
        h.valid = true;
        h.x = p->x;
        h.y = p->y;
      }
    }
  return hits;
}

}  // namespace geo
}  // namespace gsmn
