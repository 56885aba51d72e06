#pragma once

// Vector, rotation and pinhole-camera primitives.
//
// Frames: x right, y down, z forward along the optical axis. World
// quantities are meters, image quantities are pixels.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "gaze3d/error.hpp"

namespace gaze3d {

template <typename Scalar>
using Vec2T = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3T = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3T = Eigen::Matrix<Scalar, 3, 3>;

using Vec2 = Vec2T<double>;
using Vec3 = Vec3T<double>;
using Mat3 = Mat3T<double>;

template <typename Scalar>
constexpr Scalar kPi = std::numbers::pi_v<Scalar>;

template <typename Scalar>
constexpr Scalar rad_to_deg(Scalar rad) {
  return rad * Scalar(180) / kPi<Scalar>;
}

template <typename Scalar>
constexpr Scalar deg_to_rad(Scalar deg) {
  return deg * kPi<Scalar> / Scalar(180);
}

/// Wraps an angle into [-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar a) {
  if (a >= -kPi<Scalar> && a <= kPi<Scalar>) return a;
  Scalar w = std::remainder(a, Scalar(2) * kPi<Scalar>);
  return std::clamp(w, -kPi<Scalar>, kPi<Scalar>);
}

/// Half-line with unit direction. Points on it are origin + lambda * direction.
template <typename Scalar>
struct RayT {
  Vec3T<Scalar> origin = Vec3T<Scalar>::Zero();
  Vec3T<Scalar> direction = Vec3T<Scalar>::UnitZ();

  /// Builds a ray from an arbitrary nonzero direction, normalizing it.
  static RayT through(const Vec3T<Scalar>& origin, const Vec3T<Scalar>& dir) {
    const Scalar n = dir.norm();
    if (!(n > Scalar(0))) throw Error(ErrorCode::ZeroVector, "ray direction is zero");
    return RayT{origin, dir / n};
  }

  Vec3T<Scalar> at(Scalar lambda) const { return origin + lambda * direction; }
};
using Ray = RayT<double>;

/// Three rotation angles (radians), each in [-pi, pi].
template <typename Scalar>
struct EulerAnglesT {
  Vec3T<Scalar> radians = Vec3T<Scalar>::Zero();

  EulerAnglesT() = default;
  explicit EulerAnglesT(const Vec3T<Scalar>& r) : radians(r) {}
  EulerAnglesT(Scalar x, Scalar y, Scalar z) : radians(x, y, z) {}

  bool in_range() const {
    return (radians.array().abs() <= kPi<Scalar>).all();
  }
  EulerAnglesT wrapped() const {
    return EulerAnglesT(radians.unaryExpr([](Scalar a) { return wrap_angle(a); }));
  }
};
using EulerAngles = EulerAnglesT<double>;

/// Intrinsic X-then-Y-then-Z Euler rotation: R = Rx(a.x) * Ry(a.y) * Rz(a.z).
template <typename Scalar>
Mat3T<Scalar> rotation_from_angles(const EulerAnglesT<Scalar>& a) {
  if (!a.in_range()) {
    throw Error(ErrorCode::AngleOutOfRange, "rotation angle outside [-pi, pi]");
  }
  using AA = Eigen::AngleAxis<Scalar>;
  return (AA(a.radians.x(), Vec3T<Scalar>::UnitX()) *
          AA(a.radians.y(), Vec3T<Scalar>::UnitY()) *
          AA(a.radians.z(), Vec3T<Scalar>::UnitZ()))
      .toRotationMatrix();
}

/// Inverse of rotation_from_angles. Returns one of the equivalent angle
/// triples; the rotation action is preserved, the triple itself need not be.
template <typename Scalar>
EulerAnglesT<Scalar> angles_from_rotation(const Mat3T<Scalar>& r) {
  const Scalar sy = std::clamp(r(0, 2), Scalar(-1), Scalar(1));
  const Scalar y = std::asin(sy);
  Scalar x, z;
  if (std::abs(sy) < Scalar(1) - Scalar(1e-12)) {
    x = std::atan2(-r(1, 2), r(2, 2));
    z = std::atan2(-r(0, 1), r(0, 0));
  } else {
    // gimbal lock: only x + z (or x - z) is observable
    x = std::atan2(r(2, 1), r(1, 1));
    z = Scalar(0);
  }
  return EulerAnglesT<Scalar>(x, y, z);
}

/// Rigid transform from a local frame into its parent: p_parent = R p_local + t.
template <typename Scalar>
struct RigidPoseT {
  Mat3T<Scalar> rotation = Mat3T<Scalar>::Identity();
  Vec3T<Scalar> translation = Vec3T<Scalar>::Zero();

  Vec3T<Scalar> to_parent(const Vec3T<Scalar>& p) const { return rotation * p + translation; }
  Vec3T<Scalar> to_local(const Vec3T<Scalar>& p) const {
    return rotation.transpose() * (p - translation);
  }
};
using RigidPose = RigidPoseT<double>;

/// Pinhole camera. `pose` maps camera coordinates into the scene-camera
/// frame; the scene camera itself carries the identity pose.
template <typename Scalar>
struct PinholeCameraT {
  Vec2T<Scalar> focal = Vec2T<Scalar>(1, 1);
  Vec2T<Scalar> principal = Vec2T<Scalar>::Zero();
  Eigen::Vector2i resolution = Eigen::Vector2i(1, 1);
  RigidPoseT<Scalar> pose;

  void validate() const {
    if (!(focal.array() > Scalar(0)).all()) {
      throw Error(ErrorCode::InvalidCamera, "focal lengths must be positive");
    }
    if (!(resolution.array() > 0).all()) {
      throw Error(ErrorCode::InvalidCamera, "resolution must be positive");
    }
    if (!contains(principal)) {
      throw Error(ErrorCode::InvalidCamera, "principal point outside the image");
    }
  }

  bool contains(const Vec2T<Scalar>& px) const {
    return px.x() >= Scalar(0) && px.y() >= Scalar(0) &&
           px.x() <= Scalar(resolution.x()) && px.y() <= Scalar(resolution.y());
  }
};
using PinholeCamera = PinholeCameraT<double>;

/// Projects a point given in the camera's own frame.
template <typename Scalar>
Vec2T<Scalar> project_local(const PinholeCameraT<Scalar>& cam, const Vec3T<Scalar>& p) {
  if (p.z() <= Scalar(1e-12)) {
    throw Error(ErrorCode::NonPositiveDepth, "point at or behind the camera plane");
  }
  return cam.principal + cam.focal.cwiseProduct(p.template head<2>() / p.z());
}

/// Projects a point given in the scene frame.
template <typename Scalar>
Vec2T<Scalar> project(const PinholeCameraT<Scalar>& cam, const Vec3T<Scalar>& point) {
  return project_local(cam, cam.pose.to_local(point));
}

/// Ray (scene frame) of all points imaging to `pixel`.
template <typename Scalar>
RayT<Scalar> back_project(const PinholeCameraT<Scalar>& cam, const Vec2T<Scalar>& pixel) {
  const Vec2T<Scalar> xy = (pixel - cam.principal).cwiseQuotient(cam.focal);
  const Vec3T<Scalar> local(xy.x(), xy.y(), Scalar(1));
  return RayT<Scalar>{cam.pose.translation, (cam.pose.rotation * local).normalized()};
}

/// Perpendicular distance from `point` to the infinite line carrying `ray`.
template <typename Scalar>
Scalar point_ray_distance(const RayT<Scalar>& ray, const Vec3T<Scalar>& point) {
  // unit direction, so |d x (p - o)| needs no division by |d|
  assert(std::abs(ray.direction.norm() - Scalar(1)) < Scalar(1e-9));
  return ray.direction.cross(point - ray.origin).norm();
}

/// Angle between two nonzero vectors, in degrees within [0, 180].
template <typename Scalar>
Scalar angle_between(const Vec3T<Scalar>& a, const Vec3T<Scalar>& b) {
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (!(na > Scalar(0)) || !(nb > Scalar(0))) {
    throw Error(ErrorCode::ZeroVector, "angle_between with zero vector");
  }
  const Scalar c = std::clamp(a.dot(b) / (na * nb), Scalar(-1), Scalar(1));
  return rad_to_deg(std::acos(c));
}

/// Intersection of `ray` with the fronto-parallel plane z = depth.
template <typename Scalar>
Vec3T<Scalar> intersect_ray_depth_plane(const RayT<Scalar>& ray, Scalar depth) {
  if (std::abs(ray.direction.z()) < Scalar(1e-9)) {
    throw Error(ErrorCode::ParallelToPlane, "ray parallel to depth plane");
  }
  const Scalar lambda = (depth - ray.origin.z()) / ray.direction.z();
  if (lambda <= Scalar(0)) {
    throw Error(ErrorCode::BehindOrigin, "depth plane lies behind the ray origin");
  }
  Vec3T<Scalar> p = ray.at(lambda);
  p.z() = depth;
  return p;
}

}  // namespace gaze3d
