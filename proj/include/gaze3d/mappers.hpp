#pragma once

// The three eye-to-scene calibration mappings:
//   2D-to-2D: polynomial regression from pupil pixels to scene pixels.
//   2D-to-3D: polynomial regression from pupil pixels to polar gaze angles,
//             jointly fitted with the eyeball center.
//   3D-to-3D: rotation + eyeball center aligning pupil poses with targets.

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gaze3d/geometry.hpp"
#include "gaze3d/optimizer.hpp"

namespace gaze3d {

/// (1, u, v, uv, u^2, v^2, u^2 v^2)
using PolyFeature = Eigen::Matrix<double, 7, 1>;
/// Maps a PolyFeature (as a row) to two outputs.
using PolyWeights = Eigen::Matrix<double, 7, 2>;

PolyFeature poly_features(const Vec2& p);

/// Affine map of eye-image pixels onto [-1, 1]^2.
struct PupilNormalization {
  double width = 2.0;
  double height = 2.0;

  static PupilNormalization for_camera(const PinholeCamera& eye_camera) {
    return {double(eye_camera.resolution.x()), double(eye_camera.resolution.y())};
  }
  Vec2 apply(const Vec2& px) const {
    return Vec2(2.0 * px.x() / width - 1.0, 2.0 * px.y() / height - 1.0);
  }
};

/// Summary of a nonlinear fit.
struct FitSummary {
  double initial_cost = 0;
  double final_cost = 0;
  int iterations = 0;
  Termination termination = Termination::MaxIterations;
  std::vector<double> accepted_costs;

  static FitSummary from(const FitReport& r) {
    return {r.initial_cost, r.cost, r.iterations, r.termination, r.accepted_costs};
  }
};

struct GazeFitOptions {
  /// Normalize (t_i - e) inside the cross-product residual so every sample
  /// contributes a sine-of-angle term. The default raw offset makes each
  /// residual the target-to-ray distance in meters. Normalized residuals let
  /// the 2D-to-3D cost keep decreasing as e recedes when calibration planes
  /// are close together.
  bool normalize_residuals = false;
  /// With coplanar targets the eyeball center is unobservable (the 2D-to-3D
  /// cost keeps falling as e recedes from the plane). When set, e stays at
  /// its initialization for such data and only the weights are fitted.
  bool hold_center_when_coplanar = true;
  LMSettings lm;
};

struct Model2Dto2D {
  PolyWeights weights = PolyWeights::Zero();
  PupilNormalization pupil_norm;
  PinholeCamera scene_camera;
};

struct Model2Dto3D {
  PolyWeights weights = PolyWeights::Zero();  // feature -> (theta, phi)
  Vec3 eyeball_center = Vec3::Zero();
  PupilNormalization pupil_norm;
  std::optional<FitSummary> fit;
};

struct Model3Dto3D {
  EulerAngles angles;
  Vec3 eyeball_center = Vec3::Zero();
  std::optional<FitSummary> fit;

  Mat3 rotation() const { return rotation_from_angles(angles); }
};

/// Unit gaze direction (sin t, cos t sin p, cos t cos p) for angles (t, p).
Vec3 polar_to_direction(const Vec2& angles);
/// Inverse of polar_to_direction for any nonzero vector.
Vec2 direction_to_polar(const Vec3& v);

// 2D-to-2D ----------------------------------------------------------------

Model2Dto2D fit_2d_to_2d(std::span<const Vec2> pupil_px, std::span<const Vec2> target_px,
                         const PupilNormalization& norm, const PinholeCamera& scene_camera);
Vec2 predict_2d_to_2d(const Model2Dto2D& model, const Vec2& pupil_px);
/// Back-projected scene-camera ray of the 2D prediction.
Ray predict_2d_to_2d_ray(const Model2Dto2D& model, const Vec2& pupil_px);
/// Sum of squared pixel residuals of `weights` on the given data.
double cost_2d_to_2d(const PolyWeights& weights, std::span<const Vec2> pupil_px,
                     std::span<const Vec2> target_px, const PupilNormalization& norm);

// 2D-to-3D ----------------------------------------------------------------

Model2Dto3D fit_2d_to_3d(std::span<const Vec2> pupil_px, std::span<const Vec3> targets,
                         const PupilNormalization& norm, const GazeFitOptions& options = {});
Ray predict_2d_to_3d(const Model2Dto3D& model, const Vec2& pupil_px);
/// Linear-regression initialization from the targets' polar angles seen from the origin.
PolyWeights initial_weights_2d_to_3d(std::span<const Vec2> pupil_px, std::span<const Vec3> targets,
                                     const PupilNormalization& norm);
double cost_2d_to_3d(const PolyWeights& weights, const Vec3& eyeball_center,
                     std::span<const Vec2> pupil_px, std::span<const Vec3> targets,
                     const PupilNormalization& norm, bool normalize_residuals);

// 3D-to-3D ----------------------------------------------------------------

/// Initial orientation: eye and scene cameras facing opposite directions.
inline EulerAngles initial_angles_3d_to_3d() { return EulerAngles(0.0, kPi<double>, 0.0); }

Model3Dto3D fit_3d_to_3d(std::span<const Vec3> pupil_pose, std::span<const Vec3> targets,
                         const GazeFitOptions& options = {});
Ray predict_3d_to_3d(const Model3Dto3D& model, const Vec3& pupil_pose);
double cost_3d_to_3d(const EulerAngles& angles, const Vec3& eyeball_center,
                     std::span<const Vec3> pupil_pose, std::span<const Vec3> targets,
                     bool normalize_residuals);

}  // namespace gaze3d
