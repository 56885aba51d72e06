#pragma once

// Two-sphere eye model, head-mounted camera rig and target-grid synthesis.

#include <cstdint>
#include <vector>

#include "gaze3d/dataset.hpp"
#include "gaze3d/geometry.hpp"

namespace gaze3d {

/// Eyeball sphere and corneal sphere; the pupil is the center of their
/// intersection circle. Constants are millimeters.
struct TwoSphereEye {
  double eyeball_radius_mm = 11.5;
  double corneal_radius_mm = 7.8;
  double center_separation_mm = 4.7;
};

struct PupilGeometry {
  double offset_mm;         // eyeball center to intersection-circle center
  double circle_radius_mm;  // radius of the intersection circle
};

PupilGeometry derive_pupil_geometry(const TwoSphereEye& eye);

struct NoiseLevels {
  double pupil_px = 0.0;   // isotropic pixel noise on the 2D pupil
  double pupil_deg = 0.0;  // angular noise on the pupil pose
  double target_mm = 0.0;  // per-axis noise on target positions
};

struct SimRig {
  PinholeCamera scene_camera;
  PinholeCamera eye_camera;
  Vec3 eyeball_center = Vec3::Zero();  // scene frame, meters
  NoiseLevels noise;

  /// 1280x720 scene camera (f = 720 px) at the origin; 640x360 eye camera
  /// (f = 620 px) 35 mm in front of the eyeball and facing back at it;
  /// eyeball at (15, 35, -25) mm.
  static SimRig defaults();

  /// Places the eye camera at eyeball_center + offset with the given
  /// orientation relative to the scene camera.
  void place_eye_camera(const Vec3& offset_m, const EulerAngles& angles);

  void validate() const;
};

struct TargetGrid {
  double depth = 1.0;  // meters
  int rows = 5;
  int cols = 5;
  double width = 1.215;   // extent between outermost columns, meters
  double height = 0.687;  // extent between outermost rows, meters
  SampleRole role = SampleRole::Calibration;

  /// The test grid sitting at the cell centers of a calibration grid.
  static TargetGrid inner_of(const TargetGrid& calibration);
};

/// rows x cols points on z = depth, row-major, centered on the principal axis.
std::vector<Vec3> generate_target_grid(const TargetGrid& grid);

Ray gaze_toward(const SimRig& rig, const Vec3& target);

SimSample synthesize_sample(const SimRig& rig, const TwoSphereEye& eye, const Vec3& target,
                            double depth, SampleRole role, std::uint64_t seed);

struct DatasetLayout {
  std::vector<double> depths = {1.0, 1.25, 1.5, 1.75, 2.0};
  int calibration_rows = 5;
  int calibration_cols = 5;
  int test_rows = 4;
  int test_cols = 4;
  double width = 1.215;
  double height = 0.687;
};

/// Per depth: a calibration grid and the inner test grid. Sample seeds are
/// derived from `seed` and the sample's position in the dataset.
Dataset synthesize_dataset(const SimRig& rig, const TwoSphereEye& eye, const DatasetLayout& layout,
                           std::uint64_t seed);

/// SplitMix64 mix of a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace gaze3d
