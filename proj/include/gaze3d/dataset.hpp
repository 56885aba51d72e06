#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "gaze3d/geometry.hpp"

namespace gaze3d {

enum class SampleRole { Calibration, Test };

constexpr std::string_view to_string(SampleRole role) {
  return role == SampleRole::Calibration ? "calibration" : "test";
}

/// One observation: eye-camera measurements paired with a fixation target.
/// Recorded data may lack the pupil pose, the scene-image target and the
/// ground-truth gaze ray.
struct SimSample {
  Vec2 pupil_px = Vec2::Zero();
  std::optional<Vec3> pupil_pose;  // unit, eye-camera frame
  Vec3 target = Vec3::Zero();      // scene frame, meters
  std::optional<Vec2> target_px;   // scene image
  std::optional<Ray> gaze;         // ground truth, scene frame
  double depth = 0.0;              // plane label, meters
  SampleRole role = SampleRole::Calibration;
};

enum class DataSource { Simulated, Recorded };

struct Dataset {
  DataSource source = DataSource::Simulated;
  PinholeCamera scene_camera;
  PinholeCamera eye_camera;
  /// Ground-truth eyeball center (scene frame), known only for simulations.
  std::optional<Vec3> eyeball_center;
  std::vector<SimSample> calibration;
  std::vector<SimSample> test;
};

}  // namespace gaze3d
