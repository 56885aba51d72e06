#include "gaze3d/eye_simulator.hpp"

#include <cmath>
#include <random>
#include <string>

namespace gaze3d {

PupilGeometry derive_pupil_geometry(const TwoSphereEye& eye) {
  const double big = eye.eyeball_radius_mm;
  const double small = eye.corneal_radius_mm;
  const double d = eye.center_separation_mm;
  if (!(big > 0 && small > 0 && d > std::abs(big - small) && d < big + small)) {
    throw Error(ErrorCode::NoIntersection, "eyeball and corneal spheres do not intersect");
  }
  const double offset = (d * d + big * big - small * small) / (2.0 * d);
  return {offset, std::sqrt(big * big - offset * offset)};
}

SimRig SimRig::defaults() {
  SimRig rig;
  rig.scene_camera.focal = Vec2(720.0, 720.0);
  rig.scene_camera.principal = Vec2(640.0, 360.0);
  rig.scene_camera.resolution = Eigen::Vector2i(1280, 720);

  rig.eye_camera.focal = Vec2(620.0, 620.0);
  rig.eye_camera.principal = Vec2(320.0, 180.0);
  rig.eye_camera.resolution = Eigen::Vector2i(640, 360);

  rig.eyeball_center = Vec3(0.015, 0.035, -0.025);
  rig.place_eye_camera(Vec3(0.0, 0.0, 0.035), EulerAngles(0.0, kPi<double>, 0.0));
  return rig;
}

void SimRig::place_eye_camera(const Vec3& offset_m, const EulerAngles& angles) {
  eye_camera.pose.rotation = rotation_from_angles(angles);
  eye_camera.pose.translation = eyeball_center + offset_m;
}

void SimRig::validate() const {
  scene_camera.validate();
  eye_camera.validate();
  if (eye_camera.pose.to_local(eyeball_center).z() <= 0.0) {
    throw Error(ErrorCode::InvalidCamera, "eye camera does not face the eyeball");
  }
  if (noise.pupil_px < 0 || noise.pupil_deg < 0 || noise.target_mm < 0) {
    throw Error(ErrorCode::ConfigError, "noise levels must be non-negative");
  }
}

TargetGrid TargetGrid::inner_of(const TargetGrid& calibration) {
  TargetGrid g = calibration;
  g.rows = calibration.rows - 1;
  g.cols = calibration.cols - 1;
  g.width = calibration.width * (g.cols - 1) / (calibration.cols - 1);
  g.height = calibration.height * (g.rows - 1) / (calibration.rows - 1);
  g.role = SampleRole::Test;
  return g;
}

std::vector<Vec3> generate_target_grid(const TargetGrid& grid) {
  if (grid.rows < 2 || grid.cols < 2 || !(grid.depth > 0)) {
    throw Error(ErrorCode::ConfigError, "grid needs rows, cols >= 2 and positive depth");
  }
  std::vector<Vec3> points;
  points.reserve(static_cast<std::size_t>(grid.rows * grid.cols));
  for (int r = 0; r < grid.rows; ++r) {
    const double y = grid.height * (double(r) / (grid.rows - 1) - 0.5);
    for (int c = 0; c < grid.cols; ++c) {
      const double x = grid.width * (double(c) / (grid.cols - 1) - 0.5);
      points.emplace_back(x, y, grid.depth);
    }
  }
  return points;
}

Ray gaze_toward(const SimRig& rig, const Vec3& target) {
  const Vec3 d = target - rig.eyeball_center;
  if (d.norm() < 1e-12) {
    throw Error(ErrorCode::DegenerateTarget, "target coincides with the eyeball center");
  }
  return Ray{rig.eyeball_center, d.normalized()};
}

namespace {

Vec3 perturb_direction(const Vec3& n, double sigma_rad, std::mt19937_64& rng) {
  if (sigma_rad <= 0) return n;
  std::normal_distribution<double> normal(0.0, sigma_rad);
  const Vec3 e1 = n.unitOrthogonal();
  const Vec3 e2 = n.cross(e1);
  return (n + normal(rng) * e1 + normal(rng) * e2).normalized();
}

}  // namespace

SimSample synthesize_sample(const SimRig& rig, const TwoSphereEye& eye, const Vec3& target,
                            double depth, SampleRole role, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SimSample s;
  s.depth = depth;
  s.role = role;
  s.gaze = gaze_toward(rig, target);

  if (rig.scene_camera.pose.to_local(target).z() <= 1e-12) {
    throw Error(ErrorCode::TargetNotVisible, "target behind the scene camera");
  }
  const Vec2 target_px = project(rig.scene_camera, target);
  if (!rig.scene_camera.contains(target_px)) {
    throw Error(ErrorCode::TargetNotVisible, "target outside the scene image");
  }
  s.target_px = target_px;

  // optical axis rotates rigidly about the eyeball center
  const double offset_m = derive_pupil_geometry(eye).offset_mm * 1e-3;
  const Vec3 pupil_center = rig.eyeball_center + offset_m * s.gaze->direction;
  const Vec3 pupil_local = rig.eye_camera.pose.to_local(pupil_center);
  if (pupil_local.z() <= 1e-12) {
    throw Error(ErrorCode::PupilNotVisible, "pupil behind the eye camera");
  }
  Vec2 pupil_px = project_local(rig.eye_camera, pupil_local);
  if (!rig.eye_camera.contains(pupil_px)) {
    throw Error(ErrorCode::PupilNotVisible, "pupil outside the eye image");
  }

  const Vec3 pose = rig.eye_camera.pose.rotation.transpose() * s.gaze->direction;

  // noise draws happen in a fixed order so a seed fully determines a sample
  if (rig.noise.pupil_px > 0) {
    std::normal_distribution<double> normal(0.0, rig.noise.pupil_px);
    pupil_px.x() += normal(rng);
    pupil_px.y() += normal(rng);
  }
  s.pupil_px = pupil_px;
  s.pupil_pose = perturb_direction(pose, deg_to_rad(rig.noise.pupil_deg), rng);
  s.target = target;
  if (rig.noise.target_mm > 0) {
    std::normal_distribution<double> normal(0.0, rig.noise.target_mm * 1e-3);
    for (int i = 0; i < 3; ++i) s.target[i] += normal(rng);
  }
  return s;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Dataset synthesize_dataset(const SimRig& rig, const TwoSphereEye& eye, const DatasetLayout& layout,
                           std::uint64_t seed) {
  if (layout.depths.empty()) throw Error(ErrorCode::ConfigError, "no depths requested");
  if (layout.calibration_cols < 2 || layout.calibration_rows < 2) {
    throw Error(ErrorCode::ConfigError, "calibration grid needs at least 2x2 points");
  }
  rig.validate();

  Dataset data;
  data.source = DataSource::Simulated;
  data.scene_camera = rig.scene_camera;
  data.eye_camera = rig.eye_camera;
  data.eyeball_center = rig.eyeball_center;

  std::uint64_t index = 0;
  for (double depth : layout.depths) {
    TargetGrid calib{depth, layout.calibration_rows, layout.calibration_cols, layout.width,
                     layout.height, SampleRole::Calibration};
    // the test grid shares the calibration spacing, offset to the cell centers
    TargetGrid test = calib;
    test.rows = layout.test_rows;
    test.cols = layout.test_cols;
    test.width = layout.width * (layout.test_cols - 1) / (layout.calibration_cols - 1);
    test.height = layout.height * (layout.test_rows - 1) / (layout.calibration_rows - 1);
    test.role = SampleRole::Test;

    for (const Vec3& t : generate_target_grid(calib)) {
      data.calibration.push_back(synthesize_sample(rig, eye, t, depth, SampleRole::Calibration,
                                                   derive_seed(seed, index++)));
    }
    for (const Vec3& t : generate_target_grid(test)) {
      data.test.push_back(
          synthesize_sample(rig, eye, t, depth, SampleRole::Test, derive_seed(seed, index++)));
    }
  }
  return data;
}

}  // namespace gaze3d
