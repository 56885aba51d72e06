#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "gaze3d/cli.hpp"
#include "gaze3d/dataset_io.hpp"
#include "gaze3d/eye_simulator.hpp"
#include "gaze3d/mappers.hpp"
#include "gaze3d/optimizer.hpp"

namespace gaze3d {

namespace {

bool check_pupil_geometry() {
  const auto g = derive_pupil_geometry(TwoSphereEye{});
  return std::abs(g.circle_radius_mm - 5.77) <= 0.05;
}

bool check_rotation_round_trip() {
  const EulerAngles a(0.3, -1.1, 2.4);
  const EulerAngles b = angles_from_rotation(rotation_from_angles(a));
  return (a.radians - b.radians).norm() < 1e-12;
}

bool check_projection_round_trip() {
  const SimRig rig = SimRig::defaults();
  const Vec3 p(0.4, -0.2, 1.7);
  const Vec2 px = project(rig.scene_camera, p);
  return point_ray_distance(back_project(rig.scene_camera, px), p) < 1e-12;
}

bool check_rosenbrock() {
  ResidualProblem problem;
  problem.num_params = 2;
  problem.residuals = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(2);
    r << 10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0];
    return r;
  };
  const FitReport rep = solve_lm(problem, Eigen::VectorXd(Eigen::Vector2d(-1.2, 1.0)));
  return (rep.params - Eigen::Vector2d(1.0, 1.0)).norm() < 1e-6 &&
         costs_monotone(rep.accepted_costs);
}

bool check_3d_to_3d_recovery() {
  const Dataset data = synthesize_dataset(SimRig::defaults(), TwoSphereEye{}, DatasetLayout{}, 7);
  std::vector<Vec3> poses;
  std::vector<Vec3> targets;
  for (const auto& s : data.calibration) {
    if (!same_depth(s.depth, 1.0)) continue;
    poses.push_back(*s.pupil_pose);
    targets.push_back(s.target);
  }
  const Model3Dto3D m = fit_3d_to_3d(poses, targets);
  return (m.eyeball_center - *data.eyeball_center).norm() < 1e-3;
}

bool check_dataset_round_trip() {
  const Dataset data = synthesize_dataset(SimRig::defaults(), TwoSphereEye{}, DatasetLayout{}, 3);
  std::ostringstream first;
  write_dataset(first, data);
  std::istringstream in(first.str());
  std::ostringstream second;
  write_dataset(second, read_dataset(in));
  return first.str() == second.str();
}

}  // namespace

bool run_selftest(std::ostream& out) {
  const std::pair<const char*, std::function<bool()>> checks[] = {
      {"pupil circle radius", check_pupil_geometry},
      {"euler angle round trip", check_rotation_round_trip},
      {"project/back-project round trip", check_projection_round_trip},
      {"levenberg-marquardt rosenbrock", check_rosenbrock},
      {"3d-to-3d eyeball recovery", check_3d_to_3d_recovery},
      {"dataset round trip", check_dataset_round_trip},
  };
  bool all = true;
  for (const auto& [name, fn] : checks) {
    bool ok = false;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      out << "  (" << e.what() << ")\n";
    }
    out << (ok ? "ok   " : "FAIL ") << name << '\n';
    all = all && ok;
  }
  return all;
}

}  // namespace gaze3d
