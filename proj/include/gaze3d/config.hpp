#pragma once

// Experiment configuration (JSON). Every key is optional; unknown keys are
// rejected with the dotted path of the offending key.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gaze3d/eye_simulator.hpp"
#include "gaze3d/evaluation.hpp"
#include "gaze3d/mappers.hpp"

namespace gaze3d {

struct CameraConfig {
  Vec2 focal = Vec2::Zero();
  Vec2 principal = Vec2::Zero();
  Eigen::Vector2i resolution = Eigen::Vector2i::Zero();
};

struct OutputPaths {
  std::filesystem::path dataset = "out/dataset.jsonl";
  std::filesystem::path model = "out/model.txt";
  std::filesystem::path results_csv = "out/results.csv";
  std::filesystem::path offsets_csv;
  std::filesystem::path summary_csv;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  CameraConfig scene_camera;
  CameraConfig eye_camera;
  Vec3 eye_camera_offset = Vec3(0.0, 0.0, 0.035);  // from the eyeball center, meters
  EulerAngles eye_camera_angles = EulerAngles(0.0, kPi<double>, 0.0);
  Vec3 eyeball_center = Vec3(0.015, 0.035, -0.025);
  TwoSphereEye eye;
  DatasetLayout layout;
  NoiseLevels noise;
  std::vector<MapperKind> mappers = {MapperKind::TwoDToTwoD, MapperKind::TwoDToThreeD,
                                     MapperKind::ThreeDToThreeD};
  int k_min = 1;
  int k_max = 5;
  GazeFitOptions fit;
  OutputPaths output;

  ExperimentConfig();

  /// Throws ConfigError describing the first invalid field.
  void validate() const;
  SimRig build_rig() const;
  SweepOptions sweep_options() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_string(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Comma-separated mapper ids, e.g. "2d2d,3d3d".
std::vector<MapperKind> parse_mapper_list(const std::string& text);
/// Comma-separated positive depths in meters.
std::vector<double> parse_depth_list(const std::string& text);

}  // namespace gaze3d
