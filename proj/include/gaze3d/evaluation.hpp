#pragma once

// Angular-error metrics and the calibration-depth experiments.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gaze3d/dataset.hpp"
#include "gaze3d/mappers.hpp"

namespace gaze3d {

enum class MapperKind { TwoDToTwoD, TwoDToThreeD, ThreeDToThreeD };

constexpr std::string_view to_string(MapperKind kind) {
  switch (kind) {
    case MapperKind::TwoDToTwoD: return "2d2d";
    case MapperKind::TwoDToThreeD: return "2d3d";
    case MapperKind::ThreeDToThreeD: return "3d3d";
  }
  return "unknown";
}

MapperKind parse_mapper_kind(std::string_view id);

using MapperModel = std::variant<Model2Dto2D, Model2Dto3D, Model3Dto3D>;
/// A scene-image point (2D-to-2D) or a scene-frame ray (3D mappers).
using GazeEstimate = std::variant<Vec2, Ray>;

MapperKind kind_of(const MapperModel& model);

/// Fits `kind` on calibration samples. 3D-to-3D uses only samples with a
/// pupil pose; `skipped_without_pose` receives how many were left out.
MapperModel fit_mapper(MapperKind kind, std::span<const SimSample> calibration,
                       const Dataset& context, const GazeFitOptions& options = {},
                       int* skipped_without_pose = nullptr);

GazeEstimate predict(const MapperModel& model, const SimSample& sample);

/// Angle in degrees, seen from `reference`, between the estimated fixation
/// point and `target`. The estimated fixation point is where the estimated
/// ray (a 2D estimate is back-projected through `scene_camera` first)
/// crosses the plane z = target.z.
double angular_error(const GazeEstimate& estimate, const Vec3& target, const Vec3& reference,
                     const PinholeCamera& scene_camera);

struct ErrorRecord {
  MapperKind mapper = MapperKind::TwoDToTwoD;
  std::vector<double> calibration_depths;
  double test_depth = 0;
  std::vector<double> errors;  // degrees, one per test target
  double mean = 0;
  double std = 0;  // population
  bool ok = true;
  std::string failure;

  std::size_t k() const { return calibration_depths.size(); }
};

/// Population mean and standard deviation.
std::pair<double, double> mean_std(std::span<const double> values);

ErrorRecord evaluate(const MapperModel& model, std::span<const SimSample> test,
                     const Vec3& reference, const PinholeCamera& scene_camera);

/// Evaluates `model` separately on every test depth present in `test`.
std::vector<ErrorRecord> evaluate_by_depth(const MapperModel& model,
                                           const std::vector<double>& calibration_depths,
                                           std::span<const SimSample> test, const Vec3& reference,
                                           const PinholeCamera& scene_camera);

/// One nonlinear or linear fit performed during a sweep.
struct FitLog {
  MapperKind mapper = MapperKind::TwoDToTwoD;
  std::vector<double> calibration_depths;
  bool ok = true;
  std::string failure;
  std::optional<FitSummary> summary;
};

struct SweepResult {
  std::vector<double> calibration_depths;  // the pool subsets are drawn from
  std::vector<double> test_depths;
  std::vector<ErrorRecord> records;  // ordered by (mapper, k, subset, test depth)
  std::vector<FitLog> fits;

  std::vector<const ErrorRecord*> find(MapperKind mapper, std::size_t k) const;
  const ErrorRecord* find(MapperKind mapper, const std::vector<double>& subset,
                          double test_depth) const;
};

struct SweepOptions {
  std::vector<MapperKind> mappers = {MapperKind::TwoDToTwoD, MapperKind::TwoDToThreeD,
                                     MapperKind::ThreeDToThreeD};
  int k_min = 1;
  int k_max = 5;
  GazeFitOptions fit;
  /// Angular-error reference; defaults to the dataset's ground-truth
  /// eyeball center, or the scene origin for recorded data.
  std::optional<Vec3> reference;
};

/// Sorted distinct depth labels of a sample set.
std::vector<double> distinct_depths(std::span<const SimSample> samples);
bool same_depth(double a, double b);
/// All size-k subsets of `pool`, each sorted, in lexicographic order.
std::vector<std::vector<double>> depth_subsets(const std::vector<double>& pool, int k);

SweepResult depth_combination_sweep(const Dataset& data, const SweepOptions& options = {});

struct OffsetBucket {
  MapperKind mapper;
  double offset = 0;  // test depth - calibration depth, meters
  std::size_t records = 0;
  double mean = 0;  // average of per-record means
  double std = 0;   // population std of all pooled per-target errors
};

/// Groups single-depth records by signed (test - calibration) depth.
std::vector<OffsetBucket> offset_analysis(const SweepResult& sweep);

struct DepthCountSummary {
  MapperKind mapper;
  std::size_t k = 0;
  std::size_t records = 0;
  std::size_t failed = 0;
  double mean = 0;  // over all per-target errors of successful records
  double std = 0;
};

/// Mean error over all subsets and test depths, per number of calibration depths.
std::vector<DepthCountSummary> summarize_by_k(const SweepResult& sweep);

}  // namespace gaze3d
