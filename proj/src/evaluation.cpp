#include "gaze3d/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace gaze3d {

namespace {

constexpr double kDepthTolerance = 1e-6;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool in_subset(double depth, const std::vector<double>& subset) {
  return std::any_of(subset.begin(), subset.end(),
                     [depth](double d) { return same_depth(d, depth); });
}

}  // namespace

MapperKind parse_mapper_kind(std::string_view id) {
  if (id == "2d2d") return MapperKind::TwoDToTwoD;
  if (id == "2d3d") return MapperKind::TwoDToThreeD;
  if (id == "3d3d") return MapperKind::ThreeDToThreeD;
  throw Error(ErrorCode::ConfigError, "unknown mapper '" + std::string(id) + "'");
}

MapperKind kind_of(const MapperModel& model) {
  return std::visit(Overloaded{[](const Model2Dto2D&) { return MapperKind::TwoDToTwoD; },
                               [](const Model2Dto3D&) { return MapperKind::TwoDToThreeD; },
                               [](const Model3Dto3D&) { return MapperKind::ThreeDToThreeD; }},
                    model);
}

MapperModel fit_mapper(MapperKind kind, std::span<const SimSample> calibration,
                       const Dataset& context, const GazeFitOptions& options,
                       int* skipped_without_pose) {
  if (calibration.empty()) {
    throw Error(ErrorCode::EmptyCalibration, "no calibration samples to fit");
  }
  const auto norm = PupilNormalization::for_camera(context.eye_camera);
  std::vector<Vec2> pupils;
  switch (kind) {
    case MapperKind::TwoDToTwoD: {
      std::vector<Vec2> target_px;
      for (const auto& s : calibration) {
        pupils.push_back(s.pupil_px);
        target_px.push_back(s.target_px ? *s.target_px : project(context.scene_camera, s.target));
      }
      return fit_2d_to_2d(pupils, target_px, norm, context.scene_camera);
    }
    case MapperKind::TwoDToThreeD: {
      std::vector<Vec3> targets;
      for (const auto& s : calibration) {
        pupils.push_back(s.pupil_px);
        targets.push_back(s.target);
      }
      return fit_2d_to_3d(pupils, targets, norm, options);
    }
    case MapperKind::ThreeDToThreeD: {
      std::vector<Vec3> poses;
      std::vector<Vec3> targets;
      int skipped = 0;
      for (const auto& s : calibration) {
        if (!s.pupil_pose) {
          ++skipped;
          continue;
        }
        poses.push_back(*s.pupil_pose);
        targets.push_back(s.target);
      }
      if (skipped_without_pose) *skipped_without_pose = skipped;
      return fit_3d_to_3d(poses, targets, options);
    }
  }
  throw Error(ErrorCode::ConfigError, "unknown mapper kind");
}

GazeEstimate predict(const MapperModel& model, const SimSample& sample) {
  return std::visit(
      Overloaded{
          [&](const Model2Dto2D& m) -> GazeEstimate { return predict_2d_to_2d(m, sample.pupil_px); },
          [&](const Model2Dto3D& m) -> GazeEstimate { return predict_2d_to_3d(m, sample.pupil_px); },
          [&](const Model3Dto3D& m) -> GazeEstimate {
            if (!sample.pupil_pose) {
              throw Error(ErrorCode::MissingField, "3D-to-3D prediction needs a pupil pose");
            }
            return predict_3d_to_3d(m, *sample.pupil_pose);
          }},
      model);
}

double angular_error(const GazeEstimate& estimate, const Vec3& target, const Vec3& reference,
                     const PinholeCamera& scene_camera) {
  const Ray ray = std::visit(
      Overloaded{[&](const Vec2& f) { return back_project(scene_camera, f); },
                 [](const Ray& r) { return r; }},
      estimate);
  const Vec3 fixation = intersect_ray_depth_plane(ray, target.z());
  return angle_between(Vec3(fixation - reference), Vec3(target - reference));
}

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = double(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

ErrorRecord evaluate(const MapperModel& model, std::span<const SimSample> test,
                     const Vec3& reference, const PinholeCamera& scene_camera) {
  if (test.empty()) throw Error(ErrorCode::InsufficientData, "empty test set");
  ErrorRecord rec;
  rec.mapper = kind_of(model);
  rec.test_depth = test.front().depth;
  rec.errors.reserve(test.size());
  for (const auto& s : test) {
    rec.errors.push_back(angular_error(predict(model, s), s.target, reference, scene_camera));
  }
  std::tie(rec.mean, rec.std) = mean_std(rec.errors);
  return rec;
}

std::vector<ErrorRecord> evaluate_by_depth(const MapperModel& model,
                                           const std::vector<double>& calibration_depths,
                                           std::span<const SimSample> test, const Vec3& reference,
                                           const PinholeCamera& scene_camera) {
  std::vector<ErrorRecord> out;
  for (double depth : distinct_depths(test)) {
    std::vector<SimSample> at_depth;
    std::copy_if(test.begin(), test.end(), std::back_inserter(at_depth),
                 [depth](const SimSample& s) { return same_depth(s.depth, depth); });
    ErrorRecord rec;
    try {
      rec = evaluate(model, at_depth, reference, scene_camera);
    } catch (const Error& e) {
      rec.mapper = kind_of(model);
      rec.ok = false;
      rec.failure = std::string(to_string(e.code()));
    }
    rec.test_depth = depth;
    rec.calibration_depths = calibration_depths;
    out.push_back(std::move(rec));
  }
  return out;
}

bool same_depth(double a, double b) { return std::abs(a - b) < kDepthTolerance; }

std::vector<double> distinct_depths(std::span<const SimSample> samples) {
  std::vector<double> depths;
  for (const auto& s : samples) {
    if (std::none_of(depths.begin(), depths.end(),
                     [&](double d) { return same_depth(d, s.depth); })) {
      depths.push_back(s.depth);
    }
  }
  std::sort(depths.begin(), depths.end());
  return depths;
}

std::vector<std::vector<double>> depth_subsets(const std::vector<double>& pool, int k) {
  std::vector<std::vector<double>> out;
  const int n = static_cast<int>(pool.size());
  if (k < 1 || k > n) return out;
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    std::vector<double> subset;
    for (int i : idx) subset.push_back(pool[static_cast<std::size_t>(i)]);
    out.push_back(std::move(subset));
    int pos = k - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < k; ++j) {
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

std::vector<const ErrorRecord*> SweepResult::find(MapperKind mapper, std::size_t k) const {
  std::vector<const ErrorRecord*> out;
  for (const auto& r : records) {
    if (r.mapper == mapper && r.k() == k) out.push_back(&r);
  }
  return out;
}

const ErrorRecord* SweepResult::find(MapperKind mapper, const std::vector<double>& subset,
                                     double test_depth) const {
  for (const auto& r : records) {
    if (r.mapper != mapper || r.calibration_depths.size() != subset.size() ||
        !same_depth(r.test_depth, test_depth)) {
      continue;
    }
    if (std::equal(subset.begin(), subset.end(), r.calibration_depths.begin(), same_depth)) {
      return &r;
    }
  }
  return nullptr;
}

SweepResult depth_combination_sweep(const Dataset& data, const SweepOptions& options) {
  if (data.calibration.empty()) {
    throw Error(ErrorCode::EmptyCalibration, "dataset has no calibration samples");
  }
  if (data.test.empty()) throw Error(ErrorCode::InsufficientData, "dataset has no test samples");

  SweepResult result;
  result.calibration_depths = distinct_depths(data.calibration);
  result.test_depths = distinct_depths(data.test);
  const Vec3 reference = options.reference ? *options.reference
                                           : data.eyeball_center.value_or(Vec3::Zero());

  std::vector<MapperKind> mappers = options.mappers;
  std::sort(mappers.begin(), mappers.end());
  mappers.erase(std::unique(mappers.begin(), mappers.end()), mappers.end());

  const int k_max = std::min<int>(options.k_max, int(result.calibration_depths.size()));
  for (MapperKind mapper : mappers) {
    for (int k = std::max(1, options.k_min); k <= k_max; ++k) {
      for (const auto& subset : depth_subsets(result.calibration_depths, k)) {
        std::vector<SimSample> pooled;
        std::copy_if(data.calibration.begin(), data.calibration.end(), std::back_inserter(pooled),
                     [&](const SimSample& s) { return in_subset(s.depth, subset); });

        FitLog log{mapper, subset, true, {}, std::nullopt};
        std::optional<MapperModel> model;
        try {
          model = fit_mapper(mapper, pooled, data, options.fit);
          std::visit(Overloaded{[](const Model2Dto2D&) {},
                                [&](const auto& m) { log.summary = m.fit; }},
                     *model);
        } catch (const Error& e) {
          log.ok = false;
          log.failure = std::string(to_string(e.code())) + ": " + e.what();
        }
        result.fits.push_back(log);

        if (model) {
          for (auto& rec : evaluate_by_depth(*model, subset, data.test, reference,
                                             data.scene_camera)) {
            result.records.push_back(std::move(rec));
          }
          continue;
        }
        for (double depth : result.test_depths) {
          ErrorRecord rec;
          rec.mapper = mapper;
          rec.calibration_depths = subset;
          rec.test_depth = depth;
          rec.ok = false;
          rec.failure = log.failure;
          result.records.push_back(std::move(rec));
        }
      }
    }
  }
  return result;
}

std::vector<OffsetBucket> offset_analysis(const SweepResult& sweep) {
  struct Acc {
    std::size_t records = 0;
    double sum_means = 0;
    std::vector<double> pooled;
  };
  // offsets keyed in millimeters so equal offsets from different pairs merge
  std::map<std::pair<MapperKind, long long>, Acc> groups;
  for (const auto& r : sweep.records) {
    if (r.k() != 1 || !r.ok) continue;
    const double offset = r.test_depth - r.calibration_depths.front();
    auto& acc = groups[{r.mapper, std::llround(offset * 1000.0)}];
    ++acc.records;
    acc.sum_means += r.mean;
    acc.pooled.insert(acc.pooled.end(), r.errors.begin(), r.errors.end());
  }
  std::vector<OffsetBucket> out;
  for (const auto& [key, acc] : groups) {
    OffsetBucket b{key.first, double(key.second) / 1000.0, acc.records,
                   acc.sum_means / double(acc.records), mean_std(acc.pooled).second};
    out.push_back(b);
  }
  return out;
}

std::vector<DepthCountSummary> summarize_by_k(const SweepResult& sweep) {
  std::map<std::pair<MapperKind, std::size_t>, std::pair<DepthCountSummary, std::vector<double>>>
      groups;
  for (const auto& r : sweep.records) {
    auto& [summary, pooled] = groups[{r.mapper, r.k()}];
    summary.mapper = r.mapper;
    summary.k = r.k();
    ++summary.records;
    if (!r.ok) {
      ++summary.failed;
      continue;
    }
    pooled.insert(pooled.end(), r.errors.begin(), r.errors.end());
  }
  std::vector<DepthCountSummary> out;
  for (auto& [key, value] : groups) {
    auto& [summary, pooled] = value;
    std::tie(summary.mean, summary.std) = mean_std(pooled);
    out.push_back(summary);
  }
  return out;
}

}  // namespace gaze3d
