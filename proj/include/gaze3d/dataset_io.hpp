#pragma once

// File formats:
//   dataset  JSON lines; line 1 is the header object, every further line one
//            sample record. Grammar in docs/formats.md.
//   model    plain-text "key = values" lines.
//   results  CSV (sweep records, offset buckets, per-k summaries).

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <vector>

#include "gaze3d/dataset.hpp"
#include "gaze3d/evaluation.hpp"

namespace gaze3d {

inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr int kModelFormatVersion = 1;

struct LoadReport {
  /// Records accepted without a pupil pose; 3D-to-3D fits skip them.
  int records_without_pose = 0;
};

Dataset read_dataset(std::istream& in, LoadReport* report = nullptr);
Dataset load_dataset(const std::filesystem::path& path, LoadReport* report = nullptr);
void write_dataset(std::ostream& out, const Dataset& data);
void save_dataset(const std::filesystem::path& path, const Dataset& data);

struct StoredModel {
  MapperModel model;
  std::vector<double> calibration_depths;
};

void write_model(std::ostream& out, const StoredModel& model);
StoredModel read_model(std::istream& in);
StoredModel load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const StoredModel& model);

/// Columns: mapper,k,calib_subset,test_depth_m,n_targets,mean_error_deg,
/// std_error_deg,status. Rows in (mapper, k, subset, test depth) order.
void write_results_csv(std::ostream& out, std::span<const ErrorRecord> records);
void export_results_csv(const SweepResult& sweep, const std::filesystem::path& path);

/// Columns: mapper,offset_m,n_records,mean_error_deg,std_error_deg.
void write_offsets_csv(std::ostream& out, std::span<const OffsetBucket> buckets);
/// Columns: mapper,k,n_records,n_failed,mean_error_deg,std_error_deg.
void write_summary_csv(std::ostream& out, std::span<const DepthCountSummary> rows);

/// Opens `path` for writing, creating parent directories.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace gaze3d
