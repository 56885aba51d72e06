#include "gaze3d/cli.hpp"

#include <algorithm>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "gaze3d/config.hpp"
#include "gaze3d/dataset_io.hpp"

namespace gaze3d {

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string mappers;
  std::string depths;
  std::optional<double> noise_px;
  std::optional<double> noise_deg;
  std::optional<double> noise_target_mm;
  std::string out;
  std::string data;
  std::string model;
  std::string offsets;
  std::string summary;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Experiment configuration (JSON)");
  cmd->add_option("--seed", o.seed, "Base random seed");
  cmd->add_option("--mappers", o.mappers, "Comma list of 2d2d,2d3d,3d3d");
  cmd->add_option("--depths", o.depths, "Comma list of depths in meters");
  cmd->add_option("--noise-px", o.noise_px, "Pupil pixel noise sigma");
  cmd->add_option("--noise-deg", o.noise_deg, "Pupil pose noise sigma, degrees");
  cmd->add_option("--noise-target-mm", o.noise_target_mm, "Target position noise sigma, mm");
  cmd->add_option("--out", o.out, "Output path");
}

ExperimentConfig resolve_config(const Overrides& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig() : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.mappers.empty()) cfg.mappers = parse_mapper_list(o.mappers);
  if (o.noise_px) cfg.noise.pupil_px = *o.noise_px;
  if (o.noise_deg) cfg.noise.pupil_deg = *o.noise_deg;
  if (o.noise_target_mm) cfg.noise.target_mm = *o.noise_target_mm;
  cfg.validate();
  return cfg;
}

Dataset simulated(const ExperimentConfig& cfg, const Overrides& o) {
  DatasetLayout layout = cfg.layout;
  if (!o.depths.empty()) layout.depths = parse_depth_list(o.depths);
  return synthesize_dataset(cfg.build_rig(), cfg.eye, layout, cfg.seed);
}

// Keeps only calibration samples whose depth is in `depths`.
void restrict_calibration(Dataset& data, const std::vector<double>& depths) {
  std::vector<SimSample> kept;
  for (const auto& s : data.calibration) {
    if (std::any_of(depths.begin(), depths.end(),
                    [&](double d) { return same_depth(d, s.depth); })) {
      kept.push_back(s);
    }
  }
  if (kept.empty()) {
    throw Error(ErrorCode::EmptyCalibration, "no calibration samples at the requested depths");
  }
  data.calibration = std::move(kept);
}

Dataset load_input(const Overrides& o, const ExperimentConfig& cfg, std::ostream& err,
                   bool wants_pose) {
  if (o.data.empty()) return simulated(cfg, o);
  LoadReport report;
  Dataset data = load_dataset(o.data, &report);
  if (wants_pose && report.records_without_pose > 0) {
    err << "warning: " << report.records_without_pose
        << " records lack pupil_pose and are excluded from 3d3d\n";
  }
  if (!o.depths.empty()) restrict_calibration(data, parse_depth_list(o.depths));
  return data;
}

bool uses_3d3d(const std::vector<MapperKind>& mappers) {
  return std::find(mappers.begin(), mappers.end(), MapperKind::ThreeDToThreeD) != mappers.end();
}

std::filesystem::path pick(const std::string& flag, const std::filesystem::path& fallback) {
  return flag.empty() ? fallback : std::filesystem::path(flag);
}

int cmd_simulate(const Overrides& o, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(o);
  const Dataset data = simulated(cfg, o);
  const auto path = pick(o.out, cfg.output.dataset);
  save_dataset(path, data);
  out << "wrote " << data.calibration.size() << " calibration and " << data.test.size()
      << " test samples to " << path.string() << '\n';
  return 0;
}

int cmd_fit(const Overrides& o, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = resolve_config(o);
  if (cfg.mappers.size() != 1) {
    throw Error(ErrorCode::ConfigError, "fit needs exactly one mapper (--mappers)");
  }
  const MapperKind kind = cfg.mappers.front();
  const Dataset data = load_input(o, cfg, err, kind == MapperKind::ThreeDToThreeD);
  int skipped = 0;
  StoredModel stored{fit_mapper(kind, data.calibration, data, cfg.fit, &skipped),
                     distinct_depths(data.calibration)};
  const auto path = pick(o.out, cfg.output.model);
  save_model(path, stored);
  out << "fitted " << to_string(kind) << " on " << data.calibration.size() - std::size_t(skipped)
      << " samples; wrote " << path.string() << '\n';
  return 0;
}

int cmd_evaluate(const Overrides& o, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = resolve_config(o);
  const StoredModel stored = load_model(pick(o.model, cfg.output.model));
  const Dataset data =
      load_input(o, cfg, err, kind_of(stored.model) == MapperKind::ThreeDToThreeD);
  if (data.test.empty()) throw Error(ErrorCode::InsufficientData, "dataset has no test samples");
  const Vec3 reference = data.eyeball_center.value_or(Vec3::Zero());
  const auto records = evaluate_by_depth(stored.model, stored.calibration_depths, data.test,
                                         reference, data.scene_camera);
  if (o.out.empty()) {
    write_results_csv(out, records);
  } else {
    auto file = open_output(o.out);
    write_results_csv(file, records);
    out << "wrote " << records.size() << " rows to " << o.out << '\n';
  }
  return 0;
}

int cmd_sweep(const Overrides& o, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = resolve_config(o);
  const Dataset data = load_input(o, cfg, err, uses_3d3d(cfg.mappers));
  const SweepResult sweep = depth_combination_sweep(data, cfg.sweep_options());

  const auto results = pick(o.out, cfg.output.results_csv);
  export_results_csv(sweep, results);
  const auto offsets = offset_analysis(sweep);
  if (const auto path = pick(o.offsets, cfg.output.offsets_csv); !path.empty()) {
    auto file = open_output(path);
    write_offsets_csv(file, offsets);
  }
  const auto summary = summarize_by_k(sweep);
  if (const auto path = pick(o.summary, cfg.output.summary_csv); !path.empty()) {
    auto file = open_output(path);
    write_summary_csv(file, summary);
  }
  for (const auto& fit : sweep.fits) {
    if (!fit.ok) err << "warning: " << to_string(fit.mapper) << " fit failed: " << fit.failure << '\n';
  }
  write_summary_csv(out, summary);
  out << "wrote " << sweep.records.size() << " rows to " << results.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Simulate and evaluate head-mounted gaze calibration mappings", "gaze3d");
  app.require_subcommand(1);
  Overrides o;

  auto* simulate = app.add_subcommand("simulate", "Write a simulated dataset");
  add_common(simulate, o);

  auto* fit = app.add_subcommand("fit", "Fit one mapper on a dataset's calibration samples");
  add_common(fit, o);
  fit->add_option("--data", o.data, "Dataset file (default: simulate from config)");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a model on a dataset's test samples");
  add_common(evaluate, o);
  evaluate->add_option("--data", o.data, "Dataset file (default: simulate from config)");
  evaluate->add_option("--model", o.model, "Model file");

  auto* sweep = app.add_subcommand("sweep", "Fit every calibration-depth subset and evaluate");
  add_common(sweep, o);
  sweep->add_option("--data", o.data, "Dataset file (default: simulate from config)");
  sweep->add_option("--offsets", o.offsets, "Offset-bucket CSV path");
  sweep->add_option("--summary", o.summary, "Per-k summary CSV path");

  auto* selftest = app.add_subcommand("selftest", "Run the built-in invariant checks");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(o, out);
    if (fit->parsed()) return cmd_fit(o, out, err);
    if (evaluate->parsed()) return cmd_evaluate(o, out, err);
    if (sweep->parsed()) return cmd_sweep(o, out, err);
    if (selftest->parsed()) return run_selftest(out) ? 0 : 1;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: Internal: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace gaze3d
