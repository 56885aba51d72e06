#include "gaze3d/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace gaze3d {

namespace {

using Json = nlohmann::json;

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ConfigError, (path.empty() ? std::string("config") : path) + ": " + what);
}

// Walks one JSON object, tracking which keys were read so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(path_, "expected an object");
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const Json* find(const std::string& key) {
    allowed_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number()) config_error(key_path(key), "expected a number");
      out = v->get<double>();
    }
  }

  void integer(const std::string& key, int& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_integer()) config_error(key_path(key), "expected an integer");
      out = v->get<int>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const Json* v = find(key)) {
      if (!v->is_boolean()) config_error(key_path(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void path(const std::string& key, std::filesystem::path& out) {
    if (const Json* v = find(key)) {
      if (!v->is_string()) config_error(key_path(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  template <int N>
  void vec(const std::string& key, Eigen::Matrix<double, N, 1>& out) {
    if (const Json* v = find(key)) {
      if (!v->is_array() || v->size() != N) {
        config_error(key_path(key), "expected " + std::to_string(N) + " numbers");
      }
      for (int i = 0; i < N; ++i) {
        if (!(*v)[i].is_number()) config_error(key_path(key), "expected numbers");
        out[i] = (*v)[i].template get<double>();
      }
    }
  }

  void pair_int(const std::string& key, int& a, int& b) {
    if (const Json* v = find(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number_integer() ||
          !(*v)[1].is_number_integer()) {
        config_error(key_path(key), "expected two integers");
      }
      a = (*v)[0].get<int>();
      b = (*v)[1].get<int>();
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!allowed_.count(key)) config_error(key_path(key), "unknown key");
    }
  }

  template <class F>
  void section(const std::string& key, F&& body) {
    if (const Json* v = find(key)) {
      Section sub(*v, key_path(key));
      body(sub);
      sub.finish();
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> allowed_;
};

void read_camera(Section& s, CameraConfig& cam) {
  s.vec<2>("focal_px", cam.focal);
  s.vec<2>("principal_px", cam.principal);
  int w = cam.resolution.x();
  int h = cam.resolution.y();
  s.pair_int("resolution_px", w, h);
  cam.resolution = Eigen::Vector2i(w, h);
}

PinholeCamera to_camera(const CameraConfig& c) {
  PinholeCamera cam;
  cam.focal = c.focal;
  cam.principal = c.principal;
  cam.resolution = c.resolution;
  return cam;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  const SimRig rig = SimRig::defaults();
  scene_camera = {rig.scene_camera.focal, rig.scene_camera.principal, rig.scene_camera.resolution};
  eye_camera = {rig.eye_camera.focal, rig.eye_camera.principal, rig.eye_camera.resolution};
}

void ExperimentConfig::validate() const {
  if (mappers.empty()) config_error("mappers", "at least one mapper is required");
  if (layout.depths.empty()) config_error("layout.depths_m", "at least one depth is required");
  for (double d : layout.depths) {
    if (!(d > 0) || !std::isfinite(d)) config_error("layout.depths_m", "depths must be positive");
  }
  auto sorted = layout.depths;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end(), same_depth) != sorted.end()) {
    config_error("layout.depths_m", "depths must be distinct");
  }
  if (layout.calibration_rows < 2 || layout.calibration_cols < 2) {
    config_error("layout.calibration_grid", "grid needs at least 2 rows and 2 columns");
  }
  if (layout.test_rows < 2 || layout.test_cols < 2) {
    config_error("layout.test_grid", "grid needs at least 2 rows and 2 columns");
  }
  if (!(layout.width > 0) || !(layout.height > 0)) {
    config_error("layout.grid_size_m", "grid size must be positive");
  }
  if (k_min < 1 || k_max < k_min) config_error("k_range", "need 1 <= min <= max");
  if (!eye_camera_angles.in_range()) config_error("rig.eye_camera.angles_rad", "outside [-pi, pi]");
  try {
    fit.lm.validate();
  } catch (const Error& e) {
    config_error("fit.lm", e.what());
  }
  try {
    derive_pupil_geometry(eye);
    build_rig().validate();
  } catch (const Error& e) {
    config_error("rig", e.what());
  }
}

SimRig ExperimentConfig::build_rig() const {
  SimRig rig;
  rig.scene_camera = to_camera(scene_camera);
  rig.eye_camera = to_camera(eye_camera);
  rig.eyeball_center = eyeball_center;
  rig.noise = noise;
  rig.place_eye_camera(eye_camera_offset, eye_camera_angles);
  return rig;
}

SweepOptions ExperimentConfig::sweep_options() const {
  SweepOptions opt;
  opt.mappers = mappers;
  opt.k_min = k_min;
  opt.k_max = k_max;
  opt.fit = fit;
  return opt;
}

ExperimentConfig parse_config(std::istream& in) {
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed config JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Section root(j, "");

  if (const Json* v = root.find("seed")) {
    if (!v->is_number_unsigned()) config_error("seed", "expected a non-negative integer");
    cfg.seed = v->get<std::uint64_t>();
  }
  root.section("rig", [&](Section& rig) {
    rig.section("scene_camera", [&](Section& s) { read_camera(s, cfg.scene_camera); });
    rig.section("eye_camera", [&](Section& s) {
      read_camera(s, cfg.eye_camera);
      s.vec<3>("offset_m", cfg.eye_camera_offset);
      s.vec<3>("angles_rad", cfg.eye_camera_angles.radians);
    });
    rig.vec<3>("eyeball_center_m", cfg.eyeball_center);
  });
  root.section("eye_model", [&](Section& s) {
    s.number("eyeball_radius_mm", cfg.eye.eyeball_radius_mm);
    s.number("corneal_radius_mm", cfg.eye.corneal_radius_mm);
    s.number("center_separation_mm", cfg.eye.center_separation_mm);
  });
  root.section("layout", [&](Section& s) {
    if (const Json* v = s.find("depths_m")) {
      if (!v->is_array()) config_error("layout.depths_m", "expected an array of numbers");
      cfg.layout.depths.clear();
      for (const auto& d : *v) {
        if (!d.is_number()) config_error("layout.depths_m", "expected numbers");
        cfg.layout.depths.push_back(d.get<double>());
      }
    }
    s.pair_int("calibration_grid", cfg.layout.calibration_rows, cfg.layout.calibration_cols);
    s.pair_int("test_grid", cfg.layout.test_rows, cfg.layout.test_cols);
    Vec2 size(cfg.layout.width, cfg.layout.height);
    s.vec<2>("grid_size_m", size);
    cfg.layout.width = size.x();
    cfg.layout.height = size.y();
  });
  root.section("noise", [&](Section& s) {
    s.number("pupil_px", cfg.noise.pupil_px);
    s.number("pupil_deg", cfg.noise.pupil_deg);
    s.number("target_mm", cfg.noise.target_mm);
  });
  if (const Json* v = root.find("mappers")) {
    if (!v->is_array()) config_error("mappers", "expected an array of mapper ids");
    cfg.mappers.clear();
    for (const auto& m : *v) {
      if (!m.is_string()) config_error("mappers", "expected mapper id strings");
      cfg.mappers.push_back(parse_mapper_kind(m.get<std::string>()));
    }
  }
  root.pair_int("k_range", cfg.k_min, cfg.k_max);
  root.section("fit", [&](Section& s) {
    s.boolean("normalize_residuals", cfg.fit.normalize_residuals);
    s.boolean("hold_center_when_coplanar", cfg.fit.hold_center_when_coplanar);
    s.section("lm", [&](Section& lm) {
      lm.number("initial_damping", cfg.fit.lm.initial_damping);
      lm.number("damping_increase", cfg.fit.lm.damping_increase);
      lm.number("damping_decrease", cfg.fit.lm.damping_decrease);
      lm.integer("max_iterations", cfg.fit.lm.max_iterations);
      lm.number("step_tolerance", cfg.fit.lm.step_tolerance);
      lm.number("cost_tolerance", cfg.fit.lm.cost_tolerance);
      lm.number("gradient_tolerance", cfg.fit.lm.gradient_tolerance);
      lm.number("max_damping", cfg.fit.lm.max_damping);
    });
  });
  root.section("output", [&](Section& s) {
    s.path("dataset", cfg.output.dataset);
    s.path("model", cfg.output.model);
    s.path("results_csv", cfg.output.results_csv);
    s.path("offsets_csv", cfg.output.offsets_csv);
    s.path("summary_csv", cfg.output.summary_csv);
  });
  root.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config '" + path.string() + "'");
  return parse_config(in);
}

std::vector<MapperKind> parse_mapper_list(const std::string& text) {
  std::vector<MapperKind> out;
  for (const auto& id : split_commas(text)) out.push_back(parse_mapper_kind(id));
  if (out.empty()) throw Error(ErrorCode::ConfigError, "empty mapper list");
  return out;
}

std::vector<double> parse_depth_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_commas(text)) {
    std::size_t used = 0;
    double d = 0;
    try {
      d = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || !(d > 0) || !std::isfinite(d)) {
      throw Error(ErrorCode::ConfigError, "bad depth '" + item + "'");
    }
    out.push_back(d);
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, "empty depth list");
  return out;
}

}  // namespace gaze3d
