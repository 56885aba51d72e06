#include "gaze3d/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

namespace gaze3d {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kDatasetSchema = "gaze3d-dataset";
constexpr const char* kModelFormat = "gaze3d-model";

// Shortest representation that parses back to the same double.
std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

template <int N>
Json vec_json(const Eigen::Matrix<double, N, 1>& v) {
  Json a = Json::array();
  for (int i = 0; i < N; ++i) a.push_back(v[i]);
  return a;
}

template <int N>
Eigen::Matrix<double, N, 1> vec_from(const Json& j, std::size_t line, const char* key) {
  if (!j.is_array() || j.size() != N) {
    parse_error(line, std::string(key) + " must be an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    if (!j[i].is_number()) parse_error(line, std::string(key) + " must contain numbers");
    v[i] = j[i].get<double>();
    if (!std::isfinite(v[i])) parse_error(line, std::string(key) + " is not finite");
  }
  return v;
}

void reject_unknown(const Json& obj, const std::set<std::string>& allowed, std::size_t line,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) parse_error(line, "unknown key '" + key + "' in " + where);
  }
}

const Json& require(const Json& obj, const char* key, std::size_t line) {
  if (!obj.contains(key)) parse_error(line, std::string("missing '") + key + "'");
  return obj.at(key);
}

Json camera_json(const PinholeCamera& cam, bool with_pose) {
  Json j;
  j["focal_px"] = vec_json<2>(cam.focal);
  j["principal_px"] = vec_json<2>(cam.principal);
  j["resolution_px"] = Json::array({cam.resolution.x(), cam.resolution.y()});
  if (with_pose) {
    Json rot = Json::array();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) rot.push_back(cam.pose.rotation(r, c));
    }
    j["rotation"] = rot;
    j["translation_m"] = vec_json<3>(cam.pose.translation);
  }
  return j;
}

PinholeCamera camera_from(const Json& j, std::size_t line, bool with_pose) {
  if (!j.is_object()) parse_error(line, "camera must be an object");
  std::set<std::string> allowed = {"focal_px", "principal_px", "resolution_px"};
  if (with_pose) allowed.insert({"rotation", "translation_m"});
  reject_unknown(j, allowed, line, "camera");
  PinholeCamera cam;
  cam.focal = vec_from<2>(require(j, "focal_px", line), line, "focal_px");
  cam.principal = vec_from<2>(require(j, "principal_px", line), line, "principal_px");
  const Vec2 res = vec_from<2>(require(j, "resolution_px", line), line, "resolution_px");
  cam.resolution = Eigen::Vector2i(int(res.x()), int(res.y()));
  if (with_pose && j.contains("rotation")) {
    const Json& rot = j.at("rotation");
    if (!rot.is_array() || rot.size() != 9) parse_error(line, "rotation must hold 9 numbers");
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) cam.pose.rotation(r, c) = rot[std::size_t(3 * r + c)].get<double>();
    }
    if (!(cam.pose.rotation.transpose() * cam.pose.rotation).isIdentity(1e-9)) {
      parse_error(line, "camera rotation is not orthonormal");
    }
  }
  if (with_pose && j.contains("translation_m")) {
    cam.pose.translation = vec_from<3>(j.at("translation_m"), line, "translation_m");
  }
  try {
    cam.validate();
  } catch (const Error& e) {
    parse_error(line, e.what());
  }
  return cam;
}

Json record_json(const SimSample& s) {
  Json j;
  j["role"] = std::string(to_string(s.role));
  j["depth_m"] = s.depth;
  j["pupil_px"] = vec_json<2>(s.pupil_px);
  if (s.pupil_pose) j["pupil_pose"] = vec_json<3>(*s.pupil_pose);
  j["target_scene_m"] = vec_json<3>(s.target);
  if (s.target_px) j["target_px"] = vec_json<2>(*s.target_px);
  if (s.gaze) {
    j["gaze_origin_m"] = vec_json<3>(s.gaze->origin);
    j["gaze_direction"] = vec_json<3>(s.gaze->direction);
  }
  return j;
}

SimSample record_from(const Json& j, std::size_t line, std::size_t index) {
  if (!j.is_object()) parse_error(line, "record must be a JSON object");
  reject_unknown(j,
                 {"role", "depth_m", "pupil_px", "pupil_pose", "target_scene_m", "target_px",
                  "gaze_origin_m", "gaze_direction"},
                 line, "record");
  SimSample s;
  const Json& role = require(j, "role", line);
  if (role == "calibration") {
    s.role = SampleRole::Calibration;
  } else if (role == "test") {
    s.role = SampleRole::Test;
  } else {
    parse_error(line, "role must be \"calibration\" or \"test\"");
  }
  const Json& depth = require(j, "depth_m", line);
  if (!depth.is_number() || !(depth.get<double>() > 0)) {
    parse_error(line, "depth_m must be a positive number");
  }
  s.depth = depth.get<double>();
  s.pupil_px = vec_from<2>(require(j, "pupil_px", line), line, "pupil_px");
  s.target = vec_from<3>(require(j, "target_scene_m", line), line, "target_scene_m");
  if (j.contains("pupil_pose")) {
    const Vec3 n = vec_from<3>(j.at("pupil_pose"), line, "pupil_pose");
    if (std::abs(n.norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::UnitViolation, "record " + std::to_string(index) + " (line " +
                                                std::to_string(line) + "): pupil_pose norm " +
                                                number(n.norm()) + " is not unit");
    }
    s.pupil_pose = n;
  }
  if (j.contains("target_px")) s.target_px = vec_from<2>(j.at("target_px"), line, "target_px");
  if (j.contains("gaze_origin_m") != j.contains("gaze_direction")) {
    parse_error(line, "gaze_origin_m and gaze_direction must appear together");
  }
  if (j.contains("gaze_origin_m")) {
    const Vec3 dir = vec_from<3>(j.at("gaze_direction"), line, "gaze_direction");
    if (std::abs(dir.norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::UnitViolation,
                  "record " + std::to_string(index) + ": gaze_direction is not unit");
    }
    s.gaze = Ray{vec_from<3>(j.at("gaze_origin_m"), line, "gaze_origin_m"), dir};
  }
  return s;
}

std::string join_depths(const std::vector<double>& depths, char sep) {
  std::string out;
  for (std::size_t i = 0; i < depths.size(); ++i) {
    if (i) out += sep;
    out += number(depths[i]);
  }
  return out;
}

}  // namespace

// Dataset -----------------------------------------------------------------

void write_dataset(std::ostream& out, const Dataset& data) {
  Json header;
  header["schema"] = kDatasetSchema;
  header["version"] = kDatasetSchemaVersion;
  header["source"] = data.source == DataSource::Simulated ? "simulated" : "recorded";
  header["units"] = {{"world", "m"}, {"image", "px"}, {"angles", "rad"}};
  header["frame"] = "x right, y down, z forward; scene camera at the origin";
  header["scene_camera"] = camera_json(data.scene_camera, false);
  header["eye_camera"] = camera_json(data.eye_camera, true);
  if (data.eyeball_center) header["eyeball_center_m"] = vec_json<3>(*data.eyeball_center);
  out << header.dump() << '\n';
  // calibration records first, then test records, each in dataset order
  for (const auto& s : data.calibration) out << record_json(s).dump() << '\n';
  for (const auto& s : data.test) out << record_json(s).dump() << '\n';
}

Dataset read_dataset(std::istream& in, LoadReport* report) {
  std::string text;
  std::size_t line_no = 0;
  Dataset data;
  bool have_header = false;
  std::size_t index = 0;
  LoadReport local;

  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      parse_error(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!have_header) {
      if (!j.is_object() || j.value("schema", "") != kDatasetSchema) {
        parse_error(line_no, "first line must be a gaze3d-dataset header");
      }
      if (!j.contains("version") || !j.at("version").is_number_integer() ||
          j.at("version").get<int>() != kDatasetSchemaVersion) {
        throw Error(ErrorCode::SchemaVersionMismatch,
                    "unsupported dataset schema version (expected " +
                        std::to_string(kDatasetSchemaVersion) + ")");
      }
      reject_unknown(j,
                     {"schema", "version", "source", "units", "frame", "scene_camera",
                      "eye_camera", "eyeball_center_m"},
                     line_no, "header");
      const Json& units = require(j, "units", line_no);
      if (units != Json({{"world", "m"}, {"image", "px"}, {"angles", "rad"}})) {
        parse_error(line_no, "units must be {world: m, image: px, angles: rad}");
      }
      const Json& source = require(j, "source", line_no);
      if (source == "simulated") {
        data.source = DataSource::Simulated;
      } else if (source == "recorded") {
        data.source = DataSource::Recorded;
      } else {
        parse_error(line_no, "source must be \"simulated\" or \"recorded\"");
      }
      data.scene_camera = camera_from(require(j, "scene_camera", line_no), line_no, false);
      data.eye_camera = camera_from(require(j, "eye_camera", line_no), line_no, true);
      if (j.contains("eyeball_center_m")) {
        data.eyeball_center = vec_from<3>(j.at("eyeball_center_m"), line_no, "eyeball_center_m");
      }
      have_header = true;
      continue;
    }
    SimSample s = record_from(j, line_no, index++);
    if (!s.pupil_pose) ++local.records_without_pose;
    (s.role == SampleRole::Calibration ? data.calibration : data.test).push_back(std::move(s));
  }
  if (!have_header) parse_error(line_no, "missing dataset header");
  if (data.calibration.empty()) {
    throw Error(ErrorCode::EmptyCalibration, "dataset contains no calibration records");
  }
  if (report) *report = local;
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open dataset '" + path.string() + "'");
  return read_dataset(in, report);
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  return out;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  auto out = open_output(path);
  write_dataset(out, data);
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

// Model -------------------------------------------------------------------

namespace {

std::string join(const double* v, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += number(v[i]);
  }
  return s;
}

std::string weights_line(const PolyWeights& w) {
  std::string s;
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < 2; ++c) {
      if (r || c) s += ' ';
      s += number(w(r, c));
    }
  }
  return s;
}

std::vector<double> numbers_of(const std::string& value, const std::string& key,
                               std::size_t expected) {
  std::vector<double> out;
  std::istringstream ss(value);
  std::string tok;
  while (ss >> tok) {
    double v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v)) {
      throw Error(ErrorCode::ParseError, "model key '" + key + "': bad number '" + tok + "'");
    }
    out.push_back(v);
  }
  if (expected && out.size() != expected) {
    throw Error(ErrorCode::ParseError, "model key '" + key + "' expects " +
                                           std::to_string(expected) + " values");
  }
  return out;
}

}  // namespace

void write_model(std::ostream& out, const StoredModel& stored) {
  out << "format = " << kModelFormat << '\n';
  out << "version = " << kModelFormatVersion << '\n';
  out << "mapper = " << to_string(kind_of(stored.model)) << '\n';
  out << "calibration_depths_m = " << join_depths(stored.calibration_depths, ' ') << '\n';
  std::visit(
      [&out](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Model2Dto2D>) {
          out << "pupil_normalization_px = " << number(m.pupil_norm.width) << ' '
              << number(m.pupil_norm.height) << '\n';
          out << "weights = " << weights_line(m.weights) << '\n';
          const auto& c = m.scene_camera;
          const double cam[6] = {c.focal.x(), c.focal.y(), c.principal.x(), c.principal.y(),
                                 double(c.resolution.x()), double(c.resolution.y())};
          out << "scene_camera = " << join(cam, 6) << '\n';
        } else if constexpr (std::is_same_v<T, Model2Dto3D>) {
          out << "pupil_normalization_px = " << number(m.pupil_norm.width) << ' '
              << number(m.pupil_norm.height) << '\n';
          out << "weights = " << weights_line(m.weights) << '\n';
          out << "eyeball_center_m = " << join(m.eyeball_center.data(), 3) << '\n';
        } else {
          out << "angles_rad = " << join(m.angles.radians.data(), 3) << '\n';
          out << "eyeball_center_m = " << join(m.eyeball_center.data(), 3) << '\n';
        }
      },
      stored.model);
}

StoredModel read_model(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) parse_error(line_no, "expected 'key = value'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    if (kv.count(key)) parse_error(line_no, "duplicate key '" + key + "'");
    kv[key] = trim(line.substr(eq + 1));
  }
  auto get = [&kv](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorCode::ParseError, "model is missing '" + key + "'");
    return it->second;
  };
  if (get("format") != kModelFormat) throw Error(ErrorCode::ParseError, "not a gaze3d model");
  if (get("version") != std::to_string(kModelFormatVersion)) {
    throw Error(ErrorCode::SchemaVersionMismatch, "unsupported model version " + get("version"));
  }

  auto weights_of = [&]() {
    const auto w = numbers_of(get("weights"), "weights", 14);
    PolyWeights out;
    for (int r = 0; r < 7; ++r) {
      for (int c = 0; c < 2; ++c) out(r, c) = w[std::size_t(2 * r + c)];
    }
    return out;
  };
  auto norm_of = [&]() {
    const auto n = numbers_of(get("pupil_normalization_px"), "pupil_normalization_px", 2);
    return PupilNormalization{n[0], n[1]};
  };
  auto vec3_of = [&](const std::string& key) {
    const auto v = numbers_of(get(key), key, 3);
    return Vec3(v[0], v[1], v[2]);
  };

  StoredModel stored;
  stored.calibration_depths = numbers_of(get("calibration_depths_m"), "calibration_depths_m", 0);
  const MapperKind kind = parse_mapper_kind(get("mapper"));
  std::set<std::string> allowed = {"format", "version", "mapper", "calibration_depths_m"};
  switch (kind) {
    case MapperKind::TwoDToTwoD: {
      Model2Dto2D m;
      m.weights = weights_of();
      m.pupil_norm = norm_of();
      const auto c = numbers_of(get("scene_camera"), "scene_camera", 6);
      m.scene_camera.focal = Vec2(c[0], c[1]);
      m.scene_camera.principal = Vec2(c[2], c[3]);
      m.scene_camera.resolution = Eigen::Vector2i(int(c[4]), int(c[5]));
      m.scene_camera.validate();
      stored.model = m;
      allowed.insert({"weights", "pupil_normalization_px", "scene_camera"});
      break;
    }
    case MapperKind::TwoDToThreeD: {
      Model2Dto3D m;
      m.weights = weights_of();
      m.pupil_norm = norm_of();
      m.eyeball_center = vec3_of("eyeball_center_m");
      stored.model = m;
      allowed.insert({"weights", "pupil_normalization_px", "eyeball_center_m"});
      break;
    }
    case MapperKind::ThreeDToThreeD: {
      Model3Dto3D m;
      m.angles = EulerAngles(vec3_of("angles_rad"));
      if (!m.angles.in_range()) {
        throw Error(ErrorCode::AngleOutOfRange, "model angles outside [-pi, pi]");
      }
      m.eyeball_center = vec3_of("eyeball_center_m");
      stored.model = m;
      allowed.insert({"angles_rad", "eyeball_center_m"});
      break;
    }
  }
  for (const auto& [key, value] : kv) {
    if (!allowed.count(key)) throw Error(ErrorCode::ParseError, "unknown model key '" + key + "'");
  }
  return stored;
}

StoredModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open model '" + path.string() + "'");
  return read_model(in);
}

void save_model(const std::filesystem::path& path, const StoredModel& model) {
  auto out = open_output(path);
  write_model(out, model);
}

// CSV ---------------------------------------------------------------------

void write_results_csv(std::ostream& out, std::span<const ErrorRecord> records) {
  out << "mapper,k,calib_subset,test_depth_m,n_targets,mean_error_deg,std_error_deg,status\n";
  for (const auto& r : records) {
    out << to_string(r.mapper) << ',' << r.k() << ',' << join_depths(r.calibration_depths, ';')
        << ',' << number(r.test_depth) << ',';
    if (r.ok) {
      out << r.errors.size() << ',' << number(r.mean) << ',' << number(r.std) << ",ok\n";
    } else {
      out << ",,,failed\n";
    }
  }
}

void export_results_csv(const SweepResult& sweep, const std::filesystem::path& path) {
  if (sweep.records.empty()) throw Error(ErrorCode::InsufficientData, "empty sweep");
  auto out = open_output(path);
  write_results_csv(out, sweep.records);
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

void write_offsets_csv(std::ostream& out, std::span<const OffsetBucket> buckets) {
  out << "mapper,offset_m,n_records,mean_error_deg,std_error_deg\n";
  for (const auto& b : buckets) {
    out << to_string(b.mapper) << ',' << number(b.offset) << ',' << b.records << ','
        << number(b.mean) << ',' << number(b.std) << '\n';
  }
}

void write_summary_csv(std::ostream& out, std::span<const DepthCountSummary> rows) {
  out << "mapper,k,n_records,n_failed,mean_error_deg,std_error_deg\n";
  for (const auto& s : rows) {
    out << to_string(s.mapper) << ',' << s.k << ',' << s.records << ',' << s.failed << ','
        << number(s.mean) << ',' << number(s.std) << '\n';
  }
}

}  // namespace gaze3d
