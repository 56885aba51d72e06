// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/SVD>

#include "gaze3d/dataset_io.hpp"
#include "gaze3d/eye_simulator.hpp"
#include "gaze3d/evaluation.hpp"
#include "gaze3d/mappers.hpp"

using namespace gaze3d;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const Dataset& noiseless() {
  static const Dataset data =
      synthesize_dataset(SimRig::defaults(), TwoSphereEye{}, DatasetLayout{}, 1);
  return data;
}

const SweepResult& noiseless_sweep() {
  static const SweepResult sweep = depth_combination_sweep(noiseless(), {});
  return sweep;
}

Outcome eye_model() {
  const double q = derive_pupil_geometry(TwoSphereEye{}).circle_radius_mm;
  return {std::abs(q - 5.77) <= 0.05, "q = " + fmt("%.4f", q) + " mm"};
}

Outcome three_d_near_zero() {
  const auto& sweep = noiseless_sweep();
  double worst_k1 = 0, worst_all = 0;
  bool all_ok = true;
  for (const auto& r : sweep.records) {
    if (r.mapper != MapperKind::ThreeDToThreeD) continue;
    all_ok = all_ok && r.ok;
    worst_all = std::max(worst_all, r.mean);
    if (r.k() == 1) worst_k1 = std::max(worst_k1, r.mean);
  }
  return {all_ok && worst_k1 < 0.1 && worst_all < 0.1,
          "max mean k=1 " + fmt("%.3g", worst_k1) + " deg, any k " + fmt("%.3g", worst_all) +
              " deg"};
}

Outcome parallax_collapse() {
  const auto& sweep = noiseless_sweep();
  const std::vector<double> subset = {1.0, 1.5, 2.0};
  std::vector<double> pooled;
  const ErrorRecord* closest = nullptr;
  const ErrorRecord* farthest = nullptr;
  for (double d : sweep.test_depths) {
    const ErrorRecord* r = sweep.find(MapperKind::TwoDToThreeD, subset, d);
    if (!r || !r->ok) return {false, "missing or failed record"};
    pooled.insert(pooled.end(), r->errors.begin(), r->errors.end());
    if (!closest) closest = r;
    farthest = r;
  }
  const double mean = mean_std(pooled).first;
  return {mean < 0.5 && closest->mean >= farthest->mean,
          "mean " + fmt("%.3f", mean) + " deg; closest " + fmt("%.3f", closest->mean) +
              " >= farthest " + fmt("%.3f", farthest->mean)};
}

Outcome two_d_three_d_beats_two_d() {
  const auto& sweep = noiseless_sweep();
  double worst = -1e9;
  int pairs = 0;
  for (const auto* r3 : sweep.find(MapperKind::TwoDToThreeD, 1)) {
    const ErrorRecord* r2 = sweep.find(MapperKind::TwoDToTwoD, r3->calibration_depths, r3->test_depth);
    if (!r2 || !r2->ok || !r3->ok) return {false, "missing or failed record"};
    worst = std::max(worst, r3->mean - r2->mean);
    ++pairs;
  }
  return {pairs == 25 && worst <= 0.05,
          std::to_string(pairs) + " pairs; max(2d3d - 2d2d) = " + fmt("%.3f", worst) + " deg"};
}

Outcome two_d_parallax_signature() {
  SweepResult k1;
  for (const auto* r : noiseless_sweep().find(MapperKind::TwoDToTwoD, 1)) k1.records.push_back(*r);
  // fold signed offsets into |test - calibration| buckets, averaging pair means
  std::map<long long, std::pair<double, int>> by_abs;
  for (const auto& b : offset_analysis(k1)) {
    auto& acc = by_abs[std::llabs(std::llround(b.offset * 1000.0))];
    acc.first += b.mean * double(b.records);
    acc.second += int(b.records);
  }
  std::string detail;
  bool pass = true;
  double prev = -1;
  for (const auto& [mm, acc] : by_abs) {
    const double mean = acc.first / acc.second;
    detail += fmt("|%.2f|:", mm / 1000.0) + fmt("%.3f ", mean);
    pass = pass && mean > prev;
    prev = mean;
  }
  return {pass && by_abs.size() == 5, detail + "deg"};
}

Outcome depth_count_monotone() {
  std::map<MapperKind, std::vector<double>> means;
  for (const auto& s : summarize_by_k(noiseless_sweep())) means[s.mapper].push_back(s.mean);
  const auto& m2 = means[MapperKind::TwoDToTwoD];
  const auto& m23 = means[MapperKind::TwoDToThreeD];
  const auto& m3 = means[MapperKind::ThreeDToThreeD];
  bool non_increasing = true;
  for (std::size_t i = 1; i < m23.size(); ++i) non_increasing = non_increasing && m23[i] <= m23[i - 1];
  const bool three_small = std::all_of(m3.begin(), m3.end(), [](double v) { return v < 0.1; });
  const bool two_improves = m2.back() < m2.front();
  std::string detail = "2d3d by k:";
  for (double v : m23) detail += fmt(" %.4f", v);
  detail += non_increasing ? " (non-increasing)" : " (rises)";
  detail += "; 2d2d k=1 " + fmt("%.4f", m2.front()) + " -> k=5 " + fmt("%.4f", m2.back());
  detail += "; 3d3d max " + fmt("%.2g", *std::max_element(m3.begin(), m3.end()));
  return {non_increasing && three_small && two_improves && m23.size() == 5, detail};
}

Mat3 rotation_near_initial(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> deg(0.0, 30.0);
  const Vec3 axis = Vec3(n(rng), n(rng), n(rng)).normalized();
  return rotation_from_angles(initial_angles_3d_to_3d()) *
         Eigen::AngleAxisd(deg_to_rad(deg(rng)), axis).toRotationMatrix();
}

Outcome oracle_recovery() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> off(-0.05, 0.05);
  double worst_rot = 0, worst_e = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Mat3 r_star = rotation_near_initial(rng);
    const Vec3 e_star(off(rng), off(rng), off(rng));
    std::vector<Vec3> poses, targets;
    for (const Vec3& t : generate_target_grid({1.0 + 0.05 * trial, 5, 5, 1.215, 0.687,
                                               SampleRole::Calibration})) {
      targets.push_back(t);
      poses.push_back(r_star.transpose() * (t - e_star).normalized());
    }
    const Model3Dto3D m = fit_3d_to_3d(poses, targets);
    worst_rot = std::max(worst_rot, rad_to_deg(Eigen::AngleAxisd(m.rotation().transpose() * r_star).angle()));
    worst_e = std::max(worst_e, (m.eyeball_center - e_star).norm());
  }

  PolyWeights planted;
  planted << 640, 360, 420, -15, 12, 240, 30, -8, -25, 14, 9, -18, 6, 4;
  const PupilNormalization norm{640.0, 360.0};
  std::vector<Vec2> px, target_px;
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {
      px.emplace_back(140.0 + 90.0 * c + 4.0 * r, 70.0 + 55.0 * r - 3.0 * c);
      target_px.push_back((poly_features(norm.apply(px.back())).transpose() * planted).transpose());
    }
  }
  const Model2Dto2D m2 = fit_2d_to_2d(px, target_px, norm, SimRig::defaults().scene_camera);
  const double w_err = (m2.weights - planted).cwiseAbs().maxCoeff();

  return {worst_rot < 0.1 && worst_e < 1e-3 && w_err < 1e-8,
          "3d3d rot " + fmt("%.2g", worst_rot) + " deg, e " + fmt("%.2g", worst_e * 1e3) +
              " mm; 2d2d max |dw| " + fmt("%.2g", w_err)};
}

Outcome optimizer_suite() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst_rel = 0;
  bool monotone = true;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd a(40, 8);
    Eigen::VectorXd b(40);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
    for (int i = 0; i < b.size(); ++i) b[i] = n(rng);
    const Eigen::VectorXd x = a.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);
    const double best = (a * x - b).squaredNorm();
    ResidualProblem p;
    p.num_params = 8;
    p.residuals = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return a * v - b; };
    const FitReport rep = solve_lm(p, Eigen::VectorXd(Eigen::VectorXd::Zero(8)));
    worst_rel = std::max(worst_rel, std::abs(rep.cost - best) / best);
    monotone = monotone && costs_monotone(rep.accepted_costs);
  }

  ResidualProblem rosen;
  rosen.num_params = 2;
  rosen.residuals = [](const Eigen::VectorXd& v) {
    Eigen::VectorXd r(2);
    r << 10.0 * (v[1] - v[0] * v[0]), 1.0 - v[0];
    return r;
  };
  const FitReport rr = solve_lm(rosen, Eigen::VectorXd(Eigen::Vector2d(-1.2, 1.0)));
  const double rosen_err = (rr.params - Eigen::Vector2d(1, 1)).norm();
  monotone = monotone && costs_monotone(rr.accepted_costs);

  int logged = 0;
  for (const auto& f : noiseless_sweep().fits) {
    if (!f.summary) continue;
    ++logged;
    monotone = monotone && costs_monotone(f.summary->accepted_costs);
  }
  return {worst_rel <= 1e-8 && rosen_err <= 1e-6 && monotone,
          "LS rel " + fmt("%.2g", worst_rel) + "; rosenbrock |x-(1,1)| " + fmt("%.2g", rosen_err) +
              "; monotone over " + std::to_string(logged + 11) + " runs: " +
              (monotone ? "yes" : "no")};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

Outcome determinism_io() {
  const auto dir = std::filesystem::temp_directory_path() / "gaze3d_acceptance";
  std::filesystem::remove_all(dir);
  SimRig rig = SimRig::defaults();
  rig.noise = {0.5, 0.5, 1.0};
  const Dataset a = synthesize_dataset(rig, TwoSphereEye{}, DatasetLayout{}, 77);
  const Dataset b = synthesize_dataset(rig, TwoSphereEye{}, DatasetLayout{}, 77);
  save_dataset(dir / "a.jsonl", a);
  save_dataset(dir / "b.jsonl", b);
  const bool same_dataset = slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl");

  export_results_csv(depth_combination_sweep(load_dataset(dir / "a.jsonl"), {}), dir / "a.csv");
  export_results_csv(depth_combination_sweep(b, {}), dir / "b.csv");
  const bool same_csv = slurp(dir / "a.csv") == slurp(dir / "b.csv");

  const Dataset back = load_dataset(dir / "a.jsonl");
  bool lossless = back.calibration.size() == a.calibration.size() && back.test.size() == a.test.size();
  auto same = [](const SimSample& x, const SimSample& y) {
    return x.pupil_px == y.pupil_px && x.pupil_pose == y.pupil_pose && x.target == y.target &&
           x.target_px == y.target_px && x.depth == y.depth && x.role == y.role;
  };
  for (std::size_t i = 0; lossless && i < a.calibration.size(); ++i) {
    lossless = same(a.calibration[i], back.calibration[i]);
  }
  for (std::size_t i = 0; lossless && i < a.test.size(); ++i) lossless = same(a.test[i], back.test[i]);
  std::filesystem::remove_all(dir);
  return {same_dataset && same_csv && lossless,
          std::string("dataset bytes ") + (same_dataset ? "equal" : "differ") + ", csv bytes " +
              (same_csv ? "equal" : "differ") + ", round trip " + (lossless ? "lossless" : "lossy")};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"C1 eye-model pupil circle radius", eye_model},
      {"C2 3D-to-3D near-zero error", three_d_near_zero},
      {"C3 2D-to-3D multi-depth parallax collapse", parallax_collapse},
      {"C4 2D-to-3D beats 2D-to-2D at k=1", two_d_three_d_beats_two_d},
      {"C5 2D-to-2D parallax signature", two_d_parallax_signature},
      {"C6 depth-count monotonicity", depth_count_monotone},
      {"C7 oracle recovery", oracle_recovery},
      {"C8 optimizer suite", optimizer_suite},
      {"C9 determinism and I/O", determinism_io},
  };
  const auto start = std::chrono::steady_clock::now();
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %-44s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    failed += o.pass ? 0 : 1;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool fast = seconds < 60.0;
  std::printf("%s  %-44s %.2f s\n", fast ? "PASS" : "FAIL", "runtime under 60 s", seconds);
  failed += fast ? 0 : 1;
  std::printf("%d of %zu checks failed\n", failed, std::size(criteria) + 1);
  return failed == 0 ? 0 : 1;
}
