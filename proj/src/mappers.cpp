#include "gaze3d/mappers.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace gaze3d {

namespace {

constexpr int kWeightCount = 14;

Eigen::MatrixXd feature_matrix(std::span<const Vec2> pupil_px, const PupilNormalization& norm) {
  Eigen::MatrixXd q(static_cast<Eigen::Index>(pupil_px.size()), 7);
  for (std::size_t i = 0; i < pupil_px.size(); ++i) {
    q.row(static_cast<Eigen::Index>(i)) = poly_features(norm.apply(pupil_px[i])).transpose();
  }
  return q;
}

PolyWeights solve_regression(const Eigen::MatrixXd& q, const Eigen::MatrixX2d& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(q);
  qr.setThreshold(1e-10);
  if (qr.rank() < 7) {
    throw Error(ErrorCode::RankDeficient,
                "polynomial feature matrix has rank " + std::to_string(qr.rank()) + " < 7");
  }
  return qr.solve(y);
}

void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorCode::InsufficientData, "input sequences differ in length");
}

// Targets all lying on one line (through `through` when given) leave the
// cross-product cost without a unique minimizer.
bool targets_collinear(std::span<const Vec3> targets, const Vec3* through) {
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(targets.size() + (through ? 1 : 0)), 3);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    pts.row(static_cast<Eigen::Index>(i)) = targets[i].transpose();
  }
  if (through) pts.row(pts.rows() - 1) = through->transpose();
  const Eigen::RowVector3d mean = pts.colwise().mean();
  pts.rowwise() -= mean;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(pts);
  const auto s = svd.singularValues();
  return s(0) < 1e-12 || s(1) < 1e-9 * s(0);
}

bool targets_coplanar(std::span<const Vec3> targets) {
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(targets.size()), 3);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    pts.row(static_cast<Eigen::Index>(i)) = targets[i].transpose();
  }
  const Eigen::RowVector3d mean = pts.colwise().mean();
  pts.rowwise() -= mean;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(pts);
  const auto s = svd.singularValues();
  return s(2) < 1e-9 * s(0);
}

Vec3 offset_to(const Vec3& target, const Vec3& e, bool normalize) {
  const Vec3 d = target - e;
  return normalize ? Vec3(d / d.norm()) : d;
}

PolyWeights unpack_weights(const Eigen::VectorXd& x) {
  PolyWeights w;
  for (int r = 0; r < 7; ++r) {
    w(r, 0) = x[2 * r];
    w(r, 1) = x[2 * r + 1];
  }
  return w;
}

}  // namespace

PolyFeature poly_features(const Vec2& p) {
  const double u = p.x();
  const double v = p.y();
  PolyFeature q;
  q << 1.0, u, v, u * v, u * u, v * v, u * u * v * v;
  return q;
}

Vec3 polar_to_direction(const Vec2& a) {
  const double theta = a.x();
  const double phi = a.y();
  return Vec3(std::sin(theta), std::cos(theta) * std::sin(phi), std::cos(theta) * std::cos(phi));
}

Vec2 direction_to_polar(const Vec3& v) {
  const double n = v.norm();
  if (!(n > 0)) throw Error(ErrorCode::ZeroVector, "direction_to_polar of zero vector");
  return Vec2(std::asin(std::clamp(v.x() / n, -1.0, 1.0)), std::atan2(v.y(), v.z()));
}

// 2D-to-2D ----------------------------------------------------------------

Model2Dto2D fit_2d_to_2d(std::span<const Vec2> pupil_px, std::span<const Vec2> target_px,
                         const PupilNormalization& norm, const PinholeCamera& scene_camera) {
  require_same_size(pupil_px.size(), target_px.size());
  if (pupil_px.size() < 7) {
    throw Error(ErrorCode::RankDeficient, "2D-to-2D needs at least 7 samples, got " +
                                              std::to_string(pupil_px.size()));
  }
  Eigen::MatrixX2d s(static_cast<Eigen::Index>(target_px.size()), 2);
  for (std::size_t i = 0; i < target_px.size(); ++i) {
    s.row(static_cast<Eigen::Index>(i)) = target_px[i].transpose();
  }
  Model2Dto2D model;
  model.weights = solve_regression(feature_matrix(pupil_px, norm), s);
  model.pupil_norm = norm;
  model.scene_camera = scene_camera;
  return model;
}

Vec2 predict_2d_to_2d(const Model2Dto2D& model, const Vec2& pupil_px) {
  return (poly_features(model.pupil_norm.apply(pupil_px)).transpose() * model.weights).transpose();
}

Ray predict_2d_to_2d_ray(const Model2Dto2D& model, const Vec2& pupil_px) {
  return back_project(model.scene_camera, predict_2d_to_2d(model, pupil_px));
}

double cost_2d_to_2d(const PolyWeights& weights, std::span<const Vec2> pupil_px,
                     std::span<const Vec2> target_px, const PupilNormalization& norm) {
  require_same_size(pupil_px.size(), target_px.size());
  double cost = 0;
  for (std::size_t i = 0; i < pupil_px.size(); ++i) {
    const Vec2 f = (poly_features(norm.apply(pupil_px[i])).transpose() * weights).transpose();
    cost += (target_px[i] - f).squaredNorm();
  }
  return cost;
}

// 2D-to-3D ----------------------------------------------------------------

PolyWeights initial_weights_2d_to_3d(std::span<const Vec2> pupil_px, std::span<const Vec3> targets,
                                     const PupilNormalization& norm) {
  Eigen::MatrixX2d angles(static_cast<Eigen::Index>(targets.size()), 2);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    angles.row(static_cast<Eigen::Index>(i)) = direction_to_polar(targets[i]).transpose();
  }
  return solve_regression(feature_matrix(pupil_px, norm), angles);
}

double cost_2d_to_3d(const PolyWeights& weights, const Vec3& eyeball_center,
                     std::span<const Vec2> pupil_px, std::span<const Vec3> targets,
                     const PupilNormalization& norm, bool normalize_residuals) {
  double cost = 0;
  for (std::size_t i = 0; i < pupil_px.size(); ++i) {
    const Vec2 a = (poly_features(norm.apply(pupil_px[i])).transpose() * weights).transpose();
    cost += polar_to_direction(a)
                .cross(offset_to(targets[i], eyeball_center, normalize_residuals))
                .squaredNorm();
  }
  return cost;
}

Model2Dto3D fit_2d_to_3d(std::span<const Vec2> pupil_px, std::span<const Vec3> targets,
                         const PupilNormalization& norm, const GazeFitOptions& options) {
  require_same_size(pupil_px.size(), targets.size());
  if (pupil_px.size() < 9) {
    throw Error(ErrorCode::InsufficientData, "2D-to-3D needs at least 9 samples, got " +
                                                 std::to_string(pupil_px.size()));
  }
  const Vec3 origin = Vec3::Zero();
  if (targets_collinear(targets, &origin)) {
    throw Error(ErrorCode::DegenerateGeometry, "all targets lie on one ray from the origin");
  }

  const Eigen::MatrixXd q = feature_matrix(pupil_px, norm);
  const PolyWeights w0 = initial_weights_2d_to_3d(pupil_px, targets, norm);

  const bool hold_center = options.hold_center_when_coplanar && targets_coplanar(targets);
  ResidualProblem problem;
  problem.num_params = kWeightCount + (hold_center ? 0 : 3);
  const bool normalize = options.normalize_residuals;
  problem.residuals = [&q, targets, normalize, hold_center](const Eigen::VectorXd& x) {
    const PolyWeights w = unpack_weights(x);
    const Vec3 e = hold_center ? Vec3::Zero() : Vec3(x.tail<3>());
    const Eigen::MatrixX2d alpha = q * w;
    Eigen::VectorXd r(3 * alpha.rows());
    for (Eigen::Index i = 0; i < alpha.rows(); ++i) {
      const Vec3 g = polar_to_direction(alpha.row(i).transpose());
      r.segment<3>(3 * i) =
          g.cross(offset_to(targets[static_cast<std::size_t>(i)], e, normalize));
    }
    return r;
  };

  Eigen::VectorXd x0(problem.num_params);
  for (int r = 0; r < 7; ++r) {
    x0[2 * r] = w0(r, 0);
    x0[2 * r + 1] = w0(r, 1);
  }
  if (!hold_center) x0.tail<3>().setZero();

  const FitReport report = solve_lm(problem, x0, options.lm);
  Model2Dto3D model;
  model.weights = unpack_weights(report.params);
  model.eyeball_center = hold_center ? Vec3::Zero() : Vec3(report.params.tail<3>());
  model.pupil_norm = norm;
  model.fit = FitSummary::from(report);
  return model;
}

Ray predict_2d_to_3d(const Model2Dto3D& model, const Vec2& pupil_px) {
  const Vec2 a =
      (poly_features(model.pupil_norm.apply(pupil_px)).transpose() * model.weights).transpose();
  return Ray{model.eyeball_center, polar_to_direction(a)};
}

// 3D-to-3D ----------------------------------------------------------------

double cost_3d_to_3d(const EulerAngles& angles, const Vec3& eyeball_center,
                     std::span<const Vec3> pupil_pose, std::span<const Vec3> targets,
                     bool normalize_residuals) {
  const Mat3 rot = rotation_from_angles(angles.wrapped());
  double cost = 0;
  for (std::size_t i = 0; i < pupil_pose.size(); ++i) {
    cost += (rot * pupil_pose[i])
                .cross(offset_to(targets[i], eyeball_center, normalize_residuals))
                .squaredNorm();
  }
  return cost;
}

Model3Dto3D fit_3d_to_3d(std::span<const Vec3> pupil_pose, std::span<const Vec3> targets,
                         const GazeFitOptions& options) {
  require_same_size(pupil_pose.size(), targets.size());
  if (pupil_pose.size() < 3) {
    throw Error(ErrorCode::InsufficientData, "3D-to-3D needs at least 3 samples, got " +
                                                 std::to_string(pupil_pose.size()));
  }
  for (std::size_t i = 0; i < pupil_pose.size(); ++i) {
    if (std::abs(pupil_pose[i].norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::UnitViolation, "pupil pose " + std::to_string(i) + " is not unit");
    }
  }
  if (targets_collinear(targets, nullptr)) {
    throw Error(ErrorCode::DegenerateGeometry, "all targets lie on one line");
  }

  ResidualProblem problem;
  problem.num_params = 6;
  problem.domains = {ParameterDomain<double>::angle(), ParameterDomain<double>::angle(),
                     ParameterDomain<double>::angle(), ParameterDomain<double>::free(),
                     ParameterDomain<double>::free(), ParameterDomain<double>::free()};
  const bool normalize = options.normalize_residuals;
  problem.residuals = [pupil_pose, targets, normalize](const Eigen::VectorXd& x) {
    // Jacobian probes may step just past +-pi
    const Mat3 rot = rotation_from_angles(EulerAngles(Vec3(x.head<3>())).wrapped());
    const Vec3 e = x.tail<3>();
    Eigen::VectorXd r(3 * static_cast<Eigen::Index>(pupil_pose.size()));
    for (std::size_t i = 0; i < pupil_pose.size(); ++i) {
      r.segment<3>(3 * static_cast<Eigen::Index>(i)) =
          (rot * pupil_pose[i]).cross(offset_to(targets[i], e, normalize));
    }
    return r;
  };

  Eigen::VectorXd x0(6);
  x0.head<3>() = initial_angles_3d_to_3d().radians;
  x0.tail<3>().setZero();

  const FitReport report = solve_lm(problem, x0, options.lm);
  Model3Dto3D model;
  model.angles = EulerAngles(Vec3(report.params.head<3>()));
  model.eyeball_center = report.params.tail<3>();
  model.fit = FitSummary::from(report);
  return model;
}

Ray predict_3d_to_3d(const Model3Dto3D& model, const Vec3& pupil_pose) {
  return Ray{model.eyeball_center, (model.rotation() * pupil_pose).normalized()};
}

}  // namespace gaze3d
