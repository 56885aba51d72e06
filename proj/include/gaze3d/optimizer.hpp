#pragma once

// Levenberg-Marquardt for small dense nonlinear least-squares problems
// with numeric (central-difference) Jacobians.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string_view>
#include <vector>

#include "gaze3d/error.hpp"
#include "gaze3d/geometry.hpp"

namespace gaze3d {

template <typename Scalar>
using VecXT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatXT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Per-parameter domain. Periodic parameters wrap modulo 2*pi into
/// [-pi, pi]; the others are clipped to [lower, upper].
template <typename Scalar>
struct ParameterDomain {
  Scalar lower = -std::numeric_limits<Scalar>::infinity();
  Scalar upper = std::numeric_limits<Scalar>::infinity();
  bool periodic = false;

  static ParameterDomain angle() { return {-kPi<Scalar>, kPi<Scalar>, true}; }
  static ParameterDomain free() { return {}; }
};

template <typename Scalar>
struct ResidualProblemT {
  using Vector = VecXT<Scalar>;

  Eigen::Index num_params = 0;
  std::function<Vector(const Vector&)> residuals;
  /// Empty means every parameter is unconstrained.
  std::vector<ParameterDomain<Scalar>> domains;

  Vector project(Vector x) const {
    for (std::size_t i = 0; i < domains.size(); ++i) {
      const auto& d = domains[i];
      auto& v = x[static_cast<Eigen::Index>(i)];
      v = d.periodic ? wrap_angle(v) : std::clamp(v, d.lower, d.upper);
    }
    return x;
  }

  Vector evaluate(const Vector& x) const {
    Vector r = residuals(x);
    if (!r.allFinite()) {
      throw Error(ErrorCode::NonFiniteResidual, "residual evaluation produced a non-finite value");
    }
    return r;
  }
};
using ResidualProblem = ResidualProblemT<double>;

template <typename Scalar>
struct LMSettingsT {
  Scalar initial_damping = Scalar(1e-3);
  Scalar damping_increase = Scalar(10);
  Scalar damping_decrease = Scalar(10);
  int max_iterations = 200;
  Scalar step_tolerance = Scalar(1e-10);
  Scalar cost_tolerance = Scalar(1e-12);
  Scalar gradient_tolerance = Scalar(1e-14);
  Scalar max_damping = Scalar(1e16);

  void validate() const {
    const bool ok = initial_damping > 0 && damping_increase > 1 && damping_decrease > 1 &&
                    max_iterations > 0 && step_tolerance > 0 && cost_tolerance > 0 &&
                    gradient_tolerance > 0 && max_damping > initial_damping;
    if (!ok) throw Error(ErrorCode::ConfigError, "LM settings must be positive");
  }
};
using LMSettings = LMSettingsT<double>;

enum class Termination {
  ZeroResidual,
  SmallStep,
  SmallCostDecrease,
  SmallGradient,
  DampingSaturated,
  MaxIterations,
};

constexpr std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::ZeroResidual: return "zero_residual";
    case Termination::SmallStep: return "small_step";
    case Termination::SmallCostDecrease: return "small_cost_decrease";
    case Termination::SmallGradient: return "small_gradient";
    case Termination::DampingSaturated: return "damping_saturated";
    case Termination::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

template <typename Scalar>
struct FitReportT {
  VecXT<Scalar> params;
  Scalar initial_cost = 0;
  Scalar cost = 0;
  int iterations = 0;
  Termination termination = Termination::MaxIterations;
  /// Cost after every accepted step, starting with the initial cost.
  std::vector<Scalar> accepted_costs;
};
using FitReport = FitReportT<double>;

/// Central-difference Jacobian with step max(1e-6, 1e-6 |x_j|).
template <typename Scalar>
MatXT<Scalar> numeric_jacobian(const ResidualProblemT<Scalar>& problem, const VecXT<Scalar>& x) {
  const Eigen::Index n = x.size();
  VecXT<Scalar> xp = x;
  MatXT<Scalar> jac;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar h = std::max(Scalar(1e-6), Scalar(1e-6) * std::abs(x[j]));
    xp[j] = x[j] + h;
    const VecXT<Scalar> rp = problem.evaluate(xp);
    xp[j] = x[j] - h;
    const VecXT<Scalar> rm = problem.evaluate(xp);
    xp[j] = x[j];
    if (j == 0) jac.resize(rp.size(), n);
    jac.col(j) = (rp - rm) / (Scalar(2) * h);
  }
  return jac;
}

/// Minimizes 0.5 |r(x)|^2 by Levenberg-Marquardt with Marquardt diagonal
/// scaling. Costs reported are plain sums of squared residuals. Accepted
/// steps strictly decrease the cost.
template <typename Scalar>
FitReportT<Scalar> solve_lm(const ResidualProblemT<Scalar>& problem, const VecXT<Scalar>& initial,
                            const LMSettingsT<Scalar>& settings = {}) {
  settings.validate();
  if (initial.size() != problem.num_params) {
    throw Error(ErrorCode::ConfigError, "initial parameter vector has the wrong dimension");
  }

  FitReportT<Scalar> report;
  VecXT<Scalar> x = problem.project(initial);
  VecXT<Scalar> r = problem.evaluate(x);
  Scalar cost = r.squaredNorm();
  report.initial_cost = cost;
  report.accepted_costs.push_back(cost);

  auto finish = [&](Termination t) {
    report.params = x;
    report.cost = cost;
    report.termination = t;
    return report;
  };
  if (cost == Scalar(0)) return finish(Termination::ZeroResidual);

  Scalar damping = settings.initial_damping;
  for (int iter = 1; iter <= settings.max_iterations; ++iter) {
    report.iterations = iter;
    const MatXT<Scalar> jac = numeric_jacobian(problem, x);
    const VecXT<Scalar> grad = jac.transpose() * r;
    if (grad.template lpNorm<Eigen::Infinity>() < settings.gradient_tolerance) {
      return finish(Termination::SmallGradient);
    }
    const MatXT<Scalar> normal = jac.transpose() * jac;
    VecXT<Scalar> scale = normal.diagonal();
    const Scalar floor = Scalar(1e-12) * std::max(Scalar(1), scale.maxCoeff());
    scale = scale.cwiseMax(floor);

    int failed_solves = 0;
    while (true) {
      MatXT<Scalar> damped = normal;
      damped.diagonal() += damping * scale;
      const Eigen::LDLT<MatXT<Scalar>> ldlt(damped);
      VecXT<Scalar> step;
      if (ldlt.info() == Eigen::Success) step = ldlt.solve(-grad);
      if (ldlt.info() != Eigen::Success || !step.allFinite()) {
        if (++failed_solves > 8) {
          throw Error(ErrorCode::SingularNormalEquations, "damped normal equations are singular");
        }
        damping *= settings.damping_increase;
        continue;
      }

      const VecXT<Scalar> candidate = problem.project(x + step);
      VecXT<Scalar> r_new = problem.residuals(candidate);
      const Scalar new_cost = r_new.allFinite() ? r_new.squaredNorm()
                                                : std::numeric_limits<Scalar>::infinity();
      if (new_cost < cost) {
        const Scalar decrease = cost - new_cost;
        const Scalar step_norm = step.norm();
        const Scalar x_norm = x.norm();
        x = candidate;
        r = std::move(r_new);
        cost = new_cost;
        report.accepted_costs.push_back(cost);
        damping = std::max(damping / settings.damping_decrease, Scalar(1e-15));
        if (cost == Scalar(0)) return finish(Termination::ZeroResidual);
        if (step_norm < settings.step_tolerance * (x_norm + settings.step_tolerance)) {
          return finish(Termination::SmallStep);
        }
        if (decrease < settings.cost_tolerance * (cost + decrease)) {
          return finish(Termination::SmallCostDecrease);
        }
        break;
      }
      damping *= settings.damping_increase;
      if (damping > settings.max_damping) return finish(Termination::DampingSaturated);
    }
  }
  return finish(Termination::MaxIterations);
}

/// True when every accepted cost is <= its predecessor.
template <typename Scalar>
bool costs_monotone(const std::vector<Scalar>& costs) {
  return std::adjacent_find(costs.begin(), costs.end(),
                            [](Scalar a, Scalar b) { return b > a; }) == costs.end();
}

}  // namespace gaze3d
