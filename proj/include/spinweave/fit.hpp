#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace spinweave {

struct LmOptions {
  int max_iterations = 500;
  double step_tolerance = 1e-13;
  double cost_floor = 1e-32;
};

struct LmResult {
  Eigen::VectorXd params;
  double cost = 0.0;  ///< 0.5 * ||r||^2
  int iterations = 0;
  bool converged = false;
};

/// residuals(p, r, J) fills r (m) and J (m x n) at p.
using ResidualFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)>;

/// Box-constrained Levenberg-Marquardt with Marquardt diagonal scaling; steps
/// are projected onto [lower, upper].
inline LmResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd p, const Eigen::VectorXd& lower,
                                    const Eigen::VectorXd& upper, const LmOptions& options = {}) {
  auto project = [&](Eigen::VectorXd& v) { v = v.cwiseMax(lower).cwiseMin(upper); };
  project(p);

  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  residuals(p, r, jac);
  double cost = 0.5 * r.squaredNorm();

  LmResult out;
  double lambda = -1.0;
  double nu = 2.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    out.iterations = it + 1;
    if (!std::isfinite(cost)) break;
    if (cost <= options.cost_floor) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    Eigen::VectorXd diag = a.diagonal().cwiseMax(1e-300);
    if (lambda < 0) lambda = 1e-3;

    const Eigen::MatrixXd damped = a + lambda * Eigen::MatrixXd(diag.asDiagonal());
    Eigen::VectorXd step = damped.ldlt().solve(-g);
    if (!step.allFinite()) {
      lambda *= nu;
      nu *= 2.0;
      continue;
    }
    Eigen::VectorXd trial = p + step;
    project(trial);
    const Eigen::VectorXd actual_step = trial - p;

    Eigen::VectorXd r_new;
    Eigen::MatrixXd jac_new;
    residuals(trial, r_new, jac_new);
    const double cost_new = 0.5 * r_new.squaredNorm();
    const double predicted = -(g.dot(actual_step) + 0.5 * actual_step.dot(a * actual_step));

    if (std::isfinite(cost_new) && cost_new < cost) {
      const double rho = predicted > 0 ? (cost - cost_new) / predicted : 1.0;
      p = trial;
      r = std::move(r_new);
      jac = std::move(jac_new);
      const double previous = cost;
      cost = cost_new;
      lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
      nu = 2.0;
      const double scale = p.norm() + options.step_tolerance;
      if (actual_step.norm() <= options.step_tolerance * scale && previous - cost <= 1e-15 * previous) {
        out.converged = true;
        break;
      }
    } else {
      lambda *= nu;
      nu *= 2.0;
      if (lambda > 1e30) {
        out.converged = true;  // no descent direction left at this point
        break;
      }
    }
  }
  out.params = p;
  out.cost = cost;
  return out;
}

}  // namespace spinweave
