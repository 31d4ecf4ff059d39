#pragma once

// Weighted nonlinear least squares by damped Gauss-Newton (Levenberg style).
//
// Minimizes sum_i w_i (y_i - f(x_i; p))^2. Parameters flagged positive are
// iterated as log(p); covariance is mapped back to natural parameters.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "antibunch/errors.hpp"
#include "antibunch/fit_models.hpp"

namespace antibunch {

struct FitData {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> weight;

  std::size_t size() const { return x.size(); }

  /// Count data with the Gaussian approximation w = 1/max(y, 1).
  static FitData counts(std::vector<double> x, std::vector<double> y) {
    FitData d{std::move(x), std::move(y), {}};
    d.weight.reserve(d.y.size());
    for (double v : d.y) d.weight.push_back(1.0 / std::max(v, 1.0));
    return d;
  }

  static FitData unweighted(std::vector<double> x, std::vector<double> y) {
    std::vector<double> w(y.size(), 1.0);
    return FitData{std::move(x), std::move(y), std::move(w)};
  }

  void validate(std::size_t free_parameters) const {
    require(x.size() == y.size() && x.size() == weight.size(), "fit: x, y and weight sizes differ");
    require(x.size() >= free_parameters + 1, "fit: need more samples than free parameters");
    for (double w : weight) require(w > 0.0 && std::isfinite(w), "fit: weights must be finite and > 0");
  }
};

struct FitOptions {
  int max_iterations = 200;
  double relative_step_tolerance = 1e-8;
  double gradient_tolerance = 1e-10;
  double initial_damping = 1e-3;  // relative to each diagonal entry of the normal matrix
  double damping_factor = 3.0;
};

struct FitResult {
  ModelSpec model;
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> sigmas;
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;
  double chi2_per_dof = 0.0;
  std::size_t dof = 0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;

  std::size_t index_of(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw InvalidArgument("fit result: no parameter '" + name + "'");
    return static_cast<std::size_t>(it - names.begin());
  }
  double value(const std::string& name) const { return values[index_of(name)]; }
  double sigma(const std::string& name) const { return sigmas[index_of(name)]; }
};

namespace detail {

struct Evaluation {
  Eigen::VectorXd residual;  // y - f
  Eigen::MatrixXd jacobian;  // d f / d internal parameter
  double chi2 = 0.0;
};

inline std::vector<double> to_natural(const Eigen::VectorXd& u, const std::vector<bool>& positive) {
  std::vector<double> p(static_cast<std::size_t>(u.size()));
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    p[static_cast<std::size_t>(j)] = positive[static_cast<std::size_t>(j)] ? std::exp(u[j]) : u[j];
  }
  return p;
}

inline double chi2_only(const ModelSpec& model, const FitData& data) {
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = data.y[i] - evaluate(model, data.x[i]);
    s += data.weight[i] * r * r;
  }
  return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
}

inline Evaluation evaluate_all(const ModelSpec& model, const std::vector<double>& p,
                               const std::vector<bool>& positive, const FitData& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto m = static_cast<Eigen::Index>(p.size());
  Evaluation e;
  e.residual.resize(n);
  e.jacobian.resize(n, m);
  std::vector<double> g(p.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = data.x[static_cast<std::size_t>(i)];
    const double r = data.y[static_cast<std::size_t>(i)] - evaluate(model, x);
    e.residual[i] = r;
    e.chi2 += data.weight[static_cast<std::size_t>(i)] * r * r;
    gradient(model, x, g);
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      e.jacobian(i, j) = positive[jj] ? g[jj] * p[jj] : g[jj];
    }
  }
  return e;
}

}  // namespace detail

/// Fits `initial` to `data`. Returns the best point found; `converged` is false
/// when max_iterations ran out. Throws SingularMatrixError when the normal
/// matrix is rank deficient at the solution.
inline FitResult fit(const ModelSpec& initial, const FitData& data, const FitOptions& options = {}) {
  validate(initial);
  const std::vector<bool> positive = positive_parameters(initial);
  const std::vector<double> p0 = parameters(initial);
  const std::size_t m = p0.size();
  data.validate(m);
  for (std::size_t j = 0; j < m; ++j) {
    if (positive[j]) require(p0[j] > 0.0, "fit: positive parameter has a non-positive initial value");
  }

  Eigen::VectorXd u(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    u[static_cast<Eigen::Index>(j)] = positive[j] ? std::log(p0[j]) : p0[j];
  }
  Eigen::Map<const Eigen::VectorXd> w(data.weight.data(), static_cast<Eigen::Index>(data.size()));

  ModelSpec model = initial;
  auto eval = detail::evaluate_all(model, p0, positive, data);
  auto normal = [&](const detail::Evaluation& e) -> Eigen::MatrixXd {
    return e.jacobian.transpose() * w.asDiagonal() * e.jacobian;
  };
  Eigen::MatrixXd jtj = normal(eval);
  Eigen::VectorXd grad = eval.jacobian.transpose() * (w.array() * eval.residual.array()).matrix();
  // Damping scales the diagonal of the normal matrix (Marquardt), so the
  // iteration does not depend on the units of each parameter.
  double mu = options.initial_damping;

  FitResult result;
  int iteration = 0;
  bool converged = grad.norm() < options.gradient_tolerance;
  while (!converged && iteration < options.max_iterations) {
    ++iteration;
    Eigen::MatrixXd damped = jtj;
    const double floor = 1e-300 + 1e-15 * jtj.diagonal().maxCoeff();
    damped.diagonal().array() += mu * jtj.diagonal().array().max(floor);
    const Eigen::VectorXd step = damped.ldlt().solve(grad);
    if (!step.allFinite()) {
      mu *= options.damping_factor;
      continue;
    }
    const Eigen::VectorXd trial_u = u + step;
    const auto trial_p = detail::to_natural(trial_u, positive);
    const ModelSpec trial = with_parameters(model, trial_p);
    const double trial_chi2 = detail::chi2_only(trial, data);
    if (trial_chi2 <= eval.chi2) {
      u = trial_u;
      model = trial;
      eval = detail::evaluate_all(model, trial_p, positive, data);
      jtj = normal(eval);
      grad = eval.jacobian.transpose() * (w.array() * eval.residual.array()).matrix();
      mu = std::max(mu / options.damping_factor, std::numeric_limits<double>::min());
      const double tol = options.relative_step_tolerance;
      // Log-parameterized entries already move in relative units.
      bool small_step = true;
      for (Eigen::Index j = 0; j < u.size(); ++j) {
        const double scale = positive[static_cast<std::size_t>(j)] ? 1.0 : std::abs(u[j]) + tol;
        small_step = small_step && std::abs(step[j]) <= tol * scale;
      }
      if (small_step || grad.norm() < options.gradient_tolerance) {
        converged = true;
      }
    } else {
      mu *= options.damping_factor;
      if (!std::isfinite(mu) || mu > 1e300) break;  // no downhill direction left
    }
  }

  const auto n = data.size();
  result.model = model;
  result.names = parameter_names(model);
  result.values = parameters(model);
  result.chi2 = eval.chi2;
  result.dof = n - m;
  result.chi2_per_dof = eval.chi2 / static_cast<double>(result.dof);
  result.converged = converged;
  result.iterations = iteration;
  result.gradient_norm = grad.norm();

  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (lu.rank() < static_cast<Eigen::Index>(m)) {
    throw SingularMatrixError("fit: normal matrix is singular (degenerate data or redundant parameters)");
  }
  Eigen::MatrixXd cov_internal = lu.inverse() * result.chi2_per_dof;
  cov_internal = 0.5 * (cov_internal + cov_internal.transpose());
  Eigen::VectorXd d(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) d[static_cast<Eigen::Index>(j)] = positive[j] ? result.values[j] : 1.0;
  result.covariance = d.asDiagonal() * cov_internal * d.asDiagonal();
  result.sigmas.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    result.sigmas[j] = std::sqrt(std::max(0.0, result.covariance(static_cast<Eigen::Index>(j),
                                                                   static_cast<Eigen::Index>(j))));
  }
  return result;
}

/// Largest relative disagreement between the analytic gradient and central
/// differences with step 1e-6 of each parameter's scale (see
/// parameter_scales). Entries far below the model's own sensitivity
/// (|f| / scale) are compared against 1e-3 of that sensitivity.
inline double jacobian_check(const ModelSpec& model, std::span<const double> xs) {
  validate(model);
  const std::vector<double> p = parameters(model);
  const std::vector<double> scales = parameter_scales(model);
  const std::size_t m = p.size();
  std::vector<double> analytic(m);
  double worst = 0.0;
  for (double x : xs) {
    gradient(model, x, analytic);
    const double f = std::abs(evaluate(model, x));
    for (std::size_t j = 0; j < m; ++j) {
      const double scale = std::max(scales[j], 1e-300);
      std::vector<double> up = p, down = p;
      up[j] += 1e-6 * scale;
      down[j] -= 1e-6 * scale;
      const double fd = (evaluate(with_parameters(model, up), x) - evaluate(with_parameters(model, down), x)) /
                        (up[j] - down[j]);
      const double natural = 1e-3 * f / scale;
      const double denom = std::max({std::abs(analytic[j]), std::abs(fd), natural, 1e-300});
      worst = std::max(worst, std::abs(analytic[j] - fd) / denom);
    }
  }
  return worst;
}

}  // namespace antibunch
