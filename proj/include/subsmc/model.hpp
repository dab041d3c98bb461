#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "subsmc/dataset.hpp"
#include "subsmc/errors.hpp"
#include "subsmc/prior.hpp"

namespace subsmc {

enum class Family {
  logistic,
  poisson,
  student_t,
  gaussian_linear,
  fixed_effects,
};

inline const char* family_name(Family f) {
  switch (f) {
    case Family::logistic: return "logistic";
    case Family::poisson: return "poisson";
    case Family::student_t: return "student_t";
    case Family::gaussian_linear: return "gaussian_linear";
    case Family::fixed_effects: return "fixed_effects";
  }
  return "?";
}

/// Model family, per-coordinate priors, and the parameter dimension. For
/// fixed_effects, theta = (group effects..., coefficients...) and dim =
/// n_groups + n_covariates; for all other families dim = n_covariates
/// (intercepts enter as an all-ones covariate column).
struct ModelSpec {
  Family family = Family::gaussian_linear;
  double t_dof = 5.0;      // student_t degrees of freedom (> 2)
  double noise_var = 1.0;  // gaussian_linear / fixed_effects noise variance
  PriorSpec prior;
  int dim = 0;
  // Poisson linear predictors are clamped to |eta| <= kEtaClamp before
  // exponentiation; each clamp event is counted here (shared across copies).
  std::shared_ptr<std::atomic<std::uint64_t>> clamp_events =
      std::make_shared<std::atomic<std::uint64_t>>(0);

  static constexpr double kEtaClamp = 30.0;

  std::uint64_t clamp_count() const { return clamp_events->load(); }
};

/// Value and first two derivatives of one observation's log density with
/// respect to the linear predictor.
struct TermEval {
  double value;
  double dvalue;
  double d2value;
};

namespace detail {
inline double log1pexp(double x) {
  // log(1 + e^x) without overflow.
  if (x > 35.0) return x + std::exp(-x);
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}
}  // namespace detail

/// Family scalar kernel: derivatives of log p(y | eta) in eta.
inline TermEval eval_term(const ModelSpec& spec, double y, double eta) {
  switch (spec.family) {
    case Family::logistic: {
      const double s = 1.0 / (1.0 + std::exp(-eta));
      return {y * eta - detail::log1pexp(eta), y - s, -s * (1.0 - s)};
    }
    case Family::poisson: {
      double e = eta;
      bool clamped = false;
      if (e > ModelSpec::kEtaClamp) {
        e = ModelSpec::kEtaClamp;
        clamped = true;
      } else if (e < -ModelSpec::kEtaClamp) {
        e = -ModelSpec::kEtaClamp;
        clamped = true;
      }
      if (clamped) spec.clamp_events->fetch_add(1, std::memory_order_relaxed);
      const double rate = std::exp(e);
      const double v = y * e - rate - std::lgamma(y + 1.0);
      // Beyond the clamp the objective is constant in eta, so its
      // derivatives there are zero; keeps value and gradient consistent.
      if (clamped) return {v, 0.0, 0.0};
      return {v, y - rate, -rate};
    }
    case Family::student_t: {
      const double nu = spec.t_dof;
      const double r = y - eta;
      const double w = nu + r * r;
      const double c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                       0.5 * std::log(nu * 3.1415926535897932384626433832795);
      const double v = c - 0.5 * (nu + 1.0) * std::log1p(r * r / nu);
      return {v, (nu + 1.0) * r / w, (nu + 1.0) * (r * r - nu) / (w * w)};
    }
    case Family::gaussian_linear:
    case Family::fixed_effects: {
      const double s2 = spec.noise_var;
      const double r = y - eta;
      return {-0.5 * (detail::kLog2Pi + std::log(s2)) - 0.5 * r * r / s2,
              r / s2, -1.0 / s2};
    }
  }
  return {0, 0, 0};
}

inline int coef_offset(const ModelSpec& spec, const Dataset& data) {
  return spec.family == Family::fixed_effects ? data.n_groups : 0;
}

/// eta_k = z_k . theta, where z_k is the row's effective covariate vector
/// (a one-hot group indicator prepended for fixed_effects).
inline double linear_predictor(const ModelSpec& spec, const Dataset& data,
                               const Eigen::VectorXd& theta, long k) {
  if (spec.family == Family::fixed_effects) {
    return theta[data.group[k]] +
           data.X.row(k).dot(theta.segment(data.n_groups, data.X.cols()));
  }
  return data.X.row(k).dot(theta);
}

/// z_k . v for an arbitrary vector v.
inline double row_dot(const ModelSpec& spec, const Dataset& data,
                      const Eigen::VectorXd& v, long k) {
  return linear_predictor(spec, data, v, k);
}

/// out += coef * z_k.
inline void add_scaled_row(const ModelSpec& spec, const Dataset& data, long k,
                           double coef, Eigen::VectorXd& out) {
  if (spec.family == Family::fixed_effects) {
    out[data.group[k]] += coef;
    out.segment(data.n_groups, data.X.cols()) += coef * data.X.row(k).transpose();
  } else {
    out += coef * data.X.row(k).transpose();
  }
}

inline Eigen::VectorXd dense_row(const ModelSpec& spec, const Dataset& data,
                                 long k) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(spec.dim);
  add_scaled_row(spec, data, k, 1.0, z);
  return z;
}

namespace detail {
inline void ensure_finite_term(const TermEval& t, long k) {
  if (!std::isfinite(t.value) || !std::isfinite(t.dvalue) ||
      !std::isfinite(t.d2value))
    throw NumericError("non-finite log-density term at observation " +
                       std::to_string(k + 1));
}
}  // namespace detail

/// log p(y_k | theta); the sum over k is the exact log-likelihood.
inline double log_density_term(const ModelSpec& spec, const Dataset& data,
                               const Eigen::VectorXd& theta, long k) {
  const TermEval t = eval_term(spec, data.y[k], linear_predictor(spec, data, theta, k));
  detail::ensure_finite_term(t, k);
  return t.value;
}

inline Eigen::VectorXd grad_term(const ModelSpec& spec, const Dataset& data,
                                 const Eigen::VectorXd& theta, long k) {
  const TermEval t = eval_term(spec, data.y[k], linear_predictor(spec, data, theta, k));
  detail::ensure_finite_term(t, k);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(spec.dim);
  add_scaled_row(spec, data, k, t.dvalue, g);
  return g;
}

inline Eigen::MatrixXd hessian_term(const ModelSpec& spec, const Dataset& data,
                                    const Eigen::VectorXd& theta, long k) {
  const TermEval t = eval_term(spec, data.y[k], linear_predictor(spec, data, theta, k));
  detail::ensure_finite_term(t, k);
  const Eigen::VectorXd z = dense_row(spec, data, k);
  return t.d2value * z * z.transpose();
}

/// Exact full-data log-likelihood; gradient accumulated when grad != nullptr.
inline double full_loglik(const ModelSpec& spec, const Dataset& data,
                          const Eigen::VectorXd& theta,
                          Eigen::VectorXd* grad = nullptr) {
  const long n = data.n();
  double total = 0.0;
  if (grad) grad->setZero(spec.dim);

  if (spec.family == Family::fixed_effects) {
    const Eigen::VectorXd eta_x =
        data.X * theta.segment(data.n_groups, data.X.cols());
    Eigen::VectorXd coef(grad ? n : 0);
    for (long k = 0; k < n; ++k) {
      const TermEval t = eval_term(spec, data.y[k], theta[data.group[k]] + eta_x[k]);
      detail::ensure_finite_term(t, k);
      total += t.value;
      if (grad) coef[k] = t.dvalue;
    }
    if (grad) {
      grad->segment(data.n_groups, data.X.cols()) = data.X.transpose() * coef;
      for (long k = 0; k < n; ++k) (*grad)[data.group[k]] += coef[k];
    }
    return total;
  }

  const Eigen::VectorXd eta = data.X * theta;
  Eigen::VectorXd coef(grad ? n : 0);
  for (long k = 0; k < n; ++k) {
    const TermEval t = eval_term(spec, data.y[k], eta[k]);
    detail::ensure_finite_term(t, k);
    total += t.value;
    if (grad) coef[k] = t.dvalue;
  }
  if (grad) *grad = data.X.transpose() * coef;
  return total;
}

/// Checks spec/data consistency (dimension, response support, parameters).
inline void validate_model(const ModelSpec& spec, const Dataset& data) {
  std::vector<std::string> errors;
  const int expected = spec.family == Family::fixed_effects
                           ? data.n_groups + data.n_covariates()
                           : data.n_covariates();
  if (spec.dim != expected)
    errors.push_back("model dimension " + std::to_string(spec.dim) +
                     " does not match dataset (expected " +
                     std::to_string(expected) + ")");
  if (spec.prior.dim() != spec.dim)
    errors.push_back("prior has " + std::to_string(spec.prior.dim()) +
                     " coordinates, model has " + std::to_string(spec.dim));
  if (spec.family == Family::fixed_effects && !data.has_groups())
    errors.push_back("fixed_effects model requires a 'group' column");
  if (spec.family == Family::student_t && !(spec.t_dof > 2.0))
    errors.push_back("student_t degrees of freedom must be > 2");
  if ((spec.family == Family::gaussian_linear ||
       spec.family == Family::fixed_effects) &&
      !(spec.noise_var > 0.0))
    errors.push_back("noise variance must be > 0");
  if (spec.family == Family::logistic) {
    for (long k = 0; k < data.n(); ++k)
      if (data.y[k] != 0.0 && data.y[k] != 1.0) {
        errors.push_back("logistic responses must be 0/1 (row " +
                         std::to_string(k + 1) + ")");
        break;
      }
  }
  if (spec.family == Family::poisson) {
    for (long k = 0; k < data.n(); ++k)
      if (data.y[k] < 0.0 || data.y[k] != std::floor(data.y[k])) {
        errors.push_back("poisson responses must be nonnegative integers (row " +
                         std::to_string(k + 1) + ")");
        break;
      }
  }
  std::vector<std::string> prior_errors;
  validate_prior(spec.prior, prior_errors);
  for (auto& e : prior_errors) errors.push_back(std::move(e));
  if (!errors.empty()) throw ConfigError(std::move(errors));
}

}  // namespace subsmc
