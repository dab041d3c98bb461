#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "subsmc/dataset.hpp"
#include "subsmc/errors.hpp"
#include "subsmc/model.hpp"
#include "subsmc/rng.hpp"

namespace subsmc {

/// Subsample index vector: m draws iid uniform on the observation range,
/// partitioned into n_blocks contiguous blocks (block-pseudo-marginal
/// refreshes replace one block at a time).
struct SubsampleIndices {
  std::vector<std::int32_t> idx;  // 0-based observation rows
  int n_blocks = 1;

  int m() const { return static_cast<int>(idx.size()); }
  int block_size() const { return m() / n_blocks; }
};

inline SubsampleIndices sample_indices(long n, int m, int n_blocks,
                                       RngStream& rng) {
  if (n_blocks < 1 || m % n_blocks != 0)
    throw ConfigError("blocks must divide the subsample size");
  SubsampleIndices u;
  u.n_blocks = n_blocks;
  u.idx.resize(m);
  for (int j = 0; j < m; ++j)
    u.idx[j] = static_cast<std::int32_t>(rng.uniform_int(static_cast<std::uint32_t>(n)));
  return u;
}

/// Estimated log-likelihood and the variance estimate attached to it; the
/// only likelihood information weights and acceptance ratios may consume.
struct LogLikEstimate {
  double ell_hat = 0.0;
  double var_hat = 0.0;
};

/// a * ell_hat - a^2 * var_hat / 2: the log of the annealed likelihood
/// estimator, bias-corrected so its exponential is approximately unbiased.
inline double annealed_log_estimate(const LogLikEstimate& est, double a) {
  return a * est.ell_hat - 0.5 * a * a * est.var_hat;
}

/// Quadratic (or linear, order 1) surrogate of the log-likelihood built from
/// one full-data pass around a centre point. Holds the summaries
///   total    = sum_k l_k(centre)
///   grad_sum = sum_k grad l_k(centre)
///   hess_sum = sum_k hess l_k(centre)        (order 2 only)
/// plus per-term scalars at the centre: l_k, dl_k/deta, d2l_k/deta2 and the
/// centre linear predictors. Per-term gradients/Hessians are never stored;
/// they are coefficient-times-data-row products reconstructed on demand.
struct ControlVariate {
  Eigen::VectorXd centre;
  double total = 0.0;
  Eigen::VectorXd grad_sum;
  Eigen::MatrixXd hess_sum;  // 0x0 for order 1
  int order = 2;

  Eigen::VectorXd term_eta;    // eta_k(centre)
  Eigen::VectorXd term_value;  // l_k(centre)
  Eigen::VectorXd term_dv;     // dl_k/deta at centre
  Eigen::VectorXd term_d2v;    // d2l_k/deta2 at centre (order 2 only)
};

inline ControlVariate build_control_variate(const ModelSpec& spec,
                                            const Dataset& data,
                                            const Eigen::VectorXd& centre,
                                            int order = 2) {
  if (order != 1 && order != 2)
    throw ConfigError("control variate order must be 1 or 2");
  const long n = data.n();
  const int d = spec.dim;

  ControlVariate cv;
  cv.centre = centre;
  cv.order = order;
  cv.grad_sum = Eigen::VectorXd::Zero(d);
  cv.term_eta.resize(n);
  cv.term_value.resize(n);
  cv.term_dv.resize(n);
  if (order == 2) {
    cv.hess_sum = Eigen::MatrixXd::Zero(d, d);
    cv.term_d2v.resize(n);
  }

  if (spec.family == Family::fixed_effects) {
    const int ng = data.n_groups;
    const int dx = data.n_covariates();
    const Eigen::VectorXd eta_x = data.X * centre.segment(ng, dx);
    Eigen::VectorXd dcoef(n), d2coef(order == 2 ? n : 0);
    for (long k = 0; k < n; ++k) {
      const double eta = centre[data.group[k]] + eta_x[k];
      const TermEval t = eval_term(spec, data.y[k], eta);
      detail::ensure_finite_term(t, k);
      cv.term_eta[k] = eta;
      cv.term_value[k] = t.value;
      cv.term_dv[k] = t.dvalue;
      cv.total += t.value;
      dcoef[k] = t.dvalue;
      if (order == 2) {
        cv.term_d2v[k] = t.d2value;
        d2coef[k] = t.d2value;
      }
    }
    cv.grad_sum.segment(ng, dx) = data.X.transpose() * dcoef;
    for (long k = 0; k < n; ++k) cv.grad_sum[data.group[k]] += dcoef[k];
    if (order == 2) {
      // hess_sum = sum_k d2v_k z_k z_k^T with z_k = (e_{g_k}, x_k)
      cv.hess_sum.block(ng, ng, dx, dx) =
          data.X.transpose() * d2coef.asDiagonal() * data.X;
      for (long k = 0; k < n; ++k) {
        const int g = data.group[k];
        cv.hess_sum(g, g) += d2coef[k];
        cv.hess_sum.block(g, ng, 1, dx) += d2coef[k] * data.X.row(k);
      }
      cv.hess_sum.block(ng, 0, dx, ng) =
          cv.hess_sum.block(0, ng, ng, dx).transpose();
    }
    return cv;
  }

  const Eigen::VectorXd eta = data.X * centre;
  Eigen::VectorXd dcoef(n), d2coef(order == 2 ? n : 0);
  for (long k = 0; k < n; ++k) {
    const TermEval t = eval_term(spec, data.y[k], eta[k]);
    detail::ensure_finite_term(t, k);
    cv.term_eta[k] = eta[k];
    cv.term_value[k] = t.value;
    cv.term_dv[k] = t.dvalue;
    cv.total += t.value;
    dcoef[k] = t.dvalue;
    if (order == 2) {
      cv.term_d2v[k] = t.d2value;
      d2coef[k] = t.d2value;
    }
  }
  cv.grad_sum = data.X.transpose() * dcoef;
  if (order == 2)
    cv.hess_sum = data.X.transpose() * d2coef.asDiagonal() * data.X;
  return cv;
}

/// q(theta) = A + B (theta - centre) + (theta - centre)^T C (theta - centre)/2,
/// O(d^2) regardless of n.
inline double q_total(const ControlVariate& cv, const Eigen::VectorXd& theta) {
  const Eigen::VectorXd delta = theta - cv.centre;
  double q = cv.total + cv.grad_sum.dot(delta);
  if (cv.order == 2) q += 0.5 * delta.dot(cv.hess_sum * delta);
  return q;
}

/// Per-observation surrogate q_k(theta).
inline double q_term(const ControlVariate& cv, const ModelSpec& spec,
                     const Dataset& data, const Eigen::VectorXd& theta, long k) {
  const double deta = row_dot(spec, data, theta - cv.centre, k);
  double q = cv.term_value[k] + cv.term_dv[k] * deta;
  if (cv.order == 2) q += 0.5 * cv.term_d2v[k] * deta * deta;
  return q;
}

namespace detail {
struct TermScratch {
  std::vector<double> d;     // d_j = l_{u_j} - q_{u_j}
  std::vector<double> c;     // dl/deta_{u_j} - dq/deta_{u_j}
  std::vector<double> deta;  // eta_{u_j}(theta) - eta_{u_j}(centre)
};
inline TermScratch& term_scratch() {
  static thread_local TermScratch s;
  return s;
}
}  // namespace detail

/// The difference estimator and its variance estimate:
///   ell_hat = q(theta) + (n/m) sum_j d_{u_j},   d_k = l_k - q_k
///   var_hat = (n/m)^2 sum_j (d_{u_j} - mean d)^2
/// O(m) after the once-per-stage control-variate build. When grad_ell /
/// grad_var are non-null, also accumulates the exact gradients of ell_hat and
/// var_hat at fixed u.
inline LogLikEstimate estimate_loglik_impl(const ModelSpec& spec,
                                           const Dataset& data,
                                           const ControlVariate& cv,
                                           const SubsampleIndices& u,
                                           const Eigen::VectorXd& theta,
                                           Eigen::VectorXd* grad_ell,
                                           Eigen::VectorXd* grad_var) {
  const long n = data.n();
  const int m = u.m();
  const double scale = static_cast<double>(n) / m;
  const Eigen::VectorXd delta = theta - cv.centre;
  const bool second = cv.order == 2;
  const bool want_grad = grad_ell != nullptr;

  auto& scratch = detail::term_scratch();
  scratch.d.resize(m);
  if (want_grad) {
    scratch.c.resize(m);
    scratch.deta.resize(m);
  }

  double sum_d = 0.0;
  for (int j = 0; j < m; ++j) {
    const long k = u.idx[j];
    const double deta = row_dot(spec, data, delta, k);
    const double eta = cv.term_eta[k] + deta;
    const TermEval t = eval_term(spec, data.y[k], eta);
    if (!std::isfinite(t.value))
      throw NumericError("non-finite log-density term at observation " +
                         std::to_string(k + 1) + " (subsample draw " +
                         std::to_string(j + 1) + ")");
    double qk = cv.term_value[k] + cv.term_dv[k] * deta;
    double dq = cv.term_dv[k];
    if (second) {
      qk += 0.5 * cv.term_d2v[k] * deta * deta;
      dq += cv.term_d2v[k] * deta;
    }
    scratch.d[j] = t.value - qk;
    sum_d += scratch.d[j];
    if (want_grad) {
      scratch.c[j] = t.dvalue - dq;
      scratch.deta[j] = deta;
    }
  }

  const double mean_d = sum_d / m;
  double ssq = 0.0;
  for (int j = 0; j < m; ++j) {
    const double r = scratch.d[j] - mean_d;
    ssq += r * r;
  }

  LogLikEstimate est;
  est.ell_hat = q_total(cv, theta) + scale * sum_d;
  est.var_hat = scale * scale * ssq;

  if (want_grad) {
    grad_ell->noalias() = cv.grad_sum;
    if (second) grad_ell->noalias() += cv.hess_sum * delta;
    Eigen::VectorXd corr = Eigen::VectorXd::Zero(spec.dim);
    for (int j = 0; j < m; ++j)
      add_scaled_row(spec, data, u.idx[j], scratch.c[j], corr);
    grad_ell->noalias() += scale * corr;
    if (grad_var) {
      // grad var_hat = 2 (n/m)^2 sum_j (d_j - mean d) c_j z_j
      // (the mean-gradient term cancels against sum (d_j - mean d) = 0)
      grad_var->setZero(spec.dim);
      for (int j = 0; j < m; ++j)
        add_scaled_row(spec, data, u.idx[j],
                       2.0 * scale * scale * (scratch.d[j] - mean_d) * scratch.c[j],
                       *grad_var);
    }
  }
  return est;
}

inline LogLikEstimate estimate_loglik(const ModelSpec& spec, const Dataset& data,
                                      const ControlVariate& cv,
                                      const SubsampleIndices& u,
                                      const Eigen::VectorXd& theta) {
  return estimate_loglik_impl(spec, data, cv, u, theta, nullptr, nullptr);
}

/// Full-data evaluation in the same interface: ell_hat exact, var_hat = 0.
inline LogLikEstimate exact_loglik(const ModelSpec& spec, const Dataset& data,
                                   const Eigen::VectorXd& theta) {
  return {full_loglik(spec, data, theta), 0.0};
}

}  // namespace subsmc
