#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "subsmc/errors.hpp"
#include "subsmc/rng.hpp"

namespace subsmc {

namespace detail {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline double log_normal_pdf(double x, double mean, double var) {
  const double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(var)) - 0.5 * r * r / var;
}

/// log Phi(z), with an asymptotic branch for deep negative z.
inline double log_normal_cdf(double z) {
  if (z > -30.0) return std::log(0.5 * std::erfc(-z * 0.70710678118654752440));
  return -0.5 * z * z - std::log(-z) - 0.5 * kLog2Pi + std::log(1.0 - 1.0 / (z * z));
}

inline double logsumexp2(double a, double b) {
  const double m = a > b ? a : b;
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}
}  // namespace detail

/// One coordinate's prior. Mixture components have mean zero; the truncated
/// normal support is [0, inf).
struct CoordPrior {
  enum class Kind { normal, truncated_normal, normal_mixture };
  Kind kind = Kind::normal;
  double mean = 0.0;
  double var = 1.0;
  // normal_mixture: w * N(0, var1) + (1 - w) * N(0, var2)
  double w = 0.8;
  double var1 = 1.0;
  double var2 = 1.0;

  static CoordPrior normal(double mean, double var) {
    CoordPrior p;
    p.kind = Kind::normal;
    p.mean = mean;
    p.var = var;
    return p;
  }
  static CoordPrior truncated_normal(double mean, double var) {
    CoordPrior p;
    p.kind = Kind::truncated_normal;
    p.mean = mean;
    p.var = var;
    return p;
  }
  static CoordPrior normal_mixture(double w, double var1, double var2) {
    CoordPrior p;
    p.kind = Kind::normal_mixture;
    p.w = w;
    p.var1 = var1;
    p.var2 = var2;
    return p;
  }
};

/// Independent per-coordinate priors; size must match the model dimension.
struct PriorSpec {
  std::vector<CoordPrior> coords;

  int dim() const { return static_cast<int>(coords.size()); }

  static PriorSpec iid(const CoordPrior& p, int dim) {
    PriorSpec s;
    s.coords.assign(static_cast<std::size_t>(dim), p);
    return s;
  }
};

inline void validate_prior(const PriorSpec& prior, std::vector<std::string>& errors) {
  for (int j = 0; j < prior.dim(); ++j) {
    const auto& p = prior.coords[j];
    const std::string at = "prior coordinate " + std::to_string(j + 1) + ": ";
    switch (p.kind) {
      case CoordPrior::Kind::normal:
      case CoordPrior::Kind::truncated_normal:
        if (!(p.var > 0)) errors.push_back(at + "variance must be > 0");
        break;
      case CoordPrior::Kind::normal_mixture:
        if (!(p.var1 > 0) || !(p.var2 > 0))
          errors.push_back(at + "mixture variances must be > 0");
        if (!(p.w > 0 && p.w < 1))
          errors.push_back(at + "mixture weight must lie in (0, 1)");
        break;
    }
  }
}

inline double log_prior_coord(const CoordPrior& p, double x) {
  switch (p.kind) {
    case CoordPrior::Kind::normal:
      return detail::log_normal_pdf(x, p.mean, p.var);
    case CoordPrior::Kind::truncated_normal: {
      if (x < 0.0) return -std::numeric_limits<double>::infinity();
      const double sd = std::sqrt(p.var);
      return detail::log_normal_pdf(x, p.mean, p.var) -
             detail::log_normal_cdf(p.mean / sd);
    }
    case CoordPrior::Kind::normal_mixture:
      return detail::logsumexp2(std::log(p.w) + detail::log_normal_pdf(x, 0.0, p.var1),
                                std::log1p(-p.w) + detail::log_normal_pdf(x, 0.0, p.var2));
  }
  return -std::numeric_limits<double>::infinity();
}

/// d/dx of log_prior_coord on the support interior. For the truncated normal
/// this is the untruncated normal's score, which is also the smooth extension
/// used by gradient-based kernels outside the support.
inline double grad_log_prior_coord(const CoordPrior& p, double x) {
  switch (p.kind) {
    case CoordPrior::Kind::normal:
    case CoordPrior::Kind::truncated_normal:
      return -(x - p.mean) / p.var;
    case CoordPrior::Kind::normal_mixture: {
      const double l1 = std::log(p.w) + detail::log_normal_pdf(x, 0.0, p.var1);
      const double l2 = std::log1p(-p.w) + detail::log_normal_pdf(x, 0.0, p.var2);
      const double lse = detail::logsumexp2(l1, l2);
      const double r1 = std::exp(l1 - lse);
      return r1 * (-x / p.var1) + (1.0 - r1) * (-x / p.var2);
    }
  }
  return 0.0;
}

/// Log prior density with normalizing constants retained; -inf off support.
inline double log_prior(const PriorSpec& prior, const Eigen::VectorXd& theta) {
  double total = 0.0;
  for (int j = 0; j < prior.dim(); ++j) {
    total += log_prior_coord(prior.coords[j], theta[j]);
    if (total == -std::numeric_limits<double>::infinity()) return total;
  }
  return total;
}

inline Eigen::VectorXd grad_log_prior(const PriorSpec& prior,
                                      const Eigen::VectorXd& theta) {
  Eigen::VectorXd g(prior.dim());
  for (int j = 0; j < prior.dim(); ++j)
    g[j] = grad_log_prior_coord(prior.coords[j], theta[j]);
  return g;
}

namespace detail {
/// Standard normal truncated to [alpha, inf). Rejection from the normal when
/// alpha is small; Robert's exponential proposal otherwise.
inline double truncated_std_normal(double alpha, RngStream& rng) {
  if (alpha < 0.5) {
    for (;;) {
      const double z = rng.normal();
      if (z >= alpha) return z;
    }
  }
  const double lambda = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
  for (;;) {
    const double z = alpha - std::log(rng.uniform_pos01()) / lambda;
    const double d = z - lambda;
    if (rng.uniform01() <= std::exp(-0.5 * d * d)) return z;
  }
}
}  // namespace detail

inline double sample_prior_coord(const CoordPrior& p, RngStream& rng) {
  switch (p.kind) {
    case CoordPrior::Kind::normal:
      return p.mean + std::sqrt(p.var) * rng.normal();
    case CoordPrior::Kind::truncated_normal: {
      const double sd = std::sqrt(p.var);
      return p.mean + sd * detail::truncated_std_normal(-p.mean / sd, rng);
    }
    case CoordPrior::Kind::normal_mixture: {
      const double sd = rng.bernoulli(p.w) ? std::sqrt(p.var1) : std::sqrt(p.var2);
      return sd * rng.normal();
    }
  }
  return 0.0;
}

inline Eigen::VectorXd sample_prior(const PriorSpec& prior, RngStream& rng) {
  Eigen::VectorXd theta(prior.dim());
  for (int j = 0; j < prior.dim(); ++j)
    theta[j] = sample_prior_coord(prior.coords[j], rng);
  return theta;
}

}  // namespace subsmc
