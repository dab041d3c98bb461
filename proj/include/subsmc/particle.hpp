#pragma once

#include <Eigen/Dense>

#include <vector>

#include "subsmc/estimator.hpp"

namespace subsmc {

struct Particle {
  Eigen::VectorXd theta;
  SubsampleIndices u;   // empty in full-data mode
  LogLikEstimate est;   // current for (theta, u) under the stage's CV
};

/// Weighted particle set; weights kept normalized (sum 1).
struct ParticleCloud {
  std::vector<Particle> particles;
  Eigen::VectorXd weights;

  long size() const { return static_cast<long>(particles.size()); }
  int dim() const {
    return particles.empty() ? 0 : static_cast<int>(particles[0].theta.size());
  }
};

inline Eigen::VectorXd weighted_mean(const ParticleCloud& cloud) {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(cloud.dim());
  for (long i = 0; i < cloud.size(); ++i)
    mu += cloud.weights[i] * cloud.particles[i].theta;
  return mu;
}

inline Eigen::MatrixXd weighted_covariance(const ParticleCloud& cloud,
                                           const Eigen::VectorXd& mean) {
  const int d = cloud.dim();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (long i = 0; i < cloud.size(); ++i) {
    const Eigen::VectorXd r = cloud.particles[i].theta - mean;
    cov.selfadjointView<Eigen::Lower>().rankUpdate(r, cloud.weights[i]);
  }
  return cov.selfadjointView<Eigen::Lower>();
}

/// Per-coordinate posterior summaries with weighted-particle standard errors
/// (SE of the mean from sum w_i^2 (theta_i - mu)^2; SE of the variance from
/// the weighted fourth moment).
struct PosteriorSummary {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  Eigen::VectorXd mean_se;
  Eigen::VectorXd var_se;
};

inline PosteriorSummary summarize(const ParticleCloud& cloud) {
  const int d = cloud.dim();
  const long m = cloud.size();
  PosteriorSummary s;
  s.mean = weighted_mean(cloud);
  s.var.setZero(d);
  s.mean_se.setZero(d);
  s.var_se.setZero(d);
  Eigen::VectorXd m4 = Eigen::VectorXd::Zero(d);
  double w2 = 0.0;
  for (long i = 0; i < m; ++i) {
    const double w = cloud.weights[i];
    w2 += w * w;
    for (int j = 0; j < d; ++j) {
      const double r = cloud.particles[i].theta[j] - s.mean[j];
      s.var[j] += w * r * r;
      s.mean_se[j] += w * w * r * r;
      m4[j] += w * r * r * r * r;
    }
  }
  const double ess = 1.0 / w2;
  for (int j = 0; j < d; ++j) {
    s.mean_se[j] = std::sqrt(s.mean_se[j]);
    const double v4 = m4[j] - s.var[j] * s.var[j];
    s.var_se[j] = std::sqrt(std::max(0.0, v4) / ess);
  }
  return s;
}

}  // namespace subsmc
