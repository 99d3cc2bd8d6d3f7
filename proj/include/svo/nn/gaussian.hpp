#pragma once

// One-dimensional Gaussian policy heads: plain (PPO) and tanh-squashed (SAC).

#include <algorithm>
#include <cmath>

#include "svo/common.hpp"

namespace svo::nn {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

inline double clamp_log_std(double log_std) { return std::clamp(log_std, kLogStdMin, kLogStdMax); }

inline double gaussian_log_prob(double x, double mean, double log_std) {
  const double z = (x - mean) * std::exp(-log_std);
  return -0.5 * z * z - log_std - kHalfLog2Pi;
}

inline double gaussian_entropy(double log_std) { return 0.5 + kHalfLog2Pi + log_std; }

/// log(1 - tanh(u)^2), stable for large |u|.
inline double log1m_tanh_sq(double u) {
  const double x = -2.0 * u;
  const double softplus = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  return 2.0 * (std::log(2.0) - u - softplus);
}

struct PolicySample {
  double action = 0.0;
  double log_prob = 0.0;
  double pre_squash = 0.0;  ///< mean + std * noise
};

/// Reparameterized sample mean + std * noise with its exact log-density.
inline PolicySample sample_gaussian(double mean, double log_std, double noise) {
  const double ls = clamp_log_std(log_std);
  PolicySample s;
  s.pre_squash = mean + std::exp(ls) * noise;
  s.action = s.pre_squash;
  s.log_prob = -0.5 * noise * noise - ls - kHalfLog2Pi;
  return s;
}

/// tanh-squashed sample; the log-density includes the change-of-variables term.
inline PolicySample sample_squashed(double mean, double log_std, double noise) {
  PolicySample s = sample_gaussian(mean, log_std, noise);
  s.action = std::tanh(s.pre_squash);
  s.log_prob -= log1m_tanh_sq(s.pre_squash);
  return s;
}

}  // namespace svo::nn
