#pragma once

// Clipped-surrogate PPO with a shared actor-critic trunk.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "svo/nn/gaussian.hpp"
#include "svo/nn/mlp.hpp"
#include "svo/rl/buffers.hpp"

namespace svo::rl {

using nn::Matrix;
using nn::Vector;

struct PpoConfig {
  double clip = 0.2;
  int epochs = 10;
  int minibatch = 256;
  int horizon = 2048;
  double gae_lambda = 0.95;
  double vf_coef = 0.5;
  double ent_coef = 0.0;
  double max_grad_norm = 0.5;
  double initial_log_std = 0.0;
};

/// Shared trunk with a two-row head: row 0 is the action mean, row 1 the
/// state value. The policy standard deviation is a free parameter.
struct ActorCritic {
  nn::Mlp net;
  double log_std = 0.0;

  static constexpr int kMeanRow = 0;
  static constexpr int kValueRow = 1;

  template <class Rng>
  static ActorCritic make(Rng& rng, int hidden = 256, double initial_log_std = 0.0) {
    ActorCritic ac;
    ac.net = nn::make_mlp({kObsDim, hidden, hidden, 2}, rng, 1.0);
    // Near-zero initial actions; the value row keeps unit gain.
    ac.net.weight(ac.net.layers() - 1).row(kMeanRow) *= 0.01;
    ac.log_std = initial_log_std;
    return ac;
  }
};

/// min(r A, clip(r, 1-eps, 1+eps) A) for one sample.
inline double clipped_surrogate(double ratio, double advantage, double eps) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage);
}

struct PpoBatch {
  Matrix obs;  ///< kObsDim x n
  Vector actions;
  Vector old_log_probs;
  Vector advantages;
  Vector returns;
};

struct PpoLoss {
  double policy = 0.0;   ///< -mean clipped surrogate
  double value = 0.0;    ///< mean squared value error
  double entropy = 0.0;  ///< mean policy entropy
  double total = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  Vector grad;             ///< d total / d net params
  double grad_log_std = 0.0;
};

/// Loss and exact gradients for one minibatch. Advantages are used as given.
inline PpoLoss ppo_loss(const ActorCritic& ac, const PpoBatch& b, const PpoConfig& cfg) {
  const Eigen::Index n = b.obs.cols();
  if (n == 0) throw Error("ppo_loss: empty batch");
  nn::Tape tape;
  const Matrix out = ac.net.forward(b.obs, tape);
  const double ls = nn::clamp_log_std(ac.log_std);
  const bool ls_free = ls == ac.log_std;
  const double inv_var = std::exp(-2.0 * ls);

  PpoLoss loss;
  Matrix grad_out = Matrix::Zero(2, n);
  double d_ls = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double mean = out(ActorCritic::kMeanRow, j);
    const double value = out(ActorCritic::kValueRow, j);
    const double diff = b.actions[j] - mean;
    const double logp = nn::gaussian_log_prob(b.actions[j], mean, ls);
    const double log_ratio = logp - b.old_log_probs[j];
    const double ratio = std::exp(log_ratio);
    const double adv = b.advantages[j];
    const double unclipped = ratio * adv;
    const double surrogate = clipped_surrogate(ratio, adv, cfg.clip);
    loss.policy -= surrogate * inv_n;
    loss.approx_kl += ((ratio - 1.0) - log_ratio) * inv_n;
    if (std::abs(ratio - 1.0) > cfg.clip) loss.clip_fraction += inv_n;

    // The gradient flows only through the unclipped branch when it is the minimum.
    if (unclipped <= surrogate) {
      const double coef = -adv * ratio * inv_n;
      grad_out(ActorCritic::kMeanRow, j) += coef * diff * inv_var;
      d_ls += coef * (diff * diff * inv_var - 1.0);
    }
    const double err = value - b.returns[j];
    loss.value += err * err * inv_n;
    grad_out(ActorCritic::kValueRow, j) += cfg.vf_coef * 2.0 * err * inv_n;
  }
  loss.entropy = nn::gaussian_entropy(ls);
  d_ls -= cfg.ent_coef;
  loss.total = loss.policy + cfg.vf_coef * loss.value - cfg.ent_coef * loss.entropy;
  loss.grad = ac.net.backward(tape, grad_out);
  loss.grad_log_std = ls_free ? d_ls : 0.0;
  return loss;
}

/// Normalize to zero mean and unit standard deviation (no-op for tiny batches).
inline void normalize(Vector& v) {
  if (v.size() < 2) return;
  const double mean = v.mean();
  const double sd = std::sqrt((v.array() - mean).square().mean());
  v = (v.array() - mean) / (sd + 1e-8);
}

}  // namespace svo::rl
