#pragma once

// Soft actor-critic in the three-function form: policy, soft Q and state
// value V, with a Polyak-averaged copy of V providing the Q targets.

#include <cmath>
#include <random>

#include "svo/nn/gaussian.hpp"
#include "svo/nn/mlp.hpp"
#include "svo/rl/buffers.hpp"

namespace svo::rl {

using nn::Matrix;
using nn::Vector;

struct SacConfig {
  double alpha = 0.2;
  int batch = 256;
  double tau = 0.005;
  int learning_starts = 1000;
};

struct SacNets {
  nn::Mlp policy;  ///< obs -> (mean, log_std) before the tanh squash
  nn::Mlp q;       ///< (obs, action) -> Q
  nn::Mlp v;       ///< obs -> V
  nn::Mlp v_target;

  template <class Rng>
  static SacNets make(Rng& rng, int hidden = 256) {
    SacNets s;
    s.policy = nn::make_mlp({kObsDim, hidden, hidden, 2}, rng, 0.01);
    s.q = nn::make_mlp({kObsDim + 1, hidden, hidden, 1}, rng, 1.0);
    s.v = nn::make_mlp({kObsDim, hidden, hidden, 1}, rng, 1.0);
    s.v_target = s.v;
    return s;
  }
};

/// Stack observations and actions into Q-network inputs.
inline Matrix q_input(const Matrix& obs, const Vector& actions) {
  Matrix x(obs.rows() + 1, obs.cols());
  x.topRows(obs.rows()) = obs;
  x.bottomRows(1) = actions.transpose();
  return x;
}

/// Q-hat = r + gamma * V_target(s'), without bootstrap on terminal transitions.
inline Vector sac_q_targets(const Vector& rewards, const Vector& next_values,
                            const Vector& terminal, double gamma) {
  return rewards.array() + gamma * (1.0 - terminal.array()) * next_values.array();
}

/// Reparameterized squashed samples for a batch; `noise` holds one standard
/// normal draw per column.
struct PolicyBatch {
  Matrix head;  ///< 2 x n raw policy outputs
  Vector mean, log_std, std, noise;
  Vector actions;    ///< tanh-squashed
  Vector log_probs;  ///< exact log density of `actions`
  nn::Tape tape;
};

inline PolicyBatch sample_policy(const nn::Mlp& policy, const Matrix& obs, const Vector& noise) {
  PolicyBatch p;
  p.head = policy.forward(obs, p.tape);
  const Eigen::Index n = obs.cols();
  p.mean = p.head.row(0).transpose();
  p.log_std.resize(n);
  p.std.resize(n);
  p.actions.resize(n);
  p.log_probs.resize(n);
  p.noise = noise;
  for (Eigen::Index j = 0; j < n; ++j) {
    const nn::PolicySample s = nn::sample_squashed(p.mean[j], p.head(1, j), noise[j]);
    p.log_std[j] = nn::clamp_log_std(p.head(1, j));
    p.std[j] = std::exp(p.log_std[j]);
    p.actions[j] = s.action;
    p.log_probs[j] = s.log_prob;
  }
  return p;
}

/// Deterministic action tanh(mean).
inline double sac_mean_action(const nn::Mlp& policy, const Matrix& obs_column) {
  return std::tanh(policy.forward(obs_column)(0, 0));
}

struct SacLoss {
  double value = 0.0;
  Vector grad;
};

/// 0.5 * mean (Q(s,a) - target)^2.
inline SacLoss sac_q_loss(const nn::Mlp& q, const Matrix& obs, const Vector& actions,
                          const Vector& targets) {
  nn::Tape tape;
  const Matrix out = q.forward(q_input(obs, actions), tape);
  const double inv_n = 1.0 / static_cast<double>(obs.cols());
  const Matrix err = out - targets.transpose();
  SacLoss l;
  l.value = 0.5 * err.squaredNorm() * inv_n;
  l.grad = q.backward(tape, err * inv_n);
  return l;
}

/// V targets: Q(s, a~) - alpha * log pi(a~|s) for fresh reparameterized samples.
inline Vector sac_v_targets(const nn::Mlp& q, const Matrix& obs, const PolicyBatch& p,
                            double alpha) {
  const Matrix qv = q.forward(q_input(obs, p.actions));
  return qv.row(0).transpose() - alpha * p.log_probs;
}

/// 0.5 * mean (V(s) - target)^2.
inline SacLoss sac_v_loss(const nn::Mlp& v, const Matrix& obs, const Vector& targets) {
  nn::Tape tape;
  const Matrix out = v.forward(obs, tape);
  const double inv_n = 1.0 / static_cast<double>(obs.cols());
  const Matrix err = out - targets.transpose();
  SacLoss l;
  l.value = 0.5 * err.squaredNorm() * inv_n;
  l.grad = v.backward(tape, err * inv_n);
  return l;
}

/// mean(alpha * log pi(f(eps, s)|s) - Q(s, f(eps, s))) and its gradient with
/// respect to the policy parameters (Q held fixed).
inline SacLoss sac_policy_loss(const nn::Mlp& policy, const nn::Mlp& q, const Matrix& obs,
                               const Vector& noise, double alpha) {
  const PolicyBatch p = sample_policy(policy, obs, noise);
  nn::Tape q_tape;
  const Matrix qv = q.forward(q_input(obs, p.actions), q_tape);
  const Eigen::Index n = obs.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  Matrix dq_dx;
  q.backward(q_tape, Matrix::Constant(1, n, 1.0), &dq_dx);

  SacLoss l;
  Matrix grad_head = Matrix::Zero(2, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double a = p.actions[j];
    const double q_a = dq_dx(kObsDim, j);
    const double jac = 1.0 - a * a;
    const double sigma_eps = p.std[j] * p.noise[j];
    l.value += (alpha * p.log_probs[j] - qv(0, j)) * inv_n;
    const double d_mean = alpha * 2.0 * a - q_a * jac;
    const double d_ls = alpha * (-1.0 + 2.0 * a * sigma_eps) - q_a * jac * sigma_eps;
    grad_head(0, j) = d_mean * inv_n;
    // The log-std clamp has zero gradient outside its range.
    grad_head(1, j) = p.head(1, j) == p.log_std[j] ? d_ls * inv_n : 0.0;
  }
  l.grad = policy.backward(p.tape, grad_head);
  return l;
}

/// target <- (1 - tau) * target + tau * source.
inline void polyak_update(nn::Mlp& target, const nn::Mlp& source, double tau) {
  if (target.param_count() != source.param_count())
    throw Error("polyak_update: network shapes differ");
  target.params() = (1.0 - tau) * target.params() + tau * source.params();
}

}  // namespace svo::rl
