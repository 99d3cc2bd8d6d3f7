#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "svo/env/driving_env.hpp"
#include "svo/nn/checkpoint.hpp"
#include "svo/nn/mlp.hpp"
#include "svo/rl/ppo.hpp"
#include "svo/rl/sac.hpp"

namespace svo::rl {

/// Build a checkpoint holding the PPO actor-critic.
inline nn::Checkpoint ppo_checkpoint(const ActorCritic& ac) {
  nn::Checkpoint c;
  c.algo = nn::Algo::Ppo;
  c.layer_sizes = ac.net.sizes();
  c.arrays.push_back({"trunk", {static_cast<int>(ac.net.param_count())}, ac.net.params()});
  c.arrays.push_back({"log_std", {1}, Eigen::VectorXd::Constant(1, ac.log_std)});
  return c;
}

inline nn::Checkpoint sac_checkpoint(const SacNets& s) {
  nn::Checkpoint c;
  c.algo = nn::Algo::Sac;
  c.layer_sizes = s.policy.sizes();
  auto add = [&](const char* name, const nn::Mlp& net) {
    c.arrays.push_back({name, {static_cast<int>(net.param_count())}, net.params()});
  };
  add("policy", s.policy);
  add("q", s.q);
  add("v", s.v);
  add("v_target", s.v_target);
  return c;
}

namespace detail {

inline nn::Mlp restore_net(const std::vector<int>& sizes, const nn::NamedArray& a) {
  nn::Mlp net(sizes);
  if (a.values.size() != net.param_count())
    throw nn::CheckpointError("checkpoint array '" + a.name + "' has " +
                              std::to_string(a.values.size()) + " values, layer sizes need " +
                              std::to_string(net.param_count()));
  net.params() = a.values;
  return net;
}

}  // namespace detail

/// Deterministic evaluation policy restored from a checkpoint: the Gaussian
/// mean for PPO, tanh of the mean for SAC.
class Policy {
public:
  static Policy from_checkpoint(const nn::Checkpoint& c) {
    if (c.layer_sizes.size() < 2 || c.layer_sizes.front() != kObsDim || c.layer_sizes.back() != 2)
      throw nn::CheckpointError("checkpoint layer sizes do not describe a policy network");
    Policy p;
    p.algo_ = c.algo;
    p.svo_deg_ = c.svo_deg;
    p.net_ = detail::restore_net(c.layer_sizes, c.array(c.algo == nn::Algo::Ppo ? "trunk" : "policy"));
    return p;
  }

  double act(const env::Observation& obs) const {
    const auto x = obs.normalized();
    const double mean = net_.forward(nn::column(x))(0, 0);
    return algo_ == nn::Algo::Ppo ? std::clamp(mean, -1.0, 1.0) : std::tanh(mean);
  }

  nn::Algo algo() const { return algo_; }
  double svo_deg() const { return svo_deg_; }
  const nn::Mlp& network() const { return net_; }

private:
  nn::Algo algo_ = nn::Algo::Ppo;
  double svo_deg_ = 0.0;
  nn::Mlp net_;
};

inline ActorCritic restore_actor_critic(const nn::Checkpoint& c) {
  if (c.algo != nn::Algo::Ppo) throw nn::CheckpointError("checkpoint is not a PPO checkpoint");
  ActorCritic ac;
  ac.net = detail::restore_net(c.layer_sizes, c.array("trunk"));
  ac.log_std = c.array("log_std").values[0];
  return ac;
}

inline SacNets restore_sac(const nn::Checkpoint& c) {
  if (c.algo != nn::Algo::Sac) throw nn::CheckpointError("checkpoint is not a SAC checkpoint");
  SacNets s;
  std::vector<int> q_sizes = c.layer_sizes;
  q_sizes.front() = kObsDim + 1;
  q_sizes.back() = 1;
  std::vector<int> v_sizes = c.layer_sizes;
  v_sizes.back() = 1;
  s.policy = detail::restore_net(c.layer_sizes, c.array("policy"));
  s.q = detail::restore_net(q_sizes, c.array("q"));
  s.v = detail::restore_net(v_sizes, c.array("v"));
  s.v_target = detail::restore_net(v_sizes, c.array("v_target"));
  return s;
}

}  // namespace svo::rl
