#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "svo/common.hpp"

namespace svo::rl {

/// Sum of gamma^k r_k over a finite reward sequence.
inline double discounted_return(std::span<const double> rewards, double gamma) {
  double g = 0.0;
  for (std::size_t k = rewards.size(); k-- > 0;) g = rewards[k] + gamma * g;
  return g;
}

struct Advantages {
  std::vector<double> advantages;
  std::vector<double> returns;  ///< advantage + value, the critic target
};

/// Generalized advantage estimation over a rollout that may span several
/// episodes.
///
/// `next_values[t]` is the value of the state reached after step t, already
/// zeroed for terminal transitions (and set to V(s_final) for truncated ones).
/// `episode_end[t]` marks the last step of an episode, terminal or not, and
/// stops the recursion from leaking across episodes.
inline Advantages gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const double> next_values, std::span<const std::uint8_t> episode_end,
                      double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || next_values.size() != n || episode_end.size() != n)
    throw Error("gae: rollout arrays differ in length");
  Advantages out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    if (episode_end[t]) running = 0.0;
    const double delta = rewards[t] + gamma * next_values[t] - values[t];
    running = delta + gamma * lambda * running;
    out.advantages[t] = running;
    out.returns[t] = running + values[t];
  }
  return out;
}

}  // namespace svo::rl
