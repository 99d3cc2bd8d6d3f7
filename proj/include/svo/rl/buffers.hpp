#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "svo/common.hpp"
#include "svo/env/driving_env.hpp"

namespace svo::rl {

using env::kObsDim;

/// On-policy storage for one PPO horizon. Observations are stored as
/// normalized network inputs, one column per step.
struct RolloutBuffer {
  Eigen::MatrixXd obs;
  std::vector<double> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<double> next_values;
  std::vector<std::uint8_t> episode_end;
  std::vector<double> advantages;
  std::vector<double> returns;

  explicit RolloutBuffer(std::size_t horizon = 2048) { reserve(horizon); }

  void reserve(std::size_t horizon) {
    obs.resize(kObsDim, static_cast<Eigen::Index>(horizon));
    actions.reserve(horizon);
    log_probs.reserve(horizon);
    rewards.reserve(horizon);
    values.reserve(horizon);
    next_values.reserve(horizon);
    episode_end.reserve(horizon);
  }

  std::size_t size() const { return actions.size(); }
  std::size_t capacity() const { return static_cast<std::size_t>(obs.cols()); }
  bool full() const { return size() == capacity(); }

  void clear() {
    actions.clear();
    log_probs.clear();
    rewards.clear();
    values.clear();
    next_values.clear();
    episode_end.clear();
    advantages.clear();
    returns.clear();
  }

  void add(const std::array<double, kObsDim>& o, double action, double log_prob, double reward,
           double value) {
    if (full()) throw ContractViolation("RolloutBuffer::add on a full buffer");
    const auto t = static_cast<Eigen::Index>(size());
    for (int i = 0; i < kObsDim; ++i) obs(i, t) = o[static_cast<std::size_t>(i)];
    actions.push_back(action);
    log_probs.push_back(log_prob);
    rewards.push_back(reward);
    values.push_back(value);
    next_values.push_back(0.0);
    episode_end.push_back(0);
  }

  /// Close the most recent step: `next_value` is the bootstrap (0 when terminal).
  void finish_step(double next_value, bool end_of_episode) {
    next_values.back() = next_value;
    episode_end.back() = end_of_episode ? 1 : 0;
  }
};

struct ReplayBatch {
  Eigen::MatrixXd obs;       ///< kObsDim x n
  Eigen::MatrixXd next_obs;  ///< kObsDim x n
  Eigen::VectorXd actions;
  Eigen::VectorXd rewards;
  Eigen::VectorXd terminal;  ///< 1 when the transition ended the episode by termination
};

/// Fixed-capacity ring buffer of transitions with uniform sampling.
class ReplayBuffer {
public:
  explicit ReplayBuffer(std::size_t capacity)
      : obs_(kObsDim, static_cast<Eigen::Index>(capacity)),
        next_obs_(kObsDim, static_cast<Eigen::Index>(capacity)),
        actions_(static_cast<Eigen::Index>(capacity)),
        rewards_(static_cast<Eigen::Index>(capacity)),
        terminal_(static_cast<Eigen::Index>(capacity)) {
    if (capacity == 0) throw Error("ReplayBuffer capacity must be positive");
  }

  std::size_t capacity() const { return static_cast<std::size_t>(obs_.cols()); }
  std::size_t size() const { return size_; }

  void add(const std::array<double, kObsDim>& o, double action, double reward,
           const std::array<double, kObsDim>& next, bool terminal) {
    const auto i = static_cast<Eigen::Index>(head_);
    for (int k = 0; k < kObsDim; ++k) {
      obs_(k, i) = o[static_cast<std::size_t>(k)];
      next_obs_(k, i) = next[static_cast<std::size_t>(k)];
    }
    actions_[i] = action;
    rewards_[i] = reward;
    terminal_[i] = terminal ? 1.0 : 0.0;
    head_ = (head_ + 1) % capacity();
    if (size_ < capacity()) ++size_;
  }

  /// Indices drawn uniformly with replacement from the stored transitions.
  template <class Rng>
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const {
    if (size_ == 0) throw ContractViolation("ReplayBuffer::sample on an empty buffer");
    std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = pick(rng);
    return idx;
  }

  ReplayBatch gather(const std::vector<std::size_t>& idx) const {
    const auto n = static_cast<Eigen::Index>(idx.size());
    ReplayBatch b{Eigen::MatrixXd(kObsDim, n), Eigen::MatrixXd(kObsDim, n), Eigen::VectorXd(n),
                  Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto i = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]);
      b.obs.col(j) = obs_.col(i);
      b.next_obs.col(j) = next_obs_.col(i);
      b.actions[j] = actions_[i];
      b.rewards[j] = rewards_[i];
      b.terminal[j] = terminal_[i];
    }
    return b;
  }

  template <class Rng>
  ReplayBatch sample(std::size_t n, Rng& rng) const {
    return gather(sample_indices(n, rng));
  }

private:
  Eigen::MatrixXd obs_;
  Eigen::MatrixXd next_obs_;
  Eigen::VectorXd actions_;
  Eigen::VectorXd rewards_;
  Eigen::VectorXd terminal_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

}  // namespace svo::rl
