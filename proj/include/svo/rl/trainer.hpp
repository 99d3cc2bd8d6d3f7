#pragma once

// PPO and SAC training loops over the driving environment, with the
// two-phase pedestrian curriculum and a CSV metrics log.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "svo/common.hpp"
#include "svo/env/driving_env.hpp"
#include "svo/nn/adam.hpp"
#include "svo/nn/checkpoint.hpp"
#include "svo/rl/buffers.hpp"
#include "svo/rl/policy.hpp"
#include "svo/rl/ppo.hpp"
#include "svo/rl/returns.hpp"
#include "svo/rl/sac.hpp"

namespace svo::rl {

struct TrainConfig {
  nn::Algo algo = nn::Algo::Ppo;
  double svo_deg = 0.0;
  std::uint64_t total_steps = 300000;
  std::uint64_t seed = 0;
  double gamma = 0.99;
  double learning_rate = 3e-4;
  double action_noise = 0.1;
  bool curriculum = true;
  /// Multiplies rewards before they reach the learner; logged rewards are raw.
  double reward_scale = 0.1;
  int hidden = 256;
  std::uint64_t checkpoint_every = 0;  ///< 0: final checkpoint only
  std::uint64_t log_every = 2048;
  PpoConfig ppo;
  SacConfig sac;

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw Error(std::string("invalid train config: ") + what);
    };
    require(total_steps > 0, "steps > 0");
    require(gamma > 0.0 && gamma < 1.0, "gamma in (0, 1)");
    require(learning_rate > 0.0, "learning_rate > 0");
    require(action_noise >= 0.0, "action_noise >= 0");
    require(reward_scale > 0.0, "reward_scale > 0");
    require(hidden > 0, "hidden > 0");
    require(log_every > 0, "log_every > 0");
    require(svo_deg >= 0.0 && svo_deg <= 90.0, "svo in [0, 90] degrees");
    require(ppo.clip > 0.0 && ppo.epochs > 0 && ppo.minibatch > 1 && ppo.horizon > 1,
            "ppo clip/epochs/minibatch/horizon");
    require(ppo.gae_lambda >= 0.0 && ppo.gae_lambda <= 1.0, "gae_lambda in [0, 1]");
    require(sac.alpha >= 0.0 && sac.batch > 0 && sac.tau > 0.0 && sac.tau <= 1.0,
            "sac alpha/batch/tau");
  }

  /// First step trained against the aware pedestrian.
  std::uint64_t switch_step() const { return curriculum ? total_steps / 2 : 0; }
};

/// Default training length: desk scale, or the full-length runs.
inline std::uint64_t default_steps(nn::Algo algo, bool full_scale = false) {
  if (algo == nn::Algo::Ppo) return full_scale ? 2500000 : 300000;
  return full_scale ? 250000 : 50000;
}

struct MetricsRow {
  std::uint64_t step = 0;
  std::string phase;
  std::uint64_t episodes = 0;  ///< episodes in the averaging window
  double mean_ep_len = 0.0;
  double mean_ep_reward = 0.0;
  double loss_policy = 0.0;
  double loss_value = 0.0;
  double loss_q = 0.0;
  double entropy = 0.0;
  double lr = 0.0;
};

inline const char* kMetricsColumns =
    "step,phase,episodes,mean_ep_len,mean_ep_reward,loss_policy,loss_value,loss_q,entropy,lr";

inline std::string to_csv(const MetricsRow& r) {
  std::ostringstream s;
  s << r.step << ',' << r.phase << ',' << r.episodes << ',' << format_double(r.mean_ep_len) << ','
    << format_double(r.mean_ep_reward) << ',' << format_double(r.loss_policy) << ','
    << format_double(r.loss_value) << ',' << format_double(r.loss_q) << ','
    << format_double(r.entropy) << ',' << format_double(r.lr);
  return s.str();
}

/// Raised when a loss turns non-finite. `what()` carries the diagnostic dump.
class TrainingDiverged : public Error {
public:
  using Error::Error;
};

struct TrainHooks {
  std::function<void(const MetricsRow&)> on_metrics;
  std::function<void(const nn::Checkpoint&)> on_checkpoint;  ///< periodic, not final
};

struct TrainResult {
  nn::Checkpoint checkpoint;
  std::vector<MetricsRow> metrics;
};

namespace detail {

/// Rolling window of finished episodes, cleared at the phase switch.
class EpisodeWindow {
public:
  explicit EpisodeWindow(std::size_t size = 20) : size_(size) {}
  void push(int length, double reward) {
    items_.emplace_back(length, reward);
    if (items_.size() > size_) items_.pop_front();
  }
  void clear() { items_.clear(); }
  std::size_t count() const { return items_.size(); }
  double mean_length() const {
    if (items_.empty()) return std::nan("");
    double s = 0.0;
    for (const auto& [l, r] : items_) s += l;
    return s / static_cast<double>(items_.size());
  }
  double mean_reward() const {
    if (items_.empty()) return std::nan("");
    double s = 0.0;
    for (const auto& [l, r] : items_) s += r;
    return s / static_cast<double>(items_.size());
  }

private:
  std::size_t size_;
  std::deque<std::pair<int, double>> items_;
};

/// Shared bookkeeping for both algorithms: environment, curriculum,
/// episode statistics and metric rows.
class Session {
public:
  Session(const TrainConfig& cfg, env::EnvSettings settings, TrainHooks hooks)
      : cfg_(cfg),
        env_(with_phase(std::move(settings), cfg)),
        episode_rng_(cfg.seed ^ 0x9E3779B97F4A7C15ULL),
        hooks_(std::move(hooks)) {}

  env::DrivingEnv& env() { return env_; }
  const TrainConfig& cfg() const { return cfg_; }
  std::uint64_t step() const { return step_; }
  bool finished() const { return step_ >= cfg_.total_steps; }
  const char* phase() const {
    return env_.variant() == env::PedVariant::Aware ? "aware" : "reckless";
  }

  std::array<double, kObsDim> reset() {
    ep_len_ = 0;
    ep_reward_ = 0.0;
    return env_.reset(episode_rng_()).normalized();
  }

  /// True exactly once, at the curriculum switch step.
  bool at_switch() const {
    return cfg_.curriculum && step_ == cfg_.switch_step() && env_.variant() != env::PedVariant::Aware;
  }

  /// Log the boundary row and move to the aware pedestrian.
  void switch_phase() {
    emit(current_row(last_losses_));
    env_.set_variant(env::PedVariant::Aware);
    window_.clear();
  }

  env::Transition step(double u) {
    env::Transition tr = env_.step(u);
    ++step_;
    ++ep_len_;
    ep_reward_ += tr.reward.total;
    if (tr.done) window_.push(ep_len_, ep_reward_);
    return tr;
  }

  double lr_at_step() const {
    return nn::LinearSchedule{cfg_.learning_rate}.at(static_cast<double>(step_) /
                                                     static_cast<double>(cfg_.total_steps));
  }

  MetricsRow current_row(const MetricsRow& losses) const {
    MetricsRow r = losses;
    r.step = step_;
    r.phase = phase();
    r.episodes = window_.count();
    r.mean_ep_len = window_.mean_length();
    r.mean_ep_reward = window_.mean_reward();
    r.lr = lr_at_step();
    return r;
  }

  void log(const MetricsRow& losses) {
    last_losses_ = losses;
    emit(current_row(losses));
  }

  void maybe_checkpoint(const std::function<nn::Checkpoint()>& make) {
    if (cfg_.checkpoint_every == 0 || step_ % cfg_.checkpoint_every != 0 || finished()) return;
    if (hooks_.on_checkpoint) hooks_.on_checkpoint(make());
  }

  std::vector<MetricsRow>& rows() { return rows_; }

  void check_finite(const char* what, double value, const std::string& details) const {
    if (std::isfinite(value)) return;
    std::ostringstream s;
    s << "training diverged: " << what << " is " << format_double(value) << " at step " << step_
      << " (algo " << nn::to_string(cfg_.algo) << ", svo " << format_double(cfg_.svo_deg)
      << ", seed " << cfg_.seed << ", phase " << phase() << ")\n"
      << details;
    throw TrainingDiverged(s.str());
  }

private:
  static env::EnvSettings with_phase(env::EnvSettings s, const TrainConfig& cfg) {
    s.svo_rad = deg_to_rad(cfg.svo_deg);
    s.variant = cfg.curriculum ? env::PedVariant::Reckless : env::PedVariant::Aware;
    return s;
  }

  void emit(const MetricsRow& r) {
    rows_.push_back(r);
    if (hooks_.on_metrics) hooks_.on_metrics(r);
  }

  TrainConfig cfg_;
  env::DrivingEnv env_;
  std::mt19937_64 episode_rng_;
  TrainHooks hooks_;
  EpisodeWindow window_;
  std::vector<MetricsRow> rows_;
  MetricsRow last_losses_;
  std::uint64_t step_ = 0;
  int ep_len_ = 0;
  double ep_reward_ = 0.0;
};

inline std::string norms(std::initializer_list<std::pair<const char*, const Vector*>> items) {
  std::ostringstream s;
  for (const auto& [name, v] : items)
    s << "  |" << name << "| = " << format_double(v->norm())
      << (v->allFinite() ? "" : " (non-finite entries)") << '\n';
  return s.str();
}

inline void stamp(nn::Checkpoint& c, const TrainConfig& cfg, std::uint64_t step,
                  const std::string& config_hash) {
  c.svo_deg = cfg.svo_deg;
  c.step = step;
  c.total_steps = cfg.total_steps;
  c.seed = cfg.seed;
  c.config_hash = config_hash;
}

}  // namespace detail

inline TrainResult train_ppo(const TrainConfig& cfg, const env::EnvSettings& settings,
                             const std::string& config_hash, const TrainHooks& hooks = {}) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ActorCritic ac = ActorCritic::make(rng, cfg.hidden, cfg.ppo.initial_log_std);
  nn::Adam opt(ac.net.param_count());
  nn::Adam opt_log_std(1);
  detail::Session session(cfg, settings, hooks);

  auto evaluate = [&](const std::array<double, kObsDim>& o) {
    const Matrix out = ac.net.forward(nn::column(o));
    return std::pair{out(ActorCritic::kMeanRow, 0), out(ActorCritic::kValueRow, 0)};
  };
  auto make_checkpoint = [&] {
    nn::Checkpoint c = ppo_checkpoint(ac);
    detail::stamp(c, cfg, session.step(), config_hash);
    return c;
  };

  const auto horizon = static_cast<std::size_t>(cfg.ppo.horizon);
  RolloutBuffer buf(horizon);
  std::array<double, kObsDim> obs = session.reset();
  auto [mean, value] = evaluate(obs);

  while (!session.finished()) {
    buf.clear();
    const double lr = session.lr_at_step();
    while (!buf.full() && !session.finished()) {
      if (session.at_switch()) {
        if (buf.size() > 0) buf.episode_end.back() = 1;
        session.switch_phase();
        obs = session.reset();
        std::tie(mean, value) = evaluate(obs);
      }
      const double sd = std::exp(nn::clamp_log_std(ac.log_std));
      const double action = mean + sd * normal(rng) + cfg.action_noise * normal(rng);
      const double log_prob = nn::gaussian_log_prob(action, mean, nn::clamp_log_std(ac.log_std));
      const env::Transition tr = session.step(action);
      const std::array<double, kObsDim> next = tr.obs.normalized();
      const auto [next_mean, next_value] = evaluate(next);
      buf.add(obs, action, log_prob, cfg.reward_scale * tr.reward.total, value);
      buf.finish_step(tr.terminated() ? 0.0 : next_value, tr.done);
      if (tr.done) {
        obs = session.reset();
        std::tie(mean, value) = evaluate(obs);
      } else {
        obs = next;
        mean = next_mean;
        value = next_value;
      }
      session.maybe_checkpoint(make_checkpoint);
    }

    Advantages adv = gae(buf.rewards, buf.values, buf.next_values, buf.episode_end, cfg.gamma,
                         cfg.ppo.gae_lambda);
    const std::size_t n = buf.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto mb = static_cast<std::size_t>(cfg.ppo.minibatch);
    MetricsRow losses;
    int updates = 0;
    for (int epoch = 0; epoch < cfg.ppo.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start + 1 < n; start += mb) {
        const std::size_t len = std::min(mb, n - start);
        if (len < 2) break;
        PpoBatch b{Matrix(kObsDim, static_cast<Eigen::Index>(len)), Vector(len), Vector(len),
                   Vector(len), Vector(len)};
        for (std::size_t k = 0; k < len; ++k) {
          const std::size_t i = order[start + k];
          const auto j = static_cast<Eigen::Index>(k);
          b.obs.col(j) = buf.obs.col(static_cast<Eigen::Index>(i));
          b.actions[j] = buf.actions[i];
          b.old_log_probs[j] = buf.log_probs[i];
          b.advantages[j] = adv.advantages[i];
          b.returns[j] = adv.returns[i];
        }
        normalize(b.advantages);
        PpoLoss loss = ppo_loss(ac, b, cfg.ppo);
        Vector g_ls = Vector::Constant(1, loss.grad_log_std);
        session.check_finite("ppo loss", loss.total,
                             detail::norms({{"params", &ac.net.params()}, {"grad", &loss.grad}}) +
                                 "  policy " + format_double(loss.policy) + ", value " +
                                 format_double(loss.value) + ", log_std " +
                                 format_double(ac.log_std) + '\n');
        nn::clip_grad_norm(cfg.ppo.max_grad_norm, loss.grad, g_ls);
        opt.step(ac.net.params(), loss.grad, lr);
        Vector ls = Vector::Constant(1, ac.log_std);
        opt_log_std.step(ls, g_ls, lr);
        ac.log_std = nn::clamp_log_std(ls[0]);
        losses.loss_policy += loss.policy;
        losses.loss_value += loss.value;
        losses.entropy += loss.entropy;
        ++updates;
      }
    }
    if (updates > 0) {
      losses.loss_policy /= updates;
      losses.loss_value /= updates;
      losses.entropy /= updates;
    }
    // Parameters changed: refresh the cached head for the current observation.
    std::tie(mean, value) = evaluate(obs);
    session.log(losses);
  }

  TrainResult result;
  result.checkpoint = make_checkpoint();
  result.metrics = std::move(session.rows());
  return result;
}

inline TrainResult train_sac(const TrainConfig& cfg, const env::EnvSettings& settings,
                             const std::string& config_hash, const TrainHooks& hooks = {}) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SacNets nets = SacNets::make(rng, cfg.hidden);
  nn::Adam opt_pi(nets.policy.param_count());
  nn::Adam opt_q(nets.q.param_count());
  nn::Adam opt_v(nets.v.param_count());
  detail::Session session(cfg, settings, hooks);
  ReplayBuffer replay(static_cast<std::size_t>(cfg.total_steps));

  auto make_checkpoint = [&] {
    nn::Checkpoint c = sac_checkpoint(nets);
    detail::stamp(c, cfg, session.step(), config_hash);
    return c;
  };

  const auto batch = static_cast<std::size_t>(cfg.sac.batch);
  const std::size_t warmup = std::max<std::size_t>(batch, static_cast<std::size_t>(cfg.sac.learning_starts));
  std::array<double, kObsDim> obs = session.reset();
  MetricsRow losses;
  int updates = 0;

  while (!session.finished()) {
    if (session.at_switch()) {
      session.switch_phase();
      obs = session.reset();
    }
    const Matrix head = nets.policy.forward(nn::column(obs));
    const nn::PolicySample s = nn::sample_squashed(head(0, 0), head(1, 0), normal(rng));
    const double action = std::clamp(s.action + cfg.action_noise * normal(rng), -1.0, 1.0);
    const env::Transition tr = session.step(action);
    const std::array<double, kObsDim> next = tr.obs.normalized();
    replay.add(obs, action, cfg.reward_scale * tr.reward.total, next, tr.terminated());
    obs = tr.done ? session.reset() : next;

    if (replay.size() >= warmup) {
      const double lr = session.lr_at_step();
      const ReplayBatch b = replay.sample(batch, rng);
      const Matrix v_next = nets.v_target.forward(b.next_obs);
      const Vector q_hat = sac_q_targets(b.rewards, v_next.row(0).transpose(), b.terminal, cfg.gamma);
      Vector noise(static_cast<Eigen::Index>(batch));
      for (Eigen::Index j = 0; j < noise.size(); ++j) noise[j] = normal(rng);
      const PolicyBatch p = sample_policy(nets.policy, b.obs, noise);
      const Vector v_hat = sac_v_targets(nets.q, b.obs, p, cfg.sac.alpha);

      SacLoss lq = sac_q_loss(nets.q, b.obs, b.actions, q_hat);
      SacLoss lv = sac_v_loss(nets.v, b.obs, v_hat);
      SacLoss lp = sac_policy_loss(nets.policy, nets.q, b.obs, noise, cfg.sac.alpha);
      const std::string dump = detail::norms({{"policy", &nets.policy.params()},
                                              {"q", &nets.q.params()},
                                              {"v", &nets.v.params()}});
      session.check_finite("sac q loss", lq.value, dump);
      session.check_finite("sac v loss", lv.value, dump);
      session.check_finite("sac policy loss", lp.value, dump);
      opt_q.step(nets.q.params(), lq.grad, lr);
      opt_v.step(nets.v.params(), lv.grad, lr);
      opt_pi.step(nets.policy.params(), lp.grad, lr);
      polyak_update(nets.v_target, nets.v, cfg.sac.tau);

      losses.loss_q += lq.value;
      losses.loss_value += lv.value;
      losses.loss_policy += lp.value;
      losses.entropy += -p.log_probs.mean();
      ++updates;
    }
    session.maybe_checkpoint(make_checkpoint);
    if (session.step() % cfg.log_every == 0 || session.finished()) {
      if (updates > 0) {
        losses.loss_q /= updates;
        losses.loss_value /= updates;
        losses.loss_policy /= updates;
        losses.entropy /= updates;
      }
      session.log(losses);
      losses = {};
      updates = 0;
    }
  }

  TrainResult result;
  result.checkpoint = make_checkpoint();
  result.metrics = std::move(session.rows());
  return result;
}

inline TrainResult train(const TrainConfig& cfg, const env::EnvSettings& settings,
                         const std::string& config_hash, const TrainHooks& hooks = {}) {
  return cfg.algo == nn::Algo::Ppo ? train_ppo(cfg, settings, config_hash, hooks)
                                   : train_sac(cfg, settings, config_hash, hooks);
}

/// Header comment block shared by every metrics CSV.
inline std::string metrics_header(const TrainConfig& cfg, const std::string& config_hash) {
  std::ostringstream s;
  s << "# toolkit " << kToolkitVersion << " config_hash " << config_hash << " seed " << cfg.seed
    << " algo " << nn::to_string(cfg.algo) << " svo_deg " << format_double(cfg.svo_deg) << '\n'
    << kMetricsColumns << '\n';
  return s.str();
}

/// Train and write `metrics.csv`, periodic `checkpoint_<step>.ckpt` files and
/// `final.ckpt` into `out_dir`. A divergence leaves `divergence.txt` behind
/// and rethrows.
inline TrainResult train_to_directory(const TrainConfig& cfg, const env::EnvSettings& settings,
                                      const std::string& config_hash,
                                      const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream metrics(out_dir / "metrics.csv", std::ios::trunc);
  if (!metrics) throw Error("cannot write " + (out_dir / "metrics.csv").string());
  metrics << metrics_header(cfg, config_hash);
  TrainHooks hooks;
  hooks.on_metrics = [&](const MetricsRow& r) { metrics << to_csv(r) << '\n' << std::flush; };
  hooks.on_checkpoint = [&](const nn::Checkpoint& c) {
    nn::save_checkpoint((out_dir / ("checkpoint_" + std::to_string(c.step) + ".ckpt")).string(), c);
  };
  try {
    TrainResult r = train(cfg, settings, config_hash, hooks);
    nn::save_checkpoint((out_dir / "final.ckpt").string(), r.checkpoint);
    return r;
  } catch (const TrainingDiverged& e) {
    std::ofstream(out_dir / "divergence.txt") << e.what();
    throw;
  }
}

}  // namespace svo::rl
