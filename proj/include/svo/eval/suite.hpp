#pragma once

// Fixed test suites: a policy drives a batch of seeded episodes against one
// pedestrian variant, and per-episode metrics fold into per-policy summaries.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "svo/common.hpp"
#include "svo/env/driving_env.hpp"
#include "svo/env/trace.hpp"
#include "svo/nn/checkpoint.hpp"
#include "svo/rl/policy.hpp"

namespace svo::eval {

inline constexpr std::uint64_t kSuiteSeedBase = 100000;

struct SuiteConfig {
  env::PedVariant variant = env::PedVariant::Aware;
  int episodes = 1000;
  std::uint64_t seed_base = kSuiteSeedBase;
  int threads = 1;
  bool record_steps = false;  ///< keep full step traces in the episode records

  void validate() const {
    if (episodes <= 0 || episodes % 2 != 0)
      throw Error("suite: episode count must be positive and even");
    if (threads <= 0) throw Error("suite: threads must be positive");
  }

  /// Scenario i of the suite. Even indices start on the bottom pavement, odd
  /// ones on the top, so both crossing directions are equally represented.
  std::uint64_t seed_of(int i) const { return seed_base + static_cast<std::uint64_t>(i); }
  static bool bottom_of(int i) { return i % 2 == 0; }
};

struct EpisodeMetrics {
  int index = 0;
  std::uint64_t seed = 0;
  bool bottom = true;
  env::Outcome outcome = env::Outcome::Running;
  int steps = 0;
  double completion_time = 0.0;  ///< time at termination [s]
  double min_distance = 0.0;     ///< pedestrian to vehicle rectangle along the relative path [m]
  double max_jerk = 0.0;         ///< max |d a_cmd / dt| [m/s^3]
  double rms_jerk = 0.0;
  bool crossed_in_front = false;
  double total_reward = 0.0;
  std::vector<nlohmann::ordered_json> steps_trace;

  bool success() const { return outcome == env::Outcome::Goal; }
  bool collision() const { return outcome == env::Outcome::Collision; }
};

/// Euclidean distance from a point to the vehicle body rectangle (0 inside).
inline double body_distance(const Vec2& p_local, const ped::VehiclePose& pose) {
  const double dx = std::max(0.0, std::abs(p_local.x()) - pose.half_length);
  const double dy = std::max(0.0, std::abs(p_local.y()) - pose.half_width);
  return std::hypot(dx, dy);
}

/// Smallest distance to the vehicle rectangle along the straight relative
/// path from `from` to `to` (both vehicle-frame points).
inline double swept_body_distance(const Vec2& from, const Vec2& to, const ped::VehiclePose& pose) {
  if (env::swept_collision(from, to, pose, 0.0)) return 0.0;
  double d = std::min(body_distance(from, pose), body_distance(to, pose));
  const Vec2 seg = to - from;
  const double len2 = seg.squaredNorm();
  if (len2 == 0.0) return d;
  for (double sx : {-1.0, 1.0}) {
    for (double sy : {-1.0, 1.0}) {
      const Vec2 corner(sx * pose.half_length, sy * pose.half_width);
      const double t = std::clamp((corner - from).dot(seg) / len2, 0.0, 1.0);
      d = std::min(d, (from + t * seg - corner).norm());
    }
  }
  return d;
}

/// Roll out one episode with a deterministic policy.
template <class Act>
EpisodeMetrics run_episode(env::DrivingEnv& environment, std::uint64_t seed, bool bottom, Act&& act,
                           bool record_steps = false) {
  EpisodeMetrics m;
  m.seed = seed;
  m.bottom = bottom;
  env::Observation obs = environment.reset(seed, bottom);
  const double lane_y = environment.settings().scenario.lane_center_y;
  const double dt = environment.settings().scenario.dt;
  Vec2 prev_local = environment.vehicle().to_local(environment.pedestrian().position);
  m.min_distance = body_distance(prev_local, environment.vehicle());
  double prev_accel = environment.vehicle().accel;
  double prev_y = environment.pedestrian().position.y();
  double jerk_sq = 0.0;
  env::Transition tr;
  do {
    tr = environment.step(act(obs));
    const auto& pose = tr.info.vehicle;
    const Vec2 local = pose.to_local(tr.info.pedestrian.position);
    m.min_distance = std::min(m.min_distance, swept_body_distance(prev_local, local, pose));
    prev_local = local;
    const double jerk = (tr.info.accel_cmd - prev_accel) / dt;
    m.max_jerk = std::max(m.max_jerk, std::abs(jerk));
    jerk_sq += jerk * jerk;
    prev_accel = tr.info.accel_cmd;
    const double y = tr.info.pedestrian.position.y();
    if ((prev_y - lane_y) * (y - lane_y) <= 0.0 && prev_y != y && local.x() > pose.half_length)
      m.crossed_in_front = true;
    prev_y = y;
    m.total_reward += tr.reward.total;
    if (record_steps) m.steps_trace.push_back(env::trace_record(tr));
    obs = tr.obs;
  } while (!tr.done);
  m.outcome = tr.outcome;
  m.steps = tr.info.step;
  m.completion_time = tr.info.time;
  m.rms_jerk = std::sqrt(jerk_sq / m.steps);
  return m;
}

/// One evaluated policy: the checkpoint's policy plus the SVO tag it is
/// reported under.
struct TaggedPolicy {
  rl::Policy policy;
  double svo_deg = 0.0;
  std::string label;

  static TaggedPolicy from_checkpoint(const nn::Checkpoint& c, double svo_tag, std::string label) {
    if (std::abs(c.svo_deg - svo_tag) > 1e-9)
      throw Error("checkpoint '" + label + "' was trained at svo " + format_double(c.svo_deg) +
                  " deg but is tagged " + format_double(svo_tag) + " deg");
    return {rl::Policy::from_checkpoint(c), svo_tag, std::move(label)};
  }
};

/// Episodes of one policy on one suite, in episode order. Workers pull
/// episode indices from a shared counter; results land in their own slots,
/// so the output does not depend on the thread count.
inline std::vector<EpisodeMetrics> run_policy(const rl::Policy& policy, const SuiteConfig& cfg,
                                              const env::EnvSettings& settings) {
  cfg.validate();
  std::vector<EpisodeMetrics> out(static_cast<std::size_t>(cfg.episodes));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      env::EnvSettings s = settings;
      s.variant = cfg.variant;
      env::DrivingEnv environment(s);
      for (int i = next++; i < cfg.episodes; i = next++) {
        EpisodeMetrics m = run_episode(environment, cfg.seed_of(i), SuiteConfig::bottom_of(i),
                                       [&](const env::Observation& o) { return policy.act(o); },
                                       cfg.record_steps);
        m.index = i;
        out[static_cast<std::size_t>(i)] = std::move(m);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = cfg.episodes;
    }
  };
  const int n = std::min(cfg.threads, cfg.episodes);
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

struct SuiteSummary {
  std::string label;
  double svo_deg = 0.0;
  int episodes = 0;
  int goals = 0;
  int collisions = 0;
  int timeouts = 0;
  double success_rate = 0.0;
  double collision_free_rate = 0.0;
  double mean_completion_time = 0.0;  ///< over successful episodes
  double mean_min_distance = 0.0;
  double mean_max_jerk = 0.0;
  double mean_rms_jerk = 0.0;
  double crossed_in_front_rate = 0.0;
};

/// Sequential fold over episode records in index order.
inline SuiteSummary summarize(const std::vector<EpisodeMetrics>& episodes, double svo_deg,
                              const std::string& label) {
  SuiteSummary s;
  s.label = label;
  s.svo_deg = svo_deg;
  s.episodes = static_cast<int>(episodes.size());
  double time_sum = 0.0, dist_sum = 0.0, max_jerk_sum = 0.0, rms_jerk_sum = 0.0;
  int in_front = 0;
  for (const EpisodeMetrics& m : episodes) {
    s.goals += m.outcome == env::Outcome::Goal;
    s.collisions += m.outcome == env::Outcome::Collision;
    s.timeouts += m.outcome == env::Outcome::Timeout;
    if (m.success()) time_sum += m.completion_time;
    dist_sum += m.min_distance;
    max_jerk_sum += m.max_jerk;
    rms_jerk_sum += m.rms_jerk;
    in_front += m.crossed_in_front;
  }
  if (s.episodes == 0) return s;
  const double n = s.episodes;
  s.success_rate = s.goals / n;
  s.collision_free_rate = (n - s.collisions) / n;
  s.mean_completion_time = s.goals ? time_sum / s.goals : 0.0;
  s.mean_min_distance = dist_sum / n;
  s.mean_max_jerk = max_jerk_sum / n;
  s.mean_rms_jerk = rms_jerk_sum / n;
  s.crossed_in_front_rate = in_front / n;
  return s;
}

struct SuiteRun {
  SuiteSummary summary;
  std::vector<EpisodeMetrics> episodes;
};

/// Evaluate every policy on the same scenarios (paired design).
inline std::vector<SuiteRun> run_suite(const std::vector<TaggedPolicy>& policies,
                                       const SuiteConfig& cfg, const env::EnvSettings& settings) {
  std::vector<SuiteRun> out;
  for (const TaggedPolicy& p : policies) {
    SuiteRun r;
    r.episodes = run_policy(p.policy, cfg, settings);
    r.summary = summarize(r.episodes, p.svo_deg, p.label);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr const char* kSummaryColumns =
    "label,svo_deg,suite,episodes,goals,collisions,timeouts,success_rate,collision_free_rate,"
    "mean_completion_time,mean_min_distance,mean_max_jerk,mean_rms_jerk,crossed_in_front_rate";

inline void write_summary_csv(std::ostream& out, const std::vector<SuiteRun>& runs,
                              const SuiteConfig& cfg, const std::string& config_hash) {
  out << "# toolkit " << kToolkitVersion << " config_hash " << config_hash << " seed "
      << cfg.seed_base << '\n';
  out << kSummaryColumns << '\n';
  const std::string suite(env::to_string(cfg.variant));
  for (const SuiteRun& r : runs) {
    const SuiteSummary& s = r.summary;
    out << s.label << ',' << format_double(s.svo_deg) << ',' << suite << ',' << s.episodes << ','
        << s.goals << ',' << s.collisions << ',' << s.timeouts << ',' << format_double(s.success_rate)
        << ',' << format_double(s.collision_free_rate) << ','
        << format_double(s.mean_completion_time) << ',' << format_double(s.mean_min_distance) << ','
        << format_double(s.mean_max_jerk) << ',' << format_double(s.mean_rms_jerk) << ','
        << format_double(s.crossed_in_front_rate) << '\n';
  }
}

inline nlohmann::ordered_json episode_json(const EpisodeMetrics& m, const SuiteSummary& owner,
                                           env::PedVariant variant) {
  nlohmann::ordered_json j;
  j["type"] = "episode";
  j["label"] = owner.label;
  j["svo_deg"] = owner.svo_deg;
  j["suite"] = std::string(env::to_string(variant));
  j["index"] = m.index;
  j["seed"] = m.seed;
  j["bottom"] = m.bottom;
  j["outcome"] = std::string(env::to_string(m.outcome));
  j["steps"] = m.steps;
  j["completion_time"] = m.completion_time;
  j["min_distance"] = m.min_distance;
  j["max_jerk"] = m.max_jerk;
  j["rms_jerk"] = m.rms_jerk;
  j["crossed_in_front"] = m.crossed_in_front;
  j["total_reward"] = m.total_reward;
  if (!m.steps_trace.empty()) j["trace"] = m.steps_trace;
  return j;
}

inline env::Outcome outcome_from_string(const std::string& s) {
  for (env::Outcome o : {env::Outcome::Running, env::Outcome::Collision, env::Outcome::Goal,
                         env::Outcome::Timeout})
    if (env::to_string(o) == s) return o;
  throw Error("unknown outcome '" + s + "'");
}

/// Inverse of episode_json for the fields the summary folds over.
inline EpisodeMetrics episode_from_json(const nlohmann::json& j) {
  EpisodeMetrics m;
  m.index = j.at("index").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.bottom = j.at("bottom").get<bool>();
  m.outcome = outcome_from_string(j.at("outcome").get<std::string>());
  m.steps = j.at("steps").get<int>();
  m.completion_time = j.at("completion_time").get<double>();
  m.min_distance = j.at("min_distance").get<double>();
  m.max_jerk = j.at("max_jerk").get<double>();
  m.rms_jerk = j.at("rms_jerk").get<double>();
  m.crossed_in_front = j.at("crossed_in_front").get<bool>();
  m.total_reward = j.at("total_reward").get<double>();
  return m;
}

inline void write_episodes_jsonl(std::ostream& out, const std::vector<SuiteRun>& runs,
                                 const SuiteConfig& cfg, const std::string& config_hash) {
  nlohmann::ordered_json header;
  header["type"] = "header";
  header["toolkit"] = kToolkitVersion;
  header["config_hash"] = config_hash;
  header["seed"] = cfg.seed_base;
  header["suite"] = std::string(env::to_string(cfg.variant));
  header["episodes"] = cfg.episodes;
  out << header.dump() << '\n';
  for (const SuiteRun& r : runs)
    for (const EpisodeMetrics& m : r.episodes) out << episode_json(m, r.summary, cfg.variant).dump() << '\n';
}

/// Column documentation for every tabular artifact the harness writes.
inline nlohmann::ordered_json output_schema() {
  nlohmann::ordered_json s;
  s["toolkit"] = kToolkitVersion;
  s["comment_line"] = "First line of each CSV: '# toolkit <version> config_hash <hash> seed <seed>'";
  s["summary.csv"] = {
      {"label", "policy label (checkpoint file stem)"},
      {"svo_deg", "social value orientation of the policy [deg]"},
      {"suite", "pedestrian variant: aware or unaware"},
      {"episodes", "number of episodes"},
      {"goals", "episodes where the vehicle reached the end of the road"},
      {"collisions", "episodes ending in a collision"},
      {"timeouts", "episodes hitting the step limit"},
      {"success_rate", "goals / episodes"},
      {"collision_free_rate", "1 - collisions / episodes"},
      {"mean_completion_time", "mean episode time over successful episodes [s]"},
      {"mean_min_distance", "mean over episodes of the minimum pedestrian to vehicle-body distance [m]"},
      {"mean_max_jerk", "mean over episodes of max |jerk| of the commanded acceleration [m/s^3]"},
      {"mean_rms_jerk", "mean over episodes of RMS jerk [m/s^3]"},
      {"crossed_in_front_rate", "fraction of episodes where the pedestrian crossed the lane centre ahead of the bumper"}};
  s["episodes.jsonl"] = {
      {"header", "first line: toolkit, config_hash, seed (suite seed base), suite, episodes"},
      {"episode", "one line per (policy, episode): label, svo_deg, suite, index, seed, bottom, outcome, steps, "
                  "completion_time [s], min_distance [m], max_jerk, rms_jerk [m/s^3], crossed_in_front, "
                  "total_reward, optional trace"},
      {"trace", "per step: t [s], x_v [m], v_v [m/s], a_cmd [m/s^2], x_p, y_p [m], vx_p, vy_p [m/s], M, "
                "r_car, r_p, r_total, event"}};
  s["gapcurve.csv"] = {{"gap", "time gap at the start of the trial [s]"},
                       {"p_cross", "fraction of trials where the pedestrian left the curb before the vehicle arrived"}};
  s["gallery/*.jsonl"] = {
      {"header", "scenario name, vehicle speed [m/s] and acceleration [m/s^2], crossing direction"},
      {"step", "t, x_v, v_v, a_v, x_p, y_p, vx_p, vy_p, M, f_nav_x, f_nav_y, f_veh_x, f_veh_y"}};
  s["metrics.csv"] = {{"step", "environment steps so far"},
                      {"phase", "pedestrian variant used for training"},
                      {"episodes", "episodes finished so far"},
                      {"mean_ep_len", "mean length of the last 20 episodes [steps]"},
                      {"mean_ep_reward", "mean return of the last 20 episodes"},
                      {"loss_policy", "last policy loss"},
                      {"loss_value", "last value loss"},
                      {"loss_q", "last Q loss (SAC)"},
                      {"entropy", "policy entropy estimate"},
                      {"lr", "learning rate"}};
  return s;
}

}  // namespace svo::eval
