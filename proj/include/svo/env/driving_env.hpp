#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>

#include "svo/common.hpp"
#include "svo/env/reward.hpp"
#include "svo/env/scenario.hpp"
#include "svo/env/vehicle.hpp"
#include "svo/pedestrian/model.hpp"

namespace svo::env {

/// Pedestrian behaviour variants.
///  - Aware: full situational-aware model.
///  - Reckless: always wants to cross but still avoids the vehicle body.
///  - Unaware: always crosses and feels no vehicle fields at all.
enum class PedVariant { Aware, Reckless, Unaware };

inline ped::Behavior behavior_of(PedVariant v) {
  switch (v) {
    case PedVariant::Aware: return {false, true};
    case PedVariant::Reckless: return {true, true};
    case PedVariant::Unaware: return {true, false};
  }
  return {};
}

inline std::string_view to_string(PedVariant v) {
  switch (v) {
    case PedVariant::Aware: return "aware";
    case PedVariant::Reckless: return "reckless";
    case PedVariant::Unaware: return "unaware";
  }
  return "?";
}

enum class Outcome { Running, Collision, Goal, Timeout };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Running: return "running";
    case Outcome::Collision: return "collision";
    case Outcome::Goal: return "goal";
    case Outcome::Timeout: return "timeout";
  }
  return "?";
}

inline constexpr int kObsDim = 5;

/// Ego-frame observation: ego speed, pedestrian position and velocity.
struct Observation {
  double v_ego = 0.0;
  Vec2 p_rel = Vec2::Zero();
  Vec2 v_ped = Vec2::Zero();

  /// Fixed-scale normalization used as network input, clipped to [-1, 1].
  std::array<double, kObsDim> normalized() const {
    constexpr std::array<double, kObsDim> scale = {20.0, 60.0, 6.0, 4.0, 4.0};
    const std::array<double, kObsDim> raw = {v_ego, p_rel.x(), p_rel.y(), v_ped.x(), v_ped.y()};
    std::array<double, kObsDim> out{};
    for (int i = 0; i < kObsDim; ++i) out[i] = std::clamp(raw[i] / scale[i], -1.0, 1.0);
    return out;
  }
};

inline Observation observe(const ped::VehiclePose& pose, const ped::PedestrianState& ped) {
  return {pose.speed, pose.to_local(ped.position), ped.velocity};
}

/// Point-in-box test against the vehicle rectangle inflated by `margin`.
inline bool inside_vehicle_box(const Vec2& p_local, const ped::VehiclePose& pose, double margin) {
  return std::abs(p_local.x()) <= pose.half_length + margin &&
         std::abs(p_local.y()) <= pose.half_width + margin;
}

/// Segment-vs-box test on the pedestrian's motion relative to the vehicle
/// over one step (Liang-Barsky clipping). Catches corner clips that a pure
/// end-point test would miss.
inline bool swept_collision(const Vec2& from_local, const Vec2& to_local,
                            const ped::VehiclePose& pose, double margin) {
  const double hx = pose.half_length + margin;
  const double hy = pose.half_width + margin;
  const Vec2 d = to_local - from_local;
  double t0 = 0.0;
  double t1 = 1.0;
  const std::array<double, 4> p = {-d.x(), d.x(), -d.y(), d.y()};
  const std::array<double, 4> q = {from_local.x() + hx, hx - from_local.x(),
                                   from_local.y() + hy, hy - from_local.y()};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
    } else {
      const double t = q[i] / p[i];
      if (p[i] < 0.0) {
        t0 = std::max(t0, t);
      } else {
        t1 = std::min(t1, t);
      }
      if (t0 > t1) return false;
    }
  }
  return true;
}

/// Termination after `step` completed steps. `previous_local` is the
/// pedestrian's vehicle-frame position before the step (equal to the current
/// one for a static check).
inline Outcome is_terminal(const Vec2& previous_local, const ped::VehiclePose& pose,
                           const ped::PedestrianState& ped, int step, const ScenarioConfig& cfg) {
  if (swept_collision(previous_local, pose.to_local(ped.position), pose, cfg.collision_margin))
    return Outcome::Collision;
  if (pose.x >= cfg.road_length) return Outcome::Goal;
  if (step >= cfg.max_steps) return Outcome::Timeout;
  return Outcome::Running;
}

inline Outcome is_terminal(const ped::VehiclePose& pose, const ped::PedestrianState& ped, int step,
                           const ScenarioConfig& cfg) {
  return is_terminal(pose.to_local(ped.position), pose, ped, step, cfg);
}

struct EnvSettings {
  ScenarioConfig scenario;
  ped::PedParams ped;
  RewardParams reward;
  double svo_rad = 0.0;
  PedVariant variant = PedVariant::Aware;
};

/// Diagnostics attached to every transition.
struct StepInfo {
  int step = 0;
  double time = 0.0;
  double gap = 0.0;  ///< longitudinal bumper gap, 0 when beside/behind
  double motivation = 0.0;
  double accel_cmd = 0.0;
  ped::VehiclePose vehicle;
  ped::PedestrianState pedestrian;
};

struct Transition {
  Observation obs;
  RewardBreakdown reward;
  bool done = false;
  Outcome outcome = Outcome::Running;
  StepInfo info;

  bool terminated() const { return outcome == Outcome::Collision || outcome == Outcome::Goal; }
  bool truncated() const { return outcome == Outcome::Timeout; }
};

/// Single-pedestrian straight-road MDP. One instance is single threaded and
/// holds no state beyond the current episode.
class DrivingEnv {
public:
  explicit DrivingEnv(EnvSettings settings) : settings_(std::move(settings)) {
    settings_.scenario.validate();
    settings_.ped.lane_width = settings_.scenario.lane_width;
    settings_.ped.validate();
  }

  const EnvSettings& settings() const { return settings_; }
  void set_variant(PedVariant v) { settings_.variant = v; }
  PedVariant variant() const { return settings_.variant; }

  Observation reset(std::uint64_t seed, std::optional<bool> force_bottom = std::nullopt) {
    return reset(sample_scenario(seed, settings_.scenario, force_bottom));
  }

  Observation reset(const Scenario& scenario) {
    vehicle_ = scenario.vehicle;
    ped_ = scenario.pedestrian;
    if (settings_.variant != PedVariant::Aware) ped_.motivation = 1.0;
    steps_ = 0;
    outcome_ = Outcome::Running;
    started_ = true;
    return observe(vehicle_, ped_);
  }

  Transition step(double u) {
    if (!started_) throw ContractViolation("DrivingEnv::step called before reset");
    if (outcome_ != Outcome::Running)
      throw ContractViolation("DrivingEnv::step called on a finished episode");

    const ScenarioConfig& cfg = settings_.scenario;
    const double accel = scale_action(u, cfg);
    const Vec2 before = vehicle_.to_local(ped_.position);

    vehicle_ = step_vehicle(vehicle_, accel, cfg.dt, cfg.max_vehicle_speed);
    ped_ = ped::pedestrian_step(ped_, vehicle_, settings_.ped, cfg.dt,
                                behavior_of(settings_.variant));
    ++steps_;

    // Both bodies move at constant velocity within a step, so the relative
    // motion is the straight segment between the two frame positions.
    const Outcome outcome = is_terminal(before, vehicle_, ped_, steps_, cfg);
    outcome_ = outcome;

    Transition tr;
    tr.obs = observe(vehicle_, ped_);
    const double ped_rate = pedestrian_reward(ped_, vehicle_, settings_.ped.motivation_threshold,
                                           settings_.reward);
    tr.reward = compose_reward(outcome == Outcome::Collision, outcome == Outcome::Goal, ped_rate,
                               settings_.svo_rad, cfg.dt, settings_.reward);
    tr.done = outcome != Outcome::Running;
    tr.outcome = outcome;
    tr.info.step = steps_;
    tr.info.time = steps_ * cfg.dt;
    tr.info.gap = std::max(0.0, vehicle_.to_local(ped_.position).x() - vehicle_.half_length);
    tr.info.motivation = ped_.motivation;
    tr.info.accel_cmd = accel;
    tr.info.vehicle = vehicle_;
    tr.info.pedestrian = ped_;
    return tr;
  }

  Observation observation() const { return observe(vehicle_, ped_); }
  const ped::VehiclePose& vehicle() const { return vehicle_; }
  const ped::PedestrianState& pedestrian() const { return ped_; }
  int steps() const { return steps_; }
  Outcome outcome() const { return outcome_; }
  bool done() const { return outcome_ != Outcome::Running; }

private:
  EnvSettings settings_;
  ped::VehiclePose vehicle_;
  ped::PedestrianState ped_;
  int steps_ = 0;
  Outcome outcome_ = Outcome::Running;
  bool started_ = false;
};

}  // namespace svo::env
