#pragma once

#include <algorithm>
#include <cmath>

#include "svo/common.hpp"
#include "svo/pedestrian/model.hpp"

namespace svo::env {

/// Collision and goal rewards are paid once per event. The time penalty and
/// the pedestrian term are rates, paid in proportion to the step length.
struct RewardParams {
  double collision = -100.0;
  double goal = 40.0;
  double time = -4.0;     ///< time penalty per second of driving
  double ped_gain = 2.0;  ///< k_p: pedestrian utility per second at unit speed
  double proximity_midpoint = 4.0;  ///< [m]
  double proximity_scale = 1.0;     ///< [m]
};

struct RewardBreakdown {
  double car = 0.0;
  double ped = 0.0;
  double total = 0.0;
  bool collision = false;
  bool goal = false;
};

/// Logistic proximity weight; vanishes as the bumper gap goes to zero.
inline double proximity_weight(double gap, const RewardParams& r) {
  return logistic((gap - r.proximity_midpoint) / r.proximity_scale);
}

/// Utility rate of the pedestrian: crossing speed toward the goal, paid only
/// while they want to cross and are ahead of the front bumper.
inline double pedestrian_reward(const ped::PedestrianState& ped, const ped::VehiclePose& pose,
                                double motivation_threshold, const RewardParams& r) {
  const Vec2 local = pose.to_local(ped.position);
  const double gap = local.x() - pose.half_length;
  if (ped.motivation <= motivation_threshold || gap <= 0.0) return 0.0;
  const Vec2 to_goal = ped.goal - ped.position;
  const double dist = to_goal.norm();
  if (dist == 0.0) return 0.0;
  return r.ped_gain * proximity_weight(gap, r) * ped.velocity.dot(to_goal / dist);
}

/// Combine ego and pedestrian utilities over one step of length `dt` with the
/// social value orientation angle `svo_rad` (0 egoistic, pi/2 altruistic).
inline RewardBreakdown compose_reward(bool collision, bool goal, double ped_rate, double svo_rad,
                                      double dt, const RewardParams& r) {
  RewardBreakdown out;
  out.collision = collision;
  out.goal = goal;
  out.car = (collision ? r.collision : 0.0) + (goal ? r.goal : 0.0) + r.time * dt;
  out.ped = ped_rate * dt;
  out.total = std::cos(svo_rad) * out.car + std::sin(svo_rad) * out.ped;
  return out;
}

}  // namespace svo::env
