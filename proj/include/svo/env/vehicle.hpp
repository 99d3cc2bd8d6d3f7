#pragma once

#include <algorithm>

#include "svo/env/scenario.hpp"
#include "svo/pedestrian/model.hpp"

namespace svo::env {

/// Map a normalized action in [-1, 1] (clamped) to a longitudinal acceleration.
inline double scale_action(double u, const ScenarioConfig& cfg = {}) {
  return std::clamp(u, -1.0, 1.0) * cfg.max_accel();
}

/// Semi-implicit Euler on the lane axis. The vehicle never reverses and its
/// speed is capped at `max_vehicle_speed`; lateral position is held.
inline ped::VehiclePose step_vehicle(const ped::VehiclePose& pose, double accel, double dt,
                                     double max_speed = 20.0) {
  ped::VehiclePose next = pose;
  next.accel = accel;
  next.speed = std::clamp(pose.speed + accel * dt, 0.0, max_speed);
  next.x = pose.x + next.speed * dt;
  return next;
}

}  // namespace svo::env
