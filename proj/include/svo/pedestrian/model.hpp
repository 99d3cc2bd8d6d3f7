#pragma once

// Situational-aware social force pedestrian: a gap-acceptance motivation
// filter gating a goal-seeking force, plus three vehicle-induced fields.
//
// All functions are pure; the vehicle frame is axis aligned with the world
// (the vehicle drives along +x), so local coordinates are a translation.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "svo/common.hpp"
#include "svo/pedestrian/params.hpp"

namespace svo::ped {

/// Time-to-collision cap used for a stopped or already passed vehicle [s].
inline constexpr double kTtcCap = 100.0;
/// Vehicle speeds at or below this are treated as stopped [m/s].
inline constexpr double kStoppedSpeed = 0.01;

/// Which pavement the pedestrian starts from, relative to the vehicle's lane.
enum class Side { Near, Far };

struct PedestrianState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double motivation = 0.0;
  Vec2 spawn = Vec2::Zero();
  Vec2 goal = Vec2::Zero();
  Side side = Side::Near;
};

struct VehiclePose {
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  double half_length = 2.4;
  double half_width = 0.9;

  Vec2 center() const { return {x, y}; }
  Vec2 to_local(const Vec2& world) const { return world - center(); }
};

/// How the pedestrian couples to the vehicle.
struct Behavior {
  bool always_crossing = false;  ///< motivation pinned to 1
  bool vehicle_forces = true;    ///< shape/flow/speed fields active
};

// ---------------------------------------------------------------------------
// Scalar building blocks

inline double linear_decay(double d, double gain, double range, double smoothing) {
  const double gap = range - d;
  return gain / (2.0 * range) * (gap + std::sqrt(gap * gap + smoothing));
}

inline double linear_decay(double d, const DecayField& f) {
  return linear_decay(d, f.gain, f.range, f.smoothing);
}

inline double elliptical_distance(const Vec2& p_local, double half_length, double half_width) {
  const double u = p_local.x() / half_length;
  const double v = p_local.y() / half_width;
  return std::sqrt(u * u + v * v);
}

/// Longitudinal gap from the front bumper to the pedestrian. Infinite when the
/// pedestrian is behind the bumper plane, i.e. the vehicle has already passed.
inline double bumper_gap(const Vec2& p_local, const VehiclePose& pose) {
  const double ahead = p_local.x() - pose.half_length;
  return ahead < 0.0 ? std::numeric_limits<double>::infinity() : ahead;
}

inline double time_to_collision(double gap, double vehicle_speed) {
  if (vehicle_speed <= kStoppedSpeed) return kTtcCap;
  return std::min(gap / vehicle_speed, kTtcCap);
}

/// Crossing-lane multiplier: one lane from the near pavement, two from the far one.
inline int lanes_to_cross(Side side) { return side == Side::Near ? 1 : 2; }

inline double advantage_time(double gap, double vehicle_speed, int lanes, double lane_width,
                             const PedParams& p) {
  return time_to_collision(gap, vehicle_speed) - lanes * lane_width / p.desired_speed -
         p.reaction_time;
}

inline double motivation_innovation(double t_adv, double vehicle_accel, const PedParams& p) {
  return logistic(p.psi_gap * t_adv + p.psi_accel * vehicle_accel - p.beta);
}

inline double motivation_update(double previous, double innovation, const PedParams& p) {
  return p.alpha * previous + (1.0 - p.alpha) * innovation;
}

inline double velocity_blend(double vehicle_speed, const PedParams& p) {
  return 1.0 / (1.0 + p.speed_blend * vehicle_speed * vehicle_speed);
}

// ---------------------------------------------------------------------------
// Forces

inline Vec2 desired_velocity(const PedestrianState& s, const PedParams& p) {
  const Vec2 to_goal = s.goal - s.position;
  return p.desired_speed * to_goal / std::sqrt(to_goal.squaredNorm() + p.nav_smoothing);
}

/// Relaxation toward the desired velocity, weighted by motivation and gated
/// off at or below the motivation threshold.
inline Vec2 navigational_force(const PedestrianState& s, const PedParams& p) {
  if (s.motivation <= p.motivation_threshold) return Vec2::Zero();
  return s.motivation * p.nav_gain * (desired_velocity(s, p) - s.velocity);
}

inline Vec2 shape_force(const Vec2& p_local, const VehiclePose& pose, const PedParams& p) {
  const double a = pose.half_length;
  const double b = pose.half_width;
  const Vec2 normal(2.0 * p_local.x() / (a * a), 2.0 * p_local.y() / (b * b));
  const double n = normal.norm();
  if (n == 0.0) return Vec2::Zero();
  return linear_decay(elliptical_distance(p_local, a, b), p.shape) / n * normal;
}

namespace detail {

// Arc length of the ellipse (a cos t, b sin t) for t in [t0, t1], composite
// 5-point Gauss-Legendre on 8 panels.
inline double ellipse_arc(double a, double b, double t0, double t1) {
  static constexpr std::array<double, 5> kNodes = {
      0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
  static constexpr std::array<double, 5> kWeights = {
      0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
      0.2369268850561891};
  constexpr int kPanels = 8;
  const double h = (t1 - t0) / kPanels;
  double sum = 0.0;
  for (int i = 0; i < kPanels; ++i) {
    const double mid = t0 + (i + 0.5) * h;
    for (std::size_t k = 0; k < kNodes.size(); ++k) {
      const double t = mid + 0.5 * h * kNodes[k];
      const double st = std::sin(t);
      const double ct = std::cos(t);
      sum += kWeights[k] * std::sqrt(a * a * st * st + b * b * ct * ct);
    }
  }
  return 0.5 * h * sum;
}

}  // namespace detail

/// Direction of travel around the vehicle: +1 counterclockwise, -1 clockwise.
/// Picks the shorter arc along the vehicle ellipse between the angular
/// positions of pedestrian and goal; ties go counterclockwise.
inline double flow_orientation(const Vec2& p_local, const Vec2& g_local, const VehiclePose& pose) {
  const double a = pose.half_length;
  const double b = pose.half_width;
  const double tp = std::atan2(p_local.y() / b, p_local.x() / a);
  double sweep = std::atan2(g_local.y() / b, g_local.x() / a) - tp;
  sweep = std::fmod(sweep, 2.0 * kPi);
  if (sweep < 0.0) sweep += 2.0 * kPi;
  const double ccw = detail::ellipse_arc(a, b, tp, tp + sweep);
  const double cw = detail::ellipse_arc(a, b, tp + sweep, tp + 2.0 * kPi);
  return ccw <= cw ? 1.0 : -1.0;
}

/// Pedestrian progress along the spawn-to-goal direction [m].
inline double progress(const Vec2& p, const Vec2& spawn, const Vec2& goal) {
  const Vec2 route = goal - spawn;
  return (p - spawn).dot(route) / route.norm();
}

/// |k_f|: one before departure, fading linearly to zero at the goal.
inline double flow_weight(const Vec2& p, const Vec2& spawn, const Vec2& goal) {
  const double length = (goal - spawn).norm();
  const double prog = progress(p, spawn, goal);
  if (prog < 0.0) return 1.0;
  if (prog >= length) return 0.0;
  return (length - prog) / length;
}

inline Vec2 flow_force(const Vec2& p_world, const Vec2& spawn, const Vec2& goal,
                       const VehiclePose& pose, const PedParams& p) {
  const Vec2 local = pose.to_local(p_world);
  const double a = pose.half_length;
  const double b = pose.half_width;
  const double x = local.x();
  const double y = local.y();
  const Vec2 tangent(-2.0 * y * y * y / b, 2.0 * x * x * x / a);
  const double n = tangent.norm();
  const double weight = flow_weight(p_world, spawn, goal);
  if (n == 0.0 || weight == 0.0) return Vec2::Zero();
  const double k = weight * flow_orientation(local, pose.to_local(goal), pose);
  return k * linear_decay(elliptical_distance(local, a, b), p.flow) / n * tangent;
}

/// Lateral push out of the corridor ahead of a moving vehicle. The
/// longitudinal exponent is clamped at zero, so beside and behind the front
/// bumper the field holds its bumper-plane value.
inline Vec2 speed_force(const Vec2& p_local, const VehiclePose& pose, const PedParams& p,
                        double lane_width) {
  if (pose.speed <= kStoppedSpeed) return Vec2::Zero();
  const double x = p_local.x();
  const double y = p_local.y();
  const double sigma_y = p.speed_lateral_fraction * lane_width;
  const double longitudinal =
      std::min(0.0, -(x - pose.half_length) / (pose.speed * p.speed_time_factor));
  const double magnitude =
      p.speed_gain * sgn(y) * std::exp(longitudinal) * std::exp(-y * y / (2.0 * sigma_y * sigma_y));
  return {0.0, magnitude};
}

struct VehicleForces {
  Vec2 shape = Vec2::Zero();
  Vec2 flow = Vec2::Zero();
  Vec2 speed = Vec2::Zero();
  double blend = 1.0;

  Vec2 total() const { return shape + blend * flow + (1.0 - blend) * speed; }
};

inline VehicleForces vehicle_force_terms(const Vec2& p_world, const PedestrianState& s,
                                         const VehiclePose& pose, const PedParams& p) {
  const Vec2 local = pose.to_local(p_world);
  VehicleForces f;
  f.shape = shape_force(local, pose, p);
  f.flow = flow_force(p_world, s.spawn, s.goal, pose, p);
  f.speed = speed_force(local, pose, p, p.lane_width);
  f.blend = velocity_blend(pose.speed, p);
  return f;
}

inline Vec2 vehicle_force(const Vec2& p_world, const PedestrianState& s, const VehiclePose& pose,
                          const PedParams& p) {
  return vehicle_force_terms(p_world, s, pose, p).total();
}

// ---------------------------------------------------------------------------
// Integration

/// Innovation for the current configuration of pedestrian and vehicle.
inline double innovation_for(const PedestrianState& s, const VehiclePose& pose,
                             const PedParams& p) {
  const double gap = bumper_gap(pose.to_local(s.position), pose);
  const double t_adv =
      advantage_time(gap, pose.speed, lanes_to_cross(s.side), p.lane_width, p);
  return motivation_innovation(t_adv, pose.accel, p);
}

/// Diagnostics of one integration step.
struct StepTrace {
  double innovation = 0.0;
  Vec2 nav = Vec2::Zero();
  Vec2 vehicle = Vec2::Zero();
  Vec2 accel = Vec2::Zero();
};

/// Advance the pedestrian by one step: motivation, gated navigation, vehicle
/// fields, clamped acceleration, then semi-implicit Euler.
inline PedestrianState pedestrian_step(const PedestrianState& s, const VehiclePose& pose,
                                       const PedParams& p, double dt, const Behavior& behavior = {},
                                       StepTrace* trace = nullptr) {
  PedestrianState next = s;
  double innovation = 1.0;
  if (behavior.always_crossing) {
    next.motivation = 1.0;
  } else {
    innovation = innovation_for(s, pose, p);
    next.motivation = motivation_update(s.motivation, innovation, p);
  }

  const Vec2 nav = navigational_force(next, p);
  const Vec2 veh = behavior.vehicle_forces ? vehicle_force(s.position, s, pose, p) : Vec2::Zero();

  Vec2 accel = (nav + veh) / p.mass;
  const double a_norm = accel.norm();
  if (a_norm > p.max_accel) accel *= p.max_accel / a_norm;

  next.velocity = s.velocity + accel * dt;
  const double v_norm = next.velocity.norm();
  if (v_norm > p.max_speed) next.velocity *= p.max_speed / v_norm;
  next.position = s.position + next.velocity * dt;

  if (trace) {
    trace->innovation = innovation;
    trace->nav = nav;
    trace->vehicle = veh;
    trace->accel = accel;
  }
  return next;
}

}  // namespace svo::ped
