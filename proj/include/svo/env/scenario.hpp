#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "svo/common.hpp"
#include "svo/pedestrian/model.hpp"

namespace svo::env {

/// Road geometry, spawn distributions and integration constants.
///
/// The road runs along +x from 0 to `road_length`. The ego vehicle drives in
/// the bottom lane (centre `lane_center_y`); pavements sit at +/- `pavement_offset`.
struct ScenarioConfig {
  double road_length = 60.0;
  double road_width = 6.0;
  double lane_width = 3.0;
  double lane_center_y = -1.5;
  double pavement_offset = 3.5;
  double spawn_x_min = 30.0;
  double spawn_x_max = 55.0;
  double v0_min = 0.0;
  double v0_max = 15.0;
  double goal_spread = 2.0;  ///< std of the goal's longitudinal offset [m]
  double dt = 0.1;
  int max_steps = 500;
  double gravity = 9.81;
  double accel_fraction = 0.3;  ///< action range is +/- accel_fraction * gravity
  double max_vehicle_speed = 20.0;
  double vehicle_half_length = 2.4;
  double vehicle_half_width = 0.9;
  double collision_margin = 0.3;

  double max_accel() const { return accel_fraction * gravity; }

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw Error(std::string("invalid scenario parameter: ") + what);
    };
    require(road_length > 0.0 && road_width > 0.0 && lane_width > 0.0, "road geometry");
    require(dt > 0.0, "dt > 0");
    require(max_steps > 0, "max_steps > 0");
    require(v0_min >= 0.0 && v0_max > v0_min, "v0 range");
    require(spawn_x_max > spawn_x_min, "spawn range");
    require(goal_spread >= 0.0, "goal_spread >= 0");
    require(max_vehicle_speed > 0.0, "max_vehicle_speed > 0");
    require(vehicle_half_length > 0.0 && vehicle_half_width > 0.0, "vehicle size");
    require(collision_margin >= 0.0, "collision_margin >= 0");
  }
};

struct Scenario {
  ped::VehiclePose vehicle;
  ped::PedestrianState pedestrian;
};

/// The vehicle lane is the bottom one, so the bottom pavement is the near side.
inline ped::Side side_of(double pavement_y) {
  return pavement_y < 0.0 ? ped::Side::Near : ped::Side::Far;
}

/// Scenario with an explicit layout; used by tests, the gallery and the suites.
inline Scenario make_scenario(const ScenarioConfig& cfg, double v0, double ped_x, bool spawn_bottom,
                              double goal_x) {
  Scenario s;
  s.vehicle.x = 0.0;
  s.vehicle.y = cfg.lane_center_y;
  s.vehicle.speed = v0;
  s.vehicle.accel = 0.0;
  s.vehicle.half_length = cfg.vehicle_half_length;
  s.vehicle.half_width = cfg.vehicle_half_width;

  const double y0 = spawn_bottom ? -cfg.pavement_offset : cfg.pavement_offset;
  s.pedestrian.position = {ped_x, y0};
  s.pedestrian.spawn = s.pedestrian.position;
  s.pedestrian.goal = {goal_x, -y0};
  s.pedestrian.velocity = Vec2::Zero();
  s.pedestrian.motivation = 0.0;
  s.pedestrian.side = side_of(y0);
  return s;
}

/// Draw a scenario. `force_bottom` pins the spawn pavement (used by the test
/// suites to balance crossing directions); otherwise it is a fair coin.
inline Scenario sample_scenario(std::uint64_t seed, const ScenarioConfig& cfg,
                                std::optional<bool> force_bottom = std::nullopt) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> v0_dist(cfg.v0_min, cfg.v0_max);
  std::uniform_real_distribution<double> x_dist(cfg.spawn_x_min, cfg.spawn_x_max);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> offset(0.0, 1.0);

  double v0 = v0_dist(rng);
  // keep the open interval: U(a,b) can return a
  while (v0 <= cfg.v0_min) v0 = v0_dist(rng);
  const double ped_x = x_dist(rng);
  const bool coin_bottom = coin(rng);
  const double goal_x = ped_x + cfg.goal_spread * offset(rng);
  return make_scenario(cfg, v0, ped_x, force_bottom.value_or(coin_bottom), goal_x);
}

}  // namespace svo::env
