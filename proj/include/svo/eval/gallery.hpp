#pragma once

// Scripted pedestrian scenarios with a vehicle on a fixed speed profile, for
// trajectory plots of the pedestrian model on its own.

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "svo/common.hpp"
#include "svo/env/scenario.hpp"
#include "svo/env/vehicle.hpp"
#include "svo/pedestrian/model.hpp"

namespace svo::eval {

struct GalleryScenario {
  std::string name;
  std::string kind;  ///< fixed_lateral, fixed_frontal, slow, medium
  double speed = 0.0;
  double accel = 0.0;
  bool bottom = true;  ///< pedestrian starts on the bottom (near) pavement
  double ped_x = 30.0;
  double vehicle_x = 0.0;
};

struct GalleryConfig {
  std::vector<double> slow_speeds = {1.0, 3.0, 5.0};
  std::vector<double> medium_speeds = {10.0, 15.0};
  std::vector<double> accelerations = {-1.5, 0.0, 1.5};
  double slow_start_distance = 12.0;  ///< initial bumper distance, slow class [m]
  double medium_time_gap = 2.0;      ///< initial time gap, medium class [s]
  double duration = 30.0;            ///< simulated time limit [s]
  double goal_radius = 0.2;          ///< [m]
};

inline std::vector<GalleryScenario> gallery_scenarios(const GalleryConfig& cfg,
                                                      const env::ScenarioConfig& sc) {
  std::vector<GalleryScenario> out;
  auto tag = [](double x) {
    std::string s = format_double(x);
    for (char& c : s)
      if (c == '.') c = 'p';
    return s;
  };
  for (bool bottom : {true, false}) {
    const std::string dir = bottom ? "bottom_up" : "top_down";
    // Parked vehicle straddling the crossing line.
    out.push_back({"fixed_lateral_" + dir, "fixed_lateral", 0.0, 0.0, bottom, 30.0, 30.0});
    // Parked vehicle whose front faces the crossing line from just upstream.
    out.push_back({"fixed_frontal_" + dir, "fixed_frontal", 0.0, 0.0, bottom, 30.0,
                   30.0 - sc.vehicle_half_length - 1.0});
    // Moving vehicles start with the bumper a fixed distance (slow) or a
    // fixed time gap (medium) short of the crossing line.
    for (double v : cfg.slow_speeds)
      out.push_back({"slow_v" + tag(v) + "_" + dir, "slow", v, 0.0, bottom, 30.0,
                     30.0 - sc.vehicle_half_length - cfg.slow_start_distance});
    for (double v : cfg.medium_speeds)
      for (double a : cfg.accelerations)
        out.push_back({"medium_v" + tag(v) + "_a" + tag(a) + "_" + dir, "medium", v, a, bottom, 40.0,
                       40.0 - sc.vehicle_half_length - cfg.medium_time_gap * v});
  }
  return out;
}

struct GalleryResult {
  GalleryScenario scenario;
  bool reached_goal = false;
  double time = 0.0;
  double min_motivation_gap = 0.0;  ///< min over the run of M - theta_f
  bool crossed_ahead = false;       ///< crossed the lane centre ahead of the bumper
  std::vector<nlohmann::ordered_json> steps;
};

/// Run one scenario: the vehicle follows its constant acceleration (speed
/// clamped to [0, max]) and the pedestrian walks from pavement to pavement.
inline GalleryResult run_gallery_scenario(const GalleryScenario& g, const GalleryConfig& cfg,
                                          const env::ScenarioConfig& sc, const ped::PedParams& params) {
  ped::PedParams p = params;
  p.lane_width = sc.lane_width;
  env::Scenario s = env::make_scenario(sc, g.speed, g.ped_x, g.bottom, g.ped_x);
  ped::VehiclePose v = s.vehicle;
  v.x = g.vehicle_x;
  v.accel = g.accel;
  ped::PedestrianState ped = s.pedestrian;

  GalleryResult r;
  r.scenario = g;
  r.min_motivation_gap = ped.motivation - p.motivation_threshold;
  const int max_steps = static_cast<int>(std::lround(cfg.duration / sc.dt));
  for (int step = 1; step <= max_steps; ++step) {
    v = env::step_vehicle(v, g.accel, sc.dt, sc.max_vehicle_speed);
    ped::StepTrace st;
    const double y_before = ped.position.y();
    ped = ped::pedestrian_step(ped, v, p, sc.dt, {}, &st);
    r.min_motivation_gap = std::min(r.min_motivation_gap, ped.motivation - p.motivation_threshold);
    if ((y_before - sc.lane_center_y) * (ped.position.y() - sc.lane_center_y) <= 0.0 &&
        y_before != ped.position.y() && ped.position.x() > v.x + v.half_length)
      r.crossed_ahead = true;
    nlohmann::ordered_json j;
    j["t"] = step * sc.dt;
    j["x_v"] = v.x;
    j["v_v"] = v.speed;
    j["a_v"] = v.accel;
    j["x_p"] = ped.position.x();
    j["y_p"] = ped.position.y();
    j["vx_p"] = ped.velocity.x();
    j["vy_p"] = ped.velocity.y();
    j["M"] = ped.motivation;
    j["f_nav_x"] = st.nav.x();
    j["f_nav_y"] = st.nav.y();
    j["f_veh_x"] = st.vehicle.x();
    j["f_veh_y"] = st.vehicle.y();
    r.steps.push_back(std::move(j));
    r.time = step * sc.dt;
    if ((ped.position - ped.goal).norm() < cfg.goal_radius) {
      r.reached_goal = true;
      break;
    }
  }
  return r;
}

inline void write_gallery_trace(std::ostream& out, const GalleryResult& r, const std::string& config_hash) {
  nlohmann::ordered_json h;
  h["type"] = "header";
  h["toolkit"] = kToolkitVersion;
  h["config_hash"] = config_hash;
  h["seed"] = 0;
  h["scenario"] = r.scenario.name;
  h["kind"] = r.scenario.kind;
  h["vehicle_speed"] = r.scenario.speed;
  h["vehicle_accel"] = r.scenario.accel;
  h["direction"] = r.scenario.bottom ? "bottom_up" : "top_down";
  h["reached_goal"] = r.reached_goal;
  h["time"] = r.time;
  out << h.dump() << '\n';
  for (const auto& s : r.steps) out << s.dump() << '\n';
}

}  // namespace svo::eval
