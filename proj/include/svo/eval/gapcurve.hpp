#pragma once

// Gap-acceptance curve of the pedestrian model: a vehicle approaches at
// constant speed and we record whether the pedestrian starts crossing before
// the front bumper reaches them.

#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "svo/common.hpp"
#include "svo/env/scenario.hpp"
#include "svo/pedestrian/model.hpp"

namespace svo::eval {

struct GapCurveConfig {
  std::vector<double> gaps;  ///< time gaps [s]; empty means 0.5 to 6.0 in 0.25 steps
  double approach_speed = 10.0;
  ped::Side side = ped::Side::Near;
  int trials = 100;
  std::uint64_t seed = 0;
  double curb_departure = 0.1;  ///< lateral distance that counts as leaving the curb [m]

  std::vector<double> gap_grid() const {
    if (!gaps.empty()) return gaps;
    std::vector<double> g;
    for (int i = 0; i <= 22; ++i) g.push_back(0.5 + 0.25 * i);
    return g;
  }

  void validate() const {
    if (approach_speed <= 0.0) throw Error("gap curve: approach_speed must be positive");
    if (trials <= 0) throw Error("gap curve: trials must be positive");
    for (double g : gap_grid())
      if (!(g > 0.0)) throw Error("gap curve: gaps must be positive");
  }
};

struct GapPoint {
  double gap = 0.0;
  double p_cross = 0.0;
};

struct CrossingResult {
  bool crossed = false;
  int motivated_step = -1;   ///< first step with M above threshold
  int initiation_step = -1;  ///< first step with M above threshold and curb departure
};

/// One trial: the bumper starts `gap * v` (shifted back by `phase` of one
/// step's travel) away from the pedestrian's longitudinal position.
inline CrossingResult gap_trial(double gap, double phase, const GapCurveConfig& cfg,
                                const env::ScenarioConfig& scenario, const ped::PedParams& params) {
  ped::PedParams p = params;
  p.lane_width = scenario.lane_width;
  const double ped_x = 0.0;
  const double y0 = cfg.side == ped::Side::Near ? -scenario.pavement_offset : scenario.pavement_offset;

  ped::PedestrianState s;
  s.position = {ped_x, y0};
  s.spawn = s.position;
  s.goal = {ped_x, -y0};
  s.side = cfg.side;

  ped::VehiclePose v;
  v.half_length = scenario.vehicle_half_length;
  v.half_width = scenario.vehicle_half_width;
  v.y = scenario.lane_center_y;
  v.speed = cfg.approach_speed;
  const double bumper_distance = gap * cfg.approach_speed + phase * cfg.approach_speed * scenario.dt;
  v.x = ped_x - v.half_length - bumper_distance;

  CrossingResult r;
  for (int step = 1;; ++step) {
    v = ped::VehiclePose{v.x + v.speed * scenario.dt, v.y, v.speed, 0.0, v.half_length, v.half_width};
    // The bumper has reached the pedestrian: the gap was not used.
    if (v.x + v.half_length >= s.position.x()) return r;
    s = ped::pedestrian_step(s, v, p, scenario.dt);
    if (s.motivation <= p.motivation_threshold) continue;
    if (r.motivated_step < 0) r.motivated_step = step;
    if (std::abs(s.position.y() - s.spawn.y()) >= cfg.curb_departure) {
      r.crossed = true;
      r.initiation_step = step;
      return r;
    }
  }
}

/// Crossing probability per gap. Trials differ in the sub-step phase of the
/// vehicle's start, drawn uniformly in [0, 1) of one step's travel.
inline std::vector<GapPoint> gap_acceptance_curve(const GapCurveConfig& cfg,
                                                  const env::ScenarioConfig& scenario = {},
                                                  const ped::PedParams& params = {}) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> phase(0.0, 1.0);
  std::vector<GapPoint> out;
  for (double gap : cfg.gap_grid()) {
    int crossed = 0;
    for (int t = 0; t < cfg.trials; ++t) crossed += gap_trial(gap, phase(rng), cfg, scenario, params).crossed;
    out.push_back({gap, static_cast<double>(crossed) / cfg.trials});
  }
  return out;
}

inline void write_gap_curve_csv(std::ostream& out, const std::vector<GapPoint>& curve,
                                const std::string& config_hash, std::uint64_t seed) {
  out << "# toolkit " << kToolkitVersion << " config_hash " << config_hash << " seed " << seed << '\n';
  out << "gap,p_cross\n";
  for (const GapPoint& g : curve) out << format_double(g.gap) << ',' << format_double(g.p_cross) << '\n';
}

}  // namespace svo::eval
