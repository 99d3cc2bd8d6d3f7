#pragma once

#include "svo/common.hpp"

namespace svo::ped {

/// Parameters of a smoothed linear-decay field: gain A, range d0, smoothing sigma.
struct DecayField {
  double gain;
  double range;
  double smoothing;
};

/// Parameters of the situational-aware social force pedestrian.
///
/// Defaults are the calibrated set used throughout the toolkit. The speed
/// field's lateral width is `speed_lateral_fraction * lane_width`.
struct PedParams {
  // Motivation
  double alpha = 0.8;              ///< first-order filter coefficient
  double desired_speed = 2.0;      ///< v_d [m/s]
  double reaction_time = 0.05;     ///< t_r [s]
  double psi_gap = 3.0;            ///< weight of the advantage time
  double psi_accel = -0.3;         ///< weight of the vehicle acceleration
  double beta = 2.2;               ///< logistic offset
  double motivation_threshold = 0.3;

  // Navigation
  double nav_gain = 200.0;
  double nav_smoothing = 0.09;  ///< regularizer under the square root [m^2]

  DecayField shape{800.0, 4.0, 0.1};
  DecayField flow{600.0, 6.0, 0.1};

  // Speed field
  double speed_gain = 400.0;
  double speed_time_factor = 1.0;  ///< dT [s]
  double speed_lateral_fraction = 0.2;

  // Constraints
  double max_accel = 3.0;
  double max_speed = 4.0;
  double mass = 75.0;
  double speed_blend = 0.1;  ///< k_v [s^2/m^2]

  double lane_width = 3.0;

  double speed_sigma_y() const { return speed_lateral_fraction * lane_width; }

  /// Throws svo::Error when a parameter is outside its admissible range.
  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw Error(std::string("invalid pedestrian parameter: ") + what);
    };
    require(alpha >= 0.0 && alpha < 1.0, "alpha must lie in [0,1)");
    require(motivation_threshold > 0.0 && motivation_threshold < 1.0,
            "motivation_threshold must lie in (0,1)");
    require(desired_speed > 0.0, "desired_speed > 0");
    require(reaction_time >= 0.0, "reaction_time >= 0");
    require(nav_gain > 0.0 && nav_smoothing > 0.0, "navigation gain/smoothing > 0");
    for (const DecayField* f : {&shape, &flow}) {
      require(f->gain > 0.0 && f->range > 0.0 && f->smoothing >= 0.0, "decay field");
    }
    require(speed_gain > 0.0 && speed_time_factor > 0.0 && speed_lateral_fraction > 0.0,
            "speed field");
    require(max_accel > 0.0 && max_speed > 0.0 && mass > 0.0 && speed_blend > 0.0,
            "constraints");
    require(lane_width > 0.0, "lane_width > 0");
  }
};

}  // namespace svo::ped
