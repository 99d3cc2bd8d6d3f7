#pragma once

// Sectioned key = value configuration covering every tunable of the toolkit.
// Every key is optional; unknown sections or keys are errors. The canonical
// text lists every key in a fixed order, and its digest is the config hash
// stamped on all outputs.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "svo/common.hpp"
#include "svo/env/driving_env.hpp"
#include "svo/eval/gallery.hpp"
#include "svo/eval/gapcurve.hpp"
#include "svo/eval/suite.hpp"
#include "svo/pedestrian/params.hpp"
#include "svo/rl/trainer.hpp"

namespace svo::config {

class ConfigError : public Error {
public:
  using Error::Error;
};

struct ToolkitConfig {
  ped::PedParams pedestrian;
  env::ScenarioConfig scenario;
  env::RewardParams reward;
  rl::TrainConfig train;
  eval::SuiteConfig suite;
  eval::GapCurveConfig gapcurve;
  eval::GalleryConfig gallery;
  /// "section.key" of every key the source text set; not part of the canonical text.
  std::set<std::string> explicit_keys;

  bool sets(const std::string& section_key) const { return explicit_keys.count(section_key) > 0; }

  /// Environment settings for training and evaluation.
  env::EnvSettings env_settings() const {
    env::EnvSettings s;
    s.scenario = scenario;
    s.ped = pedestrian;
    s.reward = reward;
    s.svo_rad = deg_to_rad(train.svo_deg);
    return s;
  }

  void validate() const {
    scenario.validate();
    ped::PedParams p = pedestrian;
    p.lane_width = scenario.lane_width;
    p.validate();
    train.validate();
    suite.validate();
    gapcurve.validate();
  }
};

namespace detail {

struct AlgoRef {
  nn::Algo* value;
};
struct SideRef {
  ped::Side* value;
};

using FieldRef = std::variant<double*, int*, std::uint64_t*, bool*, AlgoRef, SideRef,
                              std::vector<double>*>;

struct Field {
  const char* section;
  const char* key;
  FieldRef ref;
};

/// Every configurable field, in canonical order.
inline std::vector<Field> fields(ToolkitConfig& c) {
  ped::PedParams& p = c.pedestrian;
  env::ScenarioConfig& s = c.scenario;
  env::RewardParams& r = c.reward;
  rl::TrainConfig& t = c.train;
  return {
      {"pedestrian", "alpha", &p.alpha},
      {"pedestrian", "desired_speed", &p.desired_speed},
      {"pedestrian", "reaction_time", &p.reaction_time},
      {"pedestrian", "psi_gap", &p.psi_gap},
      {"pedestrian", "psi_accel", &p.psi_accel},
      {"pedestrian", "beta", &p.beta},
      {"pedestrian", "motivation_threshold", &p.motivation_threshold},
      {"pedestrian", "nav_gain", &p.nav_gain},
      {"pedestrian", "nav_smoothing", &p.nav_smoothing},
      {"pedestrian", "shape_gain", &p.shape.gain},
      {"pedestrian", "shape_range", &p.shape.range},
      {"pedestrian", "shape_smoothing", &p.shape.smoothing},
      {"pedestrian", "flow_gain", &p.flow.gain},
      {"pedestrian", "flow_range", &p.flow.range},
      {"pedestrian", "flow_smoothing", &p.flow.smoothing},
      {"pedestrian", "speed_gain", &p.speed_gain},
      {"pedestrian", "speed_time_factor", &p.speed_time_factor},
      {"pedestrian", "speed_lateral_fraction", &p.speed_lateral_fraction},
      {"pedestrian", "max_accel", &p.max_accel},
      {"pedestrian", "max_speed", &p.max_speed},
      {"pedestrian", "mass", &p.mass},
      {"pedestrian", "speed_blend", &p.speed_blend},

      {"scenario", "road_length", &s.road_length},
      {"scenario", "road_width", &s.road_width},
      {"scenario", "lane_width", &s.lane_width},
      {"scenario", "lane_center_y", &s.lane_center_y},
      {"scenario", "pavement_offset", &s.pavement_offset},
      {"scenario", "spawn_x_min", &s.spawn_x_min},
      {"scenario", "spawn_x_max", &s.spawn_x_max},
      {"scenario", "v0_min", &s.v0_min},
      {"scenario", "v0_max", &s.v0_max},
      {"scenario", "goal_spread", &s.goal_spread},
      {"scenario", "dt", &s.dt},
      {"scenario", "max_steps", &s.max_steps},
      {"scenario", "gravity", &s.gravity},
      {"scenario", "accel_fraction", &s.accel_fraction},
      {"scenario", "max_vehicle_speed", &s.max_vehicle_speed},
      {"scenario", "vehicle_half_length", &s.vehicle_half_length},
      {"scenario", "vehicle_half_width", &s.vehicle_half_width},
      {"scenario", "collision_margin", &s.collision_margin},

      {"reward", "collision", &r.collision},
      {"reward", "goal", &r.goal},
      {"reward", "time", &r.time},
      {"reward", "ped_gain", &r.ped_gain},
      {"reward", "proximity_midpoint", &r.proximity_midpoint},
      {"reward", "proximity_scale", &r.proximity_scale},

      {"train", "algo", AlgoRef{&t.algo}},
      {"train", "svo_deg", &t.svo_deg},
      {"train", "steps", &t.total_steps},
      {"train", "seed", &t.seed},
      {"train", "gamma", &t.gamma},
      {"train", "learning_rate", &t.learning_rate},
      {"train", "action_noise", &t.action_noise},
      {"train", "curriculum", &t.curriculum},
      {"train", "reward_scale", &t.reward_scale},
      {"train", "hidden", &t.hidden},
      {"train", "checkpoint_every", &t.checkpoint_every},
      {"train", "log_every", &t.log_every},

      {"ppo", "clip", &t.ppo.clip},
      {"ppo", "epochs", &t.ppo.epochs},
      {"ppo", "minibatch", &t.ppo.minibatch},
      {"ppo", "horizon", &t.ppo.horizon},
      {"ppo", "gae_lambda", &t.ppo.gae_lambda},
      {"ppo", "vf_coef", &t.ppo.vf_coef},
      {"ppo", "ent_coef", &t.ppo.ent_coef},
      {"ppo", "max_grad_norm", &t.ppo.max_grad_norm},
      {"ppo", "initial_log_std", &t.ppo.initial_log_std},

      {"sac", "alpha", &t.sac.alpha},
      {"sac", "batch", &t.sac.batch},
      {"sac", "tau", &t.sac.tau},
      {"sac", "learning_starts", &t.sac.learning_starts},

      {"suite", "episodes", &c.suite.episodes},
      {"suite", "seed_base", &c.suite.seed_base},
      {"suite", "record_steps", &c.suite.record_steps},

      {"gapcurve", "gaps", &c.gapcurve.gaps},
      {"gapcurve", "approach_speed", &c.gapcurve.approach_speed},
      {"gapcurve", "side", SideRef{&c.gapcurve.side}},
      {"gapcurve", "trials", &c.gapcurve.trials},
      {"gapcurve", "seed", &c.gapcurve.seed},
      {"gapcurve", "curb_departure", &c.gapcurve.curb_departure},

      {"gallery", "slow_speeds", &c.gallery.slow_speeds},
      {"gallery", "medium_speeds", &c.gallery.medium_speeds},
      {"gallery", "accelerations", &c.gallery.accelerations},
      {"gallery", "slow_start_distance", &c.gallery.slow_start_distance},
      {"gallery", "medium_time_gap", &c.gallery.medium_time_gap},
      {"gallery", "duration", &c.gallery.duration},
      {"gallery", "goal_radius", &c.gallery.goal_radius},
  };
}

inline std::string where(const Field& f) { return std::string(f.section) + "." + f.key; }

inline double parse_double(const std::string& text, const Field& f) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw ConfigError(where(f) + ": expected a number, got '" + text + "'");
  return v;
}

template <class Int>
Int parse_integer(const std::string& text, const Field& f) {
  Int v = 0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw ConfigError(where(f) + ": expected an integer, got '" + text + "'");
  return v;
}

inline void assign(const Field& f, const std::string& raw) {
  const std::string text = boost::algorithm::trim_copy(raw);
  std::visit(
      [&](auto ref) {
        using T = decltype(ref);
        if constexpr (std::is_same_v<T, double*>) {
          *ref = parse_double(text, f);
        } else if constexpr (std::is_same_v<T, int*>) {
          *ref = parse_integer<int>(text, f);
        } else if constexpr (std::is_same_v<T, std::uint64_t*>) {
          *ref = parse_integer<std::uint64_t>(text, f);
        } else if constexpr (std::is_same_v<T, bool*>) {
          if (text == "true" || text == "1") {
            *ref = true;
          } else if (text == "false" || text == "0") {
            *ref = false;
          } else {
            throw ConfigError(where(f) + ": expected true or false, got '" + text + "'");
          }
        } else if constexpr (std::is_same_v<T, AlgoRef>) {
          if (text == "ppo") {
            *ref.value = nn::Algo::Ppo;
          } else if (text == "sac") {
            *ref.value = nn::Algo::Sac;
          } else {
            throw ConfigError(where(f) + ": expected ppo or sac, got '" + text + "'");
          }
        } else if constexpr (std::is_same_v<T, SideRef>) {
          if (text == "near") {
            *ref.value = ped::Side::Near;
          } else if (text == "far") {
            *ref.value = ped::Side::Far;
          } else {
            throw ConfigError(where(f) + ": expected near or far, got '" + text + "'");
          }
        } else {
          ref->clear();
          if (text.empty()) return;
          std::vector<std::string> parts;
          boost::algorithm::split(parts, text, boost::algorithm::is_any_of(","));
          for (auto& p : parts) ref->push_back(parse_double(boost::algorithm::trim_copy(p), f));
        }
      },
      f.ref);
}

inline std::string render(const Field& f) {
  return std::visit(
      [](auto ref) -> std::string {
        using T = decltype(ref);
        if constexpr (std::is_same_v<T, double*>) {
          return format_double(*ref);
        } else if constexpr (std::is_same_v<T, int*> || std::is_same_v<T, std::uint64_t*>) {
          return std::to_string(*ref);
        } else if constexpr (std::is_same_v<T, bool*>) {
          return *ref ? "true" : "false";
        } else if constexpr (std::is_same_v<T, AlgoRef>) {
          return std::string(nn::to_string(*ref.value));
        } else if constexpr (std::is_same_v<T, SideRef>) {
          return *ref.value == ped::Side::Near ? "near" : "far";
        } else {
          std::string out;
          for (std::size_t i = 0; i < ref->size(); ++i) out += (i ? ", " : "") + format_double((*ref)[i]);
          return out;
        }
      },
      f.ref);
}

}  // namespace detail

/// Parse configuration text on top of the defaults.
inline ToolkitConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  ToolkitConfig cfg;
  const auto fields = detail::fields(cfg);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config key '" + section + "' is outside any section");
    for (const auto& [key, value] : body) {
      const auto it = std::find_if(fields.begin(), fields.end(), [&](const detail::Field& f) {
        return section == f.section && key == f.key;
      });
      if (it == fields.end()) throw ConfigError("unknown config key '" + section + "." + key + "'");
      detail::assign(*it, value.data());
      cfg.explicit_keys.insert(section + "." + key);
    }
  }
  cfg.validate();
  return cfg;
}

inline ToolkitConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config(s.str());
}

/// Every key with its value, sections in fixed order.
inline std::string canonical_text(const ToolkitConfig& cfg) {
  ToolkitConfig copy = cfg;
  std::string out;
  std::string section;
  for (const detail::Field& f : detail::fields(copy)) {
    if (section != f.section) {
      if (!section.empty()) out += '\n';
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += std::string(f.key) + " = " + detail::render(f) + '\n';
  }
  return out;
}

inline std::string config_hash(const ToolkitConfig& cfg) { return fnv1a_hex(canonical_text(cfg)); }

}  // namespace svo::config
