#pragma once

#include <cstdint>
#include <ostream>
#include <string>

#include "json.hpp"

#include "svo/common.hpp"
#include "svo/env/driving_env.hpp"

namespace svo::env {

/// Header record of an episode trace file.
inline nlohmann::ordered_json trace_header(std::uint64_t seed, const std::string& config_hash,
                                           double svo_deg, PedVariant variant) {
  nlohmann::ordered_json j;
  j["type"] = "header";
  j["toolkit"] = kToolkitVersion;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["svo_deg"] = svo_deg;
  j["variant"] = std::string(to_string(variant));
  return j;
}

/// One step record: {t, x_v, v_v, a_cmd, x_p, y_p, vx_p, vy_p, M, r_car, r_p, r_total, event}.
inline nlohmann::ordered_json trace_record(const Transition& tr) {
  const auto& p = tr.info.pedestrian;
  nlohmann::ordered_json j;
  j["t"] = tr.info.time;
  j["x_v"] = tr.info.vehicle.x;
  j["v_v"] = tr.info.vehicle.speed;
  j["a_cmd"] = tr.info.accel_cmd;
  j["x_p"] = p.position.x();
  j["y_p"] = p.position.y();
  j["vx_p"] = p.velocity.x();
  j["vy_p"] = p.velocity.y();
  j["M"] = p.motivation;
  j["r_car"] = tr.reward.car;
  j["r_p"] = tr.reward.ped;
  j["r_total"] = tr.reward.total;
  j["event"] = std::string(to_string(tr.outcome));
  return j;
}

class TraceWriter {
public:
  explicit TraceWriter(std::ostream& out) : out_(out) {}

  void header(std::uint64_t seed, const std::string& config_hash, double svo_deg,
              PedVariant variant) {
    out_ << trace_header(seed, config_hash, svo_deg, variant).dump() << '\n';
  }
  void record(const Transition& tr) { out_ << trace_record(tr).dump() << '\n'; }
  void raw(const nlohmann::ordered_json& j) { out_ << j.dump() << '\n'; }

private:
  std::ostream& out_;
};

}  // namespace svo::env
