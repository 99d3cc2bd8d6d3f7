#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <random>
#include <vector>

#include "svo/common.hpp"
#include "svo/env/scenario.hpp"
#include "svo/pedestrian/model.hpp"

namespace svo::eval {

struct BenchmarkStats {
  std::int64_t steps = 0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
  double mean_ms = 0.0;
  double checksum = 0.0;  ///< keeps the work observable to the optimizer
};

/// Wall time of pedestrian_step over random pedestrian/vehicle states around
/// the vehicle. The clock resolution is too coarse for single calls, so time
/// is taken over blocks of `block` calls and reported per call.
inline BenchmarkStats ped_benchmark(std::int64_t steps, std::uint64_t seed = 0, int block = 100) {
  if (steps < block || block <= 0) throw Error("ped_benchmark: need at least one full block");
  const env::ScenarioConfig sc;
  ped::PedParams p;
  p.lane_width = sc.lane_width;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> x(-15.0, 15.0), y(-4.0, 4.0), vel(-2.0, 2.0),
      m(0.0, 1.0), speed(0.0, 15.0), acc(-2.943, 2.943);

  const std::int64_t blocks = steps / block;
  std::vector<ped::PedestrianState> states(static_cast<std::size_t>(block));
  std::vector<ped::VehiclePose> poses(static_cast<std::size_t>(block));
  std::vector<double> per_call;
  per_call.reserve(static_cast<std::size_t>(blocks));
  BenchmarkStats out;
  for (std::int64_t b = 0; b < blocks; ++b) {
    for (int i = 0; i < block; ++i) {
      ped::VehiclePose& v = poses[static_cast<std::size_t>(i)];
      v.x = 0.0;
      v.y = sc.lane_center_y;
      v.speed = speed(rng);
      v.accel = acc(rng);
      ped::PedestrianState& s = states[static_cast<std::size_t>(i)];
      s.position = {x(rng), y(rng)};
      s.velocity = {vel(rng), vel(rng)};
      s.motivation = m(rng);
      s.spawn = {s.position.x(), s.position.y() < 0 ? -sc.pavement_offset : sc.pavement_offset};
      s.goal = {s.position.x() + vel(rng), -s.spawn.y()};
      s.side = env::side_of(s.spawn.y());
    }
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < block; ++i) {
      const auto next = ped::pedestrian_step(states[static_cast<std::size_t>(i)],
                                             poses[static_cast<std::size_t>(i)], p, sc.dt);
      out.checksum += next.position.x();
    }
    const auto t1 = std::chrono::steady_clock::now();
    per_call.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count() / block);
  }
  out.steps = blocks * block;
  double sum = 0.0;
  for (double t : per_call) sum += t;
  out.mean_ms = sum / static_cast<double>(per_call.size());
  std::sort(per_call.begin(), per_call.end());
  auto quantile = [&](double q) {
    const auto i = static_cast<std::size_t>(q * static_cast<double>(per_call.size() - 1));
    return per_call[i];
  };
  out.median_ms = quantile(0.5);
  out.p95_ms = quantile(0.95);
  return out;
}

}  // namespace svo::eval
