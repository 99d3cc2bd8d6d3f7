// One crossing episode printed as a timeline. Without arguments the car
// holds its initial speed; pass a checkpoint to let a trained policy drive.
//
//   crossing_demo [checkpoint] [scenario seed]

#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "svo/env/driving_env.hpp"
#include "svo/nn/checkpoint.hpp"
#include "svo/rl/policy.hpp"

using namespace svo;

int main(int argc, char** argv) {
  try {
    std::optional<rl::Policy> policy;
    env::EnvSettings settings;
    if (argc > 1) {
      const nn::Checkpoint c = nn::load_checkpoint(argv[1]);
      policy = rl::Policy::from_checkpoint(c);
      settings.svo_rad = deg_to_rad(c.svo_deg);
      std::cout << "policy trained at svo " << c.svo_deg << " deg\n";
    }
    const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 3;

    env::DrivingEnv environment(settings);
    env::Observation obs = environment.reset(seed);
    std::cout << std::fixed << std::setprecision(2) << "scenario " << seed << ": pedestrian at ("
              << environment.pedestrian().position.x() << ", " << environment.pedestrian().position.y()
              << "), car at " << environment.vehicle().x << " m doing " << environment.vehicle().speed << " m/s\n\n"
              << "     t    x_car    v_car    x_ped    y_ped      M   reward\n";
    env::Transition tr;
    do {
      tr = environment.step(policy ? policy->act(obs) : 0.0);
      obs = tr.obs;
      if (tr.info.step % 5 == 0 || tr.done) {
        std::cout << std::setw(6) << tr.info.time << std::setw(9) << tr.info.vehicle.x << std::setw(9)
                  << tr.info.vehicle.speed << std::setw(9) << tr.info.pedestrian.position.x() << std::setw(9)
                  << tr.info.pedestrian.position.y() << std::setw(7) << tr.info.motivation << std::setw(9)
                  << tr.reward.total << '\n';
      }
    } while (!tr.done);
    std::cout << "\nepisode ended with " << env::to_string(tr.outcome) << " after " << tr.info.time << " s\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
