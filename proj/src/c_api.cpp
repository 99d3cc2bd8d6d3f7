#include "svo/c_api.h"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <optional>
#include <string>

#include "svo/config/config.hpp"
#include "svo/env/driving_env.hpp"

namespace {

using namespace svo;

struct Slot {
  std::unique_ptr<env::DrivingEnv> env;  ///< null once closed
  std::optional<std::uint64_t> seed;
};

/// Handles are never reused, so a closed id keeps reporting SVO_ERR_CLOSED.
struct Registry {
  std::mutex mutex;
  std::map<svo_env_handle, Slot> slots;
  svo_env_handle next = 1;
};

Registry& registry() {
  static Registry r;
  return r;
}

thread_local std::string last_error;

int fail(int code, std::string message) {
  last_error = std::move(message);
  return code;
}

/// Resolve a live handle. The registry lock is released before the caller
/// touches the environment; concurrent use of one handle is not supported.
int lookup(svo_env_handle h, Slot*& out) {
  Registry& r = registry();
  std::lock_guard lock(r.mutex);
  const auto it = r.slots.find(h);
  if (it == r.slots.end()) return fail(SVO_ERR_UNKNOWN_HANDLE, "unknown handle " + std::to_string(h));
  if (!it->second.env) return fail(SVO_ERR_CLOSED, "handle " + std::to_string(h) + " is closed");
  out = &it->second;
  return SVO_OK;
}

void write_obs(const env::Observation& o, double* out) {
  out[0] = o.v_ego;
  out[1] = o.p_rel.x();
  out[2] = o.p_rel.y();
  out[3] = o.v_ped.x();
  out[4] = o.v_ped.y();
}

int outcome_code(env::Outcome o) {
  switch (o) {
    case env::Outcome::Running: return SVO_OUTCOME_RUNNING;
    case env::Outcome::Collision: return SVO_OUTCOME_COLLISION;
    case env::Outcome::Goal: return SVO_OUTCOME_GOAL;
    case env::Outcome::Timeout: return SVO_OUTCOME_TIMEOUT;
  }
  return SVO_OUTCOME_RUNNING;
}

void write_info(const env::Transition& tr, double* info) {
  const auto& p = tr.info.pedestrian;
  info[SVO_INFO_STEP] = tr.info.step;
  info[SVO_INFO_TIME] = tr.info.time;
  info[SVO_INFO_GAP] = tr.info.gap;
  info[SVO_INFO_MOTIVATION] = tr.info.motivation;
  info[SVO_INFO_ACCEL_CMD] = tr.info.accel_cmd;
  info[SVO_INFO_X_V] = tr.info.vehicle.x;
  info[SVO_INFO_V_V] = tr.info.vehicle.speed;
  info[SVO_INFO_X_P] = p.position.x();
  info[SVO_INFO_Y_P] = p.position.y();
  info[SVO_INFO_VX_P] = p.velocity.x();
  info[SVO_INFO_VY_P] = p.velocity.y();
  info[SVO_INFO_R_CAR] = tr.reward.car;
  info[SVO_INFO_R_P] = tr.reward.ped;
  info[SVO_INFO_R_TOTAL] = tr.reward.total;
  info[SVO_INFO_OUTCOME] = outcome_code(tr.outcome);
}

template <class F>
int guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const config::ConfigError& e) {
    return fail(SVO_ERR_CONFIG, e.what());
  } catch (const svo::Error& e) {
    return fail(SVO_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SVO_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SVO_ERR_INTERNAL, e.what());
  }
}

}  // namespace

extern "C" {

const char* svo_env_abi_version(void) { return SVO_ENV_ABI_VERSION; }

const char* svo_env_last_error(void) { return last_error.c_str(); }

int svo_env_open(double svo_deg, int variant, const char* config_ini, svo_env_handle* out) {
  return guarded([&]() -> int {
    if (!out) return fail(SVO_ERR_INVALID_ARGUMENT, "null output handle");
    if (!(svo_deg >= 0.0 && svo_deg <= 90.0))
      return fail(SVO_ERR_INVALID_ARGUMENT, "svo_deg must lie in [0, 90]");
    env::PedVariant v;
    switch (variant) {
      case SVO_VARIANT_AWARE: v = env::PedVariant::Aware; break;
      case SVO_VARIANT_RECKLESS: v = env::PedVariant::Reckless; break;
      case SVO_VARIANT_UNAWARE: v = env::PedVariant::Unaware; break;
      default: return fail(SVO_ERR_INVALID_ARGUMENT, "unknown variant " + std::to_string(variant));
    }
    const config::ToolkitConfig cfg = config_ini ? config::parse_config(config_ini) : config::ToolkitConfig{};
    env::EnvSettings settings = cfg.env_settings();
    settings.svo_rad = deg_to_rad(svo_deg);
    settings.variant = v;
    auto environment = std::make_unique<env::DrivingEnv>(settings);

    Registry& r = registry();
    std::lock_guard lock(r.mutex);
    const svo_env_handle h = r.next++;
    r.slots[h].env = std::move(environment);
    *out = h;
    return SVO_OK;
  });
}

int svo_env_reset(svo_env_handle h, uint64_t seed, double* obs) {
  return guarded([&]() -> int {
    if (!obs) return fail(SVO_ERR_INVALID_ARGUMENT, "null observation buffer");
    Slot* slot = nullptr;
    if (const int rc = lookup(h, slot); rc != SVO_OK) return rc;
    write_obs(slot->env->reset(seed), obs);
    slot->seed = seed;
    return SVO_OK;
  });
}

int svo_env_step(svo_env_handle h, double u, double* obs, double* reward, int* terminated,
                 int* truncated, double* info) {
  return guarded([&]() -> int {
    if (!obs || !reward || !terminated || !truncated)
      return fail(SVO_ERR_INVALID_ARGUMENT, "null output buffer");
    if (!std::isfinite(u)) return fail(SVO_ERR_INVALID_ARGUMENT, "action is not finite");
    Slot* slot = nullptr;
    if (const int rc = lookup(h, slot); rc != SVO_OK) return rc;
    if (!slot->seed) return fail(SVO_ERR_NOT_RESET, "step called before reset");
    if (slot->env->done()) return fail(SVO_ERR_EPISODE_DONE, "step called on a finished episode");
    const env::Transition tr = slot->env->step(u);
    write_obs(tr.obs, obs);
    *reward = tr.reward.total;
    *terminated = tr.terminated() ? 1 : 0;
    *truncated = tr.truncated() ? 1 : 0;
    if (info) write_info(tr, info);
    return SVO_OK;
  });
}

int svo_env_normalize(const double* obs, double* out) {
  if (!obs || !out) return fail(SVO_ERR_INVALID_ARGUMENT, "null buffer");
  const env::Observation o{obs[0], Vec2(obs[1], obs[2]), Vec2(obs[3], obs[4])};
  const auto n = o.normalized();
  for (int i = 0; i < env::kObsDim; ++i) out[i] = n[static_cast<std::size_t>(i)];
  return SVO_OK;
}

int svo_env_seed(svo_env_handle h, uint64_t* seed) {
  if (!seed) return fail(SVO_ERR_INVALID_ARGUMENT, "null output");
  Slot* slot = nullptr;
  if (const int rc = lookup(h, slot); rc != SVO_OK) return rc;
  if (!slot->seed) return fail(SVO_ERR_NOT_RESET, "no episode has been started");
  *seed = *slot->seed;
  return SVO_OK;
}

int svo_env_close(svo_env_handle h) {
  Registry& r = registry();
  std::lock_guard lock(r.mutex);
  const auto it = r.slots.find(h);
  if (it == r.slots.end()) return fail(SVO_ERR_UNKNOWN_HANDLE, "unknown handle " + std::to_string(h));
  if (!it->second.env) return fail(SVO_ERR_CLOSED, "handle " + std::to_string(h) + " is already closed");
  it->second.env.reset();
  return SVO_OK;
}

}  // extern "C"
