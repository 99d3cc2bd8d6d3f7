#ifndef SVO_C_API_H
#define SVO_C_API_H

/* Flat C interface to the driving environment for foreign-function callers.
 *
 * Environments are addressed by integer handles. A handle stays invalid once
 * closed; every call on it returns SVO_ERR_CLOSED instead of touching freed
 * memory. One handle must not be used from two threads at the same time,
 * distinct handles are independent.
 *
 * All functions return SVO_OK (0) or a negative error code. The message of
 * the most recent failure on the calling thread is available from
 * svo_env_last_error(). */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define SVO_API __attribute__((visibility("default")))
#else
#define SVO_API
#endif

#define SVO_ENV_ABI_VERSION "svo_env/1"

#define SVO_OBS_DIM 5
#define SVO_ACT_DIM 1

enum svo_status {
  SVO_OK = 0,
  SVO_ERR_INVALID_ARGUMENT = -1,
  SVO_ERR_UNKNOWN_HANDLE = -2,
  SVO_ERR_CLOSED = -3,
  SVO_ERR_NOT_RESET = -4,
  SVO_ERR_EPISODE_DONE = -5,
  SVO_ERR_CONFIG = -6,
  SVO_ERR_INTERNAL = -7
};

enum svo_variant { SVO_VARIANT_AWARE = 0, SVO_VARIANT_RECKLESS = 1, SVO_VARIANT_UNAWARE = 2 };

enum svo_outcome {
  SVO_OUTCOME_RUNNING = 0,
  SVO_OUTCOME_COLLISION = 1,
  SVO_OUTCOME_GOAL = 2,
  SVO_OUTCOME_TIMEOUT = 3
};

/* Layout of the info array filled by svo_env_step. */
enum svo_info_field {
  SVO_INFO_STEP = 0,
  SVO_INFO_TIME,
  SVO_INFO_GAP,
  SVO_INFO_MOTIVATION,
  SVO_INFO_ACCEL_CMD,
  SVO_INFO_X_V,
  SVO_INFO_V_V,
  SVO_INFO_X_P,
  SVO_INFO_Y_P,
  SVO_INFO_VX_P,
  SVO_INFO_VY_P,
  SVO_INFO_R_CAR,
  SVO_INFO_R_P,
  SVO_INFO_R_TOTAL,
  SVO_INFO_OUTCOME,
  SVO_INFO_DIM
};

typedef int64_t svo_env_handle;

/* Version string; callers compare it against SVO_ENV_ABI_VERSION at load. */
SVO_API const char* svo_env_abi_version(void);

/* Message of the last failure on this thread, "" if none. */
SVO_API const char* svo_env_last_error(void);

/* Create an environment. `config_ini` may be NULL for defaults, otherwise it
 * is the text of a configuration file. */
SVO_API int svo_env_open(double svo_deg, int variant, const char* config_ini,
                         svo_env_handle* out);

/* Sample the scenario for `seed` and write the raw observation
 * (ego speed, pedestrian position and velocity in the ego frame). */
SVO_API int svo_env_reset(svo_env_handle h, uint64_t seed, double* obs);

/* Advance one step with the normalized acceleration command `u` in [-1, 1].
 * `info` may be NULL; otherwise it must hold SVO_INFO_DIM doubles. */
SVO_API int svo_env_step(svo_env_handle h, double u, double* obs, double* reward,
                         int* terminated, int* truncated, double* info);

/* Fixed-scale network input for a raw observation, clipped to [-1, 1]. */
SVO_API int svo_env_normalize(const double* obs, double* out);

/* Seed of the current episode. */
SVO_API int svo_env_seed(svo_env_handle h, uint64_t* seed);

SVO_API int svo_env_close(svo_env_handle h);

#ifdef __cplusplus
}
#endif

#endif
