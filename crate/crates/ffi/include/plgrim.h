#ifndef PLGRIM_H
#define PLGRIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PlgMissionStatus {
  PLG_MISSION_STATUS_COMPLETE = 0,
  PLG_MISSION_STATUS_BUDGET_EXHAUSTED = 1,
  PLG_MISSION_STATUS_ABORTED = 2,
} PlgMissionStatus;

typedef enum PlgStatus {
  PLG_STATUS_OK = 0,
  PLG_STATUS_NULL_POINTER = 1,
  PLG_STATUS_INVALID_UTF8 = 2,
  PLG_STATUS_PARSE = 3,
  PLG_STATUS_CONFIG = 4,
  PLG_STATUS_MISSION = 5,
  PLG_STATUS_PANIC = 6,
} PlgStatus;

// Opaque mission configuration.
typedef struct PlgConfig PlgConfig;

// Opaque ground-truth world.
typedef struct PlgWorld PlgWorld;

typedef struct PlgMissionResult {
  enum PlgMissionStatus status;
  uint64_t steps;
  double coverage_fraction;
  uint64_t frontier_count;
  uint64_t global_nodes;
  // Meters.
  double trajectory_length;
} PlgMissionResult;

typedef struct PlgRewardWeights {
  double k_info;
  double k_cost;
  double k_dist;
  double k_risk;
  double k_turn;
  double gamma;
} PlgRewardWeights;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *plg_last_error(void);

// Parses a world from its text form into `*out`.
//
// # Safety
// `text` must be a nul-terminated string and `out` a valid pointer.
enum PlgStatus plg_world_from_text(const char *text, struct PlgWorld **out);

// Width in cells, or 0 for a null handle.
//
// # Safety
// `world` must be null or a live handle.
uint32_t plg_world_width(const struct PlgWorld *world);

// Height in cells, or 0 for a null handle.
//
// # Safety
// `world` must be null or a live handle.
uint32_t plg_world_height(const struct PlgWorld *world);

// # Safety
// `world` must be null or a handle from [`plg_world_from_text`] not yet freed.
void plg_world_free(struct PlgWorld *world);

// Configuration with default parameters.
struct PlgConfig *plg_config_new(void);

// Sets one parameter using the config-file key names, e.g. `lcp.budget`.
//
// # Safety
// `config` must be a live handle; `key` and `value` nul-terminated strings.
enum PlgStatus plg_config_set(struct PlgConfig *config, const char *key, const char *value);

// # Safety
// `config` must be null or a handle from [`plg_config_new`] not yet freed.
void plg_config_free(struct PlgConfig *config);

// Runs a mission on a copy of `world`. `config` may be null for defaults.
// When `csv_out` is non-null it receives the per-step CSV, to be released
// with [`plg_string_free`].
//
// # Safety
// Handles must be live; `result` must be valid; `csv_out` null or valid.
enum PlgStatus plg_mission_run(const struct PlgWorld *world,
                               const struct PlgConfig *config,
                               uint64_t seed,
                               struct PlgMissionResult *result,
                               char **csv_out);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void plg_string_free(char *s);

struct PlgRewardWeights plg_reward_weights_default(void);

// Entropy in bits of a binary variable with probability `p`.
double plg_binary_entropy(double p);

// Information gained by fully covering a footprint with the given coverage
// probabilities.
//
// # Safety
// `probs` must point to `len` doubles (or be null with `len == 0`); `out` valid.
enum PlgStatus plg_info_gain(const double *probs, size_t len, double *out);

// `k_dist·distance + k_risk·risk + k_turn·turn`.
double plg_action_cost(double distance, double risk, double turn, struct PlgRewardWeights weights);

// `k_info·info − k_cost·cost`.
double plg_step_reward(double info, double cost, struct PlgRewardWeights weights);

// # Safety
// `rewards` must point to `len` doubles (or be null with `len == 0`); `out` valid.
enum PlgStatus plg_discounted_return(const double *rewards, size_t len, double gamma, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLGRIM_H */
