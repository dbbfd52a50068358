#ifndef FPT_BARRIER_H
#define FPT_BARRIER_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FptStatus {
  FPT_STATUS_OK = 0,
  FPT_STATUS_NULL_POINTER = 1,
  FPT_STATUS_INVALID_UTF8 = 2,
  FPT_STATUS_INVALID_SPEC = 3,
  FPT_STATUS_CLASSIFY_FAILED = 4,
  FPT_STATUS_BOUNDS_FAILED = 5,
  FPT_STATUS_SIMULATION_FAILED = 6,
  FPT_STATUS_INVALID_CONFIG = 7,
  FPT_STATUS_OUT_OF_RANGE = 8,
  FPT_STATUS_PANIC = 99,
} FptStatus;

typedef enum FptZone {
  FPT_ZONE_RED = 0,
  FPT_ZONE_YELLOW = 1,
  FPT_ZONE_GREEN = 2,
  FPT_ZONE_TWILIGHT_MEAN_UNKNOWN = 3,
  FPT_ZONE_TWILIGHT_FINITENESS_UNKNOWN = 4,
  FPT_ZONE_DARK = 5,
} FptZone;

/**
 * Opaque set of simulated first passage times.
 */
typedef struct FptSamples FptSamples;

/**
 * Opaque barrier specification.
 */
typedef struct FptSpec FptSpec;

/**
 * Simulation settings; booleans are 0 or non-zero.
 */
typedef struct FptSimConfig {
  uint64_t n_paths;
  double dt;
  double horizon;
  uint64_t seed;
  uint8_t bridge_correction;
  uint8_t antithetic;
  uint8_t parallel;
} FptSimConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *fpt_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void fpt_string_free(char *s);

/**
 * Parses a barrier spec JSON document into a new handle.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FptStatus fpt_spec_from_json(const char *json, struct FptSpec **out);

/**
 * # Safety
 * `spec` must come from [`fpt_spec_from_json`] and not have been freed.
 */
void fpt_spec_free(struct FptSpec *spec);

/**
 * Classifies the spec, writing the zone and a JSON report
 * `{"zone": ..., "limits": ...}`. Either output may be null.
 *
 * # Safety
 * `spec` must be a live handle; non-null outputs must be valid pointers.
 */
enum FptStatus fpt_classify(const struct FptSpec *spec, enum FptZone *zone_out, char **json_out);

/**
 * Runs every applicable bound and writes the JSON report. Pass NaN for
 * `alpha` to skip the bounds that compare against the critical barrier.
 *
 * # Safety
 * `spec` must be a live handle and `json_out` a valid pointer.
 */
enum FptStatus fpt_bounds(const struct FptSpec *spec,
                          double alpha,
                          uint8_t attest_tail,
                          char **json_out);

/**
 * Simulates first passage times into a new sample handle.
 *
 * # Safety
 * `spec` and `config` must be valid pointers and `out` writable.
 */
enum FptStatus fpt_simulate(const struct FptSpec *spec,
                            const struct FptSimConfig *config,
                            struct FptSamples **out);

/**
 * # Safety
 * `samples` must come from [`fpt_simulate`] and not have been freed.
 */
void fpt_samples_free(struct FptSamples *samples);

/**
 * Number of paths, or 0 for a null handle.
 *
 * # Safety
 * `samples` must be null or a live handle.
 */
uint64_t fpt_samples_len(const struct FptSamples *samples);

/**
 * Number of paths censored at the horizon, or 0 for a null handle.
 *
 * # Safety
 * `samples` must be null or a live handle.
 */
uint64_t fpt_samples_n_censored(const struct FptSamples *samples);

/**
 * Passage time of path `index`. `crossed` receives 0 for a censored path,
 * in which case `time` receives the horizon.
 *
 * # Safety
 * `samples` must be a live handle; `crossed` and `time` valid pointers.
 */
enum FptStatus fpt_samples_get(const struct FptSamples *samples,
                               uint64_t index,
                               uint8_t *crossed,
                               double *time);

/**
 * Survival, truncated mean and tail slope of the samples as JSON.
 *
 * # Safety
 * `samples` must be a live handle and `json_out` a valid pointer.
 */
enum FptStatus fpt_samples_estimate(const struct FptSamples *samples, char **json_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FPT_BARRIER_H */
