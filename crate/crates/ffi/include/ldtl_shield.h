#ifndef LDTL_SHIELD_H
#define LDTL_SHIELD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LdtlStatus {
  LDTL_STATUS_OK = 0,
  LDTL_STATUS_NULL_POINTER = 1,
  LDTL_STATUS_INVALID_UTF8 = 2,
  LDTL_STATUS_IO = 3,
  LDTL_STATUS_PARSE = 4,
  LDTL_STATUS_INVALID_SCENARIO = 5,
  LDTL_STATUS_OUT_OF_RANGE = 6,
  LDTL_STATUS_ZERO_LIKELIHOOD = 7,
  LDTL_STATUS_INVALID_PARAMETER = 8,
  LDTL_STATUS_PANIC = 9,
} LdtlStatus;

/**
 * A validated scenario.
 */
typedef struct LdtlScenario LdtlScenario;

/**
 * A simulated episode.
 */
typedef struct LdtlTrace LdtlTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or NULL. Valid until
 * the next call into this library on the same thread.
 */
const char *ldtl_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *ldtl_version(void);

/**
 * Parses and validates a scenario from TOML text.
 *
 * # Safety
 * `toml` must be a nul-terminated string and `out` a valid pointer.
 */
enum LdtlStatus ldtl_scenario_from_toml(const char *toml, struct LdtlScenario **out);

/**
 * Loads and validates a scenario file.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum LdtlStatus ldtl_scenario_load(const char *path, struct LdtlScenario **out);

/**
 * # Safety
 * `scenario` must come from this library and not be used afterwards.
 */
void ldtl_scenario_free(struct LdtlScenario *scenario);

/**
 * # Safety
 * `scenario` must be a valid handle or NULL (which yields 0).
 */
size_t ldtl_scenario_num_states(const struct LdtlScenario *scenario);

/**
 * # Safety
 * `scenario` must be a valid handle or NULL (which yields 0).
 */
size_t ldtl_scenario_num_actions(const struct LdtlScenario *scenario);

/**
 * # Safety
 * `scenario` must be a valid handle or NULL (which yields 0).
 */
size_t ldtl_scenario_num_observations(const struct LdtlScenario *scenario);

/**
 * Bayes update of `belief` (length `len`) after `action` and `observation`,
 * written to `out` (length `len`).
 *
 * # Safety
 * `belief` and `out` must point to `len` doubles; `scenario` must be valid.
 */
enum LdtlStatus ldtl_belief_update(const struct LdtlScenario *scenario,
                                   const double *belief,
                                   size_t len,
                                   size_t action,
                                   size_t observation,
                                   double *out);

/**
 * Simulates one episode with the given seed.
 *
 * # Safety
 * `scenario` must be valid and `out` a valid pointer.
 */
enum LdtlStatus ldtl_run_episode(const struct LdtlScenario *scenario,
                                 uint64_t seed,
                                 struct LdtlTrace **out);

/**
 * # Safety
 * `trace` must come from this library and not be used afterwards.
 */
void ldtl_trace_free(struct LdtlTrace *trace);

/**
 * Number of recorded steps.
 *
 * # Safety
 * `trace` must be a valid handle or NULL (which yields 0).
 */
size_t ldtl_trace_steps(const struct LdtlTrace *trace);

/**
 * Number of steps whose verdict failed.
 *
 * # Safety
 * `trace` must be a valid handle or NULL (which yields 0).
 */
uint64_t ldtl_trace_violations(const struct LdtlTrace *trace);

/**
 * Number of overridden steps.
 *
 * # Safety
 * `trace` must be a valid handle or NULL (which yields 0).
 */
uint64_t ldtl_trace_overrides(const struct LdtlTrace *trace);

/**
 * Line-delimited JSON rendering of the trace, released with
 * [`ldtl_string_free`].
 *
 * # Safety
 * `trace` must be valid and `out` a valid pointer.
 */
enum LdtlStatus ldtl_trace_to_jsonl(const struct LdtlTrace *trace, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ldtl_string_free(char *s);

/**
 * Invariance condition with `α(r) = γ r`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LdtlStatus ldtl_dtbf_check(double h_prev, double h_next, double gamma, bool *out);

/**
 * Finite-time condition.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LdtlStatus ldtl_ft_dtbf_check(double h_prev, double h_next, double rho, double eps, bool *out);

/**
 * Integer reach-time bound from a start `h0 < 0`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LdtlStatus ldtl_ft_time_bound(double h0, double rho, double eps, uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LDTL_SHIELD_H */
