/* C interface to the treestars contagion-loss library. */

#ifndef TREESTARS_H
#define TREESTARS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a library call.
typedef enum TsStatus {
  // Success; out parameters are filled in.
  TS_STATUS_OK = 0,
  // A required pointer argument was null.
  TS_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  TS_STATUS_INVALID_UTF8 = 2,
  // The configuration document failed to parse or validate.
  TS_STATUS_PARSE_ERROR = 3,
  // An argument was out of range for the operation.
  TS_STATUS_INVALID_PARAMS = 4,
  // The model has no closed form for the request; use the simulation
  // entry points instead.
  TS_STATUS_UNSUPPORTED = 5,
  // An internal error; the library caught a panic instead of unwinding.
  TS_STATUS_INTERNAL = 6,
} TsStatus;

// Premium loading rule applied on top of the aggregate moments.
typedef enum TsPremiumPrinciple {
  // `(1 + delta) * mean`.
  TS_PREMIUM_PRINCIPLE_EXPECTATION = 0,
  // `mean + delta * standard deviation`.
  TS_PREMIUM_PRINCIPLE_STD_DEV = 1,
} TsPremiumPrinciple;

// Opaque handle to a parsed and validated experiment configuration.
typedef struct TsConfig TsConfig;

// Exact mean and variance of a loss quantity.
typedef struct TsMoments {
  double mean;
  double variance;
} TsMoments;

// Monte Carlo estimate of a loss quantity.
typedef struct TsEstimate {
  // Sample mean of the per-replication loss.
  double mean;
  // Sample standard deviation (unbiased variance's square root).
  double sd;
  // Standard error of `mean`.
  double se_mean;
  // Standard error of `sd`.
  double se_sd;
  // Fraction of replications whose contagion event was degenerate
  // (empty origin set, zero loss).
  double degenerate_fraction;
  // Number of replications behind the estimate.
  uint64_t replications;
} TsEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Returns the library version as a static NUL-terminated string; do not
// free it.
const char *ts_version(void);

// Returns a description of the most recent failure on the calling thread,
// or an empty string if there was none. The pointer is owned by the
// library and stays valid until the next library call on this thread.
const char *ts_last_error_message(void);

// Parses a JSON experiment configuration into a new handle.
//
// On success writes a handle to `*out`; release it with
// [`ts_config_free`].
//
// # Safety
//
// `json` must point to a NUL-terminated string and `out` to writable
// storage for one pointer.
enum TsStatus ts_config_parse(const char *json, struct TsConfig **out);

// Serializes the configuration back to its canonical JSON document.
//
// Release the returned string with [`ts_string_free`]. Parsing the output
// again yields a configuration identical to `cfg`.
//
// # Safety
//
// `cfg` must be a live handle from [`ts_config_parse`] and `out` writable
// storage for one pointer.
enum TsStatus ts_config_to_json(const struct TsConfig *cfg, char **out);

// Releases a configuration handle. Passing null is a no-op.
//
// # Safety
//
// `cfg` must be null or a handle from [`ts_config_parse`] that has not
// been freed yet.
void ts_config_free(struct TsConfig *cfg);

// Releases a string returned by this library. Passing null is a no-op.
//
// # Safety
//
// `s` must be null or a string obtained from a `char **` out parameter of
// this library that has not been freed yet.
void ts_string_free(char *s);

// Computes the closed-form mean and variance of one contagion event of
// the given scenario (1 = root contract, 2 = root user, 3 = external
// contract, 4 = external user).
//
// Returns [`TsStatus::Unsupported`] when the scenario has no closed form
// under the configured model (external-origin scenarios require
// deterministic degree pmfs and a non-empty origin set).
//
// # Safety
//
// `cfg` must be a live handle and `out` writable storage for one
// [`TsMoments`].
enum TsStatus ts_analytic_scenario(const struct TsConfig *cfg,
                                   uint32_t scenario,
                                   struct TsMoments *out);

// Computes the closed-form mean and variance of the aggregate loss over
// the configured horizon (event rate λ, length t, scenario weights).
//
// Returns [`TsStatus::Unsupported`] when any positively weighted scenario
// lacks a closed form.
//
// # Safety
//
// `cfg` must be a live handle and `out` writable storage for one
// [`TsMoments`].
enum TsStatus ts_analytic_aggregate(const struct TsConfig *cfg, struct TsMoments *out);

// Applies a premium principle to aggregate loss moments with loading
// `delta >= 0`.
//
// # Safety
//
// `moments` must point to a valid [`TsMoments`] and `out` to writable
// storage for one double.
enum TsStatus ts_premium(const struct TsMoments *moments,
                         double delta,
                         enum TsPremiumPrinciple principle,
                         double *out);

// Monte Carlo estimate of one scenario's per-event loss, using the
// configuration's run block (`replications`, `seed`, `workers`) verbatim.
//
// # Safety
//
// `cfg` must be a live handle and `out` writable storage for one
// [`TsEstimate`].
enum TsStatus ts_simulate_scenario(const struct TsConfig *cfg,
                                   uint32_t scenario,
                                   struct TsEstimate *out);

// Monte Carlo estimate of the aggregate loss over the configured horizon,
// in the run mode the configuration selects (per-scenario combination or
// direct horizon simulation).
//
// # Safety
//
// `cfg` must be a live handle and `out` writable storage for one
// [`TsEstimate`].
enum TsStatus ts_simulate_aggregate(const struct TsConfig *cfg, struct TsEstimate *out);

// Runs the full experiment the configuration describes (analytic columns,
// simulation columns, aggregate row with premiums, as enabled) and
// returns the CSV report. The configuration's `output` path is ignored;
// the text is returned instead. Release it with [`ts_string_free`].
//
// # Safety
//
// `cfg` must be a live handle and `out` writable storage for one pointer.
enum TsStatus ts_experiment_csv(const struct TsConfig *cfg, char **out);

// Reproduces one of the two preset benchmark grids (`table` is 2 or 3) as
// a CSV report and returns it; release the string with
// [`ts_string_free`]. `replications == 0` emits the analytic columns
// only; otherwise every row simulates with `replications` events, row `i`
// seeded with `seed + i`, on `workers` threads.
//
// # Safety
//
// `out` must point to writable storage for one pointer.
enum TsStatus ts_tables_csv(uint32_t table,
                            uint64_t replications,
                            uint64_t seed,
                            uint32_t workers,
                            char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TREESTARS_H */
