#ifndef TETRA_QOS_H
#define TETRA_QOS_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TqStatus {
  TQ_STATUS_OK = 0,
  TQ_STATUS_NULL_POINTER = 1,
  TQ_STATUS_INVALID_UTF8 = 2,
  TQ_STATUS_MALFORMED_INPUT = 3,
  TQ_STATUS_INVARIANT_VIOLATION = 4,
  TQ_STATUS_DUPLICATE_WINDOW = 5,
  TQ_STATUS_NO_DATA = 6,
  TQ_STATUS_CONFIG = 7,
  TQ_STATUS_DOMAIN = 8,
  TQ_STATUS_UNSTABLE_LOAD = 9,
  TQ_STATUS_DIMENSION_MISMATCH = 10,
  TQ_STATUS_IO = 11,
  TQ_STATUS_PANIC = 12,
} TqStatus;

typedef enum TqPeriod {
  TQ_PERIOD_DAILY = 0,
  TQ_PERIOD_WEEKLY = 1,
  TQ_PERIOD_MONTHLY = 2,
} TqPeriod;

/**
 * Opaque handle to a validated counter store.
 */
typedef struct TqStore TqStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next library call on the same thread.
 */
const char *tq_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void tq_string_free(char *s);

/**
 * Parses and validates counter records (CSV, or a JSON array) into a new
 * store.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be writable.
 */
enum TqStatus tq_store_from_counters(const uint8_t *data, size_t len, struct TqStore **out);

/**
 * Opens a store file written by the `ingest` command.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum TqStatus tq_store_open(const char *path, struct TqStore **out);

/**
 * # Safety
 * `store` must come from this library and not have been freed. NULL is ignored.
 */
void tq_store_free(struct TqStore *store);

/**
 * Number of hourly records held; 0 for NULL.
 *
 * # Safety
 * `store` must be NULL or a live handle.
 */
size_t tq_store_len(const struct TqStore *store);

/**
 * # Safety
 * `out` must be writable.
 */
enum TqStatus tq_erlang_b(uint32_t n_channels, double offered, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum TqStatus tq_erlang_c(uint32_t n_channels, double offered, double *out);

/**
 * Unconditional mean wait in seconds.
 *
 * # Safety
 * `out` must be writable.
 */
enum TqStatus tq_mean_wait(uint32_t n_channels,
                           double arrival_rate,
                           double mean_holding,
                           double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum TqStatus tq_dimension(double offered,
                           double mean_holding,
                           double max_wait_prob,
                           uint32_t *out);

/**
 * KPI values as a JSON array. `tbs` and `date` (YYYY-MM-DD) may be NULL to
 * select everything.
 *
 * # Safety
 * `store` must be a live handle, string arguments NULL or NUL-terminated,
 * and `out` writable.
 */
enum TqStatus tq_kpi_json(const struct TqStore *store,
                          const char *tbs,
                          const char *date,
                          char **out);

/**
 * Full report as JSON. `clusters_json` and `thresholds_json` may be NULL.
 *
 * # Safety
 * `store` must be a live handle, string arguments NULL or NUL-terminated,
 * and `out` writable.
 */
enum TqStatus tq_report_json(const struct TqStore *store,
                             enum TqPeriod period,
                             const char *clusters_json,
                             const char *thresholds_json,
                             char **out);

/**
 * Runs the simulator. Both outputs are set on success.
 *
 * # Safety
 * `config_json` must be NUL-terminated; both out pointers writable.
 */
enum TqStatus tq_simulate(const char *config_json, char **counters_csv, char **truth_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TETRA_QOS_H */
