#ifndef SCIPROD_H
#define SCIPROD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum SpStatus {
  SP_STATUS_OK = 0,
  SP_STATUS_NULL_ARGUMENT = 1,
  SP_STATUS_INVALID_STRING = 2,
  /**
   * Bad configuration, parameters or table name.
   */
  SP_STATUS_INVALID_ARGUMENT = 3,
  /**
   * Input data failed validation.
   */
  SP_STATUS_DATA_ERROR = 4,
  SP_STATUS_IO_ERROR = 5,
  /**
   * Too few, degenerate or missing observations for a statistic.
   */
  SP_STATUS_INSUFFICIENT_DATA = 6,
  SP_STATUS_INTERNAL = 7,
} SpStatus;

/**
 * Table output format.
 */
typedef enum SpFormat {
  SP_FORMAT_CSV = 0,
  SP_FORMAT_MARKDOWN = 1,
} SpFormat;

typedef enum SpVerdict {
  SP_VERDICT_TOP = 0,
  SP_VERDICT_REST = 1,
  SP_VERDICT_TIE = 2,
} SpVerdict;

/**
 * Engine configuration handle.
 */
typedef struct SpConfig SpConfig;

/**
 * Loaded corpus handle.
 */
typedef struct SpCorpus SpCorpus;

/**
 * Analysis results handle.
 */
typedef struct SpRun SpRun;

/**
 * Log-log regression summary.
 */
typedef struct SpRegression {
  double gamma;
  double intercept_log;
  double robust_se;
  double p_gamma_zero;
  double p_gamma_one;
  double adj_r2;
  double pearson_log;
  size_t n_obs;
  /**
   * Number of significance stars, 0 to 3.
   */
  uint32_t stars;
} SpRegression;

/**
 * Rank-sum figures for one group.
 */
typedef struct SpGroupRankSum {
  size_t size;
  double r_max;
  double r_min;
  double r_eff;
  double r_diff;
  double normalized_distance;
  double u_statistic;
} SpGroupRankSum;

typedef struct SpRankSum {
  struct SpGroupRankSum top;
  struct SpGroupRankSum rest;
  enum SpVerdict verdict;
} SpRankSum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread, or null. Valid
 * until the next call into the library from the same thread.
 */
const char *sp_last_error_message(void);

/**
 * Releases a string returned by the library.
 *
 * # Safety
 * `s` must be null or a string obtained from this library, not yet freed.
 */
void sp_string_free(char *s);

/**
 * Creates a configuration with default values.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SpStatus sp_config_new(struct SpConfig **out);

/**
 * Parses a configuration JSON document; missing keys take their defaults.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` a valid pointer.
 */
enum SpStatus sp_config_from_json(const char *json, struct SpConfig **out);

/**
 * # Safety
 * `config` must be null or a handle from this library, not yet freed.
 */
void sp_config_free(struct SpConfig *config);

/**
 * Loads and validates the corpus in directory `dir`.
 *
 * # Safety
 * `dir` must be a nul-terminated string, `config` a live handle and `out` a
 * valid pointer.
 */
enum SpStatus sp_corpus_load(const char *dir, const struct SpConfig *config, struct SpCorpus **out);

/**
 * Number of researchers and publications in a corpus.
 *
 * # Safety
 * `corpus` must be a live handle; the out pointers must be valid.
 */
enum SpStatus sp_corpus_counts(const struct SpCorpus *corpus,
                               size_t *researchers,
                               size_t *publications);

/**
 * # Safety
 * `corpus` must be null or a handle from this library, not yet freed.
 */
void sp_corpus_free(struct SpCorpus *corpus);

/**
 * Runs every analysis over `corpus`.
 *
 * # Safety
 * `corpus` and `config` must be live handles and `out` a valid pointer.
 */
enum SpStatus sp_analyze(const struct SpCorpus *corpus,
                         const struct SpConfig *config,
                         struct SpRun **out);

/**
 * # Safety
 * `run` must be null or a handle from this library, not yet freed.
 */
void sp_run_free(struct SpRun *run);

/**
 * Renders one report table (e.g. `"table1_regression_total"`). The string
 * written to `out` must be released with [`sp_string_free`].
 *
 * # Safety
 * `run` must be a live handle, `name` a nul-terminated string and `out` a
 * valid pointer.
 */
enum SpStatus sp_run_render_table(const struct SpRun *run,
                                  const char *name,
                                  enum SpFormat format,
                                  char **out);

/**
 * Writes the full report bundle into `dir` in both formats.
 *
 * # Safety
 * `run` must be a live handle and `dir` a nul-terminated string.
 */
enum SpStatus sp_run_write_bundle(const struct SpRun *run, const char *dir);

/**
 * Generates a synthetic corpus from a parameters JSON document into `dir`.
 *
 * # Safety
 * `params_json` and `dir` must be nul-terminated strings.
 */
enum SpStatus sp_synth_write(const char *params_json, const char *dir);

/**
 * Fits ln c = α + γ ln p by OLS with HC1 standard errors.
 *
 * # Safety
 * `p` and `c` must each point to `n` values; `out` must be valid.
 */
enum SpStatus sp_ols_loglog(const double *p, const double *c, size_t n, struct SpRegression *out);

/**
 * %-rank of `values[subject]` among `values`: 100 × (1 − G / (n − 1)) where G
 * counts the values strictly greater.
 *
 * # Safety
 * `values` must point to `n` values; `out` must be valid.
 */
enum SpStatus sp_percent_rank(const double *values, size_t n, size_t subject, double *out);

/**
 * Rank-sum distance criterion for a two-group partition; `is_top[i]` is
 * non-zero for members of the top group.
 *
 * # Safety
 * `is_top` and `quality` must each point to `n` values; `out` must be valid.
 */
enum SpStatus sp_rank_sum_distance(const uint8_t *is_top,
                                   const double *quality,
                                   size_t n,
                                   struct SpRankSum *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCIPROD_H */
