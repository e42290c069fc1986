#ifndef CTXRANK_H
#define CTXRANK_H

/* Generated by cbindgen. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum CtxStatus {
  CTX_STATUS_OK = 0,
  CTX_STATUS_NULL_POINTER = 1,
  CTX_STATUS_INVALID_UTF8 = 2,
  /**
   * Index, dimension or value out of range.
   */
  CTX_STATUS_INVALID_ARGUMENT = 3,
  CTX_STATUS_CONFIG = 4,
  /**
   * Posterior not ready, non-finite data or a numerical failure.
   */
  CTX_STATUS_NUMERIC = 5,
  CTX_STATUS_NO_KKT_SOLUTION = 6,
  CTX_STATUS_ADAPTER = 7,
  CTX_STATUS_IO = 8,
  CTX_STATUS_PANIC = 9,
} CtxStatus;

/**
 * Opaque sequential session: one policy driving one posterior.
 */
typedef struct CtxSession CtxSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *ctxrank_last_error_message(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void ctxrank_string_free(char *s);

/**
 * Library version as a static string.
 */
const char *ctxrank_version(void);

/**
 * Open a session with `k` designs and `q` contexts.
 *
 * `m` holds `q` entries. `policy` is one of `aoamc`, `ea`, `eocbam`, `eaoam`,
 * `boldmc`, `mlingape`. `sampling_var` is a row-major `k*q` array or null for
 * all ones; with `known_variance` set it is used as is, otherwise it is only
 * the starting value until a cell holds `plugin_min` samples.
 * `context_values` (length `q`) may be null except for `mlingape`.
 *
 * # Safety
 * Array arguments must point to at least the stated number of elements and
 * `out` must be writable.
 */
enum CtxStatus ctxrank_session_new(uintptr_t k,
                                   uintptr_t q,
                                   const uintptr_t *m,
                                   const char *policy,
                                   const double *sampling_var,
                                   bool known_variance,
                                   uint64_t plugin_min,
                                   const double *context_values,
                                   struct CtxSession **out);

/**
 * # Safety
 * `s` must come from [`ctxrank_session_new`] or be null.
 */
void ctxrank_session_free(struct CtxSession *s);

/**
 * Feed one observation of design `design` in context `context`.
 *
 * # Safety
 * `s` must be a live session.
 */
enum CtxStatus ctxrank_session_observe(struct CtxSession *s,
                                       uintptr_t design,
                                       uintptr_t context,
                                       double value);

/**
 * Ask the policy for the next pair to simulate. Every cell needs enough
 * samples for its posterior to be defined first.
 *
 * # Safety
 * `s` must be a live session; `design` and `context` must be writable.
 */
enum CtxStatus ctxrank_session_next(struct CtxSession *s, uintptr_t *design, uintptr_t *context);

/**
 * Current top-m designs of `context` by posterior mean, best first.
 * `out` must hold `m[context]` entries.
 *
 * # Safety
 * `s` must be a live session and `out` writable for `len` elements.
 */
enum CtxStatus ctxrank_session_select(const struct CtxSession *s,
                                      uintptr_t context,
                                      uintptr_t *out,
                                      uintptr_t len);

/**
 * Number of observations recorded for one pair.
 *
 * # Safety
 * `s` must be a live session and `out` writable.
 */
enum CtxStatus ctxrank_session_count(const struct CtxSession *s,
                                     uintptr_t design,
                                     uintptr_t context,
                                     uint64_t *out);

/**
 * Solve for the optimal sampling ratios of an instance given as JSON.
 * `*out_json` receives the full solution report on success and also on
 * `NO_KKT_SOLUTION`, where it lists the rejected candidates.
 *
 * # Safety
 * `instance_json` must be a NUL-terminated string and `out_json` writable.
 */
enum CtxStatus ctxrank_solve_ratios(const char *instance_json, char **out_json);

/**
 * Run a Monte Carlo experiment described by a JSON config. `threads` of 0
 * uses the default pool size. Relative file paths resolve against the
 * working directory.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out_json` writable.
 */
enum CtxStatus ctxrank_run_experiment(const char *config_json, uintptr_t threads, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CTXRANK_H */
