#ifndef DETDEPTH_H
#define DETDEPTH_H

/* Generated by cbindgen from the detdepth-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code for every FFI entry point.
 */
typedef enum DdStatus {
  DD_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  DD_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  DD_STATUS_INVALID_UTF8 = 2,
  /**
   * Input text failed to parse or validate.
   */
  DD_STATUS_PARSE = 3,
  /**
   * The operation failed on a valid input (caps, domain errors).
   */
  DD_STATUS_DOMAIN = 4,
  /**
   * The spec admits no resolving strategy; no depth exists.
   */
  DD_STATUS_UNRESOLVABLE = 5,
  /**
   * A panic was caught at the boundary; state is unchanged.
   */
  DD_STATUS_INTERNAL = 6,
} DdStatus;

/**
 * Opaque game-tree handle.
 */
typedef struct DdGame DdGame;

/**
 * Opaque stable-matching instance handle.
 */
typedef struct DdMatching DdMatching;

/**
 * Opaque compiled specification handle.
 */
typedef struct DdSpec DdSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. Never NULL; empty
 * before any failure. The pointer is invalidated by the next failing call.
 */
const char *dd_last_error_message(void);

/**
 * Parses an explicit spec document (JSON) into a compiled handle.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string; `out` must be a valid
 * pointer. On success `*out` owns the handle and must be released with
 * `dd_spec_free`.
 */
enum DdStatus dd_spec_parse(const char *json, struct DdSpec **out);

/**
 * Releases a spec handle. NULL is a no-op.
 *
 * # Safety
 * `spec` must be NULL or a pointer from `dd_spec_parse` not yet freed.
 */
void dd_spec_free(struct DdSpec *spec);

/**
 * Adaptive worst-case depth of the spec. Fails with `Unresolvable` when no
 * strategy resolves every environment line.
 *
 * # Safety
 * `spec` must be a live handle; `out_depth` must be valid.
 */
enum DdStatus dd_spec_online_depth(const struct DdSpec *spec, uint64_t *out_depth);

/**
 * Checks the shrinkage invariant on every history up to the horizon.
 * `*out_ok` is 1 when no violation exists.
 *
 * # Safety
 * `spec` must be a live handle; `out_ok` must be valid.
 */
enum DdStatus dd_spec_validate_shrinkage(const struct DdSpec *spec, int32_t *out_ok);

/**
 * Monte Carlo estimate of parallel-strategy success on random constraint
 * chains. `policy` is 0 for uniform guessing, 1 for validity-filtered
 * guessing. Writes mean and standard error.
 *
 * # Safety
 * `out_mean` and `out_stderr` must be valid pointers.
 */
enum DdStatus dd_chain_separation(uint32_t k,
                                  uint32_t m,
                                  uint32_t s,
                                  uint32_t d_prime,
                                  uint32_t width,
                                  uint32_t policy,
                                  uint32_t trials,
                                  uint64_t seed,
                                  double *out_mean,
                                  double *out_stderr);

/**
 * Parses an instance document (JSON: n, men_prefs, women_prefs).
 *
 * # Safety
 * As for `dd_spec_parse`; release with `dd_matching_free`.
 */
enum DdStatus dd_matching_parse(const char *json, struct DdMatching **out);

/**
 * Releases a matching handle. NULL is a no-op.
 *
 * # Safety
 * `m` must be NULL or a pointer from `dd_matching_parse` not yet freed.
 */
void dd_matching_free(struct DdMatching *m);

/**
 * Rotation-poset height of the instance, the depth of layered resolution.
 *
 * # Safety
 * `m` must be a live handle; `out_height` must be valid.
 */
enum DdStatus dd_matching_height(const struct DdMatching *m, uint64_t *out_height);

/**
 * Number of stable matchings, counted as downsets of the rotation poset.
 *
 * # Safety
 * `m` must be a live handle; `out_count` must be valid.
 */
enum DdStatus dd_matching_stable_count(const struct DdMatching *m, uint64_t *out_count);

/**
 * Layer-minimization oracle over the instance's rotation commitments.
 * Fails with `Domain` when the instance has too many rotations for the
 * exhaustive oracle.
 *
 * # Safety
 * `m` must be a live handle; `out_depth` must be valid.
 */
enum DdStatus dd_matching_depth_oracle(const struct DdMatching *m, uint64_t *out_depth);

/**
 * Exact minimum decision-tree depth of a truth table given as little-endian
 * hex over `n` variables (f(0) is the least significant bit).
 *
 * # Safety
 * `hex` must be a valid NUL-terminated string; `out_depth` must be valid.
 */
enum DdStatus dd_dtree_min_depth(uint32_t n, const char *hex, uint64_t *out_depth);

/**
 * Decides a QBF document (JSON: prefix blocks, matrix) through the
 * pinned-order determination game. `*out_truth` is 1 when true.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string; `out_truth` must be valid.
 */
enum DdStatus dd_qbf_decide(const char *json, int32_t *out_truth);

/**
 * Parses a game-tree document (nested JSON nodes).
 *
 * # Safety
 * As for `dd_spec_parse`; release with `dd_game_free`.
 */
enum DdStatus dd_game_parse(const char *json, struct DdGame **out);

/**
 * Releases a game handle. NULL is a no-op.
 *
 * # Safety
 * `g` must be NULL or a pointer from `dd_game_parse` not yet freed.
 */
void dd_game_free(struct DdGame *g);

/**
 * Strategic depth: maximum number of subgame-non-trivial determiner nodes
 * on any root-to-leaf path.
 *
 * # Safety
 * `g` must be a live handle; `out_depth` must be valid.
 */
enum DdStatus dd_game_strategic_depth(const struct DdGame *g, uint64_t *out_depth);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DETDEPTH_H */
