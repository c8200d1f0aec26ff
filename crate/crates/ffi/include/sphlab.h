#ifndef SPHLAB_H
#define SPHLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. `Ok` and `NotFound` match the CLI exit codes 0 and 2.
 */
typedef enum SphStatus {
  SPH_STATUS_OK = 0,
  SPH_STATUS_ERROR = 1,
  SPH_STATUS_NOT_FOUND = 2,
  SPH_STATUS_NOT_PRIME = 3,
  SPH_STATUS_RANK_TOO_SMALL = 4,
  SPH_STATUS_NON_UNIMODULAR = 5,
  SPH_STATUS_INVALID_COWEIGHT = 6,
  SPH_STATUS_RESOURCE_LIMIT = 7,
  SPH_STATUS_CONTEXT_MISMATCH = 8,
  SPH_STATUS_INEXACT_COEFFICIENT = 9,
  SPH_STATUS_NON_HERMITIAN = 10,
  SPH_STATUS_DIMENSION_MISMATCH = 11,
  SPH_STATUS_PARSE = 12,
  SPH_STATUS_NULL_POINTER = 13,
  SPH_STATUS_PANIC = 14,
} SphStatus;

/**
 * Opaque evaluation context: a prime, a rank and the memo tables.
 */
typedef struct SphLab SphLab;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a lab for `SL_n(Q_p)` with at most `coset_cap` cosets per double
 * coset (0 selects the default).
 *
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum SphStatus sphlab_lab_new(uint64_t p, size_t n, uint64_t coset_cap, struct SphLab **out);

/**
 * # Safety
 * `lab` must be NULL or a pointer from [`sphlab_lab_new`] not yet freed.
 */
void sphlab_lab_free(struct SphLab *lab);

/**
 * Number of left cosets `L(pi^m)` in `U pi^m U`.
 *
 * # Safety
 * `lab` must be a live lab, `m` must point to `n` readable values and
 * `out` to one writable `u64`.
 */
enum SphStatus sphlab_coset_count(const struct SphLab *lab,
                                  const int64_t *m,
                                  size_t len,
                                  uint64_t *out);

/**
 * Structure constant `c^{m3}` of `chi_{m1} * chi_{m2}`; all three
 * coweights have length `len`.
 *
 * # Safety
 * `lab` must be a live lab, `m1`, `m2`, `m3` must each point to `len`
 * readable values and `out` to one writable `u64`.
 */
enum SphStatus sphlab_structure_constant(const struct SphLab *lab,
                                         const int64_t *m1,
                                         const int64_t *m2,
                                         const int64_t *m3,
                                         size_t len,
                                         uint64_t *out);

/**
 * `omega_s(pi^m)`. `param` uses the CLI syntax: `trivial`, `seq:J`,
 * `sigma:X` or a JSON object `{"re": [..], "im": [..]}`.
 *
 * # Safety
 * `lab` must be a live lab, `param` a NUL-terminated string, `m` must point
 * to `len` readable values, `re` and `im` to one writable `f64` each.
 */
enum SphStatus sphlab_omega(const struct SphLab *lab,
                            const char *param,
                            const int64_t *m,
                            size_t len,
                            double *re,
                            double *im);

/**
 * Runs a CLI invocation. `argv_json` is a JSON array of arguments without
 * the program name, e.g. `["cosets", "--p", "2", "--n", "2", "--coweight",
 * "1,-1"]`. The output document is stored in `*out` (free it with
 * [`sphlab_string_free`]) and `*exit_code` receives the CLI exit code.
 *
 * # Safety
 * `argv_json` must be a NUL-terminated string, `out` must point to storage
 * for one pointer and `exit_code` to one writable `i32`.
 */
enum SphStatus sphlab_dispatch(const char *argv_json, char **out, int32_t *exit_code);

/**
 * Message of the last failure on this thread, or NULL. Free the result with
 * [`sphlab_string_free`].
 */
char *sphlab_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void sphlab_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPHLAB_H */
