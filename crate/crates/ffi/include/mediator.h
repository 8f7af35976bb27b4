#ifndef MEDIATOR_H
#define MEDIATOR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define MM_OK 0

/**
 * A required pointer argument was null.
 */
#define MM_NULL_POINTER 1

/**
 * A string argument was not valid UTF-8.
 */
#define MM_INVALID_UTF8 2

/**
 * Bad input: malformed config, invalid instance or argument.
 */
#define MM_CONFIG 3

/**
 * A numerical routine failed.
 */
#define MM_NUMERIC 4

/**
 * A type lies outside its support.
 */
#define MM_DOMAIN 5

/**
 * A Rust panic was caught at the boundary.
 */
#define MM_PANIC 6

/**
 * Opaque problem instance.
 */
typedef struct MmInstance MmInstance;

/**
 * Opaque solved mechanism.
 */
typedef struct MmMechanism MmMechanism;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread (empty if none). The pointer is
 * owned by the library and stays valid until the next failing call on this thread.
 */
const char *mm_last_error(void);

/**
 * Parses a JSON instance config.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
int32_t mm_instance_from_json(const char *json, MmInstance **out);

/**
 * The built-in uniform example with `v = q t` and `r = 1.5 q` on `[1, 2]^2`.
 *
 * # Safety
 * `out` must be writable.
 */
int32_t mm_instance_example1(MmInstance **out);

/**
 * # Safety
 * `inst` must be null or a handle from this library that has not been freed.
 */
void mm_instance_free(MmInstance *inst);

/**
 * Solves the instance. The mechanism keeps its own copy of the instance.
 *
 * # Safety
 * `inst` must be a live instance handle; `out` must be writable.
 */
int32_t mm_solve(const MmInstance *inst, MmMechanism **out);

/**
 * # Safety
 * `m` must be null or a handle from this library that has not been freed.
 */
void mm_mechanism_free(MmMechanism *m);

/**
 * Trade recommendation (0 or 1) for the reported pair.
 *
 * # Safety
 * `m` must be a live mechanism handle; `out` must be writable.
 */
int32_t mm_allocation(const MmMechanism *m, double t, double q, uint8_t *out);

/**
 * Buyer payment at report `t` and seller payment at report `q` (conditional on trade).
 *
 * # Safety
 * `m` must be a live mechanism handle; `buyer` and `seller` must be writable.
 */
int32_t mm_payments(const MmMechanism *m, double t, double q, double *buyer, double *seller);

/**
 * Interim buyer rate `R_b(t)`.
 *
 * # Safety
 * `m` must be a live mechanism handle; `out` must be writable.
 */
int32_t mm_rb(const MmMechanism *m, double t, double *out);

/**
 * Interim seller rate `R_s(q)`.
 *
 * # Safety
 * `m` must be a live mechanism handle; `out` must be writable.
 */
int32_t mm_rs(const MmMechanism *m, double q, double *out);

/**
 * Expected revenue from payments and from the virtual-surplus integral.
 *
 * # Safety
 * `m` must be a live mechanism handle; both out-pointers must be writable.
 */
int32_t mm_revenues(const MmMechanism *m, double *direct, double *virtual_surplus);

/**
 * Audit on a `grid_n x grid_n` lattice, as a JSON object. Free the string with
 * [`mm_string_free`].
 *
 * # Safety
 * `m` must be a live mechanism handle; `out` must be writable.
 */
int32_t mm_audit_json(const MmMechanism *m, size_t grid_n, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library that has not been freed.
 */
void mm_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEDIATOR_H */
