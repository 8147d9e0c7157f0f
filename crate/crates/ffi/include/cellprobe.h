#ifndef CELLPROBE_H
#define CELLPROBE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CpStatus {
  CP_STATUS_OK = 0,
  CP_STATUS_NULL_POINTER = 1,
  CP_STATUS_INVALID_ARGUMENT = 2,
  CP_STATUS_MACHINE = 3,
  CP_STATUS_STRUCTURE = 4,
  CP_STATUS_ANALYSIS = 5,
  CP_STATUS_BUFFER_TOO_SMALL = 6,
  CP_STATUS_PANIC = 7,
} CpStatus;

typedef enum CpBranch {
  CP_BRANCH_EXTRACT = 0,
  CP_BRANCH_WEAK = 1,
} CpBranch;

/**
 * A bare probe machine.
 */
typedef struct CpMachine CpMachine;

/**
 * A linear-scan dynamization together with the machine it runs on. Every
 * insert and query is one oblivious operation.
 */
typedef struct CpSession CpSession;

typedef struct CpEncodingParams {
  uint64_t n_i;
  uint32_t d_prime;
  uint32_t word_bits;
  uint64_t client_bits;
  uint64_t sample_cells;
  uint64_t newer_cells;
  uint64_t f;
  uint64_t gamma_size;
} CpEncodingParams;

typedef struct CpEncodingLengths {
  double case0_bits;
  double case1_bits;
  double entropy_floor;
} CpEncodingLengths;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into this library from the same thread.
 */
const char *cp_last_error_message(void);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum CpStatus cp_machine_new(uint64_t cells,
                             uint32_t word_bits,
                             uint64_t client_bits,
                             uint64_t seed,
                             struct CpMachine **out);

/**
 * # Safety
 * `machine` must come from [`cp_machine_new`] and not be used afterwards.
 */
void cp_machine_free(struct CpMachine *machine);

/**
 * # Safety
 * `machine` must be a live handle; `label` a NUL-terminated string.
 */
enum CpStatus cp_machine_begin(struct CpMachine *machine, const char *label);

/**
 * # Safety
 * `machine` must be a live handle.
 */
enum CpStatus cp_machine_end(struct CpMachine *machine);

/**
 * # Safety
 * `machine` must be a live handle and `out` valid for writes.
 */
enum CpStatus cp_machine_read(struct CpMachine *machine, uint64_t address, uint64_t *out);

/**
 * # Safety
 * `machine` must be a live handle.
 */
enum CpStatus cp_machine_write(struct CpMachine *machine, uint64_t address, uint64_t word);

/**
 * Completed operations recorded so far; 0 for a NULL handle.
 *
 * # Safety
 * `machine` must be NULL or a live handle.
 */
size_t cp_machine_operation_count(const struct CpMachine *machine);

/**
 * Writes the trace dump, NUL-terminated, into `buf`. `out_len` receives the
 * dump length without the NUL, also when the buffer is too small, so a
 * first call with `cap = 0` sizes the buffer.
 *
 * # Safety
 * `machine` must be a live handle, `buf` valid for `cap` bytes, `out_len`
 * NULL or valid for writes.
 */
enum CpStatus cp_machine_trace_dump(const struct CpMachine *machine,
                                    char *buf,
                                    size_t cap,
                                    size_t *out_len);

/**
 * New session for at most `n_max - 1` operations on `d`-bit points held in
 * `word_bits`-bit cells (`d + 1 <= word_bits`).
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum CpStatus cp_session_new(uint32_t d,
                             uint32_t r,
                             double c,
                             uint64_t n_max,
                             uint32_t word_bits,
                             struct CpSession **out);

/**
 * # Safety
 * `session` must come from [`cp_session_new`] and not be used afterwards.
 */
void cp_session_free(struct CpSession *session);

/**
 * Inserts the `d`-bit point `value` (coordinate 0 is the high bit).
 *
 * # Safety
 * `session` must be a live handle.
 */
enum CpStatus cp_session_insert(struct CpSession *session, uint64_t value);

/**
 * Queries `value`. `*out_found` is false for no answer; otherwise the answer
 * is stored in `*out_point`.
 *
 * # Safety
 * `session` must be a live handle; both out pointers valid for writes.
 */
enum CpStatus cp_session_query(struct CpSession *session,
                               uint64_t value,
                               bool *out_found,
                               uint64_t *out_point);

/**
 * Total probes so far; 0 for a NULL handle.
 *
 * # Safety
 * `session` must be NULL or a live handle.
 */
uint64_t cp_session_total_probes(const struct CpSession *session);

/**
 * Same contract as [`cp_machine_trace_dump`].
 *
 * # Safety
 * See [`cp_machine_trace_dump`].
 */
enum CpStatus cp_session_trace_dump(const struct CpSession *session,
                                    char *buf,
                                    size_t cap,
                                    size_t *out_len);

/**
 * Hamming distance between two `d`-bit points.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum CpStatus cp_hamming(uint64_t a, uint64_t b, uint32_t d, uint32_t *out);

/**
 * Exact probability that a uniform `sample_size`-subset of `population`
 * cells covers `2 * probes` fixed cells, and the closed-form lower bound.
 *
 * # Safety
 * Both out pointers must be valid for writes.
 */
enum CpStatus cp_resolution_probability(uint64_t population,
                                        uint64_t sample_size,
                                        uint64_t probes,
                                        double *out_exact,
                                        double *out_bound);

/**
 * # Safety
 * `params` must be valid for reads and `out` for writes.
 */
enum CpStatus cp_encoding_lengths(const struct CpEncodingParams *params,
                                  enum CpBranch branch,
                                  struct CpEncodingLengths *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CELLPROBE_H */
