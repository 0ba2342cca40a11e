#ifndef LADNAS_H
#define LADNAS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes shared by every fallible entry point.
typedef enum LadnasStatus {
  LADNAS_STATUS_OK = 0,
  LADNAS_STATUS_NULL_POINTER = 1,
  LADNAS_STATUS_INVALID_ARGUMENT = 2,
  LADNAS_STATUS_INVALID_ENCODING = 3,
  LADNAS_STATUS_IO = 4,
  LADNAS_STATUS_MODEL = 5,
  LADNAS_STATUS_INTERNAL = 6,
} LadnasStatus;

// Opaque handle to a loaded latency predictor.
typedef struct LadnasLpm LadnasLpm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failure on this thread, or NULL if none occurred.
// The pointer stays valid until the next failing call on the same thread.
const char *ladnas_last_error(void);

// Number of bits in an architecture encoding.
size_t ladnas_encoding_len(void);

// Number of distinct normal cells in the default space.
//
// # Safety
// `out` must be NULL or point to writable memory.
enum LadnasStatus ladnas_space_size(uint64_t *out);

// Checks that `bits` (a NUL-terminated string of '0'/'1') encodes a valid cell.
//
// # Safety
// `bits` must be NULL or a valid NUL-terminated string.
enum LadnasStatus ladnas_encoding_validate(const char *bits);

// Noise-free latency of `bits` under the default synthetic hardware model.
//
// # Safety
// `bits` must be a valid NUL-terminated string and `out_ms` writable.
enum LadnasStatus ladnas_synthetic_latency(const char *bits, double *out_ms);

// Latency of `bits` under the default per-operation lookup table.
//
// # Safety
// `bits` must be a valid NUL-terminated string and `out_ms` writable.
enum LadnasStatus ladnas_table_latency(const char *bits, double *out_ms);

// FLOPs (millions) of `bits` under the default cost table.
//
// # Safety
// `bits` must be a valid NUL-terminated string and `out_mflops` writable.
enum LadnasStatus ladnas_flops(const char *bits, double *out_mflops);

// Loads a predictor saved by `ladnas train-lpm`. Free it with [`ladnas_lpm_free`].
//
// # Safety
// `path` must be a valid NUL-terminated string and `out` writable.
enum LadnasStatus ladnas_lpm_load(const char *path, struct LadnasLpm **out);

// Releases a handle from [`ladnas_lpm_load`]. NULL is ignored.
//
// # Safety
// `lpm` must be NULL or a live handle that is not used afterwards.
void ladnas_lpm_free(struct LadnasLpm *lpm);

// Input width of the predictor, or 0 for a NULL handle.
//
// # Safety
// `lpm` must be NULL or a live handle.
size_t ladnas_lpm_input_dim(const struct LadnasLpm *lpm);

// Predicted latency (ms) for an encoding given as a bit string.
//
// # Safety
// `lpm` must be a live handle, `bits` a valid NUL-terminated string, `out_ms` writable.
enum LadnasStatus ladnas_lpm_predict_bits(const struct LadnasLpm *lpm,
                                          const char *bits,
                                          double *out_ms);

// Predicted latency (ms) and its gradient with respect to a real-valued input of
// length `len`. `grad` must hold `len` doubles, or be NULL to skip the gradient.
//
// # Safety
// `x` must point to `len` doubles; `grad` must be NULL or point to `len` writable doubles.
enum LadnasStatus ladnas_lpm_predict_with_grad(const struct LadnasLpm *lpm,
                                               const double *x,
                                               size_t len,
                                               double *out_ms,
                                               double *grad);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LADNAS_H */
