#ifndef AVDECOMP_H
#define AVDECOMP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. `AV_STATUS_OK` is zero; everything else is a failure.
 */
typedef enum AvStatus {
  AV_STATUS_OK = 0,
  AV_STATUS_NULL_POINTER = 1,
  AV_STATUS_INVALID_UTF8 = 2,
  AV_STATUS_PARSE = 3,
  AV_STATUS_BUILD = 4,
  AV_STATUS_DIMENSION_MISMATCH = 5,
  AV_STATUS_ORTHOGONAL_POST_SELECTION = 6,
  AV_STATUS_CONDITION_VIOLATED = 7,
  AV_STATUS_NUMERICAL = 8,
  AV_STATUS_INVALID_PARTITION = 9,
  AV_STATUS_INVALID_ARGUMENT = 10,
  AV_STATUS_OUT_OF_RANGE = 11,
  AV_STATUS_BUFFER_TOO_SMALL = 12,
  AV_STATUS_PANIC = 13,
} AvStatus;

/**
 * A parsed and built circuit.
 */
typedef struct AvCircuit AvCircuit;

/**
 * The outcome of decomposing an [`AvCircuit`].
 */
typedef struct AvDecomposition AvDecomposition;

typedef struct AvComplex {
  double re;
  double im;
} AvComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or null. Valid until the next call.
 */
const char *av_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *av_version(void);

/**
 * Parses `.qc` text and builds it. `base_dir` resolves UMAT paths and may be
 * null (current directory).
 *
 * # Safety
 * `source` and a non-null `base_dir` must be NUL-terminated strings; `out`
 * must be writable.
 */
enum AvStatus av_circuit_parse(const char *source, const char *base_dir, struct AvCircuit **out);

/**
 * # Safety
 * `circuit` must come from [`av_circuit_parse`] and not be freed twice.
 */
void av_circuit_free(struct AvCircuit *circuit);

/**
 * # Safety
 * `circuit` must be a live handle or null (returns 0).
 */
size_t av_circuit_n_qubits(const struct AvCircuit *circuit);

/**
 * # Safety
 * `circuit` must be a live handle or null (returns 0).
 */
size_t av_circuit_gate_count(const struct AvCircuit *circuit);

/**
 * Decomposes `circuit`. `partition` is `whole`, `singles` or `(j:p)...`; null
 * uses the circuit's own partition, or `singles`. A negative `prune_tol`
 * selects the default. A rebase directive in the circuit is applied too.
 *
 * # Safety
 * `circuit` must be live, a non-null `partition` NUL-terminated, `out`
 * writable.
 */
enum AvStatus av_decompose(const struct AvCircuit *circuit,
                           const char *partition,
                           double prune_tol,
                           struct AvDecomposition **out);

/**
 * # Safety
 * `decomposition` must come from [`av_decompose`] and not be freed twice.
 */
void av_decomposition_free(struct AvDecomposition *decomposition);

/**
 * # Safety
 * `d` must be a live handle or null (returns 0).
 */
size_t av_decomposition_leaf_count(const struct AvDecomposition *d);

/**
 * # Safety
 * `d` must be a live handle or null (returns 0).
 */
size_t av_decomposition_pruned_count(const struct AvDecomposition *d);

/**
 * Max-abs difference between the reconstruction and direct simulation, or
 * NaN for a null handle.
 *
 * # Safety
 * `d` must be a live handle or null.
 */
double av_decomposition_residual(const struct AvDecomposition *d);

/**
 * Amplitude of leaf `index` (leaves are ordered by path).
 *
 * # Safety
 * `d` must be live and `out` writable.
 */
enum AvStatus av_decomposition_leaf_amplitude(const struct AvDecomposition *d,
                                              size_t index,
                                              struct AvComplex *out);

/**
 * Copies the path of leaf `index` (letters E/O/K/P) as a NUL-terminated
 * string into `buf`. Needs `path length + 1` bytes.
 *
 * # Safety
 * `d` must be live and `buf` writable for `buf_len` bytes.
 */
enum AvStatus av_decomposition_leaf_path(const struct AvDecomposition *d,
                                         size_t index,
                                         char *buf,
                                         size_t buf_len);

/**
 * Writes the reconstructed final state (`2^n` amplitudes) into `out`.
 *
 * # Safety
 * `d` must be live and `out` writable for `len` elements.
 */
enum AvStatus av_decomposition_state(const struct AvDecomposition *d,
                                     struct AvComplex *out,
                                     size_t len);

/**
 * The JSON report as a newly allocated string; release with
 * [`av_string_free`].
 *
 * # Safety
 * `d` must be live and `out` writable.
 */
enum AvStatus av_decomposition_report_json(const struct AvDecomposition *d, char **out);

/**
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void av_string_free(char *s);

/**
 * `<psi|A|psi>` for a row-major `dim x dim` operator and a normalized state.
 *
 * # Safety
 * `op` must hold `dim * dim` and `psi` `dim` elements; `out` writable.
 */
enum AvStatus av_expectation(const struct AvComplex *op,
                             const struct AvComplex *psi,
                             size_t dim,
                             struct AvComplex *out);

/**
 * `|| (A - <A>) psi ||`.
 *
 * # Safety
 * As for [`av_expectation`].
 */
enum AvStatus av_uncertainty(const struct AvComplex *op,
                             const struct AvComplex *psi,
                             size_t dim,
                             double *out);

/**
 * `<phi|A|psi> / <phi|psi>`.
 *
 * # Safety
 * As for [`av_expectation`], with `phi` holding `dim` elements.
 */
enum AvStatus av_weak_value(const struct AvComplex *op,
                            const struct AvComplex *psi,
                            const struct AvComplex *phi,
                            size_t dim,
                            struct AvComplex *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AVDECOMP_H */
