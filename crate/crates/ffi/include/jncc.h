#ifndef JNCC_H
#define JNCC_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum JnccStatus {
  JNCC_STATUS_OK = 0,
  JNCC_STATUS_NULL_POINTER = 1,
  JNCC_STATUS_INVALID_ARGUMENT = 2,
  JNCC_STATUS_CONSTRUCTION = 3,
  JNCC_STATUS_PANIC = 4,
} JnccStatus;

typedef enum JnccVariant {
  JNCC_VARIANT_SMARC = 0,
  JNCC_VARIANT_IDENTITY = 1,
  JNCC_VARIANT_IDENTITY_IRREGULAR = 2,
  JNCC_VARIANT_GLNC_ONLY = 3,
  JNCC_VARIANT_GLNC_ONLY_IDENTITY = 4,
} JnccVariant;

/**
 * An assembled network code.
 */
typedef struct JnccCode JnccCode;

/**
 * Relay transmission sets.
 */
typedef struct JnccTopology JnccTopology;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *jncc_last_error(void);

/**
 * Largest achievable diversity order. Requires `1 <= m_s <= m_r`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum JnccStatus jncc_d_max(size_t m_s, size_t m_r, size_t *out);

/**
 * Smallest constant transmission set size that keeps full diversity
 * reachable. Requires `1 <= m_s <= m_r`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum JnccStatus jncc_min_set_size(size_t m_s, size_t m_r, size_t *out);

/**
 * Mutual information of BPSK over a real Gaussian link with `alpha^2
 * gamma = s`. Returns NaN for negative or non-finite `s`.
 */
double jncc_bpsk_mi(double s);

/**
 * Cyclic transmission sets of size two.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum JnccStatus jncc_topology_cyclic(size_t m_s, size_t m_r, struct JnccTopology **out);

/**
 * Random transmission sets of size `n`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum JnccStatus jncc_topology_random(size_t m_s,
                                     size_t m_r,
                                     size_t n,
                                     uint64_t seed,
                                     struct JnccTopology **out);

/**
 * # Safety
 * `topology` must come from a `jncc_topology_*` constructor (or be null)
 * and not be used afterwards.
 */
void jncc_topology_free(struct JnccTopology *topology);

/**
 * Minimum number of relays carrying any one source.
 *
 * # Safety
 * `topology` must be a live handle; `out` valid for writes.
 */
enum JnccStatus jncc_topology_min_inclusions(const struct JnccTopology *topology, size_t *out);

/**
 * Erasure diversity metric of the coding matrix.
 *
 * # Safety
 * `topology` must be a live handle; `out` valid for writes.
 */
enum JnccStatus jncc_topology_coding_matrix_order(const struct JnccTopology *topology, size_t *out);

/**
 * Builds a network code; `variant` is a [`JnccVariant`] value. Slot codes come from a `(var_degree,
 * check_degree)`-regular ensemble and are ignored by network-only variants,
 * which need `k == l`.
 *
 * # Safety
 * `topology` must be a live handle; `out` valid for writes.
 */
enum JnccStatus jncc_code_build(const struct JnccTopology *topology,
                                int32_t variant,
                                size_t l,
                                size_t k,
                                size_t var_degree,
                                size_t check_degree,
                                uint64_t seed,
                                struct JnccCode **out);

/**
 * # Safety
 * `code` must come from [`jncc_code_build`] (or be null) and not be used
 * afterwards.
 */
void jncc_code_free(struct JnccCode *code);

/**
 * Parity-check rows and columns, information bits per source and number
 * of sources. Any output pointer may be null.
 *
 * # Safety
 * `code` must be a live handle; non-null outputs valid for writes.
 */
enum JnccStatus jncc_code_dims(const struct JnccCode *code,
                               size_t *rows,
                               size_t *cols,
                               size_t *info_bits,
                               size_t *sources);

/**
 * Encodes `sources * info_bits` bytes (0 or 1, source-major) into a
 * codeword of `cols` bytes. All relays transmit.
 *
 * # Safety
 * `code` must be a live handle; `info` readable for `info_len` bytes;
 * `out` writable for `out_len` bytes.
 */
enum JnccStatus jncc_code_encode(const struct JnccCode *code,
                                 const uint8_t *info,
                                 size_t info_len,
                                 uint8_t *out,
                                 size_t out_len);

/**
 * Sets `*ok` to 1 when `bits` satisfies every parity check, else 0.
 *
 * # Safety
 * `code` must be a live handle; `bits` readable for `len` bytes; `ok`
 * writable.
 */
enum JnccStatus jncc_code_check(const struct JnccCode *code,
                                const uint8_t *bits,
                                size_t len,
                                int32_t *ok);

/**
 * Smallest number of erased nodes that loses information under peeling,
 * searching up to `max_erasures`; `max_erasures + 1` if none does.
 *
 * # Safety
 * `code` must be a live handle; `out` writable.
 */
enum JnccStatus jncc_code_erasure_order(const struct JnccCode *code,
                                        size_t max_erasures,
                                        size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JNCC_H */
