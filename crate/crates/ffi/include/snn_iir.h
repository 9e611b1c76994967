#ifndef SNN_IIR_H
#define SNN_IIR_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SnnStatus {
  SNN_STATUS_OK = 0,
  SNN_STATUS_NULL_POINTER = 1,
  SNN_STATUS_INVALID_ARGUMENT = 2,
  SNN_STATUS_SHAPE_MISMATCH = 3,
  SNN_STATUS_IO = 4,
  SNN_STATUS_PARSE = 5,
  SNN_STATUS_UNSUPPORTED_VERSION = 6,
  SNN_STATUS_UNSTABLE_FILTER = 7,
  SNN_STATUS_CONFIG = 8,
  SNN_STATUS_BUFFER_TOO_SMALL = 9,
  SNN_STATUS_PANIC = 10,
} SnnStatus;

/**
 * Opaque network handle.
 */
typedef struct SnnNetwork SnnNetwork;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *snn_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *snn_version(void);

/**
 * Loads a checkpoint. On success `*out` owns a handle to release with `snn_network_free`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SnnStatus snn_network_load(const char *path, struct SnnNetwork **out);

/**
 * Builds a freshly initialized network from a TOML run config.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SnnStatus snn_network_from_config(const char *path, struct SnnNetwork **out);

/**
 * # Safety
 * `net` must be a live handle and `path` a NUL-terminated string.
 */
enum SnnStatus snn_network_save(const struct SnnNetwork *net, const char *path);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `net` must be null or a handle not yet freed.
 */
void snn_network_free(struct SnnNetwork *net);

/**
 * Number of layers, input layer excluded.
 *
 * # Safety
 * `net` must be a live handle and `out` a valid pointer.
 */
enum SnnStatus snn_network_num_layers(const struct SnnNetwork *net, size_t *out);

/**
 * Width of layer `index`, where 0 is the input and `num_layers` the output.
 *
 * # Safety
 * `net` must be a live handle and `out` a valid pointer.
 */
enum SnnStatus snn_network_width(const struct SnnNetwork *net, size_t index, size_t *out);

/**
 * Length of the flat parameter vector.
 *
 * # Safety
 * `net` must be a live handle and `out` a valid pointer.
 */
enum SnnStatus snn_network_num_params(const struct SnnNetwork *net, size_t *out);

/**
 * Copies the flat parameter vector into `buf`, which must hold `num_params` values.
 *
 * # Safety
 * `net` must be a live handle and `buf` valid for `len` writes.
 */
enum SnnStatus snn_network_params(const struct SnnNetwork *net, double *buf, size_t len);

/**
 * Runs the network on `input` (`horizon` x input width) and writes the output spikes
 * (`horizon` x output width) to `output`, whose capacity is `output_len`.
 *
 * # Safety
 * `net` must be a live handle, `input` valid for `horizon * channels` reads and
 * `output` valid for `output_len` writes.
 */
enum SnnStatus snn_network_forward(const struct SnnNetwork *net,
                                   const uint8_t *input,
                                   size_t horizon,
                                   size_t channels,
                                   uint8_t *output,
                                   size_t output_len);

/**
 * Difference-equation coefficients of the dual-exponential kernel: `feedback[2]` gets
 * the two recursive taps and `feedforward[2]` the input taps at delays 0 and 1.
 *
 * # Safety
 * `feedback` and `feedforward` must each be valid for 2 writes.
 */
enum SnnStatus snn_dual_exp_coeffs(double tau_m,
                                   double tau_s,
                                   double *feedback,
                                   double *feedforward);

/**
 * Van Rossum distance between two spike trains of equal shape under a dual-exp kernel.
 *
 * # Safety
 * `a` and `b` must each be valid for `horizon * channels` reads and `out` for one write.
 */
enum SnnStatus snn_van_rossum_distance(const uint8_t *a,
                                       const uint8_t *b,
                                       size_t horizon,
                                       size_t channels,
                                       double tau_m,
                                       double tau_s,
                                       double *out);

/**
 * Surrogate spike derivative at membrane potential `v`, or NaN for invalid parameters
 * (see `snn_last_error`).
 */
double snn_surrogate_grad(double v, double v_th, double sigma);

/**
 * Soft spike probability at membrane potential `v`, or NaN for invalid parameters.
 */
double snn_spike_probability(double v, double v_th, double sigma);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SNN_IIR_H */
