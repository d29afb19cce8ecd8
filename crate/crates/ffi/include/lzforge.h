#ifndef LZFORGE_H
#define LZFORGE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum LzStatus {
  LZ_STATUS_OK = 0,
  LZ_STATUS_NULL_POINTER = 1,
  LZ_STATUS_INVALID_ARGUMENT = 2,
  LZ_STATUS_DOMAIN = 3,
  LZ_STATUS_NUMERIC = 4,
  LZ_STATUS_DESIGN = 5,
  LZ_STATUS_FIT = 6,
  LZ_STATUS_VALIDATION = 7,
  LZ_STATUS_IO = 8,
  LZ_STATUS_PANIC = 9,
} LzStatus;

/**
 * Opaque drive waveform.
 */
typedef struct LzPulse LzPulse;

/**
 * `[re00, im00, re01, im01, re10, im10, re11, im11]`.
 */
typedef struct LzUnitary {
  double m[8];
} LzUnitary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call on the same thread.
 */
const char *lz_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *lz_status_name(enum LzStatus status);

const char *lz_version(void);

/**
 * Bessel function of the first kind `J_m(x)`.
 */
double lz_bessel_j(int32_t m, double x);

/**
 * `1 - exp(-pi delta^2 / 2v)`.
 */
enum LzStatus lz_landau_zener_probability(double delta, double v, double *out);

/**
 * `v t + lambda cos(omega t + phi)`, unwindowed.
 */
enum LzStatus lz_pulse_oscillating(double v,
                                   double lambda,
                                   double omega,
                                   double phi,
                                   struct LzPulse **out);

/**
 * Oscillating sweep whose drive is gated by a window of plateau `total`
 * and ramp `switching`.
 */
enum LzStatus lz_pulse_windowed(double v,
                                double lambda,
                                double omega,
                                double phi,
                                double total,
                                double switching,
                                struct LzPulse **out);

enum LzStatus lz_pulse_erf_tan(double eps0,
                               double lambda_erf,
                               double duration,
                               double delta,
                               struct LzPulse **out);

/**
 * Copies `len` pixel values; pixel `k` spans `[start + k dt, start + (k+1) dt)`.
 */
enum LzStatus lz_pulse_pixelated(const double *values,
                                 size_t len,
                                 double dt,
                                 double start,
                                 struct LzPulse **out);

/**
 * Samples `pulse` at `n` pixel midpoints over `[t_start, t_end]`.
 */
enum LzStatus lz_pulse_pixelate(const struct LzPulse *pulse,
                                size_t n,
                                double t_start,
                                double t_end,
                                struct LzPulse **out);

/**
 * Releases a handle; null is ignored.
 */
void lz_pulse_free(struct LzPulse *pulse);

enum LzStatus lz_pulse_eval(const struct LzPulse *pulse, double t, double *out);

/**
 * Pixel count of a pixelated pulse; 0 for analytic pulses.
 */
enum LzStatus lz_pulse_pixel_count(const struct LzPulse *pulse, size_t *out);

/**
 * Copies pixel values, pixel width and start time. `capacity` must be at
 * least the pixel count.
 */
enum LzStatus lz_pulse_pixels(const struct LzPulse *pulse,
                              double *values,
                              size_t capacity,
                              double *dt,
                              double *start);

/**
 * Time-ordered evolution operator of `delta sigma_x/2 + eps(t) sigma_z/2`.
 */
enum LzStatus lz_evolve(const struct LzPulse *pulse,
                        double delta,
                        double t_start,
                        double t_end,
                        struct LzUnitary *out);

/**
 * `|<0|U|1>|^2`.
 */
enum LzStatus lz_survival_error(const struct LzUnitary *u, double *out);

/**
 * `|Tr(target^dagger U)|^2 / 4`.
 */
enum LzStatus lz_gate_fidelity(const struct LzUnitary *u,
                               const struct LzUnitary *target,
                               double *out);

/**
 * Product of the jump matrices at `t = -m omega / v`. A negative `m0`
 * keeps every jump inside `[-duration/2, duration/2]`.
 */
enum LzStatus lz_multi_jump_unitary(double delta,
                                    double v,
                                    double lambda,
                                    double omega,
                                    double phi,
                                    double duration,
                                    int32_t m0,
                                    struct LzUnitary *out);

/**
 * Windowed sweep cancelling the central crossing and the first-order pair.
 */
enum LzStatus lz_design_diabatic_pulse(double v,
                                       double omega,
                                       double switching,
                                       double delta,
                                       struct LzPulse **out);

/**
 * GRAPE on a pixelated pulse with default settings apart from the
 * iteration cap and target error. Writes a new handle and `1 - fidelity`.
 */
enum LzStatus lz_grape_optimize(const struct LzPulse *pulse,
                                double delta,
                                const struct LzUnitary *target,
                                size_t max_iterations,
                                double target_error,
                                struct LzPulse **out,
                                double *out_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LZFORGE_H */
