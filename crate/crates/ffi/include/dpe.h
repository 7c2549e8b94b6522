#ifndef DPE_H
#define DPE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * `shape` argument of [`dpe_pulse_new`].
 */
#define DPE_SHAPE_RECT_SPECTRUM 0

#define DPE_SHAPE_GAUSSIAN 1

typedef enum DpeStatus {
  DPE_STATUS_OK = 0,
  DPE_STATUS_NULL_POINTER = 1,
  DPE_STATUS_INVALID_ARGUMENT = 2,
  DPE_STATUS_NUMERICAL = 3,
  DPE_STATUS_RESOURCE = 4,
  DPE_STATUS_PANIC = 5,
  DPE_STATUS_IO = 6,
} DpeStatus;

/**
 * Opaque phonon bath.
 */
typedef struct DpeBath DpeBath;

/**
 * Opaque table of influence coefficients.
 */
typedef struct DpeInfluence DpeInfluence;

/**
 * Opaque dichromatic pulse.
 */
typedef struct DpePulse DpePulse;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t dpe_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dpe_version(void);

/**
 * Creates a pulse. Energies in meV, `area` in radians, `t0` in ps.
 *
 * # Safety
 * `out` must be a valid pointer to a `DpePulse *`.
 */
enum DpeStatus dpe_pulse_new(uint32_t shape,
                             double delta,
                             double w_red,
                             double w_blue,
                             double area,
                             double t0,
                             struct DpePulse **out);

/**
 * # Safety
 * `pulse` must be null or a handle from [`dpe_pulse_new`] not yet freed.
 */
void dpe_pulse_free(struct DpePulse *pulse);

/**
 * Complex drive `f(t)` in rad/ps.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DpeStatus dpe_pulse_field(const struct DpePulse *pulse, double t, double *re, double *im);

/**
 * Time interval (ps) outside which the field vanishes.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DpeStatus dpe_pulse_support(const struct DpePulse *pulse, double *start, double *end);

/**
 * Pulse contrast `(I_B - I_R)/(I_B + I_R)`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DpeStatus dpe_pulse_contrast(const struct DpePulse *pulse, double *out);

/**
 * Closed-system evolution from the ground state; writes the excited-state
 * occupation at each of the `n` grid times (ps, strictly increasing).
 *
 * # Safety
 * `t_grid` and `occupation` must point to `n` elements.
 */
enum DpeStatus dpe_evolve_closed(const struct DpePulse *pulse,
                                 const double *t_grid,
                                 size_t n,
                                 double *occupation);

/**
 * GaAs quantum-dot bath at `temperature` (K); `coupled = 0` switches the
 * coupling off.
 *
 * # Safety
 * `out` must be valid.
 */
enum DpeStatus dpe_bath_new(double temperature, int32_t coupled, struct DpeBath **out);

/**
 * # Safety
 * `bath` must be null or a live handle.
 */
void dpe_bath_free(struct DpeBath *bath);

/**
 * Polaron shift in meV; the coupled transition sits this much below the
 * bare one.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DpeStatus dpe_bath_polaron_shift(const struct DpeBath *bath, double *out);

/**
 * Influence coefficients for step `dt` (ps) and memory depth `memory_k`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DpeStatus dpe_influence_new(const struct DpeBath *bath,
                                 double dt,
                                 size_t memory_k,
                                 struct DpeInfluence **out);

/**
 * # Safety
 * `influence` must be null or a live handle.
 */
void dpe_influence_free(struct DpeInfluence *influence);

/**
 * Final occupation from the path integral over the pulse support plus
 * `tail` ps.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DpeStatus dpe_pathint_final_occupation(const struct DpePulse *pulse,
                                            const struct DpeInfluence *influence,
                                            double tail,
                                            double *out);

/**
 * `V = 1 - g_par/g_perp`.
 *
 * # Safety
 * `out` must be valid.
 */
enum DpeStatus dpe_hom_visibility(double g_par, double g_perp, double *out);

/**
 * Fits the IRF-convolved HOM dip to `n` uniformly spaced bins (ns). Writes
 * `[t1, v_hom, tau_c]` to `params` and their uncertainties to
 * `uncertainties` (may be null).
 *
 * # Safety
 * `taus` and `counts` must point to `n` elements, `params` to 3 and
 * `uncertainties` to 3 or be null.
 */
enum DpeStatus dpe_fit_g2(const double *taus,
                          const double *counts,
                          size_t n,
                          double irf_fwhm,
                          double *params,
                          double *uncertainties);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DPE_H */
