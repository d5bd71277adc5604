#ifndef AC_DIAMOND_H
#define AC_DIAMOND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum AcdStatus {
  ACD_STATUS_OK = 0,
  ACD_STATUS_NULL_POINTER = 1,
  ACD_STATUS_INVALID_ARGUMENT = 2,
  ACD_STATUS_CONFIG_ERROR = 3,
  ACD_STATUS_NUMERIC_ERROR = 4,
  ACD_STATUS_IO_ERROR = 5,
  ACD_STATUS_PANIC = 6,
} AcdStatus;

/**
 * Opaque experiment configuration.
 */
typedef struct AcdConfig AcdConfig;

typedef struct AcdSensitivity {
  double contrast;
  double t2;
  /**
   * rad/sqrt(Hz)
   */
  double eta;
  double ensemble;
  double eta_ensemble;
  /**
   * s
   */
  double time_to_1rad;
} AcdSensitivity;

typedef struct AcdStark {
  double coupling_hz;
  double zeeman_hz;
  double shift_hz;
  double modulation_hz;
  bool adiabatic;
} AcdStark;

typedef struct AcdMonteCarlo {
  uint64_t shots;
  double true_phase;
  double phase_mean;
  double phase_std;
  double phase_std_error;
} AcdMonteCarlo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * New configuration holding the default parameters. Free with
 * [`acd_config_free`].
 */
struct AcdConfig *acd_config_new_default(void);

/**
 * Parses a configuration file into a new handle stored in `*out`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum AcdStatus acd_config_load(const char *path, struct AcdConfig **out);

/**
 * Assigns one key, e.g. `("E0", "2.5e7")`. The handle is unchanged if the
 * result would be invalid.
 *
 * # Safety
 * `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum AcdStatus acd_config_set(struct AcdConfig *cfg, const char *key, const char *value);

/**
 * # Safety
 * `cfg` must be null or a handle not yet freed.
 */
void acd_config_free(struct AcdConfig *cfg);

/**
 * Closed-form total A-C phase in rad.
 *
 * # Safety
 * `cfg` must be a live handle and `out` writable.
 */
enum AcdStatus acd_total_phase(const struct AcdConfig *cfg, double *out);

/**
 * Readout lag in rad that maximizes the fringe slope at `phi_max`.
 *
 * # Safety
 * `out` must be writable.
 */
enum AcdStatus acd_optimal_lag(double phi_max, double *out);

/**
 * Readout population of `|+1⟩` for one echo run at `field` V/m. With
 * `oracle` set, integrates the full three-level dynamics instead of the
 * closed form.
 *
 * # Safety
 * `cfg` must be a live handle and `out` writable.
 */
enum AcdStatus acd_simulate_p1(const struct AcdConfig *cfg, double field, bool oracle, double *out);

/**
 * Fringe sweep over `points` fields from 0 to `E0`, without dephasing.
 * Fills `fields[points]` and `p1[points]`; `max_slope_index` may be null.
 *
 * # Safety
 * `fields` and `p1` must each hold `points` writable doubles.
 */
enum AcdStatus acd_sweep(const struct AcdConfig *cfg,
                         size_t points,
                         double *fields,
                         double *p1,
                         size_t *max_slope_index);

/**
 * # Safety
 * `cfg` must be a live handle and `out` writable.
 */
enum AcdStatus acd_sensitivity(const struct AcdConfig *cfg, struct AcdSensitivity *out);

/**
 * # Safety
 * `cfg` must be a live handle and `out` writable.
 */
enum AcdStatus acd_stark(const struct AcdConfig *cfg, struct AcdStark *out);

/**
 * Photon-counting Monte Carlo at `E0` using the configured seed.
 *
 * # Safety
 * `cfg` must be a live handle and `out` writable.
 */
enum AcdStatus acd_monte_carlo(const struct AcdConfig *cfg,
                               uint64_t shots,
                               struct AcdMonteCarlo *out);

/**
 * Why the most recent call on this thread failed, or null if it
 * succeeded. Valid until the next call into this library from the same
 * thread.
 */
const char *acd_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *acd_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AC_DIAMOND_H */
