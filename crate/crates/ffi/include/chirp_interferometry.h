#ifndef CHIRP_INTERFEROMETRY_H
#define CHIRP_INTERFEROMETRY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ChirpStatus {
  CHIRP_STATUS_OK = 0,
  CHIRP_STATUS_NULL_ARGUMENT = 1,
  CHIRP_STATUS_INVALID_UTF8 = 2,
  /**
   * Configuration or argument failed validation.
   */
  CHIRP_STATUS_INVALID = 3,
  CHIRP_STATUS_IO = 4,
  /**
   * Capture or CSV contents do not match their format.
   */
  CHIRP_STATUS_FORMAT = 5,
  /**
   * Processing failed after validation.
   */
  CHIRP_STATUS_RUNTIME = 6,
  CHIRP_STATUS_BUFFER_TOO_SMALL = 7,
  CHIRP_STATUS_PANIC = 8,
} ChirpStatus;

/**
 * Spectra and detections from one processed capture.
 */
typedef struct ChirpResult ChirpResult;

/**
 * Resolved scenario: geometry, waveform, targets, noise and processing.
 */
typedef struct ChirpScenario ChirpScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null.
 */
const char *chirp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *chirp_version(void);

/**
 * Loads and validates a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum ChirpStatus chirp_scenario_load(const char *path, struct ChirpScenario **out);

/**
 * Parses and validates a scenario from TOML text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum ChirpStatus chirp_scenario_parse(const char *text, struct ChirpScenario **out);

/**
 * # Safety
 * `scenario` must be null or a handle from this library, not yet freed.
 */
void chirp_scenario_free(struct ChirpScenario *scenario);

/**
 * Number of receive elements in the scenario.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
size_t chirp_scenario_num_elements(const struct ChirpScenario *scenario);

/**
 * Synthesizes the scenario's scene and runs the full processing chain.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum ChirpStatus chirp_scenario_simulate(const struct ChirpScenario *scenario,
                                         struct ChirpResult **out);

/**
 * Processes a capture file. `payload` may be null to use the file named in
 * the sidecar; `processing` may be null for default processing, otherwise
 * only its processing settings are used.
 *
 * # Safety
 * String arguments must be NUL-terminated; `processing` must be null or a
 * live handle; `out` must be writable.
 */
enum ChirpStatus chirp_capture_process(const char *sidecar,
                                       const char *payload,
                                       const struct ChirpScenario *processing,
                                       struct ChirpResult **out);

/**
 * # Safety
 * `result` must be null or a handle from this library, not yet freed.
 */
void chirp_result_free(struct ChirpResult *result);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
size_t chirp_result_num_detections(const struct ChirpResult *result);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
size_t chirp_result_fused_len(const struct ChirpResult *result);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
size_t chirp_result_num_baselines(const struct ChirpResult *result);

/**
 * Detection angles in degrees, strongest first.
 *
 * # Safety
 * `result` must be a live handle; `angles_deg` must hold `capacity` doubles;
 * `written` may be null.
 */
enum ChirpStatus chirp_result_detection_angles(const struct ChirpResult *result,
                                               double *angles_deg,
                                               size_t capacity,
                                               size_t *written);

/**
 * Detection peak magnitudes, in the same order as the angles.
 *
 * # Safety
 * As for [`chirp_result_detection_angles`].
 */
enum ChirpStatus chirp_result_detection_magnitudes(const struct ChirpResult *result,
                                                   double *magnitudes,
                                                   size_t capacity,
                                                   size_t *written);

/**
 * Fused spectrum: `sin_theta` grid and magnitudes, both of
 * [`chirp_result_fused_len`] values. Either buffer may be null to skip it.
 *
 * # Safety
 * Non-null buffers must hold `capacity` doubles; `result` must be a live handle.
 */
enum ChirpStatus chirp_result_fused(const struct ChirpResult *result,
                                    double *sin_theta,
                                    double *magnitudes,
                                    size_t capacity,
                                    size_t *written);

/**
 * One baseline's pseudo-spectrum. `length_m` receives the baseline length
 * and may be null.
 *
 * # Safety
 * Non-null buffers must hold `capacity` doubles; `result` must be a live handle.
 */
enum ChirpStatus chirp_result_baseline_spectrum(const struct ChirpResult *result,
                                                size_t index,
                                                double *length_m,
                                                double *freq_hz,
                                                double *magnitudes,
                                                size_t capacity,
                                                size_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHIRP_INTERFEROMETRY_H */
