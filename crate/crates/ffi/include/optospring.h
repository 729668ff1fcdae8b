/* C ABI for the optospring optomechanics library. Generated by cbindgen; do not edit. */

#ifndef OPTOSPRING_H
#define OPTOSPRING_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum OspringStatus {
  OSPRING_STATUS_OK = 0,
  // A required pointer argument was null.
  OSPRING_STATUS_NULL_POINTER = 1,
  OSPRING_STATUS_INVALID_PARAMETER = 2,
  // Optical spring constant is negative at this operating point.
  OSPRING_STATUS_ANTI_SPRING = 3,
  // Operation requires red detuning (detuning < 0).
  OSPRING_STATUS_NON_RESTORING_DETUNING = 4,
  // Structural damping has no zero-frequency force noise.
  OSPRING_STATUS_STRUCTURAL_DC = 5,
  // Lock voltage outside the fringe.
  OSPRING_STATUS_FRINGE_DOMAIN = 6,
  // Lock point too close to a fringe turning point.
  OSPRING_STATUS_TURNING_POINT = 7,
  // Sweep covers less than one fringe period.
  OSPRING_STATUS_PARTIAL_FRINGE = 8,
  OSPRING_STATUS_DEGENERATE_SWEEP = 9,
  OSPRING_STATUS_TOO_SHORT = 10,
  OSPRING_STATUS_CHANNEL_MISMATCH = 11,
  OSPRING_STATUS_GRID_MISMATCH = 12,
  // Requested spring frequency outside the branch's range.
  OSPRING_STATUS_TARGET_UNREACHABLE = 13,
  OSPRING_STATUS_UNIT_CONVERSION = 14,
  OSPRING_STATUS_MALFORMED_INPUT = 15,
  OSPRING_STATUS_IO = 16,
  // Internal defect caught at the boundary.
  OSPRING_STATUS_PANIC = 17,
} OspringStatus;

// Detuned cavity handle.
typedef struct OspringCavity OspringCavity;

// Mechanical oscillator handle.
typedef struct OspringOscillator OspringOscillator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of a status code. Never null; do not free.
const char *ospring_status_message(enum OspringStatus status);

// Create an oscillator from its resonance frequency in Hz. `structural`
// selects structural (frequency-independent loss angle) damping over
// viscous damping for the thermal model.
enum OspringStatus ospring_oscillator_new(double mass_kg,
                                          double frequency_hz,
                                          double quality,
                                          double temperature_k,
                                          bool structural,
                                          struct OspringOscillator **out);

// Release an oscillator handle. Null is a no-op.
void ospring_oscillator_free(struct OspringOscillator *osc);

enum OspringStatus ospring_cavity_new(double length_m,
                                      double wavelength_m,
                                      double transmission,
                                      double input_power_w,
                                      double detuning,
                                      struct OspringCavity **out);

// Release a cavity handle. Null is a no-op.
void ospring_cavity_free(struct OspringCavity *cavity);

// Zero-point displacement amplitude, meters.
enum OspringStatus ospring_oscillator_x_zpf(const struct OspringOscillator *osc, double *out);

// Thermal force noise PSD at `omega_rad_s`, N^2/Hz (one-sided).
enum OspringStatus ospring_oscillator_thermal_force_psd(const struct OspringOscillator *osc,
                                                        double omega_rad_s,
                                                        double *out);

// Intracavity power at the configured detuning, W.
enum OspringStatus ospring_cavity_circulating_power(const struct OspringCavity *cavity,
                                                    double *out);

// Optical spring constant, N/m. Positive for red detuning.
enum OspringStatus ospring_cavity_spring_constant(const struct OspringCavity *cavity, double *out);

// Cavity half linewidth implied by the mirror transmission, Hz.
enum OspringStatus ospring_cavity_linewidth_hwhm(const struct OspringCavity *cavity, double *out);

// Suspension-corrected optical spring resonance, Hz.
enum OspringStatus ospring_spring_frequency_hz(const struct OspringCavity *cavity,
                                               const struct OspringOscillator *osc,
                                               double *out);

// Standard quantum limit of the oscillator displacement PSD at
// `omega_rad_s`, m^2/Hz.
enum OspringStatus ospring_sql_psd(const struct OspringOscillator *osc,
                                   double omega_rad_s,
                                   double *out);

// Free-mass standard quantum limit amplitude density, m/rtHz.
enum OspringStatus ospring_free_mass_sql_asd(double mass_kg, double omega_rad_s, double *out);

// Back-action to free-mass-SQL amplitude ratio at the spring resonance.
// With `approximate` the resonance is taken as sqrt(K_OS/m), where the
// ratio is exactly sqrt(1/-detuning).
enum OspringStatus ospring_backaction_to_sql_ratio(const struct OspringCavity *cavity,
                                                   const struct OspringOscillator *osc,
                                                   bool approximate,
                                                   double *out);

// Detuning (negative) that places the spring resonance at `target_hz`,
// holding the rest of the cavity fixed. `strong_branch` selects the
// branch beyond 1/sqrt(3) linewidths used for tuning; otherwise the weak
// branch below it is searched.
enum OspringStatus ospring_detuning_for_spring_frequency(double target_hz,
                                                         const struct OspringCavity *cavity,
                                                         const struct OspringOscillator *osc,
                                                         bool strong_branch,
                                                         double *out);

// Free-mass-referenced noise budget on a caller-supplied frequency grid
// (strictly increasing, `len >= 2` entries, Hz). The measurement rate
// follows the self-calibrating rule tied to `spring_quality` (the spring
// resonance quality factor; 8 is the library default). All five outputs
// are arrays of `len` doubles: quantum, thermal and total amplitude
// densities and the SQL in m/rtHz, and the total-to-SQL power ratio
// in dB.
enum OspringStatus ospring_free_mass_budget(const struct OspringCavity *cavity,
                                            const struct OspringOscillator *osc,
                                            double spring_quality,
                                            const double *f_hz,
                                            size_t len,
                                            double *quantum_asd,
                                            double *thermal_asd,
                                            double *total_asd,
                                            double *sql_asd,
                                            double *ratio_db);

// Coherence-based two-channel subtraction on measured spectra.
//
// Inputs are per-bin arrays of `len` entries: the frequency grid (Hz,
// strictly increasing), channel auto-PSDs `s11` and `s22`, the complex
// cross-PSD split into `s12_re`/`s12_im`, and the known channel-2 sensing
// noise amplitude `noise_asd`. `n_averages` is the Welch average count
// behind the estimates (0 means exact model spectra; it disables the
// coherence floor). Outputs: the common-mode and channel-1 intrinsic
// amplitude densities, the channel-1 gain, and a per-bin flag byte
// (0 = ok, 1 = coherence floor, 2 = nonphysical negative). Flagged bins
// carry zeros.
enum OspringStatus ospring_subtract(const double *f_hz,
                                    const double *s11,
                                    const double *s22,
                                    const double *s12_re,
                                    const double *s12_im,
                                    const double *noise_asd,
                                    size_t len,
                                    size_t n_averages,
                                    double *common_asd,
                                    double *residual_asd,
                                    double *gain,
                                    uint8_t *flags);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPTOSPRING_H */
