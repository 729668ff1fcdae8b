//! C ABI over the optospring library.
//!
//! Conventions: every fallible call returns an [`OspringStatus`] and writes
//! its results through out-pointers, which are left untouched on failure.
//! Handles created by the `_new` constructors are freed exactly once with
//! the matching `_free`; all other pointers are borrowed for the duration
//! of the call. Array arguments carry an explicit element count and must
//! point to that many readable (or writable) doubles. No call panics
//! across the boundary: a defect that would panic is reported as
//! `OSPRING_STATUS_PANIC` instead.

use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use optospring::budget::{build_budget, detuning_for_os_frequency, Branch, BudgetMode, BudgetOptions, MeasurementRate};
use optospring::cavity::OpticalSpringState;
use optospring::error::Error;
use optospring::oscillator::DampingModel;
use optospring::quantum;
use optospring::subtract::{frequency_noise_subtract, BinFlag};
use optospring::welch::TwoChannelSpectra;
use optospring::{CavityConfig, FrequencyGrid, MechanicalOscillator};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OspringStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    InvalidParameter = 2,
    /// Optical spring constant is negative at this operating point.
    AntiSpring = 3,
    /// Operation requires red detuning (detuning < 0).
    NonRestoringDetuning = 4,
    /// Structural damping has no zero-frequency force noise.
    StructuralDc = 5,
    /// Lock voltage outside the fringe.
    FringeDomain = 6,
    /// Lock point too close to a fringe turning point.
    TurningPoint = 7,
    /// Sweep covers less than one fringe period.
    PartialFringe = 8,
    DegenerateSweep = 9,
    TooShort = 10,
    ChannelMismatch = 11,
    GridMismatch = 12,
    /// Requested spring frequency outside the branch's range.
    TargetUnreachable = 13,
    UnitConversion = 14,
    MalformedInput = 15,
    Io = 16,
    /// Internal defect caught at the boundary.
    Panic = 17,
}

fn status_of(e: &Error) -> OspringStatus {
    match e {
        Error::InvalidParameter { .. } => OspringStatus::InvalidParameter,
        Error::AntiSpring { .. } => OspringStatus::AntiSpring,
        Error::NonRestoringDetuning { .. } => OspringStatus::NonRestoringDetuning,
        Error::StructuralDc => OspringStatus::StructuralDc,
        Error::FringeDomain { .. } => OspringStatus::FringeDomain,
        Error::TurningPoint { .. } => OspringStatus::TurningPoint,
        Error::PartialFringe { .. } => OspringStatus::PartialFringe,
        Error::DegenerateSweep { .. } => OspringStatus::DegenerateSweep,
        Error::TooShort { .. } => OspringStatus::TooShort,
        Error::ChannelMismatch { .. } => OspringStatus::ChannelMismatch,
        Error::GridMismatch { .. } => OspringStatus::GridMismatch,
        Error::TargetUnreachable { .. } => OspringStatus::TargetUnreachable,
        Error::UnitConversion { .. } => OspringStatus::UnitConversion,
        Error::MalformedInput { .. } => OspringStatus::MalformedInput,
        Error::Io(_) => OspringStatus::Io,
    }
}

/// Static description of a status code. Never null; do not free.
#[no_mangle]
pub extern "C" fn ospring_status_message(status: OspringStatus) -> *const c_char {
    let text: &'static [u8] = match status {
        OspringStatus::Ok => b"ok\0",
        OspringStatus::NullPointer => b"required pointer argument was null\0",
        OspringStatus::InvalidParameter => b"parameter out of domain\0",
        OspringStatus::AntiSpring => b"optical spring constant is negative here\0",
        OspringStatus::NonRestoringDetuning => b"requires red detuning (detuning < 0)\0",
        OspringStatus::StructuralDc => b"structural damping is undefined at zero frequency\0",
        OspringStatus::FringeDomain => b"lock voltage outside the fringe\0",
        OspringStatus::TurningPoint => b"lock point too close to a fringe turning point\0",
        OspringStatus::PartialFringe => b"sweep covers less than one fringe period\0",
        OspringStatus::DegenerateSweep => b"sweep has no voltage span\0",
        OspringStatus::TooShort => b"record too short for the segmentation\0",
        OspringStatus::ChannelMismatch => b"channels disagree in rate or length\0",
        OspringStatus::GridMismatch => b"arrays disagree with the frequency grid\0",
        OspringStatus::TargetUnreachable => b"spring frequency outside the reachable range\0",
        OspringStatus::UnitConversion => b"unsupported unit conversion\0",
        OspringStatus::MalformedInput => b"malformed input\0",
        OspringStatus::Io => b"i/o failure\0",
        OspringStatus::Panic => b"internal error\0",
    };
    text.as_ptr() as *const c_char
}

fn guarded(f: impl FnOnce() -> OspringStatus) -> OspringStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(OspringStatus::Panic)
}

/// Mechanical oscillator handle.
pub struct OspringOscillator {
    inner: MechanicalOscillator,
}

/// Detuned cavity handle.
pub struct OspringCavity {
    inner: CavityConfig,
}

macro_rules! try_deref {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(r) => r,
            None => return OspringStatus::NullPointer,
        }
    };
}

macro_rules! try_out {
    ($ptr:expr) => {
        match unsafe { $ptr.as_mut() } {
            Some(r) => r,
            None => return OspringStatus::NullPointer,
        }
    };
}

/// Create an oscillator from its resonance frequency in Hz. `structural`
/// selects structural (frequency-independent loss angle) damping over
/// viscous damping for the thermal model.
#[no_mangle]
pub extern "C" fn ospring_oscillator_new(
    mass_kg: f64,
    frequency_hz: f64,
    quality: f64,
    temperature_k: f64,
    structural: bool,
    out: *mut *mut OspringOscillator,
) -> OspringStatus {
    guarded(|| {
        let out = try_out!(out);
        let damping = if structural {
            DampingModel::Structural
        } else {
            DampingModel::Viscous
        };
        match MechanicalOscillator::from_frequency_hz(mass_kg, frequency_hz, quality, temperature_k, damping)
        {
            Ok(osc) => {
                *out = Box::into_raw(Box::new(OspringOscillator { inner: osc }));
                OspringStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Release an oscillator handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn ospring_oscillator_free(osc: *mut OspringOscillator) {
    if !osc.is_null() {
        drop(unsafe { Box::from_raw(osc) });
    }
}

#[no_mangle]
pub extern "C" fn ospring_cavity_new(
    length_m: f64,
    wavelength_m: f64,
    transmission: f64,
    input_power_w: f64,
    detuning: f64,
    out: *mut *mut OspringCavity,
) -> OspringStatus {
    guarded(|| {
        let out = try_out!(out);
        match CavityConfig::new(length_m, wavelength_m, transmission, input_power_w, detuning) {
            Ok(cavity) => {
                *out = Box::into_raw(Box::new(OspringCavity { inner: cavity }));
                OspringStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Release a cavity handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn ospring_cavity_free(cavity: *mut OspringCavity) {
    if !cavity.is_null() {
        drop(unsafe { Box::from_raw(cavity) });
    }
}

/// Zero-point displacement amplitude, meters.
#[no_mangle]
pub extern "C" fn ospring_oscillator_x_zpf(
    osc: *const OspringOscillator,
    out: *mut f64,
) -> OspringStatus {
    guarded(|| {
        let osc = try_deref!(osc);
        *try_out!(out) = osc.inner.x_zpf();
        OspringStatus::Ok
    })
}

/// Thermal force noise PSD at `omega_rad_s`, N^2/Hz (one-sided).
#[no_mangle]
pub extern "C" fn ospring_oscillator_thermal_force_psd(
    osc: *const OspringOscillator,
    omega_rad_s: f64,
    out: *mut f64,
) -> OspringStatus {
    guarded(|| {
        let osc = try_deref!(osc);
        let out = try_out!(out);
        match osc.inner.thermal_force_psd(omega_rad_s) {
            Ok(v) => {
                *out = v;
                OspringStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Intracavity power at the configured detuning, W.
#[no_mangle]
pub extern "C" fn ospring_cavity_circulating_power(
    cavity: *const OspringCavity,
    out: *mut f64,
) -> OspringStatus {
    guarded(|| {
        let cavity = try_deref!(cavity);
        *try_out!(out) = cavity.inner.circulating_power();
        OspringStatus::Ok
    })
}

/// Optical spring constant, N/m. Positive for red detuning.
#[no_mangle]
pub extern "C" fn ospring_cavity_spring_constant(
    cavity: *const OspringCavity,
    out: *mut f64,
) -> OspringStatus {
    guarded(|| {
        let cavity = try_deref!(cavity);
        *try_out!(out) = cavity.inner.optical_spring_constant();
        OspringStatus::Ok
    })
}

/// Cavity half linewidth implied by the mirror transmission, Hz.
#[no_mangle]
pub extern "C" fn ospring_cavity_linewidth_hwhm(
    cavity: *const OspringCavity,
    out: *mut f64,
) -> OspringStatus {
    guarded(|| {
        let cavity = try_deref!(cavity);
        *try_out!(out) = cavity.inner.linewidth_hwhm();
        OspringStatus::Ok
    })
}

/// Suspension-corrected optical spring resonance, Hz.
#[no_mangle]
pub extern "C" fn ospring_spring_frequency_hz(
    cavity: *const OspringCavity,
    osc: *const OspringOscillator,
    out: *mut f64,
) -> OspringStatus {
    guarded(|| {
        let cavity = try_deref!(cavity);
        let osc = try_deref!(osc);
        let out = try_out!(out);
        match OpticalSpringState::new(&cavity.inner, &osc.inner) {
            Ok(spring) => {
                *out = spring.omega_os / (2.0 * std::f64::consts::PI);
                OspringStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Standard quantum limit of the oscillator displacement PSD at
/// `omega_rad_s`, m^2/Hz.
#[no_mangle]
pub extern "C" fn ospring_sql_psd(
    osc: *const OspringOscillator,
    omega_rad_s: f64,
    out: *mut f64,
) -> OspringStatus {
    guarded(|| {
        let osc = try_deref!(osc);
        let out = try_out!(out);
        match quantum::sql_psd(&osc.inner, omega_rad_s) {
            Ok(v) => {
                *out = v;
                OspringStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Free-mass standard quantum limit amplitude density, m/rtHz.
#[no_mangle]
pub extern "C" fn ospring_free_mass_sql_asd(
    mass_kg: f64,
    omega_rad_s: f64,
    out: *mut f64,
) -> OspringStatus {
    guarded(|| {
        let out = try_out!(out);
        match quantum::free_mass_sql_asd(mass_kg, omega_rad_s) {
            Ok(v) => {
                *out = v;
                OspringStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Back-action to free-mass-SQL amplitude ratio at the spring resonance.
/// With `approximate` the resonance is taken as sqrt(K_OS/m), where the
/// ratio is exactly sqrt(1/-detuning).
#[no_mangle]
pub extern "C" fn ospring_backaction_to_sql_ratio(
    cavity: *const OspringCavity,
    osc: *const OspringOscillator,
    approximate: bool,
    out: *mut f64,
) -> OspringStatus {
    guarded(|| {
        let cavity = try_deref!(cavity);
        let osc = try_deref!(osc);
        let out = try_out!(out);
        match quantum::backaction_to_sql_ratio_at_spring(&cavity.inner, &osc.inner, approximate) {
            Ok(v) => {
                *out = v;
                OspringStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Detuning (negative) that places the spring resonance at `target_hz`,
/// holding the rest of the cavity fixed. `strong_branch` selects the
/// branch beyond 1/sqrt(3) linewidths used for tuning; otherwise the weak
/// branch below it is searched.
#[no_mangle]
pub extern "C" fn ospring_detuning_for_spring_frequency(
    target_hz: f64,
    cavity: *const OspringCavity,
    osc: *const OspringOscillator,
    strong_branch: bool,
    out: *mut f64,
) -> OspringStatus {
    guarded(|| {
        let cavity = try_deref!(cavity);
        let osc = try_deref!(osc);
        let out = try_out!(out);
        let branch = if strong_branch {
            Branch::StrongDetuning
        } else {
            Branch::WeakSpring
        };
        match detuning_for_os_frequency(target_hz, &cavity.inner, &osc.inner, branch) {
            Ok(v) => {
                *out = v;
                OspringStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

unsafe fn slice_in<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

unsafe fn slice_out<'a>(ptr: *mut f64, len: usize) -> Option<&'a mut [f64]> {
    if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts_mut(ptr, len))
    }
}

/// Free-mass-referenced noise budget on a caller-supplied frequency grid
/// (strictly increasing, `len >= 2` entries, Hz). The measurement rate
/// follows the self-calibrating rule tied to `spring_quality` (the spring
/// resonance quality factor; 8 is the library default). All five outputs
/// are arrays of `len` doubles: quantum, thermal and total amplitude
/// densities and the SQL in m/rtHz, and the total-to-SQL power ratio
/// in dB.
#[no_mangle]
pub extern "C" fn ospring_free_mass_budget(
    cavity: *const OspringCavity,
    osc: *const OspringOscillator,
    spring_quality: f64,
    f_hz: *const f64,
    len: usize,
    quantum_asd: *mut f64,
    thermal_asd: *mut f64,
    total_asd: *mut f64,
    sql_asd: *mut f64,
    ratio_db: *mut f64,
) -> OspringStatus {
    guarded(|| {
        let cavity = try_deref!(cavity);
        let osc = try_deref!(osc);
        let (freqs, q_out, t_out, tot_out, sql_out, r_out) = unsafe {
            match (
                slice_in(f_hz, len),
                slice_out(quantum_asd, len),
                slice_out(thermal_asd, len),
                slice_out(total_asd, len),
                slice_out(sql_asd, len),
                slice_out(ratio_db, len),
            ) {
                (Some(a), Some(b), Some(c), Some(d), Some(e), Some(f)) => (a, b, c, d, e, f),
                _ => return OspringStatus::NullPointer,
            }
        };
        let grid = match FrequencyGrid::new(freqs.to_vec()) {
            Ok(g) => g,
            Err(e) => return status_of(&e),
        };
        let opts = BudgetOptions {
            mode: BudgetMode::FreeMass,
            rate: MeasurementRate::Auto,
            spring_quality,
        };
        match build_budget(&cavity.inner, &osc.inner, &opts, &grid) {
            Ok(report) => {
                q_out.copy_from_slice(&report.quantum.values);
                t_out.copy_from_slice(&report.thermal.values);
                tot_out.copy_from_slice(&report.total.values);
                sql_out.copy_from_slice(&report.sql.values);
                r_out.copy_from_slice(&report.ratio_to_sql.values);
                OspringStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Coherence-based two-channel subtraction on measured spectra.
///
/// Inputs are per-bin arrays of `len` entries: the frequency grid (Hz,
/// strictly increasing), channel auto-PSDs `s11` and `s22`, the complex
/// cross-PSD split into `s12_re`/`s12_im`, and the known channel-2 sensing
/// noise amplitude `noise_asd`. `n_averages` is the Welch average count
/// behind the estimates (0 means exact model spectra; it disables the
/// coherence floor). Outputs: the common-mode and channel-1 intrinsic
/// amplitude densities, the channel-1 gain, and a per-bin flag byte
/// (0 = ok, 1 = coherence floor, 2 = nonphysical negative). Flagged bins
/// carry zeros.
#[no_mangle]
pub extern "C" fn ospring_subtract(
    f_hz: *const f64,
    s11: *const f64,
    s22: *const f64,
    s12_re: *const f64,
    s12_im: *const f64,
    noise_asd: *const f64,
    len: usize,
    n_averages: usize,
    common_asd: *mut f64,
    residual_asd: *mut f64,
    gain: *mut f64,
    flags: *mut u8,
) -> OspringStatus {
    guarded(|| {
        let (freqs, s11, s22, s12_re, s12_im, noise) = unsafe {
            match (
                slice_in(f_hz, len),
                slice_in(s11, len),
                slice_in(s22, len),
                slice_in(s12_re, len),
                slice_in(s12_im, len),
                slice_in(noise_asd, len),
            ) {
                (Some(a), Some(b), Some(c), Some(d), Some(e), Some(f)) => (a, b, c, d, e, f),
                _ => return OspringStatus::NullPointer,
            }
        };
        if flags.is_null() {
            return OspringStatus::NullPointer;
        }
        let (common_out, residual_out, gain_out) = unsafe {
            match (
                slice_out(common_asd, len),
                slice_out(residual_asd, len),
                slice_out(gain, len),
            ) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => return OspringStatus::NullPointer,
            }
        };
        let flags_out = unsafe { std::slice::from_raw_parts_mut(flags, len) };

        let grid = match FrequencyGrid::new(freqs.to_vec()) {
            Ok(g) => g,
            Err(e) => return status_of(&e),
        };
        let s12: Vec<num_complex::Complex64> = s12_re
            .iter()
            .zip(s12_im)
            .map(|(&re, &im)| num_complex::Complex64::new(re, im))
            .collect();
        let spectra = match TwoChannelSpectra::from_closed_form(grid, s11.to_vec(), s22.to_vec(), s12)
        {
            Ok(mut s) => {
                s.n_averages = n_averages;
                s
            }
            Err(e) => return status_of(&e),
        };
        match frequency_noise_subtract(&spectra, noise) {
            Ok(result) => {
                common_out.copy_from_slice(&result.common_mode_asd);
                residual_out.copy_from_slice(&result.residual_asd);
                gain_out.copy_from_slice(&result.gain);
                for (dst, flag) in flags_out.iter_mut().zip(&result.flags) {
                    *dst = match flag {
                        BinFlag::Ok => 0,
                        BinFlag::CoherenceFloor => 1,
                        BinFlag::NonphysicalNegative => 2,
                    };
                }
                OspringStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}
