//! Coherence-based subtraction of a common-mode signal seen by two channels.
//!
//! Model per frequency bin: channel 1 reads `lambda1 * (f + c1)` and channel
//! 2 reads `f + n`, where `f` is the common mode (laser frequency noise),
//! `c1` is channel 1's intrinsic noise expressed at the common-mode point,
//! and `n` is channel 2's sensing noise with known density. All three are
//! mutually incoherent, so
//!
//! ```text
//! S11 = lambda1^2 (F^2 + C1^2)      F^2 = S22 - Sn^2
//! S22 = F^2 + Sn^2                  lambda1 = |S12| / F^2
//! S12 = lambda1 F^2                 C1 = F sqrt(F^2 / (C S22) - 1)
//! C   = |S12|^2 / (S11 S22)
//! ```
//!
//! `C1` only involves the coherence and channel-2 quantities, so it is
//! invariant under any rescaling of channel 1; the gain estimate `lambda1`
//! soaks up the scale. Bins where the measured spectra contradict the model
//! (negative `F^2`, coherence above what `F^2` allows) or where the
//! coherence is too close to its estimator floor are flagged rather than
//! propagated.

use serde::Serialize;

use crate::constants::C_LIGHT;
use crate::error::Error;
use crate::spectrum::FrequencyGrid;
use crate::welch::TwoChannelSpectra;
use crate::Result;

/// Why a bin's estimate should (or should not) be trusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BinFlag {
    Ok,
    /// Coherence at or below the resolvable floor (3 / n_averages for
    /// estimated spectra), or no common-mode power at all: the split between
    /// common mode and intrinsic noise is unconstrained here.
    CoherenceFloor,
    /// The stated channel-2 noise exceeds its measured total, or the
    /// coherence implies negative intrinsic power. The inputs are
    /// inconsistent with the model at this bin.
    NonphysicalNegative,
}

impl BinFlag {
    /// Stable text used in CSV output (matches the serde names).
    pub fn as_str(self) -> &'static str {
        match self {
            BinFlag::Ok => "ok",
            BinFlag::CoherenceFloor => "coherence_floor",
            BinFlag::NonphysicalNegative => "nonphysical_negative",
        }
    }
}

/// Per-bin subtraction output. Flagged bins carry zeros in the estimate
/// columns; consumers must consult `flags` before using a bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubtractionResult {
    pub grid: FrequencyGrid,
    /// Magnitude-squared coherence copied from the input spectra.
    pub coherence: Vec<f64>,
    /// Estimated common-mode amplitude density `F`, channel-2 units/rtHz.
    pub common_mode_asd: Vec<f64>,
    /// Estimated channel-1 intrinsic amplitude density `C1`, expressed at
    /// the common-mode point (divide out `gain` has already happened).
    pub residual_asd: Vec<f64>,
    /// Estimated channel-1 gain `lambda1`, channel-1 units per common-mode
    /// unit.
    pub gain: Vec<f64>,
    pub flags: Vec<BinFlag>,
    /// Averages behind the input spectra; 0 marks closed-form inputs.
    pub n_averages: usize,
}

impl SubtractionResult {
    /// Bins whose estimates are usable.
    pub fn unflagged(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, f)| **f == BinFlag::Ok)
            .map(|(i, _)| i)
    }
}

/// Coherence floor below which the common/intrinsic split is unresolvable.
/// Closed-form inputs (`n_averages = 0`) have no estimator variance and the
/// floor collapses to zero.
pub fn coherence_floor(n_averages: usize) -> f64 {
    if n_averages == 0 {
        0.0
    } else {
        3.0 / n_averages as f64
    }
}

/// Estimate the common mode and channel 1's intrinsic noise from measured
/// two-channel spectra and the known channel-2 sensing-noise density
/// (amplitude, one value per bin).
pub fn frequency_noise_subtract(
    spectra: &TwoChannelSpectra,
    ch2_noise_asd: &[f64],
) -> Result<SubtractionResult> {
    let n = spectra.grid.len();
    if ch2_noise_asd.len() != n {
        return Err(Error::GridMismatch {
            reason: format!(
                "channel-2 noise has {} bins, spectra have {n}",
                ch2_noise_asd.len()
            ),
        });
    }
    if let Some(i) = ch2_noise_asd.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid(
            "ch2_noise_asd",
            format!("must be finite and non-negative, bin {i} is {}", ch2_noise_asd[i]),
        ));
    }

    let floor = coherence_floor(spectra.n_averages);
    let mut common = vec![0.0; n];
    let mut residual = vec![0.0; n];
    let mut gain = vec![0.0; n];
    let mut flags = vec![BinFlag::Ok; n];

    for i in 0..n {
        let s22 = spectra.s22[i];
        let c = spectra.coherence[i];
        let f2 = s22 - ch2_noise_asd[i] * ch2_noise_asd[i];
        if f2 < 0.0 {
            flags[i] = BinFlag::NonphysicalNegative;
            continue;
        }
        if f2 == 0.0 || c <= floor {
            flags[i] = BinFlag::CoherenceFloor;
            continue;
        }
        let radicand = f2 / (c * s22) - 1.0;
        if radicand < 0.0 {
            flags[i] = BinFlag::NonphysicalNegative;
            continue;
        }
        let f = f2.sqrt();
        common[i] = f;
        residual[i] = f * radicand.sqrt();
        gain[i] = spectra.s12[i].norm() / f2;
    }

    Ok(SubtractionResult {
        grid: spectra.grid.clone(),
        coherence: spectra.coherence.clone(),
        common_mode_asd: common,
        residual_asd: residual,
        gain,
        flags,
        n_averages: spectra.n_averages,
    })
}

/// Convert a voltage amplitude to a frequency amplitude through a fringe
/// slope `dV/domega` (volts per rad/s): `hz = v / (|dV/domega| * 2 pi)`.
pub fn volts_to_hz(value_v: f64, dv_domega: f64) -> Result<f64> {
    if !(dv_domega.abs() > 0.0) || !dv_domega.is_finite() {
        return Err(Error::UnitConversion {
            reason: format!("fringe slope must be finite and nonzero, got {dv_domega}"),
        });
    }
    Ok(value_v / (dv_domega.abs() * 2.0 * std::f64::consts::PI))
}

/// Laser frequency excursion to equivalent cavity-length displacement:
/// `x = nu * L * wavelength / c`.
pub fn hz_to_meters(value_hz: f64, cavity_length: f64, wavelength: f64) -> f64 {
    value_hz * cavity_length * wavelength / C_LIGHT
}
