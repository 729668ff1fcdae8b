//! Quantum measurement noise and the standard quantum limit.
//!
//! A continuous linear displacement measurement at rate `Gamma_meas` carries
//! imprecision `S_imp = x_zpf^2 / (4 Gamma_meas)` and drives the oscillator
//! with back-action force noise `S_rpn = hbar^2 Gamma_meas / x_zpf^2`; their
//! product saturates the uncertainty bound `hbar^2 / 4` for any rate. The
//! rate that minimizes the summed displacement noise at a given frequency is
//! `Gamma_opt = x_zpf^2 / (2 hbar |chi|)`, where the total reaches the
//! standard quantum limit `S_SQL = hbar |chi(Omega)|`.

use crate::cavity::{CavityConfig, OpticalSpringState};
use crate::constants::{C_LIGHT, HBAR, H_PLANCK};
use crate::error::Error;
use crate::oscillator::MechanicalOscillator;
use crate::Result;

/// Continuous displacement measurement on a mechanical oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementModel {
    /// Measurement rate, rad/s.
    pub rate: f64,
}

impl MeasurementModel {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::invalid(
                "rate",
                format!("must be positive, got {rate}"),
            ));
        }
        Ok(Self { rate })
    }

    /// Imprecision displacement noise, m^2/Hz (flat).
    pub fn imprecision_psd(&self, osc: &MechanicalOscillator) -> f64 {
        let x2 = osc.x_zpf() * osc.x_zpf();
        x2 / (4.0 * self.rate)
    }

    /// Back-action force noise, N^2/Hz (flat).
    pub fn backaction_force_psd(&self, osc: &MechanicalOscillator) -> f64 {
        let x2 = osc.x_zpf() * osc.x_zpf();
        HBAR * HBAR * self.rate / x2
    }

    /// Total quantum displacement noise at `omega`, m^2/Hz:
    /// imprecision plus filtered back-action.
    pub fn quantum_noise_psd(&self, osc: &MechanicalOscillator, omega: f64) -> Result<f64> {
        let chi2 = osc.susceptibility(omega)?.norm_sqr();
        Ok(self.imprecision_psd(osc) + chi2 * self.backaction_force_psd(osc))
    }
}

/// Measurement rate that minimizes the total quantum noise at `omega`, rad/s.
pub fn optimal_measurement_rate(osc: &MechanicalOscillator, omega: f64) -> Result<f64> {
    let chi = osc.susceptibility(omega)?.norm();
    let x2 = osc.x_zpf() * osc.x_zpf();
    Ok(x2 / (2.0 * HBAR * chi))
}

/// Standard quantum limit of the oscillator's displacement PSD, m^2/Hz.
pub fn sql_psd(osc: &MechanicalOscillator, omega: f64) -> Result<f64> {
    Ok(HBAR * osc.susceptibility(omega)?.norm())
}

/// Free-mass standard quantum limit as an amplitude density, m/rtHz:
/// `sqrt(2 hbar / m) / Omega`.
pub fn free_mass_sql_asd(mass: f64, omega: f64) -> Result<f64> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::invalid("mass", format!("must be positive, got {mass}")));
    }
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::invalid(
            "omega",
            format!("must be positive, got {omega}"),
        ));
    }
    Ok((2.0 * HBAR / mass).sqrt() / omega)
}

/// Back-action force PSD of the detuned cavity readout, N^2/Hz:
/// `32 h f_opt P_C / (c^2 T (1 + delta^2))`.
pub fn backaction_force_psd(cavity: &CavityConfig) -> f64 {
    let d2 = cavity.detuning * cavity.detuning;
    32.0 * H_PLANCK * cavity.optical_frequency() * cavity.circulating_power()
        / (C_LIGHT * C_LIGHT * cavity.transmission * (1.0 + d2))
}

/// Ratio of back-action displacement to the free-mass SQL at `omega`.
///
/// Numerator: `x_rp = (1/(m Omega^2)) (2 P_C / c) sqrt(8 h f_opt / (P_C T (1 + delta^2)))`,
/// denominator: `x_SQL = sqrt(2 hbar / (m Omega^2))`. Dimensionless.
pub fn backaction_to_sql_ratio(
    cavity: &CavityConfig,
    osc: &MechanicalOscillator,
    omega: f64,
) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::invalid(
            "omega",
            format!("must be positive, got {omega}"),
        ));
    }
    let p_c = cavity.circulating_power();
    let d2 = cavity.detuning * cavity.detuning;
    let x_rp = (2.0 * p_c / C_LIGHT)
        * (8.0 * H_PLANCK * cavity.optical_frequency()
            / (p_c * cavity.transmission * (1.0 + d2)))
            .sqrt()
        / (osc.mass * omega * omega);
    let x_sql = (2.0 * HBAR / (osc.mass * omega * omega)).sqrt();
    Ok(x_rp / x_sql)
}

/// [`backaction_to_sql_ratio`] evaluated at the optical-spring resonance.
///
/// With `approximate` the resonance is taken as `sqrt(K_OS / m)`, for which
/// the ratio reduces algebraically to `sqrt(1 / (-delta))`; otherwise the
/// suspension-corrected resonance is used. Requires red detuning.
pub fn backaction_to_sql_ratio_at_spring(
    cavity: &CavityConfig,
    osc: &MechanicalOscillator,
    approximate: bool,
) -> Result<f64> {
    if !(cavity.detuning < 0.0) {
        return Err(Error::NonRestoringDetuning {
            detuning: cavity.detuning,
        });
    }
    let omega = if approximate {
        OpticalSpringState::omega_os_approx(cavity, osc)?
    } else {
        OpticalSpringState::new(cavity, osc)?.omega_os
    };
    backaction_to_sql_ratio(cavity, osc, omega)
}
