//! Mechanical oscillator: susceptibility and thermal displacement noise.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, K_BOLTZMANN};
use crate::error::Error;
use crate::Result;

/// Dissipation model used for the fluctuation-dissipation force spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DampingModel {
    /// Velocity damping: white force spectrum 4 kB T m Gamma_m.
    Viscous,
    /// Internal (structural) loss: force spectrum 4 kB T m Omega0^2 / (Q Omega),
    /// i.e. the viscous value scaled by Omega0/Omega.
    Structural,
}

/// Damped harmonic oscillator of mass `m`, resonance `Omega0` and quality `Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanicalOscillator {
    /// Mass, kg.
    pub mass: f64,
    /// Angular resonance frequency, rad/s.
    pub omega0: f64,
    /// Quality factor (dimensionless).
    pub quality: f64,
    /// Bath temperature, K.
    pub temperature: f64,
    /// Dissipation model for thermal noise.
    pub damping: DampingModel,
}

impl MechanicalOscillator {
    pub fn new(
        mass: f64,
        omega0: f64,
        quality: f64,
        temperature: f64,
        damping: DampingModel,
    ) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::invalid("mass", format!("must be positive, got {mass}")));
        }
        if !(omega0 > 0.0) || !omega0.is_finite() {
            return Err(Error::invalid(
                "omega0",
                format!("must be positive, got {omega0}"),
            ));
        }
        if !(quality > 0.0) || !quality.is_finite() {
            return Err(Error::invalid(
                "quality",
                format!("must be positive, got {quality}"),
            ));
        }
        if !(temperature >= 0.0) || !temperature.is_finite() {
            return Err(Error::invalid(
                "temperature",
                format!("must be non-negative, got {temperature}"),
            ));
        }
        Ok(Self {
            mass,
            omega0,
            quality,
            temperature,
            damping,
        })
    }

    /// Construct from an ordinary (Hz) resonance frequency.
    pub fn from_frequency_hz(
        mass: f64,
        f0_hz: f64,
        quality: f64,
        temperature: f64,
        damping: DampingModel,
    ) -> Result<Self> {
        Self::new(
            mass,
            2.0 * std::f64::consts::PI * f0_hz,
            quality,
            temperature,
            damping,
        )
    }

    /// Mechanical damping rate Gamma_m = Omega0 / Q, rad/s.
    pub fn gamma_m(&self) -> f64 {
        self.omega0 / self.quality
    }

    /// Intrinsic spring constant K_m = m Omega0^2, N/m.
    pub fn spring_constant(&self) -> f64 {
        self.mass * self.omega0 * self.omega0
    }

    /// Zero-point displacement spread x_zpf = sqrt(hbar / (2 m Omega0)), m.
    pub fn x_zpf(&self) -> f64 {
        (HBAR / (2.0 * self.mass * self.omega0)).sqrt()
    }

    /// Mechanical susceptibility chi(Omega) = 1 / (m (Omega0^2 - Omega^2 - i Gamma_m Omega)).
    ///
    /// Units m/N. `omega` must be non-negative; negative frequencies are the
    /// complex conjugate by construction and are rejected to keep spectra
    /// one-sided.
    pub fn susceptibility(&self, omega: f64) -> Result<Complex64> {
        if !(omega >= 0.0) || !omega.is_finite() {
            return Err(Error::invalid(
                "omega",
                format!("must be non-negative, got {omega}"),
            ));
        }
        let denom = Complex64::new(
            self.omega0 * self.omega0 - omega * omega,
            -self.gamma_m() * omega,
        );
        Ok(1.0 / (self.mass * denom))
    }

    /// Thermal force spectral density, N^2/Hz (one-sided), at `omega` rad/s.
    ///
    /// Viscous: 4 kB T m Gamma_m, flat. Structural: scaled by Omega0/Omega,
    /// which diverges at DC and is rejected there.
    pub fn thermal_force_psd(&self, omega: f64) -> Result<f64> {
        if !omega.is_finite() || omega < 0.0 {
            return Err(Error::invalid(
                "omega",
                format!("must be non-negative, got {omega}"),
            ));
        }
        let viscous = 4.0 * K_BOLTZMANN * self.temperature * self.mass * self.gamma_m();
        match self.damping {
            DampingModel::Viscous => Ok(viscous),
            DampingModel::Structural => {
                if omega == 0.0 {
                    return Err(Error::StructuralDc);
                }
                Ok(viscous * self.omega0 / omega)
            }
        }
    }

    /// Thermal displacement spectral density |chi|^2 * S_F, m^2/Hz (one-sided).
    pub fn thermal_displacement_psd(&self, omega: f64) -> Result<f64> {
        let chi = self.susceptibility(omega)?;
        Ok(chi.norm_sqr() * self.thermal_force_psd(omega)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

    fn paper_oscillator() -> MechanicalOscillator {
        MechanicalOscillator::from_frequency_hz(5e-11, 876.0, 25_000.0, 29.0, DampingModel::Structural)
            .unwrap()
    }

    #[test]
    fn derived_quantities_match_hand_values() {
        let osc = paper_oscillator();
        assert_relative_eq!(osc.spring_constant(), 1.5147e-3, max_relative = 1e-3);
        assert_relative_eq!(osc.x_zpf(), 1.38419e-14, max_relative = 1e-4);
        assert_relative_eq!(osc.gamma_m(), TWO_PI * 876.0 / 25_000.0, max_relative = 1e-12);
    }

    #[test]
    fn susceptibility_on_resonance_is_imaginary_with_q_gain() {
        let osc = paper_oscillator();
        let chi = osc.susceptibility(osc.omega0).unwrap();
        // On resonance chi = 1 / (-i Gamma m Omega0) = +i Q / (m Omega0^2):
        // purely imaginary, Q-enhanced.
        assert!(chi.re.abs() < 1e-12 * chi.im.abs());
        assert_relative_eq!(
            chi.im,
            osc.quality / osc.spring_constant(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn susceptibility_dc_limit_is_inverse_spring_constant() {
        let osc = paper_oscillator();
        let chi = osc.susceptibility(0.0).unwrap();
        assert_relative_eq!(chi.re, 1.0 / osc.spring_constant(), max_relative = 1e-12);
        assert_eq!(chi.im, 0.0);
    }

    #[test]
    fn susceptibility_free_mass_limit() {
        // Far above resonance |chi| approaches 1/(m Omega^2) to within 1%.
        let osc = paper_oscillator();
        let omega = 10.0 * osc.quality.sqrt() * osc.omega0;
        let chi = osc.susceptibility(omega).unwrap();
        let free = 1.0 / (osc.mass * omega * omega);
        assert_relative_eq!(chi.norm(), free, max_relative = 0.01);
    }

    #[test]
    fn thermal_viscous_on_resonance_matches_closed_form() {
        // S_x(Omega0) = 4 kB T Q / (m Omega0^3) for viscous damping.
        let osc = MechanicalOscillator::from_frequency_hz(
            5e-11,
            876.0,
            25_000.0,
            29.0,
            DampingModel::Viscous,
        )
        .unwrap();
        let got = osc.thermal_displacement_psd(osc.omega0).unwrap();
        let expect = 4.0 * K_BOLTZMANN * 29.0 * 25_000.0 / (5e-11 * osc.omega0.powi(3));
        assert_relative_eq!(got, expect, max_relative = 1e-10);
        assert_relative_eq!(got, 4.8024e-18, max_relative = 1e-3);
    }

    #[test]
    fn structural_equals_viscous_on_resonance() {
        let viscous = MechanicalOscillator::from_frequency_hz(
            5e-11,
            876.0,
            25_000.0,
            29.0,
            DampingModel::Viscous,
        )
        .unwrap();
        let structural = paper_oscillator();
        let a = viscous.thermal_force_psd(viscous.omega0).unwrap();
        let b = structural.thermal_force_psd(structural.omega0).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn structural_damping_rejects_dc() {
        let osc = paper_oscillator();
        assert!(matches!(
            osc.thermal_force_psd(0.0),
            Err(Error::StructuralDc)
        ));
    }

    #[test]
    fn zero_temperature_kills_thermal_noise() {
        let osc =
            MechanicalOscillator::from_frequency_hz(5e-11, 876.0, 25_000.0, 0.0, DampingModel::Viscous)
                .unwrap();
        assert_eq!(osc.thermal_displacement_psd(osc.omega0).unwrap(), 0.0);
    }

    #[test]
    fn constructor_rejects_bad_parameters() {
        for (m, f0, q, t) in [
            (-1.0, 876.0, 25e3, 29.0),
            (5e-11, 0.0, 25e3, 29.0),
            (5e-11, 876.0, -2.0, 29.0),
            (5e-11, 876.0, 25e3, -1.0),
            (f64::NAN, 876.0, 25e3, 29.0),
        ] {
            assert!(
                MechanicalOscillator::from_frequency_hz(m, f0, q, t, DampingModel::Viscous).is_err()
            );
        }
    }

    proptest! {
        // Reversing the sign of the damping conjugates the response: the
        // susceptibility has no spurious asymmetry beyond the loss term.
        #[test]
        fn susceptibility_damping_conjugation(
            f in 1.0f64..1e6,
            q in 1.0f64..1e6,
        ) {
            let osc = MechanicalOscillator::from_frequency_hz(
                5e-11, 876.0, q, 1.0, DampingModel::Viscous).unwrap();
            let omega = TWO_PI * f;
            let chi = osc.susceptibility(omega).unwrap();
            let flipped = 1.0 / (osc.mass
                * num_complex::Complex64::new(
                    osc.omega0 * osc.omega0 - omega * omega,
                    osc.gamma_m() * omega,
                ));
            prop_assert!((chi.conj() - flipped).norm() <= 1e-12 * chi.norm());
        }

        // |chi| is maximized in a neighbourhood of the resonance.
        #[test]
        fn susceptibility_peaks_near_resonance(scale in 0.2f64..5.0) {
            let osc = paper_oscillator();
            let omega = osc.omega0 * scale;
            let peak = osc.susceptibility(osc.omega0).unwrap().norm();
            let off = osc.susceptibility(omega).unwrap().norm();
            prop_assert!(off <= peak * (1.0 + 1e-9));
        }
    }
}
