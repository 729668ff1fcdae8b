//! Physical constants (SI, 2019 redefinition).

/// Planck constant, J s (exact).
pub const H_PLANCK: f64 = 6.62607015e-34;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = H_PLANCK / (2.0 * std::f64::consts::PI);
/// Speed of light in vacuum, m/s (exact).
pub const C_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant, J/K (exact).
pub const K_BOLTZMANN: f64 = 1.380649e-23;

/// Bundle of the constants the physics layer depends on.
///
/// All operations in this crate use the SI values above; the struct exists so
/// the dependency surface is explicit and checkable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Planck constant, J s.
    pub h: f64,
    /// Speed of light, m/s.
    pub c: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
}

impl PhysicalConstants {
    /// SI values.
    pub const fn si() -> Self {
        Self {
            hbar: HBAR,
            h: H_PLANCK,
            c: C_LIGHT,
            k_b: K_BOLTZMANN,
        }
    }

    /// True when all constants are positive and `h` and `hbar` are mutually
    /// consistent to 1e-12 relative.
    pub fn is_consistent(&self) -> bool {
        let pos = self.hbar > 0.0 && self.h > 0.0 && self.c > 0.0 && self.k_b > 0.0;
        pos && ((self.h / (2.0 * std::f64::consts::PI * self.hbar)) - 1.0).abs() < 1e-12
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::si()
    }
}
