//! Frequency grids and unit-tagged one-sided spectra.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Strictly increasing grid of positive frequencies, Hz.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyGrid {
    values: Vec<f64>,
}

impl FrequencyGrid {
    /// Wrap an explicit list of frequencies. Must be finite, positive and
    /// strictly increasing, with at least two points.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid(
                "grid",
                format!("need at least 2 points, got {}", values.len()),
            ));
        }
        for (i, &f) in values.iter().enumerate() {
            if !(f > 0.0) || !f.is_finite() {
                return Err(Error::invalid(
                    "grid",
                    format!("frequency at index {i} must be positive and finite, got {f}"),
                ));
            }
            if i > 0 && f <= values[i - 1] {
                return Err(Error::invalid(
                    "grid",
                    format!("frequencies must be strictly increasing at index {i}"),
                ));
            }
        }
        Ok(Self { values })
    }

    /// `points` frequencies spaced logarithmically over [f_min, f_max].
    pub fn log_spaced(f_min: f64, f_max: f64, points: usize) -> Result<Self> {
        if !(f_min > 0.0) || !(f_max > f_min) || !f_max.is_finite() {
            return Err(Error::invalid(
                "grid",
                format!("need 0 < f_min < f_max, got [{f_min}, {f_max}]"),
            ));
        }
        if points < 2 {
            return Err(Error::invalid("grid", "need at least 2 points"));
        }
        let (a, b) = (f_min.ln(), f_max.ln());
        let values = (0..points)
            .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
            .collect();
        Self::new(values)
    }

    /// `points` frequencies spaced linearly over [f_min, f_max].
    pub fn linear_spaced(f_min: f64, f_max: f64, points: usize) -> Result<Self> {
        if !(f_min > 0.0) || !(f_max > f_min) || !f_max.is_finite() {
            return Err(Error::invalid(
                "grid",
                format!("need 0 < f_min < f_max, got [{f_min}, {f_max}]"),
            ));
        }
        if points < 2 {
            return Err(Error::invalid("grid", "need at least 2 points"));
        }
        let step = (f_max - f_min) / (points - 1) as f64;
        let values = (0..points).map(|i| f_min + step * i as f64).collect();
        Self::new(values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// Physical unit of a spectrum's values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralUnit {
    /// Displacement amplitude density, m/rtHz.
    AsdMetersPerRtHz,
    /// Displacement power density, m^2/Hz.
    PsdMetersSqPerHz,
    /// Voltage amplitude density, V/rtHz.
    AsdVoltsPerRtHz,
    /// Voltage power density, V^2/Hz.
    PsdVoltsSqPerHz,
    /// Frequency amplitude density, Hz/rtHz.
    AsdHzPerRtHz,
    /// Unitless linear ratio.
    DimensionlessRatio,
    /// Power ratio in decibels.
    DbPowerRatio,
}

impl SpectralUnit {
    /// Amplitude-density units (values are square roots of power densities).
    pub fn is_asd(self) -> bool {
        matches!(
            self,
            SpectralUnit::AsdMetersPerRtHz | SpectralUnit::AsdVoltsPerRtHz | SpectralUnit::AsdHzPerRtHz
        )
    }

    /// Power-density units.
    pub fn is_psd(self) -> bool {
        matches!(
            self,
            SpectralUnit::PsdMetersSqPerHz | SpectralUnit::PsdVoltsSqPerHz
        )
    }

    /// The power-density unit corresponding to an amplitude density.
    fn psd_partner(self) -> Option<SpectralUnit> {
        match self {
            SpectralUnit::AsdMetersPerRtHz => Some(SpectralUnit::PsdMetersSqPerHz),
            SpectralUnit::AsdVoltsPerRtHz => Some(SpectralUnit::PsdVoltsSqPerHz),
            _ => None,
        }
    }

    fn asd_partner(self) -> Option<SpectralUnit> {
        match self {
            SpectralUnit::PsdMetersSqPerHz => Some(SpectralUnit::AsdMetersPerRtHz),
            SpectralUnit::PsdVoltsSqPerHz => Some(SpectralUnit::AsdVoltsPerRtHz),
            _ => None,
        }
    }

    /// Column-header suffix used by the CSV writers.
    pub fn column_suffix(self) -> &'static str {
        match self {
            SpectralUnit::AsdMetersPerRtHz => "asd_m_per_rthz",
            SpectralUnit::PsdMetersSqPerHz => "psd_m2_per_hz",
            SpectralUnit::AsdVoltsPerRtHz => "asd_v_per_rthz",
            SpectralUnit::PsdVoltsSqPerHz => "psd_v2_per_hz",
            SpectralUnit::AsdHzPerRtHz => "asd_hz_per_rthz",
            SpectralUnit::DimensionlessRatio => "ratio",
            SpectralUnit::DbPowerRatio => "ratio_db_power",
        }
    }
}

/// One-sided spectrum sampled on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSpectrum {
    pub grid: FrequencyGrid,
    pub values: Vec<f64>,
    pub unit: SpectralUnit,
    pub label: String,
}

impl NoiseSpectrum {
    /// Build a spectrum, enforcing length agreement and non-negativity for
    /// amplitude/power density units (dB and raw ratios may be signed).
    pub fn new(
        grid: FrequencyGrid,
        values: Vec<f64>,
        unit: SpectralUnit,
        label: impl Into<String>,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                reason: format!("{} values on a {}-point grid", values.len(), grid.len()),
            });
        }
        if unit.is_asd() || unit.is_psd() {
            for (i, &v) in values.iter().enumerate() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::invalid(
                        "values",
                        format!("density values must be finite and >= 0; index {i} is {v}"),
                    ));
                }
            }
        } else {
            for (i, &v) in values.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::invalid(
                        "values",
                        format!("values must be finite; index {i} is {v}"),
                    ));
                }
            }
        }
        Ok(Self {
            grid,
            values,
            unit,
            label: label.into(),
        })
    }

    /// Convert between amplitude and power density of the same quantity.
    /// Squares or square-roots the values; other conversions are rejected.
    pub fn converted_to(&self, target: SpectralUnit) -> Result<NoiseSpectrum> {
        if target == self.unit {
            return Ok(self.clone());
        }
        let values: Vec<f64> = if self.unit.psd_partner() == Some(target) {
            self.values.iter().map(|v| v * v).collect()
        } else if self.unit.asd_partner() == Some(target) {
            self.values.iter().map(|v| v.sqrt()).collect()
        } else {
            return Err(Error::UnitConversion {
                reason: format!("no conversion from {:?} to {:?}", self.unit, target),
            });
        };
        NoiseSpectrum::new(self.grid.clone(), values, target, self.label.clone())
    }

    /// Scale every value by a positive factor (unit-preserving).
    pub fn scaled(&self, factor: f64, label: impl Into<String>) -> Result<NoiseSpectrum> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::invalid(
                "factor",
                format!("must be positive, got {factor}"),
            ));
        }
        NoiseSpectrum::new(
            self.grid.clone(),
            self.values.iter().map(|v| v * factor).collect(),
            self.unit,
            label,
        )
    }
}
