//! TOML run configuration.
//!
//! One file describes a complete run: the mechanical oscillator, the cavity
//! operating point, budget options, the analysis grid, and optionally a
//! detuning sweep, a fringe calibration, and a synthetic two-channel demo
//! scenario. Unknown keys are rejected everywhere; a typo in a physics
//! parameter must not silently fall back to a default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::budget::{BudgetMode, BudgetOptions, MeasurementRate};
use crate::cavity::CavityConfig;
use crate::error::Error;
use crate::oscillator::{DampingModel, MechanicalOscillator};
use crate::spectrum::FrequencyGrid;
use crate::synth::{AsdModel, SignalModel};
use crate::Result;

/// Relative (1-sigma) calibration uncertainties quoted alongside budget
/// outputs. The combined default is the quadrature sum of the other two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UncertaintyAnnotations {
    pub input_power_rel: f64,
    pub transmission_rel: f64,
    pub combined_rel: f64,
}

impl Default for UncertaintyAnnotations {
    fn default() -> Self {
        Self {
            input_power_rel: 0.01,
            transmission_rel: 0.05,
            combined_rel: 0.051,
        }
    }
}

impl UncertaintyAnnotations {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("input_power_rel", self.input_power_rel),
            ("transmission_rel", self.transmission_rel),
            ("combined_rel", self.combined_rel),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "uncertainty",
                    reason: format!("{name} must be non-negative, got {v}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorSection {
    pub mass_kg: f64,
    pub frequency_hz: f64,
    pub quality: f64,
    pub temperature_k: f64,
    pub damping: DampingModel,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub length_m: f64,
    pub wavelength_m: f64,
    pub transmission: f64,
    pub input_power_w: f64,
    pub detuning: f64,
    /// Independently measured cavity half linewidth, if available; reported
    /// against the transmission-implied value as a consistency annotation.
    pub measured_hwhm_hz: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetSection {
    pub mode: BudgetMode,
    /// Fixed measurement rate in rad/s; absent means the self-calibrating
    /// choice.
    pub measurement_rate_rad_s: Option<f64>,
    pub spring_quality: f64,
}

impl Default for BudgetSection {
    fn default() -> Self {
        let d = BudgetOptions::default();
        Self {
            mode: d.mode,
            measurement_rate_rad_s: None,
            spring_quality: d.spring_quality,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridSpacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub min_hz: f64,
    pub max_hz: f64,
    pub points: usize,
    pub spacing: GridSpacing,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub targets_hz: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeSection {
    /// Second null of the delay line's frequency-noise response.
    pub f_null_hz: f64,
    pub offset_v: f64,
    pub amplitude_v: f64,
    pub lock_voltage_v: f64,
}

/// One amplitude-density model: exactly one of `flat` or `breakpoints`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsdSpec {
    pub flat: Option<f64>,
    pub breakpoints: Option<Vec<(f64, f64)>>,
}

impl AsdSpec {
    pub fn build(&self) -> Result<AsdModel> {
        match (self.flat, &self.breakpoints) {
            (Some(v), None) => AsdModel::flat(v),
            (None, Some(pts)) => AsdModel::from_breakpoints(pts.clone()),
            _ => Err(Error::InvalidParameter {
                name: "asd",
                reason: "specify exactly one of `flat` or `breakpoints`".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoSection {
    pub fs_hz: f64,
    pub duration_s: f64,
    pub segment_len: usize,
    pub seed: u64,
    pub gain1: f64,
    pub common: AsdSpec,
    pub intrinsic1: AsdSpec,
    pub noise2: AsdSpec,
}

impl DemoSection {
    pub fn signal_model(&self) -> Result<SignalModel> {
        let model = SignalModel {
            common: self.common.build()?,
            intrinsic1: self.intrinsic1.build()?,
            noise2: self.noise2.build()?,
            gain1: self.gain1,
        };
        model.validate()?;
        Ok(model)
    }

    /// Sample count implied by duration; must come out even.
    pub fn samples(&self) -> Result<usize> {
        if !(self.fs_hz > 0.0) || !(self.duration_s > 0.0) {
            return Err(Error::InvalidParameter {
                name: "demo",
                reason: format!(
                    "fs_hz and duration_s must be positive (got {}, {})",
                    self.fs_hz, self.duration_s
                ),
            });
        }
        let n = (self.fs_hz * self.duration_s).round();
        if !n.is_finite() || n < 16.0 || n > 1e9 {
            return Err(Error::InvalidParameter {
                name: "demo",
                reason: format!("record length {n} samples is out of range"),
            });
        }
        let n = n as usize;
        if n % 2 != 0 {
            return Err(Error::InvalidParameter {
                name: "demo",
                reason: format!("record length must be even, got {n}"),
            });
        }
        Ok(n)
    }
}

/// Root of the TOML file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub oscillator: OscillatorSection,
    pub cavity: CavitySection,
    #[serde(default)]
    pub budget: BudgetSection,
    pub grid: GridSection,
    #[serde(default)]
    pub uncertainty: UncertaintyAnnotations,
    pub sweep: Option<SweepSection>,
    pub fringe: Option<FringeSection>,
    pub demo: Option<DemoSection>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::MalformedInput {
            reason: format!("config: {e}"),
        })?;
        cfg.uncertainty.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn oscillator(&self) -> Result<MechanicalOscillator> {
        let o = &self.oscillator;
        MechanicalOscillator::from_frequency_hz(
            o.mass_kg,
            o.frequency_hz,
            o.quality,
            o.temperature_k,
            o.damping,
        )
    }

    pub fn cavity(&self) -> Result<CavityConfig> {
        let c = &self.cavity;
        CavityConfig::new(
            c.length_m,
            c.wavelength_m,
            c.transmission,
            c.input_power_w,
            c.detuning,
        )
    }

    pub fn budget_options(&self) -> BudgetOptions {
        BudgetOptions {
            mode: self.budget.mode,
            rate: match self.budget.measurement_rate_rad_s {
                Some(r) => MeasurementRate::Fixed(r),
                None => MeasurementRate::Auto,
            },
            spring_quality: self.budget.spring_quality,
        }
    }

    pub fn grid(&self) -> Result<FrequencyGrid> {
        let g = &self.grid;
        match g.spacing {
            GridSpacing::Log => FrequencyGrid::log_spaced(g.min_hz, g.max_hz, g.points),
            GridSpacing::Linear => FrequencyGrid::linear_spaced(g.min_hz, g.max_hz, g.points),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::BudgetMode;

    const MINIMAL: &str = r#"
        [oscillator]
        mass_kg = 5e-11
        frequency_hz = 876.0
        quality = 25000.0
        temperature_k = 29.0
        damping = "structural"

        [cavity]
        length_m = 0.01
        wavelength_m = 1.064e-6
        transmission = 7.2053e-4
        input_power_w = 1.3570e-4
        detuning = -3.1

        [grid]
        min_hz = 2e4
        max_hz = 2e5
        points = 200
        spacing = "log"
    "#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.budget.mode, BudgetMode::Auto);
        assert_eq!(cfg.budget.spring_quality, 8.0);
        assert!(cfg.budget.measurement_rate_rad_s.is_none());
        assert_eq!(cfg.uncertainty.input_power_rel, 0.01);
        assert_eq!(cfg.uncertainty.transmission_rel, 0.05);
        assert_eq!(cfg.uncertainty.combined_rel, 0.051);
        assert!(cfg.sweep.is_none() && cfg.fringe.is_none() && cfg.demo.is_none());

        let osc = cfg.oscillator().unwrap();
        assert_eq!(osc.mass, 5e-11);
        let cav = cfg.cavity().unwrap();
        assert_eq!(cav.detuning, -3.1);
        let grid = cfg.grid().unwrap();
        assert_eq!(grid.len(), 200);
        let opts = cfg.budget_options();
        assert_eq!(opts.rate, MeasurementRate::Auto);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("mass_kg", "mass_grams");
        assert!(matches!(
            RunConfig::parse(&bad),
            Err(Error::MalformedInput { .. })
        ));
        let extra = format!("{MINIMAL}\n[budget]\nmode = \"auto\"\nturbo = true\n");
        assert!(RunConfig::parse(&extra).is_err());
    }

    #[test]
    fn sections_round_trip() {
        let full = format!(
            "{MINIMAL}\n\
             [budget]\nmode = \"free-mass\"\nmeasurement_rate_rad_s = 2.5e5\nspring_quality = 12.0\n\n\
             [sweep]\ntargets_hz = [41.3e3, 67.8e3]\n\n\
             [fringe]\nf_null_hz = 4.0844e6\noffset_v = 0.0\namplitude_v = 1.0\nlock_voltage_v = 0.0\n\n\
             [demo]\nfs_hz = 1e6\nduration_s = 0.1\nsegment_len = 4096\nseed = 42\ngain1 = 2.0\n\
             common = {{ flat = 6e-7 }}\n\
             intrinsic1 = {{ breakpoints = [[1e3, 8e-8], [6.2e4, 2.5e-7]] }}\n\
             noise2 = {{ flat = 2e-7 }}\n"
        );
        let cfg = RunConfig::parse(&full).unwrap();
        assert_eq!(cfg.budget.mode, BudgetMode::FreeMass);
        assert_eq!(
            cfg.budget_options().rate,
            MeasurementRate::Fixed(2.5e5)
        );
        assert_eq!(cfg.sweep.unwrap().targets_hz.len(), 2);
        let demo = cfg.demo.unwrap();
        assert_eq!(demo.samples().unwrap(), 100_000);
        let model = demo.signal_model().unwrap();
        assert_eq!(model.gain1, 2.0);
        assert_eq!(model.common.asd_at(1.0), 6e-7);
    }

    #[test]
    fn asd_spec_needs_exactly_one_form() {
        let both = AsdSpec {
            flat: Some(1.0),
            breakpoints: Some(vec![(1.0, 1.0)]),
        };
        assert!(both.build().is_err());
        let neither = AsdSpec {
            flat: None,
            breakpoints: None,
        };
        assert!(neither.build().is_err());
    }

    #[test]
    fn odd_sample_counts_are_rejected() {
        let demo = DemoSection {
            fs_hz: 1e3,
            duration_s: 0.101,
            segment_len: 64,
            seed: 1,
            gain1: 1.0,
            common: AsdSpec {
                flat: Some(1.0),
                breakpoints: None,
            },
            intrinsic1: AsdSpec {
                flat: Some(0.0),
                breakpoints: None,
            },
            noise2: AsdSpec {
                flat: Some(0.0),
                breakpoints: None,
            },
        };
        assert!(demo.samples().is_err());
    }

    #[test]
    fn load_reads_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, MINIMAL).unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.grid.points, 200);
        assert!(RunConfig::load(&dir.path().join("missing.toml")).is_err());
    }

    #[test]
    fn negative_uncertainties_are_rejected() {
        let bad = format!("{MINIMAL}\n[uncertainty]\ninput_power_rel = -0.01\n");
        assert!(RunConfig::parse(&bad).is_err());
    }
}
