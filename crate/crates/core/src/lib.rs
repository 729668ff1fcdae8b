//! Quantum-limited displacement measurement with a detuned optical cavity.
//!
//! The crate models a small mechanical oscillator read out by a detuned
//! Fabry-Perot cavity. Detuning turns circulating radiation pressure into an
//! optical spring that shifts the mechanical resonance by orders of magnitude,
//! and the same detuning fixes the ratio of back-action noise to the free-mass
//! standard quantum limit at the shifted resonance. On top of that core sit:
//!
//! * noise budgets (quantum + thermal against the SQL) with sub-SQL band
//!   extraction and detuning sweeps ([`budget`]),
//! * Welch spectral estimation for two-channel records ([`welch`]),
//! * coherence-based subtraction of laser frequency noise ([`subtract`]),
//! * fringe calibration of a fiber delay-line frequency discriminator
//!   ([`fringe`]),
//! * deterministic synthesis of two-channel test records with closed-form
//!   reference spectra ([`synth`]).
//!
//! The `optospring` binary exposes the pipeline as `budget`, `sweep`,
//! `calibrate-demo` and `fringe-fit` subcommands driven by a TOML config.

pub mod budget;
pub mod cavity;
pub mod cli;
pub mod config;
pub mod constants;
pub mod error;
pub mod fringe;
pub mod io;
pub mod oscillator;
pub mod quantum;
pub mod spectrum;
pub mod subtract;
pub mod synth;
pub mod welch;

pub use budget::{
    build_budget, detuning_for_os_frequency, sub_sql_band, sweep_detunings, Branch, BudgetMode,
    BudgetOptions, BudgetReport, MeasurementRate, SubSqlBand, SweepEntry,
};
pub use cavity::{CavityConfig, OpticalSpringState};
pub use constants::PhysicalConstants;
pub use error::Error;
pub use fringe::{
    fit_fringe, fringe_model, fringe_slope, operating_phase, tau_from_null, FringeCalibration,
    FringeFit, FringeSweep,
};
pub use oscillator::{DampingModel, MechanicalOscillator};
pub use quantum::MeasurementModel;
pub use spectrum::{FrequencyGrid, NoiseSpectrum, SpectralUnit};
pub use subtract::{frequency_noise_subtract, hz_to_meters, volts_to_hz, BinFlag, SubtractionResult};
pub use synth::{generate_timeseries, oracle_spectra, shot_noise_asd, AsdModel, SignalModel};
pub use welch::{cross_spectra, welch_psd, TimeSeries, TwoChannelSpectra, WelchConfig, Window};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
