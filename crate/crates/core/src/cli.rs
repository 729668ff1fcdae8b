//! Command-line front end.
//!
//! Four subcommands over one TOML config:
//!
//! * `budget`: noise budget at the configured operating point.
//! * `sweep`: re-solve the detuning for each target spring frequency and
//!   budget each solved operating point.
//! * `calibrate-demo`: synthesize the two-channel scenario, estimate
//!   spectra, run the coherent subtraction, and calibrate the residual into
//!   displacement through the fringe model.
//! * `fringe-fit`: fit a measured fringe sweep CSV.
//!
//! Exit codes: 0 on success, 1 on any domain or input failure (with a
//! one-line JSON description on stderr), 2 on command-line usage errors.
//! Outputs are deterministic: rerunning a command with the same config
//! produces byte-identical files.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::budget::{
    build_budget, sweep_detunings, BudgetMode, BudgetReport, SpringSummary, SubSqlBand,
};
use crate::config::{RunConfig, UncertaintyAnnotations};
use crate::error::Error;
use crate::fringe::{fit_fringe, tau_from_null, FringeCalibration, FringeFit};
use crate::io;
use crate::subtract::{frequency_noise_subtract, hz_to_meters, volts_to_hz, BinFlag};
use crate::synth::generate_timeseries;
use crate::welch::{cross_spectra, WelchConfig, Window};
use crate::Result;

#[derive(Debug, Parser)]
#[command(
    name = "optospring",
    version,
    about = "Optical-spring noise budgets and two-channel calibration tools"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Noise budget at the configured operating point.
    Budget {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Directory for budget.csv and budget.json (created if missing).
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Budget every spring-frequency target in [sweep], re-solving the
    /// detuning for each.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Directory for sweep.json and one CSV per reachable target.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Synthesize the demo scenario, subtract the common mode, and calibrate
    /// the residual into displacement.
    CalibrateDemo {
        #[arg(long)]
        config: PathBuf,
        /// Directory for subtraction.csv and calibration.json.
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write the raw synthesized channels to this binary file.
        #[arg(long)]
        timeseries: Option<PathBuf>,
    },
    /// Fit a fringe sweep CSV (omega_rad_s, volts_v).
    FringeFit {
        #[arg(long)]
        input: PathBuf,
        /// Write the fit JSON here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also evaluate the lock phase and gain at this voltage.
        #[arg(long)]
        lock_voltage: Option<f64>,
    },
}

/// Stable machine-readable tag for each error variant.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter { .. } => "invalid_parameter",
        Error::AntiSpring { .. } => "anti_spring",
        Error::NonRestoringDetuning { .. } => "non_restoring_detuning",
        Error::StructuralDc => "structural_dc",
        Error::FringeDomain { .. } => "fringe_domain",
        Error::TurningPoint { .. } => "turning_point",
        Error::PartialFringe { .. } => "partial_fringe",
        Error::DegenerateSweep { .. } => "degenerate_sweep",
        Error::TooShort { .. } => "too_short",
        Error::ChannelMismatch { .. } => "channel_mismatch",
        Error::GridMismatch { .. } => "grid_mismatch",
        Error::TargetUnreachable { .. } => "target_unreachable",
        Error::UnitConversion { .. } => "unit_conversion",
        Error::MalformedInput { .. } => "malformed_input",
        Error::Io(_) => "io",
    }
}

/// One-line JSON error for stderr.
pub fn error_json(e: &Error) -> String {
    serde_json::json!({
        "error": { "kind": error_kind(e), "message": e.to_string() }
    })
    .to_string()
}

/// Run a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Budget { config, out_dir } => cmd_budget(&config, &out_dir),
        Command::Sweep { config, out_dir } => cmd_sweep(&config, &out_dir),
        Command::CalibrateDemo {
            config,
            out_dir,
            timeseries,
        } => cmd_calibrate_demo(&config, &out_dir, timeseries.as_deref()),
        Command::FringeFit {
            input,
            output,
            lock_voltage,
        } => cmd_fringe_fit(&input, output.as_deref(), lock_voltage),
    }
}

#[derive(Debug, Serialize)]
struct GridEcho {
    min_hz: f64,
    max_hz: f64,
    points: usize,
}

#[derive(Debug, Serialize)]
struct BudgetSummary {
    mode: BudgetMode,
    detuning: f64,
    input_power_w: f64,
    transmission: f64,
    circulating_power_w: f64,
    implied_hwhm_hz: f64,
    measured_hwhm_hz: Option<f64>,
    /// (configured - linewidth-implied) / linewidth-implied transmission.
    transmission_mismatch_rel: Option<f64>,
    spring: Option<SpringSummary>,
    band: Option<SubSqlBand>,
    /// Quantum-limited dip level under the self-calibrating rate rule,
    /// `10 log10(2/|detuning|)` dB; thermal noise can only raise the dip.
    quantum_dip_bound_db: Option<f64>,
    uncertainty: UncertaintyAnnotations,
    grid: GridEcho,
    files: Vec<String>,
}

fn budget_summary(
    cfg: &RunConfig,
    report: &BudgetReport,
    files: Vec<String>,
) -> Result<BudgetSummary> {
    let cav = cfg.cavity()?;
    let mismatch = match cfg.cavity.measured_hwhm_hz {
        Some(hwhm) => Some(cav.transmission_mismatch(hwhm)?),
        None => None,
    };
    let bound = match report.mode {
        BudgetMode::FreeMass => Some(10.0 * (2.0 / (-cav.detuning)).log10()),
        _ => None,
    };
    Ok(BudgetSummary {
        mode: report.mode,
        detuning: cav.detuning,
        input_power_w: cav.input_power,
        transmission: cav.transmission,
        circulating_power_w: cav.circulating_power(),
        implied_hwhm_hz: cav.linewidth_hwhm(),
        measured_hwhm_hz: cfg.cavity.measured_hwhm_hz,
        transmission_mismatch_rel: mismatch,
        spring: report.spring,
        band: report.band,
        quantum_dip_bound_db: bound,
        uncertainty: cfg.uncertainty,
        grid: GridEcho {
            min_hz: cfg.grid.min_hz,
            max_hz: cfg.grid.max_hz,
            points: cfg.grid.points,
        },
        files,
    })
}

fn cmd_budget(config: &Path, out_dir: &Path) -> Result<i32> {
    let cfg = RunConfig::load(config)?;
    let report = build_budget(
        &cfg.cavity()?,
        &cfg.oscillator()?,
        &cfg.budget_options(),
        &cfg.grid()?,
    )?;
    std::fs::create_dir_all(out_dir)?;
    io::write_budget_csv(&out_dir.join("budget.csv"), &report)?;
    let summary = budget_summary(&cfg, &report, vec!["budget.csv".into(), "budget.json".into()])?;
    io::write_json(&out_dir.join("budget.json"), &summary)?;
    println!("wrote {}", out_dir.join("budget.csv").display());
    println!("wrote {}", out_dir.join("budget.json").display());
    Ok(0)
}

#[derive(Debug, Serialize)]
struct SweepEntryJson {
    target_hz: f64,
    detuning: Option<f64>,
    f_os_hz: Option<f64>,
    band: Option<SubSqlBand>,
    csv: Option<String>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    duplicates_removed: usize,
    entries: Vec<SweepEntryJson>,
    files: Vec<String>,
}

fn dedup_targets(targets: &[f64]) -> (Vec<f64>, usize) {
    let mut seen: Vec<f64> = Vec::new();
    for &t in targets {
        if !seen.iter().any(|s| s.to_bits() == t.to_bits()) {
            seen.push(t);
        }
    }
    let removed = targets.len() - seen.len();
    (seen, removed)
}

fn cmd_sweep(config: &Path, out_dir: &Path) -> Result<i32> {
    let cfg = RunConfig::load(config)?;
    let sweep_cfg = cfg.sweep.as_ref().ok_or_else(|| Error::MalformedInput {
        reason: "config has no [sweep] section".into(),
    })?;
    let (targets, duplicates_removed) = dedup_targets(&sweep_cfg.targets_hz);
    if duplicates_removed > 0 {
        eprintln!("warning: removed {duplicates_removed} duplicate sweep target(s)");
    }
    let entries = sweep_detunings(
        &targets,
        &cfg.cavity()?,
        &cfg.oscillator()?,
        &cfg.budget_options(),
        &cfg.grid()?,
    );

    std::fs::create_dir_all(out_dir)?;
    let mut ok_entries: Vec<SweepEntryJson> = Vec::new();
    let mut failed_entries: Vec<SweepEntryJson> = Vec::new();
    let mut files = vec!["sweep.json".to_string()];
    let mut failures = 0usize;
    for entry in &entries {
        match &entry.outcome {
            Ok(report) => {
                let name = format!("sweep_{:.0}hz.csv", entry.target_hz);
                io::write_budget_csv(&out_dir.join(&name), report)?;
                files.push(name.clone());
                let spring = report.spring.expect("sweep budgets are free-mass");
                ok_entries.push(SweepEntryJson {
                    target_hz: entry.target_hz,
                    detuning: Some(spring.detuning),
                    f_os_hz: Some(spring.f_os_hz),
                    band: report.band,
                    csv: Some(name),
                    error: None,
                });
            }
            Err(e) => {
                failures += 1;
                eprintln!("warning: target {} Hz skipped: {e}", entry.target_hz);
                failed_entries.push(SweepEntryJson {
                    target_hz: entry.target_hz,
                    detuning: None,
                    f_os_hz: None,
                    band: None,
                    csv: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    // Successes ordered by realized spring frequency; unreachable targets
    // trail in request order.
    ok_entries.sort_by(|a, b| a.f_os_hz.partial_cmp(&b.f_os_hz).unwrap());
    let mut entries_json = ok_entries;
    entries_json.extend(failed_entries);
    let summary = SweepSummary {
        duplicates_removed,
        entries: entries_json,
        files,
    };
    io::write_json(&out_dir.join("sweep.json"), &summary)?;
    println!("wrote {}", out_dir.join("sweep.json").display());
    Ok(if failures > 0 { 1 } else { 0 })
}

#[derive(Debug, Serialize)]
struct FlagCounts {
    ok: usize,
    coherence_floor: usize,
    nonphysical_negative: usize,
}

#[derive(Debug, Serialize)]
struct FringeEcho {
    f_null_hz: f64,
    tau_s: f64,
    offset_v: f64,
    amplitude_v: f64,
    lock_voltage_v: f64,
    phase: f64,
    dv_domega_v_per_rad_s: f64,
    /// Conversion factors of the full chain, volts -> Hz -> meters.
    hz_per_volt: f64,
    meters_per_hz: f64,
    meters_per_volt: f64,
}

#[derive(Debug, Serialize)]
struct CalibrationSummary {
    seed: u64,
    fs_hz: f64,
    samples: usize,
    segment_len: usize,
    n_averages: usize,
    coherence_floor: f64,
    flags: FlagCounts,
    gain1_true: f64,
    gain1_estimated_median: f64,
    fringe: FringeEcho,
    files: Vec<String>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn cmd_calibrate_demo(config: &Path, out_dir: &Path, timeseries: Option<&Path>) -> Result<i32> {
    let cfg = RunConfig::load(config)?;
    let demo = cfg.demo.as_ref().ok_or_else(|| Error::MalformedInput {
        reason: "config has no [demo] section".into(),
    })?;
    let fringe_cfg = cfg.fringe.as_ref().ok_or_else(|| Error::MalformedInput {
        reason: "config has no [fringe] section".into(),
    })?;

    // Created before the optional record dump so a --timeseries path
    // inside the output directory works on a fresh run.
    std::fs::create_dir_all(out_dir)?;

    let model = demo.signal_model()?;
    let n = demo.samples()?;
    let (ch1, ch2) = generate_timeseries(&model, demo.fs_hz, n, demo.seed)?;
    if let Some(path) = timeseries {
        io::write_timeseries_binary(path, &ch1, &ch2)?;
        println!("wrote {}", path.display());
    }

    let welch_cfg = WelchConfig {
        segment_len: demo.segment_len,
        window: Window::Hann,
    };
    let spectra = cross_spectra(&ch1, &ch2, &welch_cfg)?;
    let known_noise: Vec<f64> = spectra
        .grid
        .values()
        .iter()
        .map(|&f| model.noise2.asd_at(f))
        .collect();
    let result = frequency_noise_subtract(&spectra, &known_noise)?;

    let tau = tau_from_null(fringe_cfg.f_null_hz)?;
    let cal = FringeCalibration::from_lock_point(
        fringe_cfg.offset_v,
        fringe_cfg.amplitude_v,
        tau,
        fringe_cfg.lock_voltage_v,
    )?;
    let cavity = cfg.cavity()?;
    let hz_per_volt = volts_to_hz(1.0, cal.dv_domega)?;
    let meters_per_hz = hz_to_meters(1.0, cavity.length, cavity.wavelength);
    let calibrated: Vec<f64> = result
        .residual_asd
        .iter()
        .map(|&v| v * hz_per_volt * meters_per_hz)
        .collect();

    io::write_subtraction_csv(&out_dir.join("subtraction.csv"), &result, Some(&calibrated))?;

    let mut counts = FlagCounts {
        ok: 0,
        coherence_floor: 0,
        nonphysical_negative: 0,
    };
    for f in &result.flags {
        match f {
            BinFlag::Ok => counts.ok += 1,
            BinFlag::CoherenceFloor => counts.coherence_floor += 1,
            BinFlag::NonphysicalNegative => counts.nonphysical_negative += 1,
        }
    }
    let gains: Vec<f64> = result.unflagged().map(|i| result.gain[i]).collect();
    let summary = CalibrationSummary {
        seed: demo.seed,
        fs_hz: demo.fs_hz,
        samples: n,
        segment_len: demo.segment_len,
        n_averages: result.n_averages,
        coherence_floor: crate::subtract::coherence_floor(result.n_averages),
        flags: counts,
        gain1_true: model.gain1,
        gain1_estimated_median: median(gains),
        fringe: FringeEcho {
            f_null_hz: fringe_cfg.f_null_hz,
            tau_s: tau,
            offset_v: cal.offset_v,
            amplitude_v: cal.amplitude_v,
            lock_voltage_v: fringe_cfg.lock_voltage_v,
            phase: cal.phase,
            dv_domega_v_per_rad_s: cal.dv_domega,
            hz_per_volt,
            meters_per_hz,
            meters_per_volt: hz_per_volt * meters_per_hz,
        },
        files: vec!["subtraction.csv".into(), "calibration.json".into()],
    };
    io::write_json(&out_dir.join("calibration.json"), &summary)?;
    println!("wrote {}", out_dir.join("subtraction.csv").display());
    println!("wrote {}", out_dir.join("calibration.json").display());
    Ok(0)
}

#[derive(Debug, Serialize)]
struct LockEcho {
    lock_voltage_v: f64,
    phase: f64,
    dv_domega_v_per_rad_s: f64,
}

#[derive(Debug, Serialize)]
struct FringeFitSummary {
    fit: FringeFit,
    lock: Option<LockEcho>,
}

fn cmd_fringe_fit(input: &Path, output: Option<&Path>, lock_voltage: Option<f64>) -> Result<i32> {
    let sweep = io::read_fringe_sweep_csv(input)?;
    let fit = fit_fringe(&sweep)?;
    let lock = match lock_voltage {
        Some(v) => {
            let cal =
                FringeCalibration::from_lock_point(fit.offset_v, fit.amplitude_v, fit.tau_s, v)?;
            Some(LockEcho {
                lock_voltage_v: v,
                phase: cal.phase,
                dv_domega_v_per_rad_s: cal.dv_domega,
            })
        }
        None => None,
    };
    let summary = FringeFitSummary { fit, lock };
    match output {
        Some(path) => {
            io::write_json(path, &summary)?;
            println!("wrote {}", path.display());
        }
        None => {
            let text =
                serde_json::to_string_pretty(&summary).map_err(|e| Error::MalformedInput {
                    reason: format!("json serialization: {e}"),
                })?;
            println!("{text}");
        }
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_targets_collapse_preserving_order() {
        let (t, removed) = dedup_targets(&[41.3e3, 67.8e3, 41.3e3, 91.4e3, 67.8e3]);
        assert_eq!(t, vec![41.3e3, 67.8e3, 91.4e3]);
        assert_eq!(removed, 2);
    }

    #[test]
    fn error_json_is_one_line_with_kind_and_message() {
        let e = Error::TooShort { len: 3, need: 8 };
        let text = error_json(&e);
        assert!(!text.contains('\n'));
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["error"]["kind"], "too_short");
        assert!(parsed["error"]["message"]
            .as_str()
            .unwrap()
            .contains("3 samples"));
    }

    #[test]
    fn median_handles_even_and_odd_lengths() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(vec![]).is_nan());
    }

    #[test]
    fn cli_parses_all_subcommands() {
        use clap::Parser as _;
        let c = Cli::try_parse_from([
            "optospring",
            "budget",
            "--config",
            "run.toml",
            "--out-dir",
            "out",
        ])
        .unwrap();
        assert!(matches!(c.command, Command::Budget { .. }));
        let c = Cli::try_parse_from([
            "optospring",
            "fringe-fit",
            "--input",
            "sweep.csv",
            "--lock-voltage",
            "0.5",
        ])
        .unwrap();
        match c.command {
            Command::FringeFit { lock_voltage, .. } => assert_eq!(lock_voltage, Some(0.5)),
            _ => panic!("wrong subcommand"),
        }
        assert!(Cli::try_parse_from(["optospring", "nonsense"]).is_err());
    }
}
