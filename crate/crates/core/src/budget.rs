//! Noise budgets against the standard quantum limit.
//!
//! A budget stacks quantum measurement noise and thermal noise over a
//! frequency grid and compares the total to the SQL appropriate for the
//! measurement mode:
//!
//! * **Resonant mode** treats the bare oscillator: imprecision plus filtered
//!   back-action against `S_SQL = hbar |chi|`.
//! * **Free-mass mode** models the optical-spring readout: all force noises
//!   (back-action, thermal) are referred to an equivalent free mass through
//!   `1/(m Omega^2)`, while readout shot noise is shaped by the spring
//!   response, which amplifies motion near the spring resonance. The
//!   reference is the free-mass SQL `2 hbar / (m Omega^2)`.
//!
//! The free-mass picture is what a tunable sub-SQL band looks like from the
//! outside: at the spring resonance the back-action-to-SQL power ratio is
//! `1/(-delta)`, and moving the resonance (via detuning) moves the band.

use serde::{Deserialize, Serialize};

use crate::cavity::{CavityConfig, OpticalSpringState};
use crate::constants::HBAR;
use crate::error::Error;
use crate::oscillator::MechanicalOscillator;
use crate::quantum::{self, optimal_measurement_rate, MeasurementModel};
use crate::spectrum::{FrequencyGrid, NoiseSpectrum, SpectralUnit};
use crate::Result;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Which SQL reference and quantum model a budget uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetMode {
    /// Pick per grid: free-mass when the whole grid sits above 10 x the bare
    /// resonance (the usual regime for a strong optical spring), resonant
    /// otherwise.
    Auto,
    /// Bare-oscillator budget against hbar |chi|.
    Resonant,
    /// Optical-spring budget referred to a free mass.
    FreeMass,
}

/// Measurement rate selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasurementRate {
    /// Resonant mode: the SQL-saturating rate at every bin. Free-mass mode:
    /// readout imprecision chosen so that, referred to the free mass, shot
    /// noise at the spring resonance equals the back-action contribution
    /// there; the dip depth is then set by detuning and thermal noise alone.
    Auto,
    /// Fixed rate in rad/s for every bin.
    Fixed(f64),
}

/// Knobs for [`build_budget`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetOptions {
    pub mode: BudgetMode,
    pub rate: MeasurementRate,
    /// Quality of the spring resonance used to shape referred shot noise in
    /// free-mass mode (the effective damping of the dressed resonance is not
    /// derived here and enters only through this width).
    pub spring_quality: f64,
}

impl Default for BudgetOptions {
    fn default() -> Self {
        Self {
            mode: BudgetMode::Auto,
            rate: MeasurementRate::Auto,
            spring_quality: 8.0,
        }
    }
}

/// Contiguous region where the total budget dips below the SQL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubSqlBand {
    /// Lower band edge, Hz (interpolated zero crossing, or the grid edge when
    /// the band is clipped).
    pub f_lo_hz: f64,
    /// Upper band edge, Hz.
    pub f_hi_hz: f64,
    /// Grid frequency of the deepest point, Hz.
    pub f_min_hz: f64,
    /// Depth below the SQL at the deepest point, dB (positive).
    pub depth_db: f64,
}

/// Spring operating point recorded in a free-mass budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpringSummary {
    pub k_os_n_per_m: f64,
    pub f_os_hz: f64,
    pub spring_quality: f64,
    pub detuning: f64,
    pub circulating_power_w: f64,
}

/// Full budget over a grid. All densities are displacement amplitude
/// densities; `ratio_to_sql` is the total-to-SQL power ratio in dB. The
/// components satisfy `total^2 = quantum^2 + thermal^2` bin-wise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetReport {
    pub mode: BudgetMode,
    pub quantum: NoiseSpectrum,
    pub thermal: NoiseSpectrum,
    pub total: NoiseSpectrum,
    pub sql: NoiseSpectrum,
    pub ratio_to_sql: NoiseSpectrum,
    pub band: Option<SubSqlBand>,
    pub spring: Option<SpringSummary>,
}

/// Compute a noise budget for one cavity/oscillator operating point.
pub fn build_budget(
    cavity: &CavityConfig,
    osc: &MechanicalOscillator,
    opts: &BudgetOptions,
    grid: &FrequencyGrid,
) -> Result<BudgetReport> {
    if !(opts.spring_quality > 1.0) || !opts.spring_quality.is_finite() {
        return Err(Error::invalid(
            "spring_quality",
            format!("must exceed 1, got {}", opts.spring_quality),
        ));
    }
    if let MeasurementRate::Fixed(r) = opts.rate {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::invalid(
                "rate",
                format!("fixed measurement rate must be positive, got {r}"),
            ));
        }
    }
    let mode = match opts.mode {
        BudgetMode::Auto => {
            let f0 = osc.omega0 / TWO_PI;
            if grid.min() >= 10.0 * f0 {
                BudgetMode::FreeMass
            } else {
                BudgetMode::Resonant
            }
        }
        m => m,
    };
    match mode {
        BudgetMode::FreeMass => free_mass_budget(cavity, osc, opts, grid),
        BudgetMode::Resonant => resonant_budget(osc, opts, grid),
        BudgetMode::Auto => unreachable!("mode resolved above"),
    }
}

fn resonant_budget(
    osc: &MechanicalOscillator,
    opts: &BudgetOptions,
    grid: &FrequencyGrid,
) -> Result<BudgetReport> {
    let n = grid.len();
    let mut quantum = Vec::with_capacity(n);
    let mut thermal = Vec::with_capacity(n);
    let mut sql = Vec::with_capacity(n);
    for &f in grid.values() {
        let omega = TWO_PI * f;
        let rate = match opts.rate {
            MeasurementRate::Auto => optimal_measurement_rate(osc, omega)?,
            MeasurementRate::Fixed(r) => r,
        };
        let meas = MeasurementModel::new(rate)?;
        quantum.push(meas.quantum_noise_psd(osc, omega)?);
        thermal.push(osc.thermal_displacement_psd(omega)?);
        sql.push(quantum::sql_psd(osc, omega)?);
    }
    assemble(BudgetMode::Resonant, grid, quantum, thermal, sql, None)
}

fn free_mass_budget(
    cavity: &CavityConfig,
    osc: &MechanicalOscillator,
    opts: &BudgetOptions,
    grid: &FrequencyGrid,
) -> Result<BudgetReport> {
    if !(cavity.detuning < 0.0) {
        return Err(Error::NonRestoringDetuning {
            detuning: cavity.detuning,
        });
    }
    let spring = OpticalSpringState::new(cavity, osc)?;
    let omega_os = spring.omega_os;
    let gamma_os = omega_os / opts.spring_quality;
    let s_f_ba = quantum::backaction_force_psd(cavity);

    // Readout imprecision in as-measured displacement units.
    let s_imp = match opts.rate {
        MeasurementRate::Auto => {
            let chi_fm_os = 1.0 / (osc.mass * omega_os * omega_os);
            opts.spring_quality * opts.spring_quality * s_f_ba * chi_fm_os * chi_fm_os
        }
        MeasurementRate::Fixed(r) => {
            let x2 = osc.x_zpf() * osc.x_zpf();
            x2 / (4.0 * r)
        }
    };

    let n = grid.len();
    let mut quantum_psd = Vec::with_capacity(n);
    let mut thermal_psd = Vec::with_capacity(n);
    let mut sql_psd = Vec::with_capacity(n);
    for &f in grid.values() {
        let omega = TWO_PI * f;
        let chi_fm = 1.0 / (osc.mass * omega * omega);
        // Spring response referred to a free mass: |H|^2 multiplies flat
        // readout noise; it dips to 1/Q_OS^2 at the spring resonance and
        // rises as (Omega_OS/Omega)^4 far below it.
        let detune2 = omega_os * omega_os - omega * omega;
        let h2 = (detune2 * detune2 + gamma_os * gamma_os * omega * omega)
            / (omega * omega * omega * omega);
        quantum_psd.push(s_f_ba * chi_fm * chi_fm + s_imp * h2);
        thermal_psd.push(osc.thermal_force_psd(omega)? * chi_fm * chi_fm);
        sql_psd.push(2.0 * HBAR * chi_fm);
    }
    let summary = SpringSummary {
        k_os_n_per_m: spring.k_os,
        f_os_hz: omega_os / TWO_PI,
        spring_quality: opts.spring_quality,
        detuning: cavity.detuning,
        circulating_power_w: cavity.circulating_power(),
    };
    assemble(
        BudgetMode::FreeMass,
        grid,
        quantum_psd,
        thermal_psd,
        sql_psd,
        Some(summary),
    )
}

fn assemble(
    mode: BudgetMode,
    grid: &FrequencyGrid,
    quantum_psd: Vec<f64>,
    thermal_psd: Vec<f64>,
    sql_psd: Vec<f64>,
    spring: Option<SpringSummary>,
) -> Result<BudgetReport> {
    let total_psd: Vec<f64> = quantum_psd
        .iter()
        .zip(&thermal_psd)
        .map(|(q, t)| q + t)
        .collect();
    let ratio_db: Vec<f64> = total_psd
        .iter()
        .zip(&sql_psd)
        .map(|(t, s)| 10.0 * (t / s).log10())
        .collect();
    let to_asd = |v: Vec<f64>, label: &str| {
        NoiseSpectrum::new(
            grid.clone(),
            v.into_iter().map(f64::sqrt).collect(),
            SpectralUnit::AsdMetersPerRtHz,
            label,
        )
    };
    let ratio = NoiseSpectrum::new(
        grid.clone(),
        ratio_db,
        SpectralUnit::DbPowerRatio,
        "total_to_sql",
    )?;
    let band = sub_sql_band(&ratio)?;
    Ok(BudgetReport {
        mode,
        quantum: to_asd(quantum_psd, "quantum")?,
        thermal: to_asd(thermal_psd, "thermal")?,
        total: to_asd(total_psd, "total")?,
        sql: to_asd(sql_psd, "sql")?,
        ratio_to_sql: ratio,
        band,
        spring,
    })
}

/// Extract the contiguous sub-SQL band around the deepest point of a dB
/// ratio spectrum. Returns `None` when the spectrum never goes below 0 dB.
///
/// Edges are zero crossings interpolated linearly in (log f, dB); a band
/// running off the grid is clipped to the grid edge.
pub fn sub_sql_band(ratio: &NoiseSpectrum) -> Result<Option<SubSqlBand>> {
    if ratio.unit != SpectralUnit::DbPowerRatio {
        return Err(Error::UnitConversion {
            reason: format!("sub_sql_band needs a dB power ratio, got {:?}", ratio.unit),
        });
    }
    let v = &ratio.values;
    let f = ratio.grid.values();
    let (imin, &vmin) = v
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    if vmin >= 0.0 {
        return Ok(None);
    }
    let crossing = |inside: usize, outside: usize| -> f64 {
        // Linear in (ln f, dB) between the last in-band and first out-of-band
        // bins.
        let (v_in, v_out) = (v[inside], v[outside]);
        let t = (0.0 - v_in) / (v_out - v_in);
        (f[inside].ln() + t * (f[outside].ln() - f[inside].ln())).exp()
    };
    let mut lo = imin;
    while lo > 0 && v[lo - 1] < 0.0 {
        lo -= 1;
    }
    let f_lo = if lo == 0 { f[0] } else { crossing(lo, lo - 1) };
    let mut hi = imin;
    while hi + 1 < v.len() && v[hi + 1] < 0.0 {
        hi += 1;
    }
    let f_hi = if hi + 1 == v.len() {
        f[v.len() - 1]
    } else {
        crossing(hi, hi + 1)
    };
    Ok(Some(SubSqlBand {
        f_lo_hz: f_lo,
        f_hi_hz: f_hi,
        f_min_hz: f[imin],
        depth_db: -vmin,
    }))
}

/// Which monotone piece of the spring-frequency-versus-detuning curve a
/// root-find works on. At fixed input power the spring frequency rises from
/// the bare resonance as `|delta|` grows from zero, peaks at
/// `|delta| = 1/sqrt(3)`, and falls back toward the bare resonance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `0 < |delta| <= 1/sqrt(3)`: frequency increases with `|delta|`.
    WeakSpring,
    /// `|delta| >= 1/sqrt(3)`: frequency decreases with `|delta|`; contains
    /// the strongly detuned operating points used for tuning.
    StrongDetuning,
}

impl Branch {
    fn name(self) -> &'static str {
        match self {
            Branch::WeakSpring => "weak-spring",
            Branch::StrongDetuning => "strong-detuning",
        }
    }
}

/// Find the (negative) detuning at which the suspension-corrected spring
/// resonance hits `target_hz`, holding input power and transmission fixed.
///
/// Bisection on the requested branch, converged to 1e-9 relative in
/// frequency. Targets outside the branch's reachable range produce
/// [`Error::TargetUnreachable`] carrying that range.
pub fn detuning_for_os_frequency(
    target_hz: f64,
    cavity: &CavityConfig,
    osc: &MechanicalOscillator,
    branch: Branch,
) -> Result<f64> {
    if !(target_hz > 0.0) || !target_hz.is_finite() {
        return Err(Error::invalid(
            "target_hz",
            format!("must be positive, got {target_hz}"),
        ));
    }
    let f_os = |mag: f64| -> Result<f64> {
        let mut c = *cavity;
        c.detuning = -mag;
        Ok(OpticalSpringState::new(&c, osc)?.omega_os / TWO_PI)
    };
    let knee = 1.0 / 3f64.sqrt();
    let f_knee = f_os(knee)?;
    let f0 = osc.omega0 / TWO_PI;
    let unreachable = |branch: Branch| Error::TargetUnreachable {
        target_hz,
        lo_hz: f0,
        hi_hz: f_knee,
        branch: branch.name(),
    };

    // Bracket [lo, hi] in |delta| such that the target frequency lies between
    // the endpoints' frequencies.
    let (mut lo, mut hi) = match branch {
        Branch::WeakSpring => {
            if target_hz > f_knee || target_hz < f0 {
                return Err(unreachable(branch));
            }
            (1e-12, knee)
        }
        Branch::StrongDetuning => {
            if target_hz > f_knee {
                return Err(unreachable(branch));
            }
            let mut hi = knee;
            loop {
                hi *= 2.0;
                if f_os(hi)? <= target_hz {
                    break;
                }
                if hi > 1e9 {
                    // Frequency approaches the bare resonance from above as
                    // |delta| grows; targets at or below it never bracket.
                    return Err(unreachable(branch));
                }
            }
            (knee, hi)
        }
    };

    // On the weak branch frequency increases with |delta|; on the strong
    // branch it decreases. Normalize so `lo` maps below the target.
    let increasing = matches!(branch, Branch::WeakSpring);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f_os(mid)?;
        if ((fm - target_hz) / target_hz).abs() <= 1e-9 {
            return Ok(-mid);
        }
        let below = fm < target_hz;
        if below == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(-0.5 * (lo + hi))
}

/// One sweep target: the solved operating point and its budget, or the reason
/// the target was skipped.
#[derive(Debug)]
pub struct SweepEntry {
    pub target_hz: f64,
    pub outcome: Result<BudgetReport>,
}

/// Budget a list of spring-frequency targets by re-solving the detuning for
/// each (strong-detuning branch), leaving all other parameters fixed.
/// Unreachable targets yield error entries; the rest proceed.
pub fn sweep_detunings(
    targets_hz: &[f64],
    cavity: &CavityConfig,
    osc: &MechanicalOscillator,
    opts: &BudgetOptions,
    grid: &FrequencyGrid,
) -> Vec<SweepEntry> {
    targets_hz
        .iter()
        .map(|&target_hz| {
            let outcome = detuning_for_os_frequency(target_hz, cavity, osc, Branch::StrongDetuning)
                .and_then(|delta| {
                    let mut c = *cavity;
                    c.detuning = delta;
                    build_budget(&c, osc, opts, grid)
                });
            SweepEntry { target_hz, outcome }
        })
        .collect()
}
