//! Deterministic synthesis of the two-channel calibration scenario.
//!
//! Three mutually independent Gaussian processes are drawn from target
//! amplitude densities: the common mode `f`, channel 1's intrinsic noise
//! `c1`, and channel 2's sensing noise `n`. The observable channels are
//!
//! ```text
//! ch1 = gain1 * (f + c1)        ch2 = f + n
//! ```
//!
//! Each process is built in the frequency domain with Hermitian symmetry so
//! the inverse FFT is real: bin `k` gets `sqrt(S(f_k) fs n / 4) (a + i b)`
//! with `a, b` standard normal, which reproduces the one-sided density
//! `S(f_k)` under this crate's Welch conventions. DC is zeroed (processes
//! are mean-free); the Nyquist bin is real with matching variance.
//!
//! Reproducibility is part of the contract: one u64 seed, with the three
//! processes on separate ChaCha8 streams, gives bit-identical output on
//! every platform and run.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::constants::{C_LIGHT, H_PLANCK};
use crate::error::Error;
use crate::spectrum::FrequencyGrid;
use crate::welch::{TimeSeries, TwoChannelSpectra};
use crate::Result;

/// Target amplitude spectral density: either flat, or piecewise log-log
/// linear between breakpoints with flat extrapolation outside them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsdModel {
    /// (frequency_hz, asd) knots, strictly increasing in frequency.
    points: Vec<(f64, f64)>,
}

impl AsdModel {
    /// Frequency-independent density. Zero is allowed and means "process
    /// absent".
    pub fn flat(asd: f64) -> Result<Self> {
        if !(asd >= 0.0) || !asd.is_finite() {
            return Err(Error::invalid("asd", format!("must be non-negative, got {asd}")));
        }
        Ok(Self {
            points: vec![(1.0, asd)],
        })
    }

    /// Piecewise model. Knot densities must be strictly positive (log-log
    /// interpolation); frequencies strictly increasing.
    pub fn from_breakpoints(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("points", "need at least one breakpoint"));
        }
        for (f, a) in &points {
            if !(*f > 0.0) || !f.is_finite() {
                return Err(Error::invalid(
                    "points",
                    format!("breakpoint frequency must be positive, got {f}"),
                ));
            }
            if !(*a > 0.0) || !a.is_finite() {
                return Err(Error::invalid(
                    "points",
                    format!("breakpoint density must be positive, got {a}"),
                ));
            }
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::invalid(
                "points",
                "breakpoint frequencies must be strictly increasing",
            ));
        }
        Ok(Self { points })
    }

    /// Density at `f_hz` (flat outside the knot range).
    pub fn asd_at(&self, f_hz: f64) -> f64 {
        let pts = &self.points;
        if pts.len() == 1 || f_hz <= pts[0].0 {
            return pts[0].1;
        }
        let last = pts[pts.len() - 1];
        if f_hz >= last.0 {
            return last.1;
        }
        let j = pts.partition_point(|p| p.0 <= f_hz);
        let (f0, a0) = pts[j - 1];
        let (f1, a1) = pts[j];
        let t = (f_hz.ln() - f0.ln()) / (f1.ln() - f0.ln());
        (a0.ln() + t * (a1.ln() - a0.ln())).exp()
    }

    fn is_zero(&self) -> bool {
        self.points.iter().all(|(_, a)| *a == 0.0)
    }
}

/// Full two-channel scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalModel {
    /// Common mode `f`, channel-2 units.
    pub common: AsdModel,
    /// Channel-1 intrinsic noise `c1`, at the common-mode point.
    pub intrinsic1: AsdModel,
    /// Channel-2 sensing noise `n`.
    pub noise2: AsdModel,
    /// Channel-1 gain `lambda1`.
    pub gain1: f64,
}

impl SignalModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain1 > 0.0) || !self.gain1.is_finite() {
            return Err(Error::invalid(
                "gain1",
                format!("must be positive, got {}", self.gain1),
            ));
        }
        Ok(())
    }
}

/// Standard normal draws via Box-Muller on ChaCha output. The `(0, 1]`
/// uniform shift keeps the log finite.
pub(crate) fn standard_normals(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count + 1);
    while out.len() < count {
        let u1 = ((rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64;
        let u2 = ((rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64;
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        out.push(r * theta.cos());
        out.push(r * theta.sin());
    }
    out.truncate(count);
    out
}

/// One Gaussian process with the target one-sided density.
fn synth_process(model: &AsdModel, fs: f64, n: usize, seed: u64, stream: u64) -> Vec<f64> {
    if model.is_zero() {
        return vec![0.0; n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let half = n / 2;
    let normals = standard_normals(&mut rng, 2 * (half - 1) + 1);

    let mut spec = vec![Complex64::ZERO; n];
    let df = fs / n as f64;
    let root = (fs * n as f64).sqrt();
    for k in 1..half {
        let amp = 0.5 * model.asd_at(k as f64 * df) * root;
        let z = Complex64::new(normals[2 * (k - 1)], normals[2 * (k - 1) + 1]);
        spec[k] = amp * z;
        spec[n - k] = spec[k].conj();
    }
    // Nyquist: real, un-mirrored, so it carries the full bin variance.
    spec[half] = Complex64::new(model.asd_at(half as f64 * df) * root * normals[2 * (half - 1)], 0.0);

    let fft = FftPlanner::new().plan_fft_inverse(n);
    let mut scratch = vec![Complex64::ZERO; fft.get_inplace_scratch_len()];
    fft.process_with_scratch(&mut spec, &mut scratch);
    let inv_n = 1.0 / n as f64;
    spec.into_iter().map(|c| c.re * inv_n).collect()
}

/// Synthesize both channels. `n` must be even and at least 16; highly
/// composite lengths keep the FFT fast.
pub fn generate_timeseries(
    model: &SignalModel,
    fs: f64,
    n: usize,
    seed: u64,
) -> Result<(TimeSeries, TimeSeries)> {
    model.validate()?;
    if !(fs > 0.0) || !fs.is_finite() {
        return Err(Error::invalid("fs", format!("must be positive, got {fs}")));
    }
    if n < 16 || n % 2 != 0 {
        return Err(Error::invalid(
            "n",
            format!("must be even and at least 16, got {n}"),
        ));
    }
    let common = synth_process(&model.common, fs, n, seed, 0);
    let intrinsic = synth_process(&model.intrinsic1, fs, n, seed, 1);
    let sensing = synth_process(&model.noise2, fs, n, seed, 2);

    let ch1: Vec<f64> = common
        .iter()
        .zip(&intrinsic)
        .map(|(f, c)| model.gain1 * (f + c))
        .collect();
    let ch2: Vec<f64> = common.iter().zip(&sensing).map(|(f, nn)| f + nn).collect();
    Ok((TimeSeries::new(fs, ch1)?, TimeSeries::new(fs, ch2)?))
}

/// Closed-form auto- and cross-spectra implied by a model, on an arbitrary
/// grid. This is what the Welch estimate of [`generate_timeseries`] output
/// converges to, and the reference the subtraction estimator is validated
/// against.
pub fn oracle_spectra(model: &SignalModel, grid: &FrequencyGrid) -> Result<TwoChannelSpectra> {
    model.validate()?;
    let n = grid.len();
    let mut s11 = Vec::with_capacity(n);
    let mut s22 = Vec::with_capacity(n);
    let mut s12 = Vec::with_capacity(n);
    let g2 = model.gain1 * model.gain1;
    for &f in grid.values() {
        let sf = model.common.asd_at(f).powi(2);
        let sc = model.intrinsic1.asd_at(f).powi(2);
        let sn = model.noise2.asd_at(f).powi(2);
        s11.push(g2 * (sf + sc));
        s22.push(sf + sn);
        s12.push(Complex64::new(model.gain1 * sf, 0.0));
    }
    TwoChannelSpectra::from_closed_form(grid.clone(), s11, s22, s12)
}

/// Fractional shot-noise amplitude density of detected optical power,
/// `sqrt(2 h nu / P)`, in 1/rtHz.
pub fn shot_noise_asd(power_w: f64, wavelength_m: f64) -> Result<f64> {
    if !(power_w > 0.0) || !power_w.is_finite() {
        return Err(Error::invalid(
            "power_w",
            format!("must be positive, got {power_w}"),
        ));
    }
    if !(wavelength_m > 0.0) || !wavelength_m.is_finite() {
        return Err(Error::invalid(
            "wavelength_m",
            format!("must be positive, got {wavelength_m}"),
        ));
    }
    Ok((2.0 * H_PLANCK * C_LIGHT / (wavelength_m * power_w)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::welch::{cross_spectra, welch_psd, WelchConfig, Window};
    use approx::assert_relative_eq;

    fn flat_model(common: f64, intrinsic: f64, noise: f64, gain: f64) -> SignalModel {
        SignalModel {
            common: AsdModel::flat(common).unwrap(),
            intrinsic1: AsdModel::flat(intrinsic).unwrap(),
            noise2: AsdModel::flat(noise).unwrap(),
            gain1: gain,
        }
    }

    #[test]
    fn synthesized_white_process_hits_its_target_density() {
        let asd = 3e-7;
        let model = flat_model(asd, 0.0, 0.0, 1.0);
        let (ch1, ch2) = generate_timeseries(&model, 1e5, 1 << 16, 9).unwrap();
        assert_eq!(ch1.data, ch2.data);
        let cfg = WelchConfig {
            segment_len: 4096,
            window: Window::Hann,
        };
        let psd = welch_psd(&ch2, &cfg).unwrap();
        let mean: f64 = psd.values.iter().sum::<f64>() / psd.values.len() as f64;
        assert_relative_eq!(mean, asd * asd, max_relative = 0.03);
    }

    #[test]
    fn same_seed_reproduces_bitwise_and_seeds_differ() {
        let model = flat_model(1e-6, 2e-7, 3e-7, 2.0);
        let (a1, a2) = generate_timeseries(&model, 1e6, 4096, 42).unwrap();
        let (b1, b2) = generate_timeseries(&model, 1e6, 4096, 42).unwrap();
        assert_eq!(a1.data, b1.data);
        assert_eq!(a2.data, b2.data);
        let (c1, _) = generate_timeseries(&model, 1e6, 4096, 43).unwrap();
        assert_ne!(a1.data, c1.data);
    }

    #[test]
    fn component_streams_are_independent() {
        // No common mode: the channels share nothing, so their coherence
        // sits at the estimator floor.
        let model = flat_model(0.0, 1e-6, 1e-6, 1.0);
        let (ch1, ch2) = generate_timeseries(&model, 1e5, 1 << 15, 17).unwrap();
        let cfg = WelchConfig {
            segment_len: 1024,
            window: Window::Hann,
        };
        let spec = cross_spectra(&ch1, &ch2, &cfg).unwrap();
        let floor = 1.0 / spec.n_averages as f64;
        let mean_c: f64 = spec.coherence.iter().sum::<f64>() / spec.coherence.len() as f64;
        assert!(mean_c < 3.0 * floor, "coherence {mean_c} vs floor {floor}");
    }

    #[test]
    fn welch_estimate_converges_to_the_oracle() {
        let model = flat_model(1e-6, 4e-7, 2e-7, 2.0);
        let fs = 1e6;
        let (ch1, ch2) = generate_timeseries(&model, fs, 1 << 19, 4).unwrap();
        let cfg = WelchConfig {
            segment_len: 4096,
            window: Window::Hann,
        };
        let est = cross_spectra(&ch1, &ch2, &cfg).unwrap();
        let oracle = oracle_spectra(&model, &est.grid).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert_relative_eq!(mean(&est.s11), mean(&oracle.s11), max_relative = 0.02);
        assert_relative_eq!(mean(&est.s22), mean(&oracle.s22), max_relative = 0.02);
        assert_relative_eq!(
            mean(&est.coherence),
            mean(&oracle.coherence),
            max_relative = 0.02
        );
    }

    #[test]
    fn breakpoint_interpolation_is_log_log_linear() {
        let m = AsdModel::from_breakpoints(vec![(10.0, 1e-6), (100.0, 1e-7)]).unwrap();
        assert_relative_eq!(m.asd_at(10.0), 1e-6, max_relative = 1e-12);
        assert_relative_eq!(m.asd_at(100.0), 1e-7, max_relative = 1e-12);
        // Geometric midpoint in both axes.
        assert_relative_eq!(m.asd_at(10f64.sqrt() * 10.0), 10f64.sqrt() * 1e-7, max_relative = 1e-12);
        // Flat extrapolation.
        assert_relative_eq!(m.asd_at(1.0), 1e-6, max_relative = 1e-12);
        assert_relative_eq!(m.asd_at(1e5), 1e-7, max_relative = 1e-12);
    }

    #[test]
    fn model_validation_rejects_bad_knots_and_gains() {
        assert!(AsdModel::from_breakpoints(vec![]).is_err());
        assert!(AsdModel::from_breakpoints(vec![(10.0, 0.0)]).is_err());
        assert!(AsdModel::from_breakpoints(vec![(10.0, 1e-6), (10.0, 1e-7)]).is_err());
        assert!(AsdModel::flat(-1.0).is_err());
        let mut m = flat_model(1e-6, 0.0, 0.0, 1.0);
        m.gain1 = 0.0;
        assert!(m.validate().is_err());
        assert!(generate_timeseries(&flat_model(1e-6, 0.0, 0.0, 1.0), 1e3, 15, 1).is_err());
    }

    #[test]
    fn shot_noise_matches_the_milliwatt_reference() {
        let asd = shot_noise_asd(1e-3, 1.064e-6).unwrap();
        assert_relative_eq!(asd, 1.9323355775109372e-8, max_relative = 1e-12);
        // Scaling: 1/sqrt(P).
        let asd4 = shot_noise_asd(4e-3, 1.064e-6).unwrap();
        assert_relative_eq!(asd, 2.0 * asd4, max_relative = 1e-12);
        assert!(shot_noise_asd(0.0, 1.064e-6).is_err());
    }

    #[test]
    fn sinusoidal_bump_in_the_model_appears_in_the_spectrum() {
        let bump = AsdModel::from_breakpoints(vec![
            (1e3, 1e-7),
            (2e4, 1e-7),
            (2.5e4, 5e-7),
            (3e4, 1e-7),
            (5e4, 1e-7),
        ])
        .unwrap();
        let model = SignalModel {
            common: AsdModel::flat(0.0).unwrap(),
            intrinsic1: bump,
            noise2: AsdModel::flat(0.0).unwrap(),
            gain1: 1.0,
        };
        let (ch1, _) = generate_timeseries(&model, 1e5, 1 << 17, 23).unwrap();
        let cfg = WelchConfig {
            segment_len: 2048,
            window: Window::Hann,
        };
        let psd = welch_psd(&ch1, &cfg).unwrap();
        // Average measured density in a narrow window at the bump peak vs
        // the flat region.
        let at = |f0: f64, half: f64| {
            let mut acc = (0.0, 0usize);
            for (i, &f) in psd.grid.values().iter().enumerate() {
                if (f - f0).abs() < half {
                    acc = (acc.0 + psd.values[i], acc.1 + 1);
                }
            }
            acc.0 / acc.1 as f64
        };
        let peak = at(2.5e4, 500.0);
        let floor = at(1e4, 2000.0);
        assert!(
            (peak / floor - 25.0).abs() < 6.0,
            "peak/floor power ratio {} should be near 25",
            peak / floor
        );
    }
}
