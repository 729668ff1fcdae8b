//! Welch auto- and cross-spectral estimation.
//!
//! Fixed conventions, chosen once so every consumer (subtraction, synthesis
//! round-trips, calibration) agrees bit-for-bit:
//!
//! * Hann window (periodic form), 50% segment overlap, no detrending.
//! * One-sided densities: interior bins scaled by `2 / (fs * sum(w^2))`, the
//!   Nyquist bin by `1 / (fs * sum(w^2))`. White noise of variance `s^2`
//!   comes out flat at `2 s^2 / fs`; a bin-centered sinusoid of amplitude `a`
//!   integrates to `a^2 / 2`.
//! * The DC bin is dropped: detector offsets are not spectral content, and
//!   downstream ratio math divides by the spectrum.
//! * Cross spectrum is `<conj(X1) * X2>`, so its phase is channel 2 relative
//!   to channel 1.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::Error;
use crate::spectrum::{FrequencyGrid, NoiseSpectrum, SpectralUnit};
use crate::Result;

/// Uniformly sampled real record.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub fs: f64,
    pub data: Vec<f64>,
}

impl TimeSeries {
    pub fn new(fs: f64, data: Vec<f64>) -> Result<Self> {
        if !(fs > 0.0) || !fs.is_finite() {
            return Err(Error::invalid("fs", format!("must be positive, got {fs}")));
        }
        if data.len() < 2 {
            return Err(Error::TooShort {
                len: data.len(),
                need: 2,
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::MalformedInput {
                reason: format!("non-finite sample at index {i}"),
            });
        }
        Ok(Self { fs, data })
    }

    pub fn duration(&self) -> f64 {
        self.data.len() as f64 / self.fs
    }
}

/// Taper applied to each segment before the FFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
    /// No taper; only used for normalization cross-checks.
    Rectangular,
}

impl Window {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| {
                    let phase = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                    0.5 * (1.0 - phase.cos())
                })
                .collect(),
        }
    }
}

/// Estimator configuration. Overlap is fixed at 50% of `segment_len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchConfig {
    pub segment_len: usize,
    pub window: Window,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            segment_len: 65_536,
            window: Window::Hann,
        }
    }
}

impl WelchConfig {
    fn validate(&self) -> Result<()> {
        if self.segment_len < 8 || self.segment_len % 2 != 0 {
            return Err(Error::invalid(
                "segment_len",
                format!("must be even and at least 8, got {}", self.segment_len),
            ));
        }
        Ok(())
    }

    /// Number of averaged segments for a record of `len` samples.
    pub fn segments_in(&self, len: usize) -> usize {
        let hop = self.segment_len / 2;
        if len < self.segment_len {
            0
        } else {
            (len - self.segment_len) / hop + 1
        }
    }
}

/// Auto- and cross-spectra of a synchronous two-channel record.
///
/// `n_averages` counts averaged segments. The value 0 is reserved for
/// closed-form spectra built by [`TwoChannelSpectra::from_closed_form`],
/// where estimator-variance arguments do not apply.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoChannelSpectra {
    pub grid: FrequencyGrid,
    pub s11: Vec<f64>,
    pub s22: Vec<f64>,
    pub s12: Vec<Complex64>,
    pub coherence: Vec<f64>,
    pub n_averages: usize,
}

impl TwoChannelSpectra {
    /// Wrap model spectra (no estimator noise) in the same container the
    /// Welch path produces. Marked with `n_averages = 0`.
    pub fn from_closed_form(
        grid: FrequencyGrid,
        s11: Vec<f64>,
        s22: Vec<f64>,
        s12: Vec<Complex64>,
    ) -> Result<Self> {
        let n = grid.len();
        if s11.len() != n || s22.len() != n || s12.len() != n {
            return Err(Error::GridMismatch {
                reason: format!(
                    "spectra lengths ({}, {}, {}) disagree with grid length {n}",
                    s11.len(),
                    s22.len(),
                    s12.len()
                ),
            });
        }
        for (i, ((&a, &b), c)) in s11.iter().zip(&s22).zip(&s12).enumerate() {
            if !(a >= 0.0) || !(b >= 0.0) || !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::MalformedInput {
                    reason: format!("invalid closed-form spectra at bin {i}"),
                });
            }
        }
        let coherence = coherence_of(&s11, &s22, &s12);
        Ok(Self {
            grid,
            s11,
            s22,
            s12,
            coherence,
            n_averages: 0,
        })
    }
}

fn coherence_of(s11: &[f64], s22: &[f64], s12: &[Complex64]) -> Vec<f64> {
    s12.iter()
        .zip(s11.iter().zip(s22))
        .map(|(c, (&a, &b))| {
            let denom = a * b;
            if denom > 0.0 {
                c.norm_sqr() / denom
            } else {
                0.0
            }
        })
        .collect()
}

struct Accumulated {
    grid: FrequencyGrid,
    s11: Vec<f64>,
    s22: Vec<f64>,
    s12: Vec<Complex64>,
    n_seg: usize,
}

/// Core segmented FFT accumulation shared by the PSD and CSD entry points.
/// `ch2 = None` skips the second channel and the cross terms.
fn accumulate(ch1: &TimeSeries, ch2: Option<&TimeSeries>, cfg: &WelchConfig) -> Result<Accumulated> {
    cfg.validate()?;
    if let Some(c2) = ch2 {
        if c2.fs != ch1.fs {
            return Err(Error::ChannelMismatch {
                reason: format!("sample rates differ: {} vs {}", ch1.fs, c2.fs),
            });
        }
        if c2.data.len() != ch1.data.len() {
            return Err(Error::ChannelMismatch {
                reason: format!(
                    "record lengths differ: {} vs {}",
                    ch1.data.len(),
                    c2.data.len()
                ),
            });
        }
    }
    let seg = cfg.segment_len;
    let n_seg = cfg.segments_in(ch1.data.len());
    if n_seg == 0 {
        return Err(Error::TooShort {
            len: ch1.data.len(),
            need: seg,
        });
    }

    let window = cfg.window.coefficients(seg);
    let sum_w2: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(seg);
    let mut scratch = vec![Complex64::ZERO; fft.get_inplace_scratch_len()];
    let mut buf1 = vec![Complex64::ZERO; seg];
    let mut buf2 = vec![Complex64::ZERO; seg];

    let n_bins = seg / 2; // k = 1 ..= seg/2, DC dropped
    let mut s11 = vec![0.0; n_bins];
    let mut s22 = vec![0.0; n_bins];
    let mut s12 = vec![Complex64::ZERO; n_bins];

    let hop = seg / 2;
    for s in 0..n_seg {
        let start = s * hop;
        for i in 0..seg {
            buf1[i] = Complex64::new(ch1.data[start + i] * window[i], 0.0);
        }
        fft.process_with_scratch(&mut buf1, &mut scratch);
        if let Some(c2) = ch2 {
            for i in 0..seg {
                buf2[i] = Complex64::new(c2.data[start + i] * window[i], 0.0);
            }
            fft.process_with_scratch(&mut buf2, &mut scratch);
        }
        for k in 0..n_bins {
            let x1 = buf1[k + 1];
            s11[k] += x1.norm_sqr();
            if ch2.is_some() {
                let x2 = buf2[k + 1];
                s22[k] += x2.norm_sqr();
                s12[k] += x1.conj() * x2;
            }
        }
    }

    // One-sided normalization; Nyquist (last bin) has no mirror image.
    let base = 1.0 / (ch1.fs * sum_w2 * n_seg as f64);
    for k in 0..n_bins {
        let scale = if k + 1 == seg / 2 { base } else { 2.0 * base };
        s11[k] *= scale;
        s22[k] *= scale;
        s12[k] *= scale;
    }

    let df = ch1.fs / seg as f64;
    let freqs: Vec<f64> = (1..=n_bins).map(|k| k as f64 * df).collect();
    Ok(Accumulated {
        grid: FrequencyGrid::new(freqs)?,
        s11,
        s22,
        s12,
        n_seg,
    })
}

/// One-sided Welch power spectral density of a single channel, in
/// volts^2/Hz.
pub fn welch_psd(ts: &TimeSeries, cfg: &WelchConfig) -> Result<NoiseSpectrum> {
    let acc = accumulate(ts, None, cfg)?;
    NoiseSpectrum::new(acc.grid, acc.s11, SpectralUnit::PsdVoltsSqPerHz, "psd")
}

/// Welch auto-spectra, cross-spectrum, and magnitude-squared coherence of a
/// synchronous pair of channels.
pub fn cross_spectra(
    ch1: &TimeSeries,
    ch2: &TimeSeries,
    cfg: &WelchConfig,
) -> Result<TwoChannelSpectra> {
    let acc = accumulate(ch1, Some(ch2), cfg)?;
    let coherence = coherence_of(&acc.s11, &acc.s22, &acc.s12);
    Ok(TwoChannelSpectra {
        grid: acc.grid,
        s11: acc.s11,
        s22: acc.s22,
        s12: acc.s12,
        coherence,
        n_averages: acc.n_seg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::standard_normals;
    use approx::assert_relative_eq;
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;

    fn white(fs: f64, n: usize, sigma: f64, seed: u64) -> TimeSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = standard_normals(&mut rng, n)
            .into_iter()
            .map(|g| sigma * g)
            .collect();
        TimeSeries::new(fs, data).unwrap()
    }

    #[test]
    fn white_noise_comes_out_flat_at_two_sigma_sq_over_fs() {
        let fs = 1000.0;
        let sigma = 1.5;
        let ts = white(fs, 1 << 17, sigma, 7);
        let cfg = WelchConfig {
            segment_len: 4096,
            window: Window::Hann,
        };
        let psd = welch_psd(&ts, &cfg).unwrap();
        let mean: f64 = psd.values.iter().sum::<f64>() / psd.values.len() as f64;
        assert_relative_eq!(mean, 2.0 * sigma * sigma / fs, max_relative = 0.02);
    }

    #[test]
    fn bin_centered_sinusoid_integrates_to_half_amplitude_squared() {
        let fs = 1024.0;
        let seg = 1024;
        let a = 0.7;
        let k0 = 32.0;
        let f0 = k0 * fs / seg as f64;
        let n = 8 * seg;
        let data: Vec<f64> = (0..n)
            .map(|i| a * (2.0 * std::f64::consts::PI * f0 * i as f64 / fs).sin())
            .collect();
        let ts = TimeSeries::new(fs, data).unwrap();
        let cfg = WelchConfig {
            segment_len: seg,
            window: Window::Hann,
        };
        let psd = welch_psd(&ts, &cfg).unwrap();
        let df = fs / seg as f64;
        let integrated: f64 = psd.values.iter().sum::<f64>() * df;
        assert_relative_eq!(integrated, a * a / 2.0, max_relative = 1e-6);
    }

    #[test]
    fn nyquist_bin_is_single_sided_without_doubling() {
        // cos(pi t) alternates sign at fs = 2, landing exactly on Nyquist.
        // Its mean square is 1; with the un-doubled Nyquist scale the
        // integrated PSD reproduces it.
        let fs = 2.0;
        let seg = 256;
        let data: Vec<f64> = (0..seg).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let ts = TimeSeries::new(fs, data).unwrap();
        let cfg = WelchConfig {
            segment_len: seg,
            window: Window::Rectangular,
        };
        let psd = welch_psd(&ts, &cfg).unwrap();
        let df = fs / seg as f64;
        let integrated: f64 = psd.values.iter().sum::<f64>() * df;
        assert_relative_eq!(integrated, 1.0, max_relative = 1e-12);
        // All power at the last (Nyquist) bin.
        let last = *psd.values.last().unwrap();
        assert_relative_eq!(last * df, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn dc_is_dropped_and_grid_spans_df_to_nyquist() {
        let seg = 512;
        let fs = 1000.0;
        let ts = white(fs, 4 * seg, 1.0, 3);
        let cfg = WelchConfig {
            segment_len: seg,
            window: Window::Hann,
        };
        let psd = welch_psd(&ts, &cfg).unwrap();
        assert_eq!(psd.grid.len(), seg / 2);
        assert_relative_eq!(psd.grid.min(), fs / seg as f64, max_relative = 1e-12);
        assert_relative_eq!(psd.grid.max(), fs / 2.0, max_relative = 1e-12);
        // A pure offset contributes nothing anywhere with a rectangular
        // window (its transform is exactly zero off DC).
        let flat = TimeSeries::new(fs, vec![3.25; 4 * seg]).unwrap();
        let cfg_rect = WelchConfig {
            segment_len: seg,
            window: Window::Rectangular,
        };
        let psd_flat = welch_psd(&flat, &cfg_rect).unwrap();
        for &v in &psd_flat.values {
            assert!(v < 1e-18, "offset leaked {v}");
        }
    }

    #[test]
    fn coherence_is_one_for_identical_channels() {
        let ts = white(1000.0, 1 << 14, 1.0, 11);
        let cfg = WelchConfig {
            segment_len: 1024,
            window: Window::Hann,
        };
        let spec = cross_spectra(&ts, &ts, &cfg).unwrap();
        for &c in &spec.coherence {
            assert!((c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_power_independent_additive_noise_gives_half_coherence() {
        let fs = 1000.0;
        let n = 1 << 18;
        let x = white(fs, n, 1.0, 21);
        let noise = white(fs, n, 1.0, 22);
        let y: Vec<f64> = x.data.iter().zip(&noise.data).map(|(a, b)| a + b).collect();
        let y = TimeSeries::new(fs, y).unwrap();
        let cfg = WelchConfig {
            segment_len: 2048,
            window: Window::Hann,
        };
        let spec = cross_spectra(&x, &y, &cfg).unwrap();
        let mean_c: f64 = spec.coherence.iter().sum::<f64>() / spec.coherence.len() as f64;
        assert_relative_eq!(mean_c, 0.5, max_relative = 0.02);
    }

    #[test]
    fn independent_channels_show_the_one_over_n_coherence_floor() {
        let fs = 1000.0;
        let n = 1 << 17;
        let a = white(fs, n, 1.0, 31);
        let b = white(fs, n, 1.0, 32);
        let cfg = WelchConfig {
            segment_len: 2048,
            window: Window::Hann,
        };
        let spec = cross_spectra(&a, &b, &cfg).unwrap();
        let floor = 1.0 / spec.n_averages as f64;
        let mean_c: f64 = spec.coherence.iter().sum::<f64>() / spec.coherence.len() as f64;
        assert!(
            mean_c > 0.6 * floor && mean_c < 1.6 * floor,
            "mean coherence {mean_c} vs floor {floor}"
        );
    }

    #[test]
    fn segment_count_and_short_record_handling() {
        let cfg = WelchConfig {
            segment_len: 256,
            window: Window::Hann,
        };
        assert_eq!(cfg.segments_in(256), 1);
        assert_eq!(cfg.segments_in(384), 2);
        assert_eq!(cfg.segments_in(255), 0);
        let ts = TimeSeries::new(100.0, vec![0.5; 100]).unwrap();
        assert!(matches!(
            welch_psd(&ts, &cfg),
            Err(Error::TooShort { need: 256, .. })
        ));
    }

    #[test]
    fn mismatched_channels_are_rejected() {
        let a = white(1000.0, 4096, 1.0, 41);
        let b = white(500.0, 4096, 1.0, 42);
        let cfg = WelchConfig {
            segment_len: 512,
            window: Window::Hann,
        };
        assert!(matches!(
            cross_spectra(&a, &b, &cfg),
            Err(Error::ChannelMismatch { .. })
        ));
        let c = white(1000.0, 2048, 1.0, 43);
        assert!(matches!(
            cross_spectra(&a, &c, &cfg),
            Err(Error::ChannelMismatch { .. })
        ));
    }

    #[test]
    fn odd_segment_lengths_are_rejected() {
        let ts = white(1000.0, 4096, 1.0, 51);
        let cfg = WelchConfig {
            segment_len: 255,
            window: Window::Hann,
        };
        assert!(matches!(
            welch_psd(&ts, &cfg),
            Err(Error::InvalidParameter { .. })
        ));
    }
}
