//! Delay-line fringe calibration.
//!
//! A two-beam interferometer with path delay `tau` turns laser angular
//! frequency `omega` into the fringe voltage
//!
//! ```text
//! V(omega) = A + B cos(omega tau + phase0)
//! ```
//!
//! so the small-signal frequency-to-voltage gain at a lock point with fringe
//! phase `phi` is `dV/domega = -B tau sin(phi)`. Calibration needs three
//! measured ingredients: the delay (from the second null of the delay line's
//! frequency-noise response, at `f_null = 2/tau`), the fringe offset and
//! amplitude (from a sweep over at least one full fringe), and the lock
//! voltage that fixes `phi`.
//!
//! Locks too close to a fringe turning point are rejected: the gain crosses
//! zero there and a voltage spectrum divided by it is meaningless.

use serde::Serialize;

use crate::error::Error;
use crate::Result;

/// Smallest |sin(phase)| accepted for a usable lock point.
pub const TURNING_POINT_SINE: f64 = 0.1;

/// Raw fringe sweep: voltage samples versus the swept laser angular
/// frequency (rad/s, strictly increasing).
#[derive(Debug, Clone, PartialEq)]
pub struct FringeSweep {
    pub omega: Vec<f64>,
    pub volts: Vec<f64>,
}

impl FringeSweep {
    pub fn new(omega: Vec<f64>, volts: Vec<f64>) -> Result<Self> {
        if omega.len() != volts.len() {
            return Err(Error::ChannelMismatch {
                reason: format!(
                    "sweep has {} frequency points but {} voltages",
                    omega.len(),
                    volts.len()
                ),
            });
        }
        if omega.len() < 32 {
            return Err(Error::TooShort {
                len: omega.len(),
                need: 32,
            });
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("omega", "must be strictly increasing"));
        }
        if omega.iter().chain(volts.iter()).any(|v| !v.is_finite()) {
            return Err(Error::MalformedInput {
                reason: "non-finite sweep sample".into(),
            });
        }
        Ok(Self { omega, volts })
    }

    fn span(&self) -> f64 {
        self.omega[self.omega.len() - 1] - self.omega[0]
    }
}

/// Result of [`fit_fringe`]. `phase0` is the fringe phase at `omega = 0`,
/// wrapped to (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeFit {
    pub offset_v: f64,
    pub amplitude_v: f64,
    /// Fitted delay, seconds (the fringe rate against angular frequency).
    pub tau_s: f64,
    pub phase0: f64,
    pub rms_residual_v: f64,
    pub periods_covered: f64,
}

/// Fringe voltage model shared by the fit and its consumers.
pub fn fringe_model(offset: f64, amplitude: f64, tau: f64, phase0: f64, omega: f64) -> f64 {
    offset + amplitude * (omega * tau + phase0).cos()
}

/// Delay from the measured second null of the frequency-noise response.
pub fn tau_from_null(f_null_hz: f64) -> Result<f64> {
    if !(f_null_hz > 0.0) || !f_null_hz.is_finite() {
        return Err(Error::invalid(
            "f_null_hz",
            format!("must be positive, got {f_null_hz}"),
        ));
    }
    Ok(2.0 / f_null_hz)
}

/// Fringe phase of a lock voltage, in [0, pi].
pub fn operating_phase(v_lock: f64, offset_v: f64, amplitude_v: f64) -> Result<f64> {
    if !(amplitude_v > 0.0) {
        return Err(Error::FringeDomain {
            offset_v,
            amplitude_v,
        });
    }
    let cos_phi = (v_lock - offset_v) / amplitude_v;
    if !cos_phi.is_finite() {
        return Err(Error::FringeDomain {
            offset_v,
            amplitude_v,
        });
    }
    // A lock exactly on a fringe extremum is in-domain; representation error
    // must not push it out. Anything beyond rounding slop is a real overshoot.
    let clamped = cos_phi.clamp(-1.0, 1.0);
    if (cos_phi - clamped).abs() > 1e-9 {
        return Err(Error::FringeDomain {
            offset_v,
            amplitude_v,
        });
    }
    Ok(clamped.acos())
}

/// Frequency-to-voltage gain `dV/domega` (volts per rad/s) at a lock phase.
pub fn fringe_slope(amplitude_v: f64, tau_s: f64, phase: f64) -> f64 {
    -amplitude_v * tau_s * phase.sin()
}

/// A usable operating point: fringe parameters plus the lock phase and the
/// resulting gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeCalibration {
    pub tau_s: f64,
    pub offset_v: f64,
    pub amplitude_v: f64,
    pub phase: f64,
    /// Signed gain at the lock point, volts per rad/s.
    pub dv_domega: f64,
}

impl FringeCalibration {
    /// Combine fringe shape, delay, and lock voltage; rejects lock points
    /// within the turning-point guard band.
    pub fn from_lock_point(
        offset_v: f64,
        amplitude_v: f64,
        tau_s: f64,
        v_lock: f64,
    ) -> Result<Self> {
        if !(tau_s > 0.0) || !tau_s.is_finite() {
            return Err(Error::invalid("tau_s", format!("must be positive, got {tau_s}")));
        }
        let phase = operating_phase(v_lock, offset_v, amplitude_v)?;
        let sine = phase.sin();
        if sine.abs() < TURNING_POINT_SINE {
            return Err(Error::TurningPoint {
                sine,
                threshold: TURNING_POINT_SINE,
            });
        }
        Ok(Self {
            tau_s,
            offset_v,
            amplitude_v,
            phase,
            dv_domega: fringe_slope(amplitude_v, tau_s, phase),
        })
    }
}

/// Least-squares cosine fit to a fringe sweep.
///
/// Strategy: seed the offset and amplitude from trimmed extrema (5th/95th
/// percentiles, robust to a few outliers), seed the rate by counting
/// offset crossings, then refine the rate with a scan plus golden-section
/// minimization of the exact least-squares error; offset and the two
/// quadratures are solved linearly at every candidate rate. The sweep must
/// cover at least one full fringe, otherwise amplitude and rate are
/// degenerate with each other.
pub fn fit_fringe(sweep: &FringeSweep) -> Result<FringeFit> {
    let n = sweep.omega.len();
    let span = sweep.span();

    // Trimmed extrema seed.
    let mut sorted = sweep.volts.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p = |q: f64| sorted[((n - 1) as f64 * q).round() as usize];
    let (lo, hi) = (p(0.05), p(0.95));
    let a0 = 0.5 * (hi + lo);
    let span_v = hi - lo;
    let v_scale = sorted[n - 1].abs().max(sorted[0].abs()).max(1.0);
    if span_v <= 1e-9 * v_scale {
        return Err(Error::DegenerateSweep { span_v });
    }

    // Rate seed: each fringe period crosses the offset twice. Crossings are
    // debounced through a hysteresis band of half the fringe amplitude so
    // measurement noise near the offset does not multiply the count.
    let hysteresis = 0.25 * span_v;
    let mut crossings = 0usize;
    let mut side = 0i8;
    for &v in &sweep.volts {
        let s = if v > a0 + hysteresis {
            1
        } else if v < a0 - hysteresis {
            -1
        } else {
            0
        };
        if s != 0 {
            if side != 0 && s != side {
                crossings += 1;
            }
            side = s;
        }
    }
    if crossings < 2 {
        return Err(Error::PartialFringe {
            periods: crossings as f64 / 2.0,
        });
    }
    let rate0 = std::f64::consts::PI * crossings as f64 / span;

    let sse = |rate: f64| linear_fit(&sweep.omega, &sweep.volts, rate).3;

    // Bracket the minimum: coarse scan around the seed.
    let (scan_lo, scan_hi) = (0.55 * rate0, 1.7 * rate0);
    let steps = 240;
    let mut best = (scan_lo, sse(scan_lo));
    for i in 1..=steps {
        let r = scan_lo + (scan_hi - scan_lo) * i as f64 / steps as f64;
        let e = sse(r);
        if e < best.1 {
            best = (r, e);
        }
    }
    let step = (scan_hi - scan_lo) / steps as f64;
    let mut a = (best.0 - step).max(scan_lo * 0.5);
    let mut b = best.0 + step;

    // Golden-section refinement.
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (sse(c), sse(d));
    for _ in 0..90 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = sse(d);
        }
    }
    let rate = 0.5 * (a + b);
    let (offset, cos_coef, sin_coef, err) = linear_fit(&sweep.omega, &sweep.volts, rate);
    let amplitude = cos_coef.hypot(sin_coef);
    if !(amplitude > 0.0) {
        return Err(Error::DegenerateSweep { span_v });
    }
    // offset + C cos(r w) + D sin(r w) = offset + B cos(r w + phase0)
    // with C = B cos(phase0), D = -B sin(phase0).
    let phase0 = (-sin_coef).atan2(cos_coef);
    let periods = rate * span / (2.0 * std::f64::consts::PI);
    if periods < 1.0 {
        return Err(Error::PartialFringe { periods });
    }
    Ok(FringeFit {
        offset_v: offset,
        amplitude_v: amplitude,
        tau_s: rate,
        phase0,
        rms_residual_v: (err / n as f64).sqrt(),
        periods_covered: periods,
    })
}

/// Solve min over (A, C, D) of sum (v - A - C cos(r w) - D sin(r w))^2 and
/// return (A, C, D, SSE).
fn linear_fit(omega: &[f64], volts: &[f64], rate: f64) -> (f64, f64, f64, f64) {
    let n = omega.len() as f64;
    let (mut sc, mut ss, mut scc, mut sss, mut scs) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut sv, mut svc, mut svs) = (0.0, 0.0, 0.0);
    for (&w, &v) in omega.iter().zip(volts) {
        let (s, c) = (rate * w).sin_cos();
        sc += c;
        ss += s;
        scc += c * c;
        sss += s * s;
        scs += c * s;
        sv += v;
        svc += v * c;
        svs += v * s;
    }
    // Normal equations, rows: [n sc ss | sv], [sc scc scs | svc],
    // [ss scs sss | svs]; solved by Cramer's rule.
    let det = n * (scc * sss - scs * scs) - sc * (sc * sss - scs * ss)
        + ss * (sc * scs - scc * ss);
    if det.abs() < 1e-300 {
        return (0.0, 0.0, 0.0, f64::INFINITY);
    }
    let det_a = sv * (scc * sss - scs * scs) - sc * (svc * sss - scs * svs)
        + ss * (svc * scs - scc * svs);
    let det_c = n * (svc * sss - svs * scs) - sv * (sc * sss - scs * ss)
        + ss * (sc * svs - svc * ss);
    let det_d = n * (scc * svs - svc * scs) - sc * (sc * svs - svc * ss)
        + sv * (sc * scs - scc * ss);
    let a = det_a / det;
    let c = det_c / det;
    let d = det_d / det;
    let sse: f64 = omega
        .iter()
        .zip(volts)
        .map(|(&w, &v)| {
            let (s, co) = (rate * w).sin_cos();
            let r = v - a - c * co - d * s;
            r * r
        })
        .sum();
    (a, c, d, sse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand_core::{RngCore, SeedableRng};

    const TAU: f64 = 4.896720917508872e-7;

    fn synthetic_sweep(
        a: f64,
        b: f64,
        tau: f64,
        phase0: f64,
        periods: f64,
        n: usize,
        noise: f64,
        seed: u64,
    ) -> FringeSweep {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut gauss = || {
            // Box-Muller on two uniform draws.
            let u1 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            let u2 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        let span = periods * 2.0 * std::f64::consts::PI / tau;
        let omega: Vec<f64> = (0..n).map(|i| span * i as f64 / (n - 1) as f64).collect();
        let volts: Vec<f64> = omega
            .iter()
            .map(|&w| fringe_model(a, b, tau, phase0, w) + noise * gauss())
            .collect();
        FringeSweep::new(omega, volts).unwrap()
    }

    #[test]
    fn clean_sweep_is_recovered_to_high_precision() {
        let sweep = synthetic_sweep(1.3, 0.7, TAU, 0.4, 3.2, 400, 0.0, 1);
        let fit = fit_fringe(&sweep).unwrap();
        assert_relative_eq!(fit.offset_v, 1.3, max_relative = 1e-8);
        assert_relative_eq!(fit.amplitude_v, 0.7, max_relative = 1e-8);
        assert_relative_eq!(fit.tau_s, TAU, max_relative = 1e-9);
        assert_relative_eq!(fit.phase0, 0.4, max_relative = 1e-7);
        assert!(fit.rms_residual_v < 1e-8);
        assert_relative_eq!(fit.periods_covered, 3.2, max_relative = 1e-6);
    }

    #[test]
    fn noisy_sweep_recovers_parameters_within_tolerance() {
        let sweep = synthetic_sweep(0.2, 1.0, TAU, -2.5, 4.0, 1200, 0.05, 7);
        let fit = fit_fringe(&sweep).unwrap();
        assert_relative_eq!(fit.amplitude_v, 1.0, max_relative = 0.01);
        assert_relative_eq!(fit.tau_s, TAU, max_relative = 1e-3);
        assert_relative_eq!(fit.offset_v, 0.2, epsilon = 0.01);
        // Phase wraps; compare on the circle.
        let dphi = (fit.phase0 - (-2.5)).rem_euclid(2.0 * std::f64::consts::PI);
        assert!(dphi < 0.05 || dphi > 2.0 * std::f64::consts::PI - 0.05);
        assert!(fit.rms_residual_v < 0.06);
    }

    #[test]
    fn quadrant_phases_round_trip() {
        for &phase in &[-2.9f64, -1.2, 0.0, 1.2, 2.9] {
            let sweep = synthetic_sweep(0.0, 1.0, TAU, phase, 2.5, 600, 0.0, 3);
            let fit = fit_fringe(&sweep).unwrap();
            let dphi = (fit.phase0 - phase).rem_euclid(2.0 * std::f64::consts::PI);
            assert!(
                dphi < 1e-6 || dphi > 2.0 * std::f64::consts::PI - 1e-6,
                "phase {phase} came back as {}",
                fit.phase0
            );
        }
    }

    #[test]
    fn partial_fringe_is_rejected() {
        let sweep = synthetic_sweep(1.0, 0.5, TAU, 0.3, 0.4, 200, 0.0, 5);
        assert!(matches!(
            fit_fringe(&sweep),
            Err(Error::PartialFringe { .. })
        ));
    }

    #[test]
    fn flat_sweep_is_degenerate() {
        let omega: Vec<f64> = (0..100).map(|i| i as f64 * 1e5).collect();
        let volts = vec![2.0; 100];
        let sweep = FringeSweep::new(omega, volts).unwrap();
        assert!(matches!(
            fit_fringe(&sweep),
            Err(Error::DegenerateSweep { .. })
        ));
    }

    #[test]
    fn sweep_construction_validates_inputs() {
        assert!(matches!(
            FringeSweep::new(vec![0.0; 10], vec![0.0; 9]),
            Err(Error::ChannelMismatch { .. })
        ));
        assert!(matches!(
            FringeSweep::new(vec![0.0; 10], vec![0.0; 10]),
            Err(Error::TooShort { .. })
        ));
        let back: Vec<f64> = (0..40).map(|i| -(i as f64)).collect();
        assert!(matches!(
            FringeSweep::new(back, vec![0.0; 40]),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn null_frequency_fixes_the_delay() {
        let tau = tau_from_null(4_084_365.9128065393).unwrap();
        assert_relative_eq!(tau, TAU, max_relative = 1e-12);
        assert!(tau_from_null(0.0).is_err());
        assert!(tau_from_null(-1.0).is_err());
    }

    #[test]
    fn operating_phase_spans_zero_to_pi() {
        assert_relative_eq!(
            operating_phase(1.3, 1.3, 0.7).unwrap(),
            std::f64::consts::FRAC_PI_2,
            max_relative = 1e-12
        );
        assert_relative_eq!(operating_phase(2.0, 1.3, 0.7).unwrap(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(
            operating_phase(0.6, 1.3, 0.7).unwrap(),
            std::f64::consts::PI,
            max_relative = 1e-12
        );
        assert!(matches!(
            operating_phase(2.1, 1.3, 0.7),
            Err(Error::FringeDomain { .. })
        ));
    }

    #[test]
    fn midfringe_lock_gives_maximal_gain() {
        let cal = FringeCalibration::from_lock_point(1.3, 1.0, TAU, 1.3).unwrap();
        assert_relative_eq!(cal.phase, std::f64::consts::FRAC_PI_2, max_relative = 1e-12);
        assert_relative_eq!(cal.dv_domega.abs(), TAU, max_relative = 1e-12);
        assert!(cal.dv_domega < 0.0);
    }

    #[test]
    fn turning_point_locks_are_rejected() {
        // cos(phi) = 0.999 leaves |sin| ~ 0.045, inside the guard band.
        let err = FringeCalibration::from_lock_point(0.0, 1.0, TAU, 0.999);
        assert!(matches!(err, Err(Error::TurningPoint { .. })));
        // cos(phi) = 0.9 has |sin| ~ 0.44 and passes.
        let cal = FringeCalibration::from_lock_point(0.0, 1.0, TAU, 0.9).unwrap();
        assert_relative_eq!(
            cal.dv_domega.abs(),
            TAU * (1.0 - 0.81f64).sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn fit_feeds_calibration_end_to_end() {
        let sweep = synthetic_sweep(1.3, 0.7, TAU, 0.0, 2.5, 800, 0.002, 11);
        let fit = fit_fringe(&sweep).unwrap();
        let cal =
            FringeCalibration::from_lock_point(fit.offset_v, fit.amplitude_v, fit.tau_s, 1.3)
                .unwrap();
        assert_relative_eq!(cal.dv_domega.abs(), 0.7 * TAU, max_relative = 0.01);
    }
}
