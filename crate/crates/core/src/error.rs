//! Error type shared by the library layer.

/// Library error. CLI-level failures (I/O, config parsing) wrap these or carry
/// their own context in [`crate::cli`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constructor argument violated a type invariant.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Combined spring constant is not restoring, so no real resonance exists.
    #[error(
        "total spring constant {total_n_per_m:.3e} N/m is not positive; \
         an anti-spring has no mechanical resonance"
    )]
    AntiSpring { total_n_per_m: f64 },

    /// Spring-resonance evaluation requires a red-detuned (negative) cavity.
    #[error("detuning must be negative for a restoring optical spring (got {detuning})")]
    NonRestoringDetuning { detuning: f64 },

    /// Structural damping gives a 1/omega force spectrum that diverges at DC.
    #[error("structural-damping thermal noise diverges at zero frequency")]
    StructuralDc,

    /// Locked voltage lies outside the fringe envelope.
    #[error(
        "locked voltage is outside the fringe: |V_L - A| = {offset_v:.6e} V \
         exceeds the fringe amplitude B = {amplitude_v:.6e} V"
    )]
    FringeDomain { offset_v: f64, amplitude_v: f64 },

    /// Operating point too close to a fringe extremum for a usable slope.
    #[error(
        "operating point sits at a fringe turning point: |sin(omega tau)| = {sine:.4} \
         is below the {threshold} validity threshold"
    )]
    TurningPoint { sine: f64, threshold: f64 },

    /// Fringe fit needs at least one full period of data.
    #[error("sweep covers only {periods:.3} fringe periods; at least one full period is required")]
    PartialFringe { periods: f64 },

    /// Sweep data carry no resolvable fringe.
    #[error("degenerate sweep: voltage span {span_v:.3e} V is too small to resolve a fringe")]
    DegenerateSweep { span_v: f64 },

    /// Not enough samples for the requested segmentation.
    #[error("time series too short: {len} samples, need at least {need}")]
    TooShort { len: usize, need: usize },

    /// Two-channel operation on incompatible records.
    #[error("channel mismatch: {reason}")]
    ChannelMismatch { reason: String },

    /// Spectra or grids that must share a frequency axis do not.
    #[error("frequency grids differ: {reason}")]
    GridMismatch { reason: String },

    /// Root-finding target outside the reachable range of the branch.
    #[error(
        "target spring frequency {target_hz:.4e} Hz is outside the reachable range \
         [{lo_hz:.4e}, {hi_hz:.4e}] Hz on the {branch} branch"
    )]
    TargetUnreachable {
        target_hz: f64,
        lo_hz: f64,
        hi_hz: f64,
        branch: &'static str,
    },

    /// Unit conversion that is not defined (for example dB of a signed ratio).
    #[error("unit conversion error: {reason}")]
    UnitConversion { reason: String },

    /// Malformed input file (CSV or binary record).
    #[error("malformed input: {reason}")]
    MalformedInput { reason: String },

    /// Filesystem failure while reading inputs or writing results.
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
