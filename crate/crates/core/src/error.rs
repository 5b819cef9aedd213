use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("transfer function denominator is the zero polynomial")]
    ZeroDenominator,

    #[error("transfer function has a pole at the origin (denominator vanishes at s = 0)")]
    PoleAtOrigin,

    #[error("transfer function is improper: numerator degree {num_degree} exceeds denominator degree {den_degree}")]
    Improper {
        num_degree: usize,
        den_degree: usize,
    },

    #[error("time step {dt_s} s is too large for the fastest pole (|lambda| = {max_pole_magnitude:.6}); use dt <= {suggested_dt_s:.3e} s")]
    StepTooLarge {
        dt_s: f64,
        max_pole_magnitude: f64,
        suggested_dt_s: f64,
    },

    #[error("trace has not settled: final-window samples deviate {spread:.3e} from their mean {mean:.6e} (limit 1%)")]
    NotSettled { spread: f64, mean: f64 },

    #[error("step metrics are undefined: {0}")]
    DegenerateResponse(&'static str),

    #[error("no ultimate gain in [{gain_lo}, {gain_hi}] at sample period h = {sample_period_s} s: the sampled loop still decays at the upper gain. Sustained oscillation of a proportional loop around a second-order plant comes only from the sampling delay, so the ultimate gain grows without bound as h shrinks; widen the gain range or increase the sample period")]
    NoUltimateGain {
        gain_lo: f64,
        gain_hi: f64,
        sample_period_s: f64,
    },

    #[error("sampled loop already oscillates at the lower gain bound {gain_lo}; lower gain_lo")]
    OscillatesAtLowerBound { gain_lo: f64 },

    #[error("oscillation at gain {gain} is not sustained: consecutive peak ratio {ratio:.4} outside 1 +/- {band}")]
    NotSustained { gain: f64, ratio: f64, band: f64 },

    #[error("plant is not open-loop stable")]
    UnstablePlant,

    #[error("plant is not in mass-spring-damper form c / (a2 s^2 + a1 s + a0)")]
    NotMsdForm,

    #[error("closed-loop composition mismatch at coefficient {index}: {direct} vs {generic}")]
    CompositionMismatch {
        index: usize,
        direct: f64,
        generic: f64,
    },

    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    #[error("polynomial degree must be at least 1")]
    ConstantPolynomial,

    #[error("one activity cycle costs {cycle_energy_j:.6e} J, more than the hysteresis band RE - T = {band_j:.6e} J; the MCU state machine would livelock")]
    Livelock { cycle_energy_j: f64, band_j: f64 },

    #[error("need at least {required} On->Off transitions to detect a cycle, found {found}")]
    InsufficientTransitions { found: usize, required: usize },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
