//! PID controller transfer function and Ziegler-Nichols tuning.
//!
//! The ultimate gain is searched on a *sampled* proportional loop: the
//! controller output is held between updates every `h` seconds while the
//! plant evolves continuously. A continuous second-order plant under pure
//! proportional feedback never oscillates in a sustained way, so without the
//! sampling delay there is no finite ultimate gain to find.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{dc_gain, to_state_space, unity_feedback, TransferFunction};
use crate::poly::Polynomial;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    pub fn new(kp: f64, ki: f64, kd: f64) -> Result<Self> {
        let g = Self { kp, ki, kd };
        g.validate()?;
        Ok(g)
    }

    /// Controller gains of the reference design for the Mica2 harvester.
    pub fn mica2() -> Self {
        Self {
            kp: 20.2366,
            ki: 10.3729,
            kd: 9.8699,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("must be non-negative, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

/// `U(s) = (kd s^2 + kp s + ki) / s`
pub fn pid_tf(gains: &PidGains) -> Result<TransferFunction> {
    gains.validate()?;
    TransferFunction::new(vec![gains.kd, gains.kp, gains.ki], vec![1.0, 0.0])
}

/// Stability-boundary gain and oscillation period of a proportional loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UltimateParams {
    pub ku: f64,
    pub tu_s: f64,
}

impl UltimateParams {
    pub fn new(ku: f64, tu_s: f64) -> Result<Self> {
        if !(ku.is_finite() && ku > 0.0) {
            return Err(Error::invalid("ku", format!("must be positive, got {ku}")));
        }
        if !(tu_s.is_finite() && tu_s > 0.0) {
            return Err(Error::invalid(
                "tu_s",
                format!("must be positive, got {tu_s}"),
            ));
        }
        Ok(Self { ku, tu_s })
    }
}

/// Classic Ziegler-Nichols PID rule: `kp = 0.6 Ku`, `ki = 1.2 Ku / Tu`,
/// `kd = 0.075 Ku Tu`.
pub fn zn_gains(ultimate: &UltimateParams) -> PidGains {
    PidGains {
        kp: 0.6 * ultimate.ku,
        ki: 1.2 * ultimate.ku / ultimate.tu_s,
        kd: 0.075 * ultimate.ku * ultimate.tu_s,
    }
}

/// Complementary sensitivity of the PID loop around a plant `c / (a2 s^2 + a1 s + a0)`:
/// `c (kd s^2 + kp s + ki) / (a2 s^3 + (a1 + c kd) s^2 + (a0 + c kp) s + c ki)`.
///
/// The result is checked against the generic [`unity_feedback`] composition.
/// A common factor `s` (when `ki = 0`) is cancelled.
pub fn closed_loop(plant: &TransferFunction, gains: &PidGains) -> Result<TransferFunction> {
    gains.validate()?;
    if plant.num().degree() != 0 || plant.den().degree() != 2 {
        return Err(Error::NotMsdForm);
    }
    let c = plant.num().leading();
    let den = plant.den().coeffs();
    let direct = TransferFunction::new(
        vec![c * gains.kd, c * gains.kp, c * gains.ki],
        vec![
            den[0],
            den[1] + c * gains.kd,
            den[2] + c * gains.kp,
            c * gains.ki,
        ],
    )?;

    let generic = unity_feedback(plant, &pid_tf(gains)?)?.complementary;
    let (d, g) = (direct.normalized(), generic.normalized());
    for (offset, (dp, gp)) in [(0, (d.num(), g.num())), (10, (d.den(), g.den()))] {
        let n = dp.degree().max(gp.degree());
        for power in 0..=n {
            let (a, b) = (dp.coeff_of_power(power), gp.coeff_of_power(power));
            if (a - b).abs() > 1e-9 * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::CompositionMismatch {
                    index: offset + power,
                    direct: a,
                    generic: b,
                });
            }
        }
    }
    Ok(cancel_origin(direct))
}

/// Divides numerator and denominator by `s` while both vanish at the origin.
fn cancel_origin(tf: TransferFunction) -> TransferFunction {
    let mut num = tf.num().coeffs().to_vec();
    let mut den = tf.den().coeffs().to_vec();
    while num.len() > 1 && den.len() > 1 && num.last() == Some(&0.0) && den.last() == Some(&0.0) {
        num.pop();
        den.pop();
    }
    TransferFunction::new(Polynomial::new(num), Polynomial::new(den))
        .expect("denominator keeps its leading coefficient")
}

/// Knobs of the ultimate-gain search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OscillationSearchConfig {
    /// Controller update interval `h`.
    pub sample_period_s: f64,
    pub gain_lo: f64,
    pub gain_hi: f64,
    /// Bisection stops when the bracket is narrower than this fraction of the upper gain.
    pub gain_tolerance: f64,
    /// Number of consecutive oscillation periods inspected.
    pub cycles_required: usize,
    /// Peak-to-peak amplitude ratios must stay within `1 +/- band` to count as sustained.
    pub amplitude_ratio_band: f64,
    /// Simulated controller updates per trial gain.
    pub horizon_samples: usize,
    /// RK4 substeps per sample period.
    pub substeps: usize,
}

impl Default for OscillationSearchConfig {
    fn default() -> Self {
        Self {
            sample_period_s: 0.05,
            gain_lo: 0.0,
            gain_hi: 1000.0,
            gain_tolerance: 1e-3,
            cycles_required: 5,
            amplitude_ratio_band: 0.05,
            horizon_samples: 4000,
            substeps: 32,
        }
    }
}

impl OscillationSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_period_s.is_finite() && self.sample_period_s > 0.0) {
            return Err(Error::invalid("sample_period_s", "must be positive"));
        }
        if !(self.gain_lo >= 0.0 && self.gain_lo < self.gain_hi && self.gain_hi.is_finite()) {
            return Err(Error::invalid(
                "gain_lo",
                format!(
                    "need 0 <= gain_lo < gain_hi, got [{}, {}]",
                    self.gain_lo, self.gain_hi
                ),
            ));
        }
        if !(self.gain_tolerance > 0.0 && self.gain_tolerance < 1.0) {
            return Err(Error::invalid("gain_tolerance", "must lie in (0, 1)"));
        }
        if self.cycles_required < 3 {
            return Err(Error::invalid("cycles_required", "must be at least 3"));
        }
        if !(self.amplitude_ratio_band > 0.0 && self.amplitude_ratio_band < 0.5) {
            return Err(Error::invalid(
                "amplitude_ratio_band",
                "must lie in (0, 0.5)",
            ));
        }
        if self.substeps == 0 || self.horizon_samples < 10 {
            return Err(Error::invalid(
                "horizon_samples",
                "simulation horizon too short",
            ));
        }
        Ok(())
    }
}

/// Interpolated maxima of the loop output's deviation from equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopOscillation {
    pub gain: f64,
    /// `(time, amplitude)` of each positive peak, in order.
    pub peaks: Vec<(f64, f64)>,
    /// The response left every sensible bound before the horizon ended.
    pub diverged: bool,
}

impl LoopOscillation {
    /// Geometric-mean amplitude ratio over the last `periods` peak-to-peak
    /// intervals; `None` when fewer peaks exist.
    pub fn growth_ratio(&self, periods: usize) -> Option<f64> {
        if self.peaks.len() < periods + 1 {
            return None;
        }
        let tail = &self.peaks[self.peaks.len() - periods - 1..];
        Some((tail[periods].1 / tail[0].1).powf(1.0 / periods as f64))
    }

    /// True when the oscillation is sustained or growing over `periods` cycles.
    pub fn is_growing(&self, periods: usize) -> bool {
        self.diverged || self.growth_ratio(periods).is_some_and(|r| r >= 1.0)
    }

    pub fn mean_period(&self, periods: usize) -> Option<f64> {
        if self.peaks.len() < periods + 1 {
            return None;
        }
        let tail = &self.peaks[self.peaks.len() - periods - 1..];
        Some((tail[periods].0 - tail[0].0) / periods as f64)
    }
}

/// Unit-step response of the sampled proportional loop at one gain.
///
/// At each sample instant the controller reads `y_k` and holds
/// `u_k = gain * (1 - y_k)` until the next instant; the plant is integrated
/// with RK4 on `cfg.substeps` substeps per period.
pub fn sampled_loop_response(
    plant: &TransferFunction,
    gain: f64,
    cfg: &OscillationSearchConfig,
) -> Result<LoopOscillation> {
    let ss = to_state_space(plant)?;
    let g0 = dc_gain(plant)?;
    let equilibrium = gain * g0 / (1.0 + gain * g0);
    let h = cfg.sample_period_s;
    let dt = h / cfg.substeps as f64;

    let mut x = vec![0.0; ss.dim()];
    let mut u = 0.0;
    let mut dev: Vec<f64> = Vec::with_capacity(cfg.horizon_samples * cfg.substeps + 1);
    let scale = equilibrium.abs().max(1e-12);
    let mut diverged = false;
    dev.push(ss.output(&x, u) - equilibrium);
    'outer: for _ in 0..cfg.horizon_samples {
        let y = ss.output(&x, u);
        u = gain * (1.0 - y);
        for _ in 0..cfg.substeps {
            ss.rk4_step(&mut x, u, dt);
            let d = ss.output(&x, u) - equilibrium;
            if !d.is_finite() || d.abs() > 1e6 * scale.max(1.0) {
                diverged = true;
                break 'outer;
            }
            dev.push(d);
        }
    }

    let max_dev = dev.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let floor = 1e-9 * max_dev.max(scale);
    let mut peaks = Vec::new();
    for i in 1..dev.len().saturating_sub(1) {
        let (a, b, c) = (dev[i - 1], dev[i], dev[i + 1]);
        if b > floor && b > a && b >= c {
            let curvature = a - 2.0 * b + c;
            let (offset, value) = if curvature < 0.0 {
                let off = 0.5 * (a - c) / curvature;
                (off, b - 0.25 * (a - c) * off)
            } else {
                (0.0, b)
            };
            peaks.push(((i as f64 + offset) * dt, value));
        }
    }
    Ok(LoopOscillation {
        gain,
        peaks,
        diverged,
    })
}

/// Bisects the proportional gain for the onset of sustained oscillation in
/// the sampled loop and measures the oscillation period there.
pub fn find_ultimate(
    plant: &TransferFunction,
    cfg: &OscillationSearchConfig,
) -> Result<UltimateParams> {
    cfg.validate()?;
    if !plant.is_proper() {
        return Err(Error::Improper {
            num_degree: plant.num().degree(),
            den_degree: plant.den().degree(),
        });
    }
    if plant.poles().iter().any(|p| p.re >= 0.0) {
        return Err(Error::UnstablePlant);
    }
    let n = cfg.cycles_required;
    let growing =
        |g: f64| -> Result<bool> { Ok(sampled_loop_response(plant, g, cfg)?.is_growing(n)) };

    if growing(cfg.gain_lo)? {
        return Err(Error::OscillatesAtLowerBound {
            gain_lo: cfg.gain_lo,
        });
    }
    if !growing(cfg.gain_hi)? {
        return Err(Error::NoUltimateGain {
            gain_lo: cfg.gain_lo,
            gain_hi: cfg.gain_hi,
            sample_period_s: cfg.sample_period_s,
        });
    }
    let (mut lo, mut hi) = (cfg.gain_lo, cfg.gain_hi);
    while hi - lo > cfg.gain_tolerance * hi {
        let mid = 0.5 * (lo + hi);
        if growing(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let at_ku = sampled_loop_response(plant, hi, cfg)?;
    let band = cfg.amplitude_ratio_band;
    let tail = at_ku
        .peaks
        .len()
        .checked_sub(n + 1)
        .map(|start| &at_ku.peaks[start..])
        .ok_or(Error::NotSustained {
            gain: hi,
            ratio: 0.0,
            band,
        })?;
    for pair in tail.windows(2) {
        let ratio = pair[1].1 / pair[0].1;
        if (ratio - 1.0).abs() > band {
            return Err(Error::NotSustained {
                gain: hi,
                ratio,
                band,
            });
        }
    }
    let tu_s = at_ku.mean_period(n).expect("tail has n + 1 peaks");
    UltimateParams::new(hi, tu_s)
}

/// Serialized result of a tuning run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    /// `None` when gains were entered directly.
    pub ku: Option<f64>,
    pub tu_s: Option<f64>,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// `None` when `(Ku, Tu)` were entered directly.
    pub sample_period_s: Option<f64>,
}

impl TuningReport {
    pub fn new(ultimate: &UltimateParams, sample_period_s: Option<f64>) -> Self {
        let g = zn_gains(ultimate);
        Self {
            ku: Some(ultimate.ku),
            tu_s: Some(ultimate.tu_s),
            kp: g.kp,
            ki: g.ki,
            kd: g.kd,
            sample_period_s,
        }
    }

    pub fn gains(&self) -> PidGains {
        PidGains {
            kp: self.kp,
            ki: self.ki,
            kd: self.kd,
        }
    }
}
