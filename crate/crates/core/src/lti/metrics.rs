use serde::{Deserialize, Serialize};

use super::sim::SimTrace;
use crate::error::{Error, Result};

/// Fraction of the trace (taken from the end) that defines steady state.
const FINAL_WINDOW: f64 = 0.05;
/// The final window must stay within this relative band of its mean.
const SETTLED_BAND: f64 = 0.01;
const SETTLING_BAND: f64 = 0.02;

/// Classical step-response figures of merit.
///
/// Rise time runs from 10 % to 90 % of steady state, settling time is the
/// last exit from a +/-2 % band, and overshoot is the peak excess over
/// steady state in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub dc_gain: f64,
    pub steady_state: f64,
    pub rise_time_s: f64,
    pub settling_time_s: f64,
    pub percent_overshoot: f64,
    pub peak_value: f64,
    pub peak_time_s: f64,
}

/// Time at which the linear interpolant between samples `i - 1` and `i`
/// reaches `level` (samples are assumed to bracket it).
fn crossing_time(t: &[f64], y: &[f64], i: usize, level: f64) -> f64 {
    if i == 0 {
        return t[0];
    }
    let (y0, y1) = (y[i - 1], y[i]);
    if y1 == y0 {
        return t[i];
    }
    let frac = ((level - y0) / (y1 - y0)).clamp(0.0, 1.0);
    t[i - 1] + frac * (t[i] - t[i - 1])
}

pub fn step_metrics(trace: &SimTrace) -> Result<StepMetrics> {
    let n = trace.samples.len();
    if n < 2 {
        return Err(Error::DegenerateResponse(
            "trace needs at least two samples",
        ));
    }
    let window = ((n as f64 * FINAL_WINDOW).ceil() as usize).clamp(1, n);
    let tail = &trace.samples[n - window..];
    let ss = tail.iter().map(|s| s.output).sum::<f64>() / window as f64;
    let spread = tail
        .iter()
        .map(|s| (s.output - ss).abs())
        .fold(0.0_f64, f64::max);
    if ss == 0.0 || !ss.is_finite() {
        return Err(Error::DegenerateResponse("steady-state value is zero"));
    }
    if spread > SETTLED_BAND * ss.abs() {
        return Err(Error::NotSettled { spread, mean: ss });
    }
    let input = trace.samples[n - 1].input;
    if input == 0.0 {
        return Err(Error::DegenerateResponse("step input amplitude is zero"));
    }

    // Work on the response normalized so steady state is positive.
    let sign = ss.signum();
    let t: Vec<f64> = trace.times().collect();
    let y: Vec<f64> = trace.outputs().map(|v| v * sign).collect();
    let target = ss.abs();

    let first_at = |level: f64| {
        y.iter()
            .position(|&v| v >= level)
            .map(|i| crossing_time(&t, &y, i, level))
    };
    let t10 = first_at(0.1 * target).unwrap_or(t[n - 1]);
    let t90 = first_at(0.9 * target).unwrap_or(t[n - 1]);
    let rise_time_s = (t90 - t10).max(0.0);

    // First occurrence of the maximum.
    let (peak_idx, peak) =
        y.iter().enumerate().fold(
            (0, f64::MIN),
            |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) },
        );
    // A response that never exceeds its final sample has not overshot.
    let percent_overshoot = if peak <= y[n - 1] {
        0.0
    } else {
        (100.0 * (peak - target) / target).max(0.0)
    };

    let band = SETTLING_BAND * target;
    let settling_time_s = match y.iter().rposition(|&v| (v - target).abs() > band) {
        None => t[0],
        Some(i) if i + 1 >= n => t[n - 1],
        Some(i) => {
            // Interpolate the re-entry into the band between samples i and i+1.
            let level = if y[i] > target {
                target + band
            } else {
                target - band
            };
            crossing_time(&t, &y, i + 1, level)
        }
    };

    Ok(StepMetrics {
        dc_gain: ss / input,
        steady_state: ss,
        rise_time_s,
        settling_time_s,
        percent_overshoot,
        peak_value: peak * sign,
        peak_time_s: t[peak_idx],
    })
}
