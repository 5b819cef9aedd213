use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::ss::to_state_space;
use super::tf::TransferFunction;
use crate::error::{Error, Result};

/// Largest `|lambda| * dt` accepted by [`simulate_step`]. Classical RK4 is
/// stable on the negative real axis up to about 2.785.
pub const MAX_STABLE_STEP: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t_s: f64,
    pub input: f64,
    pub output: f64,
    pub derivative_of_output: f64,
}

/// Uniformly sampled response, starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub dt_s: f64,
    pub samples: Vec<Sample>,
}

impl SimTrace {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t_s)
    }

    pub fn outputs(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.output)
    }

    pub fn last_output(&self) -> Option<f64> {
        self.samples.last().map(|s| s.output)
    }

    /// CSV with header `t,input,output,doutput`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,input,output,doutput")?;
        for s in &self.samples {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                s.t_s, s.input, s.output, s.derivative_of_output
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Step response by fixed-step RK4 on the controllable canonical form.
///
/// The step of size `amplitude` is applied at `t = 0`, so the first sample
/// carries the direct feed-through `D * amplitude`.
pub fn simulate_step(
    tf: &TransferFunction,
    dt_s: f64,
    t_end_s: f64,
    amplitude: f64,
) -> Result<SimTrace> {
    if !(dt_s.is_finite() && dt_s > 0.0) {
        return Err(Error::invalid(
            "dt_s",
            format!("must be positive, got {dt_s}"),
        ));
    }
    if !(t_end_s.is_finite() && t_end_s >= dt_s) {
        return Err(Error::invalid(
            "t_end_s",
            format!("must be at least dt ({dt_s}), got {t_end_s}"),
        ));
    }
    let ss = to_state_space(tf)?;
    let max_pole = tf.poles().iter().fold(0.0_f64, |m, p| m.max(p.norm()));
    if max_pole * dt_s > MAX_STABLE_STEP {
        return Err(Error::StepTooLarge {
            dt_s,
            max_pole_magnitude: max_pole,
            suggested_dt_s: 1.0 / max_pole,
        });
    }

    let steps = (t_end_s / dt_s).round() as usize;
    let n = ss.dim();
    let mut x = vec![0.0; n];
    let mut dx = vec![0.0; n];
    let mut samples = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        if i > 0 {
            ss.rk4_step(&mut x, amplitude, dt_s);
        }
        ss.derivative(&x, amplitude, &mut dx);
        samples.push(Sample {
            t_s: i as f64 * dt_s,
            input: amplitude,
            output: ss.output(&x, amplitude),
            derivative_of_output: ss.c.iter().zip(&dx).map(|(c, d)| c * d).sum(),
        });
    }
    Ok(SimTrace { dt_s, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{dc_gain, msd_plant, MsdParams};

    #[test]
    fn first_order_matches_exponential() {
        let tf = TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let trace = simulate_step(&tf, 1e-3, 10.0, 1.0).unwrap();
        assert_eq!(trace.samples.len(), 10_001);
        assert_eq!(trace.samples[0].t_s, 0.0);
        for s in &trace.samples {
            let exact = 1.0 - (-s.t_s).exp();
            assert!((s.output - exact).abs() < 1e-6);
            assert!((s.derivative_of_output - (-s.t_s).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn msd_peak_and_final_value() {
        let p = MsdParams::mica2();
        let tf = msd_plant(&p).unwrap();
        let trace = simulate_step(&tf, 1e-3, 12.0, 1.0).unwrap();
        let gain = dc_gain(&tf).unwrap();
        let zeta = p.damping_ratio();
        // Analytic second-order peak: gain * (1 + exp(-zeta pi / sqrt(1 - zeta^2))).
        let peak_exact =
            gain * (1.0 + (-zeta * std::f64::consts::PI / (1.0 - zeta * zeta).sqrt()).exp());
        let peak = trace.outputs().fold(f64::MIN, f64::max);
        assert!((peak - peak_exact).abs() < 1e-6, "{peak} vs {peak_exact}");
        assert!((peak - 1.223).abs() < 1e-3);
        assert!((trace.last_output().unwrap() - 0.8117).abs() < 1e-3);
    }

    #[test]
    fn refuses_unstable_step() {
        let tf = TransferFunction::new(vec![1.0], vec![1.0, 1000.0]).unwrap();
        match simulate_step(&tf, 0.01, 1.0, 1.0) {
            Err(Error::StepTooLarge { suggested_dt_s, .. }) => {
                assert!((suggested_dt_s - 1e-3).abs() < 1e-12)
            }
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_time_grid() {
        let tf = TransferFunction::gain(1.0);
        assert!(simulate_step(&tf, 0.0, 1.0, 1.0).is_err());
        assert!(simulate_step(&tf, 0.1, 0.05, 1.0).is_err());
    }

    #[test]
    fn csv_header_and_precision() {
        let tf = TransferFunction::gain(1.0 / 3.0);
        let csv = simulate_step(&tf, 0.5, 1.0, 1.0).unwrap().to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,input,output,doutput"));
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(row[2], 1.0 / 3.0);
        assert_eq!(csv.lines().count(), 4);
    }
}
