use serde::{Deserialize, Serialize};

use super::tf::TransferFunction;
use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Single-input single-output realization `x' = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    /// Row-major `n x n` state matrix.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: f64,
}

impl StateSpace {
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Writes `A x + B u` into `dx`.
    pub fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        for (i, row) in self.a.iter().enumerate() {
            dx[i] = row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + self.b[i] * u;
        }
    }

    pub fn output(&self, x: &[f64], u: f64) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum::<f64>() + self.d * u
    }

    /// One classical Runge-Kutta step with the input held at `u`.
    pub fn rk4_step(&self, x: &mut [f64], u: f64, dt: f64) {
        let n = self.dim();
        if n == 0 {
            return;
        }
        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        self.derivative(x, u, &mut k1);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        self.derivative(&tmp, u, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        self.derivative(&tmp, u, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + dt * k3[i];
        }
        self.derivative(&tmp, u, &mut k4);
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    /// Recovers `C (sI - A)^-1 B + D` with the Faddeev-LeVerrier recursion.
    ///
    /// Works for any `A`, not only companion matrices, so it doubles as an
    /// independent check on [`to_state_space`].
    pub fn to_transfer_function(&self) -> TransferFunction {
        let n = self.dim();
        if n == 0 {
            return TransferFunction::gain(self.d);
        }
        // char[k] is the coefficient of s^(n-k); char[0] = 1.
        let mut char_poly = vec![0.0; n + 1];
        char_poly[0] = 1.0;
        let mut num = vec![0.0; n + 1];
        let mut m = vec![vec![0.0; n]; n];
        for k in 1..=n {
            // M_k = A M_{k-1} + c_{k-1} I
            let mut next = mat_mul(&self.a, &m);
            for (i, row) in next.iter_mut().enumerate() {
                row[i] += char_poly[k - 1];
            }
            m = next;
            // C M_k B is the coefficient of s^(n-k) in C adj(sI - A) B.
            let mb: Vec<f64> = m
                .iter()
                .map(|row| row.iter().zip(&self.b).map(|(a, b)| a * b).sum())
                .collect();
            num[k] = self.c.iter().zip(&mb).map(|(c, v)| c * v).sum();
            let am = mat_mul(&self.a, &m);
            let trace: f64 = (0..n).map(|i| am[i][i]).sum();
            char_poly[k] = -trace / k as f64;
        }
        let num: Vec<f64> = (0..=n).map(|k| num[k] + self.d * char_poly[k]).collect();
        TransferFunction::new(Polynomial::new(num), Polynomial::new(char_poly))
            .expect("characteristic polynomial is monic")
    }
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// Controllable canonical form of a proper transfer function.
pub fn to_state_space(tf: &TransferFunction) -> Result<StateSpace> {
    if !tf.is_proper() {
        return Err(Error::Improper {
            num_degree: tf.num().degree(),
            den_degree: tf.den().degree(),
        });
    }
    let n = tf.den().degree();
    let lead = tf.den().leading();
    let den: Vec<f64> = (0..=n)
        .map(|k| tf.den().coeff_of_power(n - k) / lead)
        .collect();
    let num: Vec<f64> = (0..=n)
        .map(|k| tf.num().coeff_of_power(n - k) / lead)
        .collect();
    let d = num[0];
    let mut a = vec![vec![0.0; n]; n];
    if n > 0 {
        for j in 0..n {
            a[0][j] = -den[j + 1];
        }
        for i in 1..n {
            a[i][i - 1] = 1.0;
        }
    }
    let mut b = vec![0.0; n];
    if n > 0 {
        b[0] = 1.0;
    }
    let c: Vec<f64> = (1..=n).map(|k| num[k] - d * den[k]).collect();
    Ok(StateSpace { a, b, c, d })
}
