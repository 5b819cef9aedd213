use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Rational function `num(s) / den(s)` in the Laplace variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction {
    num: Polynomial,
    den: Polynomial,
}

impl TransferFunction {
    pub fn new(num: impl Into<Polynomial>, den: impl Into<Polynomial>) -> Result<Self> {
        let den = den.into();
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(Self {
            num: num.into(),
            den,
        })
    }

    /// A static gain `k`.
    pub fn gain(k: f64) -> Self {
        Self {
            num: Polynomial::constant(k),
            den: Polynomial::constant(1.0),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() <= self.den.degree()
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.num.eval_complex(s) / self.den.eval_complex(s)
    }

    /// Poles, i.e. the roots of the denominator.
    pub fn poles(&self) -> Vec<Complex64> {
        self.den.roots()
    }

    /// Copy with the denominator scaled to a unit leading coefficient.
    pub fn normalized(&self) -> Self {
        let lead = self.den.leading();
        Self {
            num: self.num.scale(1.0 / lead),
            den: self.den.scale(1.0 / lead),
        }
    }

    pub fn series(&self, other: &Self) -> Self {
        Self {
            num: &self.num * &other.num,
            den: &self.den * &other.den,
        }
    }
}

/// Physical parameters of the single-degree-of-freedom harvester model
/// `M z'' + D z' + K z = f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsdParams {
    pub mass_kg: f64,
    #[serde(rename = "damping_Ns_per_m")]
    pub damping_ns_per_m: f64,
    #[serde(rename = "stiffness_N_per_m")]
    pub stiffness_n_per_m: f64,
}

impl MsdParams {
    pub fn new(mass_kg: f64, damping_ns_per_m: f64, stiffness_n_per_m: f64) -> Result<Self> {
        let p = Self {
            mass_kg,
            damping_ns_per_m,
            stiffness_n_per_m,
        };
        p.validate()?;
        Ok(p)
    }

    /// Harvester constants of a Mica2-class node.
    ///
    /// The stiffness is 1.2320 N/m: it is the only value consistent with the
    /// reported open-loop DC gain (0.8116) and overshoot (50.64 %).
    pub fn mica2() -> Self {
        Self {
            mass_kg: 0.182,
            damping_ns_per_m: 0.2,
            stiffness_n_per_m: 1.2320,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass_kg", self.mass_kg),
            ("damping_Ns_per_m", self.damping_ns_per_m),
            ("stiffness_N_per_m", self.stiffness_n_per_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn natural_frequency_rad_s(&self) -> f64 {
        (self.stiffness_n_per_m / self.mass_kg).sqrt()
    }

    pub fn damping_ratio(&self) -> f64 {
        self.damping_ns_per_m / (2.0 * (self.mass_kg * self.stiffness_n_per_m).sqrt())
    }
}

/// Force-to-displacement transfer function `1 / (M s^2 + D s + K)`.
pub fn msd_plant(params: &MsdParams) -> Result<TransferFunction> {
    params.validate()?;
    TransferFunction::new(
        vec![1.0],
        vec![
            params.mass_kg,
            params.damping_ns_per_m,
            params.stiffness_n_per_m,
        ],
    )
}

/// Steady-state gain `num(0) / den(0)`.
pub fn dc_gain(tf: &TransferFunction) -> Result<f64> {
    let den0 = tf.den.coeff_of_power(0);
    if den0 == 0.0 {
        return Err(Error::PoleAtOrigin);
    }
    Ok(tf.num.coeff_of_power(0) / den0)
}

/// The three closed-loop maps of a unity-feedback loop around `P * U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackLoop {
    /// `E = 1 / (1 + P U)`
    pub sensitivity: TransferFunction,
    /// `T = P U / (1 + P U)`
    pub complementary: TransferFunction,
    /// `I = U / (1 + P U)`
    pub input_sensitivity: TransferFunction,
}

/// Closes a unity-feedback loop. With `P = a/b` and `U = c/d` every map
/// shares the expanded denominator `b d + a c`.
pub fn unity_feedback(
    plant: &TransferFunction,
    controller: &TransferFunction,
) -> Result<FeedbackLoop> {
    let open_num = &plant.num * &controller.num;
    let open_den = &plant.den * &controller.den;
    let den = &open_den + &open_num;
    if den.is_zero() {
        return Err(Error::ZeroDenominator);
    }
    Ok(FeedbackLoop {
        sensitivity: TransferFunction::new(open_den, den.clone())?,
        complementary: TransferFunction::new(open_num, den.clone())?,
        input_sensitivity: TransferFunction::new(&controller.num * &plant.den, den)?,
    })
}
