//! Routh-Hurwitz tables and stability verdicts.
//!
//! The two textbook special cases are handled and recorded rather than
//! silently patched: a zero leading entry in an otherwise non-zero row is
//! replaced by a small positive epsilon, and an all-zero row is replaced by
//! the derivative of the auxiliary polynomial formed from the row above.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Relative size of the epsilon substituted for a zero leading entry.
pub const EPSILON_SCALE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpecialCase {
    /// The polynomial had a negative leading coefficient and was negated.
    Negated,
    /// A zero first-column entry in row `row` was replaced by `epsilon`.
    Epsilon { row: usize, epsilon: f64 },
    /// Row `row` vanished; it was rebuilt from the derivative of `auxiliary`,
    /// which has `imaginary_axis_roots` roots on the imaginary axis.
    ZeroRow {
        row: usize,
        auxiliary: Polynomial,
        imaginary_axis_roots: usize,
    },
}

impl fmt::Display for SpecialCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecialCase::Negated => write!(f, "negative leading coefficient: polynomial negated"),
            SpecialCase::Epsilon { row, epsilon } => {
                write!(
                    f,
                    "row {row}: zero first-column entry replaced by epsilon = {epsilon:e}"
                )
            }
            SpecialCase::ZeroRow {
                row,
                auxiliary,
                imaginary_axis_roots,
            } => write!(
                f,
                "row {row}: zero row replaced by derivative of auxiliary polynomial {auxiliary} \
                 ({imaginary_axis_roots} imaginary-axis roots)"
            ),
        }
    }
}

/// Routh array, one row per power from `s^n` down to `s^0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouthTable {
    pub rows: Vec<Vec<f64>>,
    pub special_cases: Vec<SpecialCase>,
}

impl RouthTable {
    pub fn degree(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn first_column(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }

    pub fn sign_changes(&self) -> usize {
        count_sign_changes(&self.first_column())
    }

    /// Aligned plain-text rendering with `s^k` row labels.
    pub fn render(&self) -> String {
        let n = self.degree();
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|v| format!("{v:.6}")).collect())
            .collect();
        let width = cells.iter().flatten().map(String::len).max().unwrap_or(1);
        let label_width = format!("s^{n}").len();
        let mut out = String::new();
        for (i, row) in cells.iter().enumerate() {
            let label = format!("s^{}", n - i);
            let _ = write!(out, "{label:<label_width$} |");
            for cell in row {
                let _ = write!(out, " {cell:>width$}");
            }
            out.push('\n');
        }
        for note in &self.special_cases {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }
}

fn count_sign_changes(values: &[f64]) -> usize {
    values
        .windows(2)
        .filter(|w| (w[0] > 0.0) != (w[1] > 0.0))
        .count()
}

/// `(a * b - c * d) / a`, snapped to zero when the difference is within
/// rounding noise of its operands.
fn routh_entry(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let (ab, cd) = (a * b, c * d);
    let diff = ab - cd;
    if diff.abs() <= 64.0 * f64::EPSILON * (ab.abs() + cd.abs()) {
        0.0
    } else {
        diff / a
    }
}

pub fn routh_table(charpoly: &Polynomial) -> Result<RouthTable> {
    if charpoly.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if charpoly.degree() < 1 {
        return Err(Error::ConstantPolynomial);
    }
    let mut special_cases = Vec::new();
    let poly = if charpoly.leading() < 0.0 {
        special_cases.push(SpecialCase::Negated);
        charpoly.scale(-1.0)
    } else {
        charpoly.clone()
    };
    let n = poly.degree();
    let width = n / 2 + 1;
    let epsilon = EPSILON_SCALE * poly.max_abs_coeff();
    let coeffs = poly.coeffs();
    let pick = |start: usize| -> Vec<f64> {
        (0..width)
            .map(|j| coeffs.get(start + 2 * j).copied().unwrap_or(0.0))
            .collect()
    };

    let mut rows = vec![pick(0), pick(1)];
    // Pending zero-row events: (row index, auxiliary polynomial).
    let mut aux_events: Vec<(usize, Polynomial)> = Vec::new();
    for i in 1..=n {
        if i >= 2 {
            let (pp, prev) = (&rows[i - 2], &rows[i - 1]);
            let next: Vec<f64> = (0..width)
                .map(|j| {
                    let b = pp.get(j + 1).copied().unwrap_or(0.0);
                    let d = prev.get(j + 1).copied().unwrap_or(0.0);
                    routh_entry(prev[0], b, pp[0], d)
                })
                .collect();
            rows.push(next);
        }
        if rows[i].iter().all(|&v| v == 0.0) {
            // Auxiliary polynomial from the row above, of degree n - (i - 1).
            let q = n - (i - 1);
            let above = &rows[i - 1];
            let aux_coeffs: Vec<f64> = (0..=q)
                .map(|k| {
                    if k % 2 == 0 {
                        above.get(k / 2).copied().unwrap_or(0.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            let aux = Polynomial::new(aux_coeffs);
            let deriv = aux.derivative();
            let dc = deriv.coeffs();
            rows[i] = (0..width)
                .map(|j| dc.get(2 * j).copied().unwrap_or(0.0))
                .collect();
            aux_events.push((i - 1, aux));
        }
        if rows[i][0] == 0.0 {
            rows[i][0] = epsilon;
            special_cases.push(SpecialCase::Epsilon { row: i, epsilon });
        }
    }

    for (row, auxiliary) in aux_events {
        let q = auxiliary.degree();
        let tail: Vec<f64> = rows[row..].iter().map(|r| r[0]).collect();
        let rhp = count_sign_changes(&tail);
        special_cases.push(SpecialCase::ZeroRow {
            row: row + 1,
            auxiliary,
            imaginary_axis_roots: q.saturating_sub(2 * rhp),
        });
    }
    Ok(RouthTable {
        rows,
        special_cases,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    /// Roots on the imaginary axis, or a verdict that depended on an
    /// epsilon substitution.
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub stability: Stability,
    /// Number of right-half-plane roots.
    pub sign_changes: usize,
    pub first_column: Vec<f64>,
    /// An epsilon substitution was needed to complete the table.
    pub marginal_adjacent: bool,
    pub imaginary_axis_roots: usize,
}

pub fn verdict(table: &RouthTable) -> StabilityVerdict {
    let sign_changes = table.sign_changes();
    let marginal_adjacent = table
        .special_cases
        .iter()
        .any(|c| matches!(c, SpecialCase::Epsilon { .. }));
    let imaginary_axis_roots = table
        .special_cases
        .iter()
        .map(|c| match c {
            SpecialCase::ZeroRow {
                imaginary_axis_roots,
                ..
            } => *imaginary_axis_roots,
            _ => 0,
        })
        .sum();
    let stability = if sign_changes > 0 {
        Stability::Unstable
    } else if imaginary_axis_roots > 0 || marginal_adjacent {
        Stability::Marginal
    } else {
        Stability::Stable
    };
    StabilityVerdict {
        stable: stability == Stability::Stable,
        stability,
        sign_changes,
        first_column: table.first_column(),
        marginal_adjacent,
        imaginary_axis_roots,
    }
}

pub fn is_stable(charpoly: &Polynomial) -> Result<StabilityVerdict> {
    Ok(verdict(&routh_table(charpoly)?))
}
