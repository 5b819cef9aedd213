use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selfpower::lti::{msd_plant, MsdParams};
use selfpower::pid::closed_loop;
use selfpower::stability::{is_stable, routh_table, verdict};
use selfpower::{PidGains, Polynomial, Stability};

/// Right-half-plane root count from companion-matrix eigenvalues.
fn rhp_roots(p: &Polynomial) -> usize {
    let c = p.coeffs();
    let n = p.degree();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues()
        .iter()
        .filter(|z| z.re > 0.0)
        .count()
}

/// Random real polynomial built from roots kept away from the imaginary axis.
fn random_polynomial(rng: &mut ChaCha8Rng) -> Polynomial {
    let degree = rng.random_range(2..=6);
    let mut p = Polynomial::constant(
        rng.random_range(0.5..3.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 },
    );
    let mut placed = 0;
    let real_part = |rng: &mut ChaCha8Rng| {
        let mag = rng.random_range(1e-3..5.0);
        if rng.random_bool(0.5) {
            mag
        } else {
            -mag
        }
    };
    while placed < degree {
        if degree - placed >= 2 && rng.random_bool(0.5) {
            let re = real_part(rng);
            let im = rng.random_range(0.1..5.0);
            p = &p * &Polynomial::new(vec![1.0, -2.0 * re, re * re + im * im]);
            placed += 2;
        } else {
            p = &p * &Polynomial::new(vec![1.0, -real_part(rng)]);
            placed += 1;
        }
    }
    p
}

#[test]
fn sign_changes_match_eigenvalue_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut checked = 0;
    for _ in 0..1000 {
        let p = random_polynomial(&mut rng);
        let v = verdict(&routh_table(&p).unwrap());
        if v.stability == Stability::Marginal {
            continue;
        }
        assert_eq!(v.sign_changes, rhp_roots(&p), "{p}");
        checked += 1;
    }
    assert!(checked >= 990, "only {checked} non-marginal cases");
}

#[test]
fn preset_closed_loop_is_stable() {
    let plant = msd_plant(&MsdParams::mica2()).unwrap();
    let t = closed_loop(&plant, &PidGains::mica2()).unwrap();
    let v = is_stable(t.den()).unwrap();
    assert!(v.stable);
    assert_eq!(v.sign_changes, 0);
    assert!(v.first_column.iter().all(|&x| x > 0.0));
}

#[test]
fn factored_cubic_has_one_unstable_root() {
    // (s - 1)(s + 1)^2
    let v = is_stable(&Polynomial::new(vec![1.0, 1.0, -1.0, -1.0])).unwrap();
    assert_eq!(v.stability, Stability::Unstable);
    assert_eq!(v.sign_changes, 1);
}

#[test]
fn imaginary_pair_is_marginal() {
    // (s^2 + 4)(s + 1)
    let v = is_stable(&Polynomial::new(vec![1.0, 1.0, 4.0, 4.0])).unwrap();
    assert_eq!(v.stability, Stability::Marginal);
    assert_eq!(v.imaginary_axis_roots, 2);
    assert_eq!(v.sign_changes, 0);
}

fn stable_poly() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2..4.0f64, 1..=6).prop_map(|roots| {
        let neg: Vec<f64> = roots.iter().map(|r| -r).collect();
        Polynomial::from_real_roots(&neg).coeffs().to_vec()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn verdict_is_invariant_under_positive_scaling(coeffs in stable_poly(), k in 1e-3..1e3f64) {
        let p = Polynomial::new(coeffs);
        let a = verdict(&routh_table(&p).unwrap());
        let b = verdict(&routh_table(&p.scale(k)).unwrap());
        prop_assert_eq!(a.stability, b.stability);
        prop_assert_eq!(a.sign_changes, b.sign_changes);
        let c = verdict(&routh_table(&p.scale(-k)).unwrap());
        prop_assert_eq!(a.sign_changes, c.sign_changes);
    }

    #[test]
    fn a_non_positive_coefficient_rules_out_stability(
        coeffs in prop::collection::vec(0.1..5.0f64, 3..=7),
        idx in 1usize..7,
        replacement in -5.0..=0.0f64,
    ) {
        let mut coeffs = coeffs;
        let i = idx.min(coeffs.len() - 1);
        coeffs[i] = replacement;
        let v = is_stable(&Polynomial::new(coeffs)).unwrap();
        prop_assert!(!v.stable);
    }
}
