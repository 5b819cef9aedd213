use num_complex::Complex64;
use proptest::prelude::*;
use selfpower::lti::{
    dc_gain, msd_plant, simulate_step, step_metrics, to_state_space, unity_feedback, MsdParams,
    Sample, SimTrace, TransferFunction,
};
use selfpower::{Error, Polynomial};

type Solution = Box<dyn Fn(f64) -> f64>;

fn second_order(wn: f64, zeta: f64) -> TransferFunction {
    TransferFunction::new(vec![wn * wn], vec![1.0, 2.0 * zeta * wn, wn * wn]).unwrap()
}

/// Unit step response of `wn^2 / (s^2 + 2 zeta wn s + wn^2)` for `zeta < 1`.
fn underdamped_step(wn: f64, zeta: f64, t: f64) -> f64 {
    let wd = wn * (1.0 - zeta * zeta).sqrt();
    let k = zeta / (1.0 - zeta * zeta).sqrt();
    1.0 - (-zeta * wn * t).exp() * ((wd * t).cos() + k * (wd * t).sin())
}

fn max_error(trace: &SimTrace, exact: impl Fn(f64) -> f64) -> f64 {
    trace
        .samples
        .iter()
        .map(|s| (s.output - exact(s.t_s)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn second_order_overshoot_matches_closed_form() {
    for zeta in [0.1, 0.2112, 0.5, 0.7] {
        let trace = simulate_step(&second_order(5.0, zeta), 1e-4, 30.0, 1.0).unwrap();
        let m = step_metrics(&trace).unwrap();
        let expected = 100.0 * (-std::f64::consts::PI * zeta / (1.0 - zeta * zeta).sqrt()).exp();
        assert!(
            (m.percent_overshoot - expected).abs() < 0.5,
            "zeta {zeta}: {} vs {expected}",
            m.percent_overshoot
        );
    }
}

#[test]
fn rk4_error_shrinks_at_fourth_order() {
    let first = TransferFunction::new(vec![1.0], vec![1.0, 20.0]).unwrap();
    let (wn, zeta) = (20.0, 0.3);
    let second = second_order(wn, zeta);
    let cases: [(&TransferFunction, Solution); 2] = [
        (&first, Box::new(|t: f64| (1.0 - (-20.0 * t).exp()) / 20.0)),
        (&second, Box::new(move |t| underdamped_step(wn, zeta, t))),
    ];
    for (tf, exact) in &cases {
        let errors: Vec<f64> = [4e-3, 2e-3, 1e-3]
            .iter()
            .map(|&dt| max_error(&simulate_step(tf, dt, 1.0, 1.0).unwrap(), exact))
            .collect();
        for w in errors.windows(2) {
            assert!(w[0] / w[1] >= 8.0, "errors {errors:?}");
        }
    }
}

#[test]
fn msd_step_tracks_analytic_solution() {
    let p = MsdParams::mica2();
    let tf = msd_plant(&p).unwrap();
    let wn = p.natural_frequency_rad_s();
    let zeta = p.damping_ratio();
    let trace = simulate_step(&tf, 1e-3, 12.0, 1.0).unwrap();
    let err = max_error(&trace, |t| {
        underdamped_step(wn, zeta, t) / p.stiffness_n_per_m
    });
    assert!(err < 1e-9, "{err}");
}

#[test]
fn msd_plant_coefficients() {
    let tf = msd_plant(&MsdParams::mica2()).unwrap();
    assert_eq!(tf.num().coeffs(), &[1.0]);
    assert_eq!(tf.den().coeffs(), &[0.182, 0.2, 1.232]);
    assert!((dc_gain(&tf).unwrap() - 1.0 / 1.232).abs() < 1e-15);
}

#[test]
fn invalid_plant_parameters_are_rejected() {
    assert!(MsdParams::new(0.0, 0.2, 1.0).is_err());
    assert!(MsdParams::new(1.0, -0.1, 1.0).is_err());
    assert!(MsdParams::new(1.0, 0.1, f64::NAN).is_err());
}

#[test]
fn integrator_refuses_stiff_step() {
    let tf = TransferFunction::new(vec![1.0], vec![1.0, 1e4]).unwrap();
    match simulate_step(&tf, 1e-3, 1.0, 1.0) {
        Err(Error::StepTooLarge { suggested_dt_s, .. }) => assert!(suggested_dt_s <= 1e-4 * 1.0001),
        other => panic!("{other:?}"),
    }
}

#[test]
fn integrator_rejects_bad_grid() {
    let tf = TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap();
    assert!(simulate_step(&tf, 0.0, 1.0, 1.0).is_err());
    assert!(simulate_step(&tf, 1e-3, -1.0, 1.0).is_err());
    let improper = TransferFunction::new(vec![1.0, 0.0, 0.0], vec![1.0, 1.0]).unwrap();
    assert!(simulate_step(&improper, 1e-3, 1.0, 1.0).is_err());
}

fn poly_strategy(degree: usize) -> impl Strategy<Value = Vec<f64>> {
    (
        prop_oneof![0.5..5.0f64, -5.0..-0.5f64],
        prop::collection::vec(-5.0..5.0f64, degree),
    )
        .prop_map(|(lead, rest)| std::iter::once(lead).chain(rest).collect())
}

fn proper_tf() -> impl Strategy<Value = TransferFunction> {
    (1usize..=4)
        .prop_flat_map(|n| (0..=n).prop_flat_map(move |m| (poly_strategy(m), poly_strategy(n))))
        .prop_map(|(num, den)| TransferFunction::new(num, den).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sensitivities_sum_to_one(
        plant in proper_tf(),
        controller in proper_tf(),
        points in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 10),
    ) {
        let fb = unity_feedback(&plant, &controller).unwrap();
        for (re, im) in points {
            let s = Complex64::new(re, im);
            let e = fb.sensitivity.eval(s);
            let t = fb.complementary.eval(s);
            if !(e.is_finite() && t.is_finite()) {
                continue;
            }
            let residual = (e + t - 1.0).norm();
            prop_assert!(residual < 1e-9 * (1.0 + e.norm() + t.norm()), "residual {residual}");
        }
    }

    #[test]
    fn state_space_round_trip(tf in proper_tf()) {
        let back = to_state_space(&tf).unwrap().to_transfer_function();
        let a = tf.normalized();
        let b = back.normalized();
        let scale = a.num().max_abs_coeff().max(a.den().max_abs_coeff()).max(1.0);
        prop_assert_eq!(a.den().degree(), b.den().degree());
        let n = a.den().degree();
        for k in 0..=n {
            let d = (a.den().coeff_of_power(k) - b.den().coeff_of_power(k)).abs();
            let m = (a.num().coeff_of_power(k) - b.num().coeff_of_power(k)).abs();
            prop_assert!(d < 1e-9 * scale && m < 1e-9 * scale, "power {k}: den {d} num {m}");
        }
    }

    #[test]
    fn monotone_trace_has_no_overshoot(
        increments in prop::collection::vec(0.0..1.0f64, 2000),
        rate in 0.5..0.99f64,
    ) {
        let mut y = 0.0;
        let samples: Vec<Sample> = increments
            .iter()
            .enumerate()
            .map(|(i, a)| {
                y += a * rate.powi(i as i32);
                Sample { t_s: i as f64 * 0.01, input: 1.0, output: y, derivative_of_output: 0.0 }
            })
            .collect();
        prop_assume!(y > 0.0);
        let m = step_metrics(&SimTrace { dt_s: 0.01, samples }).unwrap();
        prop_assert_eq!(m.percent_overshoot, 0.0);
    }

    #[test]
    fn polynomial_product_evaluates_pointwise(
        a in prop::collection::vec(-3.0..3.0f64, 1..6),
        b in prop::collection::vec(-3.0..3.0f64, 1..6),
        x in -2.0..2.0f64,
    ) {
        let (pa, pb) = (Polynomial::new(a), Polynomial::new(b));
        let lhs = (&pa * &pb).eval(x);
        let rhs = pa.eval(x) * pb.eval(x);
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()));
    }
}
