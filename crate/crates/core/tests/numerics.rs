use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use tsci::derivatives::{derivative_series, savgol_derivative, DifferenceScheme};
use tsci::systems::rk4_step;
use tsci::TimeSeries;

fn growth(z: &[f64; 1]) -> [f64; 1] {
    [z[0]]
}

fn rk4_local_error(dt: f64) -> f64 {
    (rk4_step(growth, &[1.0], dt)[0] - dt.exp()).abs()
}

#[test]
fn rk4_single_step_on_exponential_growth() {
    assert_abs_diff_eq!(rk4_step(growth, &[1.0], 0.1)[0], 1.105_170_833_3, epsilon = 1e-10);
}

#[test]
fn rk4_local_error_is_fifth_order() {
    let ratio = rk4_local_error(0.1) / rk4_local_error(0.05);
    assert!((28.0..=36.0).contains(&ratio), "{ratio}");
}

fn central_error(dt: f64) -> f64 {
    let n = (2.0 / dt).round() as usize + 1;
    let s = TimeSeries::new((0..n).map(|i| (i as f64 * dt).sin()).collect(), dt).unwrap();
    let d = derivative_series(&s, DifferenceScheme::Central).unwrap();
    (1..n - 1)
        .map(|i| (d.values()[i] - (i as f64 * dt).cos()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn central_difference_is_second_order() {
    let ratio = central_error(0.02) / central_error(0.01);
    assert!((3.5..=4.5).contains(&ratio), "{ratio}");
}

#[test]
fn forward_difference_is_first_order() {
    let dt = 0.01;
    let err = |dt: f64| {
        let n = (2.0 / dt).round() as usize + 1;
        let s = TimeSeries::new((0..n).map(|i| (i as f64 * dt).sin()).collect(), dt).unwrap();
        let d = derivative_series(&s, DifferenceScheme::Forward).unwrap();
        (0..n - 1)
            .map(|i| (d.values()[i] - (i as f64 * dt).cos()).abs())
            .fold(0.0, f64::max)
    };
    let ratio = err(dt) / err(dt / 2.0);
    assert!((1.7..=2.3).contains(&ratio), "{ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn savgol_is_exact_on_low_degree_polynomials(
        half in 2usize..6,
        order in 1usize..4,
        coeffs in prop::collection::vec(-2.0f64..2.0, 4),
        dt in 0.01f64..0.5,
    ) {
        let window = 2 * half + 1;
        prop_assume!(order < window);
        let degree = order;
        let poly = |t: f64| (0..=degree).map(|p| coeffs[p] * t.powi(p as i32)).sum::<f64>();
        let slope = |t: f64| (1..=degree).map(|p| p as f64 * coeffs[p] * t.powi(p as i32 - 1)).sum::<f64>();
        let n = 40;
        let s = TimeSeries::new((0..n).map(|i| poly(i as f64 * dt)).collect(), dt).unwrap();
        let d = savgol_derivative(&s, window, order).unwrap();
        for i in 0..n {
            let want = slope(i as f64 * dt);
            prop_assert!((d.values()[i] - want).abs() <= 1e-10 * (1.0 + want.abs()) / dt.min(1.0),
                "i={} got {} want {}", i, d.values()[i], want);
        }
    }
}
