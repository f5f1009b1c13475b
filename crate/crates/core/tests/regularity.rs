use std::sync::Arc;

use dpp_core::regularity::{fit_c_prime, PairFilter};
use dpp_core::{build_grid_domain, estimate_exponent, holder_report, GridDomain, Shape, ValueField};
use proptest::prelude::*;

fn domain() -> Arc<GridDomain> {
    Arc::new(build_grid_domain(Shape::unit_ball(2), 0.02, 0.06).unwrap())
}

fn wavy(d: &Arc<GridDomain>) -> ValueField {
    ValueField::from_fn(d.clone(), |y| (4.0 * y[0]).sin() + y[1].abs().sqrt()).unwrap()
}

fn map(u: &ValueField, f: impl Fn(f64) -> f64) -> ValueField {
    ValueField::new(u.domain().clone(), u.values().iter().map(|v| f(*v)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn statistic_ignores_shifts_and_positive_scaling(c in -10.0f64..10.0, lambda in 0.01f64..100.0) {
        let d = domain();
        let u = wavy(&d);
        let base = holder_report(&u, 0.1, 0.06, 0.4, &[0.0, 0.0], 0.2, 2000, 3).unwrap();
        let moved = holder_report(&map(&u, |v| lambda * v + c), 0.1, 0.06, 0.4, &[0.0, 0.0], 0.2, 2000, 3).unwrap();
        prop_assert!((base.k - moved.k).abs() <= 1e-9 * (1.0 + base.k.abs()));
    }

    #[test]
    fn statistic_decreases_in_c_prime(a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let d = domain();
        let r = holder_report(&wavy(&d), 0.1, 0.06, 0.4, &[0.0, 0.0], 0.0, 1000, 4).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(r.with_c_prime(hi).k <= r.with_c_prime(lo).k);
    }
}

#[test]
fn affine_field_statistic_is_bounded_by_its_oracle() {
    // |a.(x - z)| / ((d/R)^delta 4 |a| R) peaks at d = 2R along a: 2^{1-delta}/4
    let d = domain();
    let u = ValueField::from_fn(d.clone(), |y| 0.6 * y[0] - 0.8 * y[1]).unwrap();
    let delta = 0.2;
    let r = holder_report(&u, delta, 0.06, 0.4, &[0.0, 0.0], 0.0, 20_000, 5).unwrap();
    let oracle = 2f64.powf(1.0 - delta) / 4.0;
    assert!((r.osc - 1.6).abs() < 0.05, "osc {}", r.osc);
    let k = r.k * r.osc / 1.6;
    assert!(k <= oracle * (1.0 + 1e-9) && k >= 0.85 * oracle, "{k} vs {oracle}");
}

#[test]
fn constant_field_scores_zero() {
    let d = domain();
    let r = holder_report(&map(&wavy(&d), |_| 2.5), 0.1, 0.06, 0.4, &[0.0, 0.0], 0.0, 500, 1).unwrap();
    assert_eq!(r.k, 0.0);
}

#[test]
fn fitted_c_prime_minimises_the_total() {
    let d = domain();
    let r = holder_report(&wavy(&d), 0.1, 0.06, 0.4, &[0.0, 0.0], 0.0, 2000, 6).unwrap();
    let grid: Vec<f64> = (0..=20).map(|i| 0.1 * i as f64).collect();
    let best = fit_c_prime(&r, &grid);
    for c in grid {
        assert!(best.k + best.c_prime <= r.with_c_prime(c).k + c + 1e-12);
    }
}

#[test]
fn exponent_of_square_root_cone() {
    let d = domain();
    let u = ValueField::from_fn(d.clone(), |y| (y[0] * y[0] + y[1] * y[1]).powf(0.25)).unwrap();
    let mut filter = PairFilter::ball(vec![0.0, 0.0], 0.45, 0.02);
    filter.anchor = Some(vec![0.0, 0.0]);
    let fit = estimate_exponent(&u, 0.02, &filter, 7).unwrap();
    assert!((fit.delta_hat - 0.5).abs() < 0.02, "{fit:?}");
    assert!(fit.r_squared > 0.99);
}

#[test]
fn exponent_of_distance_function_is_one() {
    let d = domain();
    let u = ValueField::from_fn(d.clone(), |y| 2.0 * ((y[0] - 0.1).powi(2) + y[1] * y[1]).sqrt()).unwrap();
    let mut filter = PairFilter::ball(vec![0.1, 0.0], 0.4, 0.02);
    filter.anchor = Some(vec![0.1, 0.0]);
    let fit = estimate_exponent(&u, 0.02, &filter, 8).unwrap();
    assert!((fit.delta_hat - 1.0).abs() < 0.02, "{fit:?}");
    assert!((fit.intercept - 2f64.ln()).abs() < 0.05, "{fit:?}");
}
