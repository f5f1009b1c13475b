use std::sync::Arc;

use dpp_core::operators::{alpha_beta_from_p, sphere_probe, step_random_walk, step_space_dependent, step_tug_of_war, ClosedForm, GridOperator};
use dpp_core::quadrature::BallRule;
use dpp_core::{build_grid_domain, Alpha, GameSpec, GridDomain, Shape, ValueField};
use proptest::prelude::*;

fn disk(eps: f64) -> Arc<GridDomain> {
    Arc::new(build_grid_domain(Shape::unit_ball(2), eps / 3.0, eps).unwrap())
}

fn spec(kind: usize, eps: f64) -> GameSpec {
    match kind {
        0 => GameSpec::tug_of_war(eps),
        1 => GameSpec::random_walk(eps),
        2 => GameSpec::space_dependent(eps, Alpha::Constant(0.5)),
        _ => GameSpec::directional(eps, 0.5),
    }
}

fn field(domain: &Arc<GridDomain>, coef: [f64; 4]) -> ValueField {
    ValueField::from_fn(domain.clone(), |y| {
        coef[0] + coef[1] * y[0] + coef[2] * (3.0 * y[1]).sin() + coef[3] * (y[0] * y[1]).abs()
    })
    .unwrap()
}

fn directional_domain(eps: f64) -> Arc<GridDomain> {
    let s = spec(3, eps);
    let h = eps / 3.0;
    let w = dpp_core::operators::required_strip_width(&s, 2, h);
    Arc::new(GridDomain::with_strip(Shape::unit_ball(2), h, eps, w).unwrap())
}

fn domain_for(kind: usize, eps: f64) -> Arc<GridDomain> {
    if kind == 3 {
        directional_domain(eps)
    } else {
        disk(eps)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn grid_operators_are_monotone(kind in 0usize..4, a in prop::array::uniform4(-1.0f64..1.0), bump in prop::array::uniform4(0.0f64..1.0)) {
        let d = domain_for(kind, 0.3);
        let op = GridOperator::new(d.clone(), &spec(kind, 0.3)).unwrap();
        let u = field(&d, a);
        // v >= u pointwise
        let v = ValueField::new(d.clone(), u.values().iter().zip(d.points()).map(|(x, y)| x + bump[0] + bump[1] * y[0].powi(2) + bump[2] * (y[1] + 2.0).abs()).collect()).unwrap();
        let (tu, tv) = (op.apply(&u), op.apply(&v));
        for (p, q) in tu.values().iter().zip(tv.values()) {
            prop_assert!(p <= &(q + 1e-12));
        }
    }

    #[test]
    fn grid_operators_commute_with_constants(kind in 0usize..4, a in prop::array::uniform4(-1.0f64..1.0), c in -5.0f64..5.0) {
        let d = domain_for(kind, 0.3);
        let op = GridOperator::new(d.clone(), &spec(kind, 0.3)).unwrap();
        let u = field(&d, a);
        let shifted = ValueField::new(d.clone(), u.values().iter().map(|v| v + c).collect()).unwrap();
        let (tu, ts) = (op.apply(&u), op.apply(&shifted));
        for (p, q) in tu.values().iter().zip(ts.values()) {
            prop_assert!((q - p - c).abs() <= 1e-12 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn grid_operators_are_non_expansive(kind in 0usize..4, a in prop::array::uniform4(-1.0f64..1.0), b in prop::array::uniform4(-1.0f64..1.0)) {
        let d = domain_for(kind, 0.3);
        let op = GridOperator::new(d.clone(), &spec(kind, 0.3)).unwrap();
        let (u, v) = (field(&d, a), field(&d, b));
        prop_assert!(op.apply(&u).sup_distance(&op.apply(&v)) <= u.sup_distance(&v) + 1e-12);
    }

    #[test]
    fn space_dependent_interpolates_between_pure_games(alpha in 0.0f64..=1.0, x in prop::array::uniform2(-0.5f64..0.5)) {
        let eps = 0.2;
        let u = ClosedForm(|y: &[f64]| (y[0] * 2.0).sin() + y[1].abs());
        let probe = sphere_probe(2, eps, 64, &[1.0, 0.5, 0.25]);
        let rule = BallRule::polar(2, eps, 6, 32);
        let tow = step_tug_of_war(&u, &x, eps, &probe).unwrap();
        let rw = step_random_walk(&u, &x, &rule).unwrap();
        let mixed = step_space_dependent(&u, &x, &GameSpec::space_dependent(eps, Alpha::Constant(alpha)), &probe, &rule).unwrap();
        prop_assert!((mixed - (alpha * tow + (1.0 - alpha) * rw)).abs() < 1e-13);
    }
}

#[test]
fn alpha_beta_from_p_matches_closed_form() {
    assert_eq!(alpha_beta_from_p(2.0, 2).unwrap(), (0.0, 1.0));
    let (a, b) = alpha_beta_from_p(4.0, 3).unwrap();
    assert!((a - 2.0 / 7.0).abs() < 1e-15 && (b - 5.0 / 7.0).abs() < 1e-15);
    assert_eq!(alpha_beta_from_p(f64::INFINITY, 5).unwrap(), (1.0, 0.0));
    assert!(alpha_beta_from_p(1.5, 2).is_err());
}

#[test]
fn random_walk_mean_of_quadratic_is_exact() {
    // mean of |y|^2 over B(x, eps) is |x|^2 + n eps^2 / (n + 2)
    for n in [2usize, 3] {
        let eps = 0.3;
        let rule = BallRule::polar(n, eps, 8, if n == 2 { 64 } else { 128 });
        let x = vec![0.2; n];
        let got = step_random_walk(&ClosedForm(|y: &[f64]| y.iter().map(|v| v * v).sum::<f64>()), &x, &rule).unwrap();
        let want = 0.04 * n as f64 + n as f64 * eps * eps / (n as f64 + 2.0);
        assert!((got - want).abs() < 1e-12, "n={n}: {got} vs {want}");
    }
}

#[test]
fn tug_of_war_of_distance_is_midrange() {
    // sup and inf of |y| over B(x, eps) are |x| + eps and |x| - eps
    let x = [0.5, 0.0];
    let probe = sphere_probe(2, 0.1, 64, &[1.0]);
    let got = step_tug_of_war(&ClosedForm(|y: &[f64]| (y[0] * y[0] + y[1] * y[1]).sqrt()), &x, 0.1, &probe).unwrap();
    assert!((got - 0.5).abs() < 1e-12);
}
