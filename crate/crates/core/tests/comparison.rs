use dpp_core::comparison::{
    annulus_of_distance, eval_f1, f1_increment, taylor_f1, taylor_f1_remainder, Annulus, ComparisonParams, DESK_DEFAULTS,
};
use proptest::prelude::*;

fn desk() -> ComparisonParams {
    ComparisonParams::desk(2, DESK_DEFAULTS)
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.7f64..0.7, 2)
}

proptest! {
    #[test]
    fn f_is_symmetric(x in point(), z in point()) {
        let p = desk();
        prop_assert_eq!(p.f(&x, &z), p.f(&z, &x));
        prop_assert_eq!(p.f1(&x, &z), p.f1(&z, &x));
    }

    #[test]
    fn f2_vanishes_beyond_the_annuli(x in point(), z in point()) {
        let p = desk();
        if (x[0] - z[0]).hypot(x[1] - z[1]) >= p.far_threshold() {
            prop_assert_eq!(p.f2(&x, &z), 0.0);
            prop_assert_eq!(p.f(&x, &z), p.f1(&x, &z));
        }
    }

    #[test]
    fn increment_matches_direct_difference(x in point(), z in point(), hx in prop::collection::vec(-0.007f64..0.007, 2), hz in prop::collection::vec(-0.007f64..0.007, 2)) {
        let (c, d) = (2000.0, 0.1);
        prop_assume!((x[0] - z[0]).hypot(x[1] - z[1]) > 0.05);
        let xh: Vec<f64> = x.iter().zip(&hx).map(|(a, b)| a + b).collect();
        let zh: Vec<f64> = z.iter().zip(&hz).map(|(a, b)| a + b).collect();
        let direct = eval_f1(&xh, &zh, c, d) - eval_f1(&x, &z, c, d);
        let inc = f1_increment(&x, &z, &hx, &hz, c, d);
        prop_assert!((direct - inc).abs() <= 1e-12 * c);
    }

    #[test]
    fn stable_remainder_matches_direct_remainder(x in point(), z in point(), hx in prop::collection::vec(-0.01f64..0.01, 2), hz in prop::collection::vec(-0.01f64..0.01, 2)) {
        let (c, d) = (1.0, 0.5);
        prop_assume!((x[0] - z[0]).hypot(x[1] - z[1]) > 0.1);
        let xh: Vec<f64> = x.iter().zip(&hx).map(|(a, b)| a + b).collect();
        let zh: Vec<f64> = z.iter().zip(&hz).map(|(a, b)| a + b).collect();
        let t = taylor_f1(&x, &z, &hx, &hz, c, d).unwrap();
        let direct = eval_f1(&xh, &zh, c, d) - t.value;
        let stable = taylor_f1_remainder(&x, &z, &hx, &hz, c, d).unwrap();
        prop_assert!((direct - stable).abs() <= 1e-13);
    }
}

#[test]
fn f2_grows_by_c_squared_per_annulus() {
    let p = desk();
    for i in 1..p.n_annuli {
        let ratio = p.f2_on_annulus(i) / p.f2_on_annulus(i + 1);
        assert!((ratio / (p.c * p.c) - 1.0).abs() < 1e-12, "annulus {i}: {ratio}");
    }
    assert_eq!(p.f2_on_annulus(p.n_annuli), p.epsilon.powf(p.delta));
}

#[test]
fn annuli_partition_the_near_band() {
    let p = desk();
    let eps = p.epsilon;
    assert_eq!(annulus_of_distance(0.0, eps, p.n_annuli), Annulus::Index(0));
    assert_eq!(annulus_of_distance(0.5 * eps / 10.0, eps, p.n_annuli), Annulus::Index(1));
    assert_eq!(annulus_of_distance(2.5 * eps / 10.0, eps, p.n_annuli), Annulus::Index(3));
    assert_eq!(annulus_of_distance(p.far_threshold() * 1.01, eps, p.n_annuli), Annulus::Outside);
}

#[test]
fn taylor_expansion_of_quadratic_part_is_exact() {
    // with C = 0 only |x + z|^2 remains, whose expansion is exact
    let (x, z) = ([0.3, -0.2], [-0.1, 0.4]);
    let (hx, hz) = ([0.01, 0.02], [-0.03, 0.005]);
    let t = taylor_f1(&x, &z, &hx, &hz, 0.0, 0.5).unwrap();
    let xh = [x[0] + hx[0], x[1] + hx[1]];
    let zh = [z[0] + hz[0], z[1] + hz[1]];
    assert!((t.value - eval_f1(&xh, &zh, 0.0, 0.5)).abs() < 1e-15);
}
